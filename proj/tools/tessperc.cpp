#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "tessperc/harness.hpp"

using namespace tessperc;

namespace {

struct Common {
  std::string config;
  std::string out = "results";
  int workers = 0;
  std::optional<std::uint64_t> seed;
};

harness::Config load(const Common& c) {
  harness::Config cfg = harness::load_config(c.config);
  if (c.seed) cfg.spec.seed = *c.seed;
  cfg.spec.workers = resolve_workers(c.workers);
  return cfg;
}

void add_common(CLI::App* app, Common& c, bool with_out) {
  app->add_option("config", c.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  if (with_out) app->add_option("--out", c.out, "output directory");
  app->add_option("--workers", c.workers, "worker threads (default: TESSPERC_WORKERS or 1)");
  app->add_option("--seed", c.seed, "override the master seed");
}

void report(const harness::RunResult& r) {
  for (const auto& f : r.files) std::cout << f.string() << "\n";
  if (!r.output.summary.empty()) std::cout << r.output.summary.dump() << "\n";
  if (r.output.failed) std::cerr << r.output.failed << " replicate(s) failed to build\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Percolation experiments on random tessellations"};
  app.require_subcommand(1);

  Common run_opts;
  auto* run = app.add_subcommand("run", "run the configured operation");
  add_common(run, run_opts, true);

  Common sweep_opts;
  auto* sweep = app.add_subcommand("sweep", "run over the p-grid / t-schedule, long-format CSV");
  add_common(sweep, sweep_opts, true);

  Common render_opts;
  std::string svg_out, show_graph = "none", points_out;
  bool core_only = false;
  std::uint64_t replicate = 0;
  std::optional<double> p_override;
  auto* render = app.add_subcommand("render", "draw one colored replicate as SVG");
  add_common(render, render_opts, false);
  render->add_option("--out", svg_out, "SVG file")->required();
  render->add_option("--show-graph", show_graph, "adjacency overlay")->check(CLI::IsMember({"none", "face", "star"}));
  render->add_flag("--core-only", core_only, "clip to the core window");
  render->add_option("--replicate", replicate, "replicate index");
  render->add_option("--p", p_override, "black probability (default: first p of the config, else 0.5)");
  render->add_option("--points", points_out, "also write the generator configuration as CSV");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      report(harness::run(load(run_opts), run_opts.out));
    } else if (*sweep) {
      report(harness::sweep(load(sweep_opts), sweep_opts.out));
    } else if (*render) {
      const auto cfg = load(render_opts);
      const double p = p_override ? *p_override : (cfg.p_grid.empty() ? 0.5 : cfg.p_grid.front());
      if (!(p >= 0.0 && p <= 1.0)) throw ParameterError("--p must lie in [0, 1]");
      const auto t = cfg.spec.source.build(cfg.spec.window, cfg.spec.seed, replicate);
      Stream s = perc::coloring_stream(cfg.spec.seed, replicate);
      harness::RenderOptions opt;
      opt.show_graph = harness::overlay_from_name(show_graph);
      opt.core_only = core_only;
      harness::render_svg(t, perc::color(t, p, s), svg_out, opt);
      std::cout << svg_out << "\n";
      if (!points_out.empty()) {
        if (!t.generators) throw ParameterError("--points needs a Voronoi tessellation");
        std::ofstream out(points_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + points_out);
        harness::write_csv(harness::configuration_table(*t.generators), out);
        std::cout << points_out << "\n";
      }
    }
  } catch (const harness::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const perc::ReplicateBudgetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
