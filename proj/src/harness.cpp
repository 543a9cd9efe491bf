#include "tessperc/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "tessperc/json_util.hpp"

#ifndef TESSPERC_VERSION
#define TESSPERC_VERSION "0.1.0"
#endif

namespace tessperc::harness {

using nlohmann::json;

std::string artifact_version() { return TESSPERC_VERSION; }

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

std::string num(double v) { return format_number(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }
std::string num(std::size_t v, int) { return std::to_string(v); }

//! Runs fn, turning any ParameterError into a ConfigKeyError under `key`.
template <class Fn>
auto under(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigKeyError& e) {
    throw e.nested_in(key);
  } catch (const ParameterError& e) {
    throw ConfigKeyError({key}, e.what());
  }
}

Vec2 vec_from_json(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ConfigKeyError({key}, "'" + key + "' must be an array [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Window window_from_json(const json& j) {
  StrictObject o(j);
  const Vec2 lo = vec_from_json(o.at("lo"), "lo");
  const Vec2 hi = vec_from_json(o.at("hi"), "hi");
  o.finish();
  return Window(lo, hi);
}

json window_to_json(const Window& w) { return {{"lo", {w.lo.x, w.lo.y}}, {"hi", {w.hi.x, w.hi.y}}}; }

std::vector<double> scalar_or_array(StrictObject& o, const std::string& key) {
  const auto& v = o.at(key);
  if (v.is_number()) return {v.get<double>()};
  return o.numbers(key);
}

std::vector<std::size_t> sizes_from(StrictObject& o, const std::string& key, std::vector<std::size_t> fallback) {
  if (!o.has(key)) return fallback;
  const auto& v = o.at(key);
  if (!v.is_array() || v.empty()) throw ConfigKeyError({key}, "'" + key + "' must be a non-empty integer array");
  std::vector<std::size_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 1)
      throw ConfigKeyError({key}, "'" + key + "' entries must be positive integers");
    out.push_back(e.get<std::size_t>());
  }
  return out;
}

std::size_t positive_integer(StrictObject& o, const std::string& key, std::int64_t fallback) {
  const auto v = o.integer_or(key, fallback);
  if (v < 1) throw ConfigKeyError({key}, "'" + key + "' must be a positive integer");
  return static_cast<std::size_t>(v);
}

struct OpInfo {
  bool needs_p = false;
  bool needs_t = false;
  bool builds_tessellation = true;
  //! Validates params and returns them with every default filled in.
  std::function<json(const json&, const Config&)> normalize;
};

json window_param(StrictObject& o, const std::string& key, const Window& fallback) {
  if (!o.has(key)) return window_to_json(fallback);
  return window_to_json(under(key, [&] { return window_from_json(o.at(key)); }));
}

const std::map<std::string, OpInfo>& ops() {
  static const std::map<std::string, OpInfo> table = [] {
    std::map<std::string, OpInfo> m;
    m["void_probability"] = {false, true, false, [](const json& j, const Config&) {
                               StrictObject o(j);
                               json out{{"q", window_param(o, "q", Window{{0, 0}, {1, 1}})}};
                               o.finish();
                               return out;
                             }};
    m["laplace_functional"] = {false, true, false, [](const json& j, const Config&) {
                                 StrictObject o(j);
                                 json regions = json::array();
                                 if (o.has("regions")) {
                                   const auto& r = o.at("regions");
                                   if (!r.is_array() || r.empty())
                                     throw ConfigKeyError({"regions"}, "'regions' must be a non-empty array of windows");
                                   for (const auto& w : r)
                                     regions.push_back(window_to_json(under("regions", [&] { return window_from_json(w); })));
                                 } else {
                                   regions.push_back(window_to_json(Window{{0, 0}, {2, 2}}));
                                 }
                                 o.finish();
                                 return json{{"regions", regions}};
                               }};
    m["crossing"] = {true, false, true, [](const json& j, const Config& c) {
                       StrictObject o(j);
                       json out{{"direction", o.string_or("direction", "horizontal")},
                                {"color", o.string_or("color", "black")},
                                {"rect", window_param(o, "rect", c.spec.window)}};
                       if (out["direction"] != "horizontal" && out["direction"] != "vertical")
                         throw ConfigKeyError({"direction"}, "'direction' must be horizontal or vertical");
                       if (out["color"] != "black" && out["color"] != "white")
                         throw ConfigKeyError({"color"}, "'color' must be black or white");
                       o.finish();
                       return out;
                     }};
    m["theta"] = {true, false, true, [](const json& j, const Config&) {
                    StrictObject o(j);
                    std::vector<double> radii{5, 10, 20};
                    if (o.has("radii")) radii = o.numbers("radii");
                    if (radii.empty()) throw ConfigKeyError({"radii"}, "'radii' must be non-empty");
                    o.finish();
                    return json{{"radii", radii}};
                  }};
    m["pc"] = {false, false, true, [](const json& j, const Config&) {
                 StrictObject o(j);
                 json out{{"tolerance", o.number_or("tolerance", 0.02)},
                          {"max_probes", positive_integer(o, "max_probes", 24)}};
                 o.finish();
                 return out;
               }};
    m["spanning"] = {true, false, true, [](const json& j, const Config& c) {
                       StrictObject o(j);
                       json out{{"rect", window_param(o, "rect", c.spec.window)}};
                       o.finish();
                       return out;
                     }};
    m["trifurcation"] = {true, false, true, [](const json& j, const Config&) {
                           StrictObject o(j);
                           json out{{"r1", positive_integer(o, "r1", 1)}, {"r2", o.positive_or("r2", 1.5)}};
                           o.finish();
                           return out;
                         }};
    m["ggr"] = {true, false, true, [](const json& j, const Config&) {
                  StrictObject o(j);
                  json out{{"n_max", positive_integer(o, "n_max", 10)}};
                  o.finish();
                  return out;
                }};
    m["recursion"] = {true, true, true, [](const json& j, const Config&) {
                        StrictObject o(j);
                        o.finish();
                        return json::object();
                      }};
    m["smp_gap"] = {false, true, true, [](const json& j, const Config&) {
                      StrictObject o(j);
                      json out{{"family", o.string_or("family", "crossing")},
                               {"q", window_param(o, "q", Window{{-0.2505, -0.125}, {-0.0005, 0.125}})},
                               {"q_prime", window_param(o, "q_prime", Window{{0.0005, -0.125}, {0.2505, 0.125}})},
                               {"coin", o.number_or("coin", 0.5)}};
                      under("family", [&] { return diag::family_from_name(out["family"].get<std::string>()); });
                      o.finish();
                      return out;
                    }};
    m["line_smp"] = {false, true, false, [](const json& j, const Config&) {
                       StrictObject o(j);
                       json out{{"line_intensity", o.number_or("line_intensity", 1.0)},
                                {"angle_tol", o.positive_or("angle_tol", 0.1)}};
                       if (!(out["line_intensity"].get<double>() >= 0.0))
                         throw ConfigKeyError({"line_intensity"}, "'line_intensity' must be >= 0");
                       o.finish();
                       return out;
                     }};
    m["mixture"] = {true, false, false, [](const json& j, const Config&) {
                      StrictObject o(j);
                      o.finish();
                      return json::object();
                    }};
    m["tameness"] = {false, false, true, [](const json& j, const Config&) {
                       StrictObject o(j);
                       const auto ns = sizes_from(o, "n_schedule", {4, 8, 16, 32, 64});
                       json out{{"delta", o.positive_or("delta", 2.0)}, {"n_schedule", ns}};
                       o.finish();
                       return out;
                     }};
    m["peierls"] = {true, false, true, [](const json& j, const Config&) {
                      StrictObject o(j);
                      const auto lengths = sizes_from(o, "lengths", {8, 16, 32});
                      json out{{"delta", o.positive_or("delta", 2.0)},
                               {"c3", o.number("c3")},
                               {"c4", o.number("c4")},
                               {"lengths", lengths}};
                      o.finish();
                      return out;
                    }};
    m["growth"] = {false, false, true, [](const json& j, const Config&) {
                     StrictObject o(j);
                     json out{{"n_max", positive_integer(o, "n_max", 20)}};
                     o.finish();
                     return out;
                   }};
    m["animals"] = {false, false, true, [](const json& j, const Config&) {
                      StrictObject o(j);
                      json out{{"n_max", positive_integer(o, "n_max", 10)},
                               {"budget", positive_integer(o, "budget", 50'000'000)}};
                      o.finish();
                      return out;
                    }};
    return m;
  }();
  return table;
}

std::size_t line_at(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

//! Line of the innermost key of `path` that can be found by walking the keys in order.
std::size_t line_of_path(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  bool found_any = false;
  for (const auto& key : path) {
    const std::string quoted = "\"" + key + "\"";
    std::size_t at = pos;
    bool found = false;
    while ((at = text.find(quoted, at)) != std::string::npos) {
      std::size_t k = at + quoted.size();
      while (k < text.size() && std::isspace(static_cast<unsigned char>(text[k]))) ++k;
      if (k < text.size() && text[k] == ':') {
        found = true;
        break;
      }
      ++at;
    }
    if (!found) break;
    pos = at;
    found_any = true;
  }
  return found_any ? line_at(text, pos) : 1;
}

std::string join_path(const std::vector<std::string>& path) {
  std::string s;
  for (const auto& p : path) s += (s.empty() ? "" : ".") + p;
  return s;
}

Config config_from_json(const json& j) {
  StrictObject o(j);
  Config c;
  c.op = o.string("op");
  const auto it = ops().find(c.op);
  if (it == ops().end()) {
    std::string names;
    for (const auto& n : operation_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigKeyError({"op"}, "unknown op '" + c.op + "' (expected one of " + names + ")");
  }
  const OpInfo& info = it->second;
  if (o.has("process"))
    c.spec.source.process = under("process", [&] { return pp::process_from_json(o.at("process")); });
  if (o.has("tessellation")) {
    under("tessellation", [&] {
      StrictObject t(o.at("tessellation"));
      const auto type = t.string_or("type", "voronoi");
      if (type == "lattice") {
        c.spec.source.kind = perc::SourceKind::lattice;
        c.spec.source.lattice = under("kind", [&] { return tess::lattice_from_name(t.string_or("kind", "square")); });
        c.spec.source.spacing = t.positive_or("spacing", 1.0);
        c.spec.source.random_shift = t.boolean_or("random_shift", false);
      } else if (type != "voronoi") {
        throw ConfigKeyError({"type"}, "tessellation type must be voronoi or lattice");
      }
      t.finish();
      return 0;
    });
  }
  c.spec.adjacency = under("adjacency", [&] { return tess::adjacency_from_name(o.string_or("adjacency", "face")); });
  if (o.has("window")) c.spec.window = under("window", [&] { return window_from_json(o.at("window")); });
  c.spec.source.buffer = o.number_or("buffer", 0.0);
  if (!(c.spec.source.buffer >= 0.0)) throw ConfigKeyError({"buffer"}, "'buffer' must be >= 0");
  if (o.has("p")) {
    c.p_grid = scalar_or_array(o, "p");
    if (c.p_grid.empty()) throw ConfigKeyError({"p"}, "p-grid is empty");
    for (double p : c.p_grid)
      if (!(p >= 0.0 && p <= 1.0)) throw ConfigKeyError({"p"}, "p values must lie in [0, 1]");
  }
  if (o.has("t")) {
    c.t_schedule = scalar_or_array(o, "t");
    if (c.t_schedule.empty()) throw ConfigKeyError({"t"}, "t-schedule is empty");
    for (double t : c.t_schedule)
      if (!(t > 0.0) || !std::isfinite(t)) throw ConfigKeyError({"t"}, "t values must be positive");
  }
  c.replicates = positive_integer(o, "replicates", 100);
  if (o.has("seed")) {
    const auto& s = o.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ConfigKeyError({"seed"}, "'seed' must be a non-negative integer");
    c.spec.seed = s.get<std::uint64_t>();
  }
  const json raw_params = o.has("params") ? o.at("params") : json::object();
  o.finish();
  if (info.needs_p && c.p_grid.empty()) throw ConfigKeyError({"p"}, "op '" + c.op + "' needs a non-empty p-grid");
  if (info.needs_t && c.t_schedule.empty())
    throw ConfigKeyError({"t"}, "op '" + c.op + "' needs a non-empty t-schedule");
  if (info.builds_tessellation && c.spec.source.kind == perc::SourceKind::voronoi &&
      c.spec.source.process.kind() == pp::Kind::poisson_line)
    throw ConfigKeyError({"process"}, "a line process does not generate Voronoi cells");
  c.params = under("params", [&] { return info.normalize(raw_params, c); });
  return c;
}

}  // namespace

std::vector<std::string> operation_names() {
  std::vector<std::string> out;
  for (const auto& [name, info] : ops()) out.push_back(name);
  return out;
}

json Config::canonical() const {
  json tessellation;
  if (spec.source.kind == perc::SourceKind::lattice)
    tessellation = {{"type", "lattice"}, {"kind", tess::lattice_name(spec.source.lattice)},
                    {"spacing", spec.source.spacing}, {"random_shift", spec.source.random_shift}};
  else
    tessellation = {{"type", "voronoi"}};
  return {{"op", op},
          {"process", pp::to_json(spec.source.process)},
          {"tessellation", tessellation},
          {"adjacency", tess::adjacency_name(spec.adjacency)},
          {"window", window_to_json(spec.window)},
          {"buffer", spec.source.buffer},
          {"p", p_grid},
          {"t", t_schedule},
          {"replicates", replicates},
          {"seed", spec.seed},
          {"params", params}};
}

std::string Config::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical().dump())));
  return buf;
}

Config parse_config(const std::string& text, const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source, line_at(text, e.byte == 0 ? 0 : e.byte - 1), std::string("invalid JSON: ") + e.what());
  }
  try {
    return config_from_json(j);
  } catch (const ConfigKeyError& e) {
    const std::string where = e.path().empty() ? "" : " [" + join_path(e.path()) + "]";
    throw ConfigError(source, line_of_path(text, e.path()), std::string(e.what()) + where);
  } catch (const ParameterError& e) {
    throw ConfigError(source, 1, e.what());
  }
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

void write_csv(const Table& table, std::ostream& out) {
  auto line = [&](const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) out << (k ? "," : "") << csv_field(fields[k]);
    out << "\r\n";
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
}

std::string to_csv(const Table& table) {
  std::ostringstream ss;
  write_csv(table, ss);
  return ss.str();
}

namespace {

Window window_of(const json& j) { return Window({j["lo"][0].get<double>(), j["lo"][1].get<double>()},
                                                {j["hi"][0].get<double>(), j["hi"][1].get<double>()}); }

std::vector<std::string> estimate_cols(const Proportion& p) {
  const auto ci = p.ci();
  return {num(p.estimate()), num(ci.lo), num(ci.hi), num(p.trials)};
}

std::vector<std::string> mean_cols(const MeanEstimate& m) {
  const auto ci = m.ci();
  return {num(m.mean), num(ci.lo), num(ci.hi), num(m.n)};
}

template <class... Parts>
std::vector<std::string> row(Parts&&... parts) {
  std::vector<std::string> out;
  auto add = [&](auto&& part) {
    if constexpr (std::is_same_v<std::decay_t<decltype(part)>, std::vector<std::string>>)
      out.insert(out.end(), part.begin(), part.end());
    else
      out.push_back(part);
  };
  (add(parts), ...);
  return out;
}

OpOutput op_void(const Config& c) {
  const Window q = window_of(c.params["q"]);
  const auto est = pp::estimate_void_probability(c.spec.source.process, q, c.t_schedule, c.replicates, c.spec.seed,
                                                 c.spec.workers);
  OpOutput out;
  out.table.header = {"t", "estimate", "ci_lo", "ci_hi", "replicates", "poisson_oracle"};
  const bool poisson = c.spec.source.process.kind() == pp::Kind::poisson;
  for (const auto& e : est) {
    const double oracle = std::exp(-c.spec.source.process.intensity() * q.scaled_about_corner(e.t).area());
    out.table.rows.push_back(row(num(e.t), estimate_cols(e.empty), poisson ? num(oracle) : std::string()));
  }
  return out;
}

OpOutput op_laplace(const Config& c) {
  std::vector<Window> regions;
  for (const auto& w : c.params["regions"]) regions.push_back(window_of(w));
  OpOutput out;
  out.table.header = {"t", "estimate", "ci_lo", "ci_hi", "replicates", "bound", "failed", "note"};
  for (double t : c.t_schedule) {
    const auto e =
        pp::estimate_laplace_functional(c.spec.source.process, t, regions, c.replicates, c.spec.seed, c.spec.workers);
    out.table.rows.push_back(row(num(t), mean_cols(e.value), e.analytic_bound >= 0 ? num(e.analytic_bound) : "",
                                 e.failed ? "1" : "0", e.failed ? e.failure : e.bound_note));
  }
  return out;
}

OpOutput op_crossing(const Config& c) {
  perc::CrossingQuery q;
  q.rect = window_of(c.params["rect"]);
  q.direction = c.params["direction"] == "horizontal" ? perc::Direction::horizontal : perc::Direction::vertical;
  q.color = c.params["color"] == "black" ? perc::Color::black : perc::Color::white;
  q.adjacency = c.spec.adjacency;
  const auto curve = perc::estimate_crossing_curve(c.spec, q, c.p_grid, c.replicates);
  OpOutput out;
  out.table.header = {"p", "estimate", "ci_lo", "ci_hi", "replicates", "failed"};
  for (std::size_t k = 0; k < curve.p.size(); ++k) {
    out.table.rows.push_back(row(num(curve.p[k]), estimate_cols(curve.results[k].hits), num(curve.results[k].failed, 0)));
    out.failed = curve.results[k].failed;
  }
  out.replicates.header = {"replicate", "p", "indicator"};
  for (std::size_t r = 0; r < curve.indicators.size(); ++r)
    for (std::size_t k = 0; k < curve.p.size(); ++k)
      out.replicates.rows.push_back({num(r, 0), num(curve.p[k]),
                                     curve.indicators[r].empty() ? "" : num(static_cast<double>(curve.indicators[r][k]))});
  return out;
}

OpOutput op_theta(const Config& c) {
  const auto radii = c.params["radii"].get<std::vector<double>>();
  OpOutput out;
  out.table.header = {"p", "radius", "estimate", "ci_lo", "ci_hi", "replicates"};
  out.replicates.header = {"replicate", "p", "radius", "indicator"};
  for (double p : c.p_grid) {
    const auto th = perc::estimate_theta(c.spec, p, radii, c.replicates);
    for (std::size_t k = 0; k < radii.size(); ++k) {
      out.table.rows.push_back(row(num(p), num(radii[k]), estimate_cols(th.results[k].hits)));
      out.failed = th.results[k].failed;
    }
    for (std::size_t r = 0; r < th.indicators.size(); ++r)
      for (std::size_t k = 0; k < radii.size(); ++k)
        out.replicates.rows.push_back({num(r, 0), num(p), num(radii[k]),
                                       th.indicators[r].empty() ? "" : num(static_cast<double>(th.indicators[r][k]))});
  }
  return out;
}

OpOutput op_pc(const Config& c) {
  const auto est = perc::estimate_pc(c.spec, c.params["tolerance"].get<double>(), c.replicates,
                                     c.params["max_probes"].get<std::size_t>());
  OpOutput out;
  out.table.header = {"probe", "p", "estimate", "ci_lo", "ci_hi", "replicates"};
  for (std::size_t k = 0; k < est.probes.size(); ++k)
    out.table.rows.push_back(row(num(k, 0), num(est.probes[k].p), estimate_cols(est.probes[k].crossing)));
  out.summary = {{"lo", est.lo}, {"hi", est.hi}, {"flagged", est.flagged}};
  out.failed = est.failed;
  return out;
}

OpOutput op_spanning(const Config& c) {
  const Window rect = window_of(c.params["rect"]);
  OpOutput out;
  out.table.header = {"p", "clusters", "count", "frequency"};
  out.replicates.header = {"replicate", "p", "clusters"};
  json at_least_2 = json::object();
  for (double p : c.p_grid) {
    const auto h = perc::count_spanning_clusters(c.spec, p, rect, c.replicates);
    for (const auto& [k, n] : h.counts)
      out.table.rows.push_back({num(p), num(k, 0), num(n), num(static_cast<double>(n) / static_cast<double>(h.replicates))});
    for (std::size_t r = 0; r < h.per_replicate.size(); ++r)
      out.replicates.rows.push_back({num(r, 0), num(p), num(h.per_replicate[r], 0)});
    at_least_2[num(p)] = h.at_least(2).estimate();
    out.failed = h.failed;
  }
  out.summary = {{"at_least_2", at_least_2}};
  return out;
}

OpOutput op_trifurcation(const Config& c) {
  const auto r1 = c.params["r1"].get<std::size_t>();
  const double r2 = c.params["r2"].get<double>();
  OpOutput out;
  out.table.header = {"p", "mean_count", "ci_lo", "ci_hi", "replicates", "mean_density"};
  out.replicates.header = {"replicate", "p", "candidates", "skipped", "count", "density"};
  for (double p : c.p_grid) {
    auto rows = perc::run_replicates(c.spec, c.replicates, [&](const tess::Tessellation& t, std::size_t rep) {
      Stream s = perc::coloring_stream(c.spec.seed, rep);
      return perc::find_trifurcations(t, perc::color(t, p, s), r1, r2, c.spec.window, c.spec.adjacency);
    });
    std::vector<double> counts, dens;
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (!rows[r]) {
        ++out.failed;
        continue;
      }
      counts.push_back(static_cast<double>(rows[r]->count));
      dens.push_back(rows[r]->density);
      out.replicates.rows.push_back({num(r, 0), num(p), num(rows[r]->candidates, 0), num(rows[r]->skipped, 0),
                                     num(rows[r]->count, 0), num(rows[r]->density)});
    }
    out.table.rows.push_back(row(num(p), mean_cols(mean_estimate(counts)), num(mean_estimate(dens).mean)));
  }
  return out;
}

OpOutput op_ggr(const Config& c) {
  const auto n_max = c.params["n_max"].get<std::size_t>();
  OpOutput out;
  out.table.header = {"p", "n", "g1", "g1_lo", "g1_hi", "g2", "g2_lo", "g2_hi", "replicates"};
  for (double p : c.p_grid) {
    const auto g = perc::ggr_diagnostics(c.spec, p, n_max, c.replicates);
    for (std::size_t n = 0; n < g.g1.size(); ++n) {
      const auto a = g.g1[n].ci(), b = g.g2[n].ci();
      out.table.rows.push_back({num(p), num(n, 0), num(g.g1[n].mean), num(a.lo), num(a.hi), num(g.g2[n].mean),
                                num(b.lo), num(b.hi), num(g.g1[n].n)});
    }
    out.failed = g.failed;
    out.summary["truncated"] = g.truncated;
  }
  return out;
}

OpOutput op_recursion(const Config& c) {
  OpOutput out;
  out.table.header = {"p", "t", "quantity", "estimate", "ci_lo", "ci_hi", "replicates"};
  json verdicts = json::array();
  for (double p : c.p_grid)
    for (double t : c.t_schedule) {
      const auto r = perc::verify_crossing_recursion(c.spec, p, t, c.replicates);
      auto add = [&](const std::string& name, const Proportion& pr) {
        out.table.rows.push_back(row(num(p), num(t), name, estimate_cols(pr)));
      };
      add("lhs", r.lhs);
      add("both_strips", r.both_strips);
      for (int s = 0; s < 2; ++s) {
        const std::string tag = s == 0 ? "bottom" : "top";
        add("strip_" + tag, r.strip[s]);
        add("chain_union_" + tag, r.chain_union[s]);
        for (int k = 0; k < 4; ++k) add("h_rect_" + tag + "_" + std::to_string(k), r.h_rects[s][k]);
        for (int k = 0; k < 3; ++k) add("v_rect_" + tag + "_" + std::to_string(k), r.v_rects[s][k]);
      }
      add("h_3t_by_t", r.h_3t_by_t);
      add("v_t_by_t", r.v_t_by_t);
      add("v_t_by_3t", r.v_t_by_3t);
      verdicts.push_back({{"p", p}, {"t", t}, {"rhs", r.rhs}, {"slack", r.slack}, {"margin", r.margin}, {"holds", r.holds}});
      out.failed = r.failed;
    }
  out.summary = {{"verdicts", verdicts}};
  return out;
}

void gap_rows(OpOutput& out, const std::string& p, const diag::SmpGapCurve& curve) {
  for (const auto& g : curve.points)
    out.table.rows.push_back({p, num(g.t), num(g.joint.estimate()), num(g.e.estimate()), num(g.e_prime.estimate()),
                              num(g.gap), num(g.ci.lo), num(g.ci.hi), num(g.stderr_), num(g.joint.trials)});
  for (std::size_t r = 0; r < curve.indicators.size(); ++r)
    for (std::size_t k = 0; k < curve.points.size(); ++k) {
      const auto& ind = curve.indicators[r];
      out.replicates.rows.push_back({num(r, 0), p, num(curve.points[k].t), ind.empty() ? "" : num((ind[k] & 1) ? 1.0 : 0.0),
                                     ind.empty() ? "" : num((ind[k] & 2) ? 1.0 : 0.0)});
    }
  out.failed = curve.failed;
}

const std::vector<std::string> kGapHeader = {"p", "t", "joint", "e", "e_prime", "gap", "ci_lo", "ci_hi", "stderr", "replicates"};

OpOutput op_smp(const Config& c) {
  OpOutput out;
  out.table.header = kGapHeader;
  out.replicates.header = {"replicate", "p", "t", "e", "e_prime"};
  const auto family = diag::family_from_name(c.params["family"].get<std::string>());
  const std::vector<double> ps = c.p_grid.empty() ? std::vector<double>{0.5} : c.p_grid;
  for (double p : ps) {
    diag::SmpOptions opt;
    opt.p = p;
    opt.coin = c.params["coin"].get<double>();
    const auto curve = diag::smp_gap(c.spec, family, window_of(c.params["q"]), window_of(c.params["q_prime"]),
                                     c.t_schedule, c.replicates, opt);
    gap_rows(out, family == diag::EventFamily::crossing ? num(p) : "", curve);
    if (family != diag::EventFamily::crossing) break;
  }
  return out;
}

OpOutput op_line_smp(const Config& c) {
  OpOutput out;
  out.table.header = kGapHeader;
  out.replicates.header = {"replicate", "p", "t", "e", "e_prime"};
  const auto curve = diag::line_process_smp_failure(c.params["line_intensity"].get<double>(), c.t_schedule,
                                                    c.replicates, c.params["angle_tol"].get<double>(), c.spec.seed,
                                                    c.spec.workers);
  gap_rows(out, "", curve);
  return out;
}

OpOutput op_mixture(const Config& c) {
  OpOutput out;
  out.table.header = {"p", "square", "square_lo", "square_hi", "hexagonal", "hexagonal_lo", "hexagonal_hi",
                      "separation", "pooled", "replicates"};
  for (double p : c.p_grid) {
    const auto m = diag::mixture_nonergodic_demo(p, c.spec.window, c.replicates, c.spec.seed, c.spec.workers);
    const auto a = m.square.ci(), b = m.hexagonal.ci();
    out.table.rows.push_back({num(p), num(m.square.estimate()), num(a.lo), num(a.hi), num(m.hexagonal.estimate()),
                              num(b.lo), num(b.hi), num(m.separation), num(m.pooled), num(m.square.replicates())});
    out.failed = m.square.failed + m.hexagonal.failed;
  }
  return out;
}

OpOutput op_tameness(const Config& c) {
  const auto ns = c.params["n_schedule"].get<std::vector<std::size_t>>();
  const auto r = diag::tameness_report(c.spec, c.params["delta"].get<double>(), ns, c.replicates);
  OpOutput out;
  out.table.header = {"n", "field", "anchored", "anchored_lo", "anchored_hi", "free", "free_lo", "free_hi", "method"};
  auto add = [&](const std::string& field, const diag::CurvePoint& pt) {
    const auto a = pt.anchored.ci(), f = pt.free.ci();
    out.table.rows.push_back({num(pt.n, 0), field, num(pt.anchored.mean), num(a.lo), num(a.hi), num(pt.free.mean),
                              num(f.lo), num(f.hi), pt.exact ? "exact" : "local_search"});
  };
  for (const auto& pt : r.y_curve) add("Y", pt);
  for (const auto& pt : r.u_curve) add("U", pt);
  out.summary = {{"y_limsup", r.y_limsup},          {"u_limsup", r.u_limsup},
                 {"u_limsup_anchored", r.u_limsup_anchored}, {"t1_bounded", r.t1_bounded},
                 {"t2_margin", r.t2_margin},        {"t2_margin_anchored", r.t2_margin_anchored}};
  out.failed = r.failed;
  return out;
}

OpOutput op_peierls(const Config& c) {
  OpOutput out;
  out.table.header = {"p", "length", "estimate", "ci_lo", "ci_hi", "replicates", "bound", "margin"};
  const auto lengths = c.params["lengths"].get<std::vector<std::size_t>>();
  for (double p : c.p_grid) {
    const auto r = diag::peierls_probe(c.spec, p, c.params["delta"].get<double>(), c.params["c3"].get<double>(),
                                       c.params["c4"].get<double>(), c.replicates, lengths);
    if (r.declined) {
      out.summary = {{"declined", true}, {"reason", r.reason}};
      return out;
    }
    for (const auto& pt : r.points)
      out.table.rows.push_back(row(num(p), num(pt.length, 0), estimate_cols(pt.all_white_hit), num(pt.bound), num(pt.margin)));
    out.failed = r.failed;
  }
  return out;
}

OpOutput op_growth(const Config& c) {
  const auto n_max = c.params["n_max"].get<std::size_t>();
  auto rows = perc::run_replicates(c.spec, c.replicates, [&](const tess::Tessellation& t, std::size_t) {
    const auto& g = t.graph(c.spec.adjacency);
    return tess::ball_growth_profile(g, t, g.root, n_max);
  });
  OpOutput out;
  out.table.header = {"n", "mean_size", "ci_lo", "ci_hi", "replicates"};
  std::vector<std::vector<double>> sizes(n_max + 1);
  std::vector<double> exps;
  std::size_t truncated = 0;
  for (const auto& r : rows) {
    if (!r) {
      ++out.failed;
      continue;
    }
    truncated += r->truncated ? 1 : 0;
    exps.push_back(r->exponent);
    for (std::size_t n = 0; n <= n_max; ++n) sizes[n].push_back(static_cast<double>(r->sizes[n]));
  }
  for (std::size_t n = 0; n <= n_max; ++n) out.table.rows.push_back(row(num(n, 0), mean_cols(mean_estimate(sizes[n]))));
  out.summary = {{"exponent", mean_estimate(exps).mean}, {"truncated", truncated}};
  return out;
}

OpOutput op_animals(const Config& c) {
  const auto t = c.spec.source.build(c.spec.window, c.spec.seed, 0);
  const auto& g = t.graph(c.spec.adjacency);
  const auto counts =
      tess::enumerate_animals(g, g.root, c.params["n_max"].get<std::size_t>(), c.params["budget"].get<std::uint64_t>());
  OpOutput out;
  out.table.header = {"n", "count", "log_count_over_n"};
  for (std::size_t k = 0; k < counts.counts.size(); ++k)
    out.table.rows.push_back({num(k + 1, 0), num(counts.counts[k]),
                              num(std::log(static_cast<double>(counts.counts[k])) / static_cast<double>(k + 1))});
  out.summary = {{"complete", counts.complete}, {"cutoff", counts.cutoff}, {"nodes", counts.nodes}};
  return out;
}

}  // namespace

OpOutput execute(const Config& c) {
  static const std::map<std::string, OpOutput (*)(const Config&)> dispatch = {
      {"void_probability", op_void}, {"laplace_functional", op_laplace}, {"crossing", op_crossing},
      {"theta", op_theta},           {"pc", op_pc},                       {"spanning", op_spanning},
      {"trifurcation", op_trifurcation}, {"ggr", op_ggr},                 {"recursion", op_recursion},
      {"smp_gap", op_smp},           {"line_smp", op_line_smp},           {"mixture", op_mixture},
      {"tameness", op_tameness},     {"peierls", op_peierls},             {"growth", op_growth},
      {"animals", op_animals}};
  const auto it = dispatch.find(c.op);
  if (it == dispatch.end()) throw ParameterError("unknown op '" + c.op + "'");
  return it->second(c);
}

std::size_t coupling_spot_check(const Config& c, double fraction) {
  if (c.p_grid.size() < 2 || !ops().at(c.op).builds_tessellation) return 0;
  std::vector<double> ps = c.p_grid;
  std::sort(ps.begin(), ps.end());
  const auto stride = static_cast<std::size_t>(std::max(1.0, std::floor(1.0 / fraction)));
  std::size_t checked = 0;
  for (std::size_t rep = 0; rep < c.replicates; rep += stride) {
    std::optional<tess::Tessellation> t;
    try {
      t.emplace(c.spec.source.build(c.spec.window, c.spec.seed, rep));
    } catch (const EdgeEffectError&) {
      continue;
    } catch (const ConstructionError&) {
      continue;
    }
    Stream s = perc::coloring_stream(c.spec.seed, rep);
    const perc::Coloring base = perc::color(*t, ps.front(), s);
    const perc::CrossingQuery q{c.spec.window, perc::Direction::horizontal, perc::Color::black, c.spec.adjacency};
    bool prev_cross = false;
    for (std::size_t k = 0; k < ps.size(); ++k) {
      const auto col = base.at(ps[k]);
      if (k > 0) {
        const auto prev = base.at(ps[k - 1]);
        for (std::size_t i = 0; i < t->size(); ++i)
          if (prev.black(i) && !col.black(i))
            throw std::runtime_error("coupling violated: cell " + std::to_string(i) + " of replicate " +
                                     std::to_string(rep) + " turns white as p increases");
      }
      const bool cross = perc::crossing(*t, col, q);
      if (prev_cross && !cross)
        throw std::runtime_error("coupling violated: crossing of replicate " + std::to_string(rep) +
                                 " disappears as p increases");
      prev_cross = cross;
    }
    ++checked;
  }
  return checked;
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

void append_record(const std::filesystem::path& dir, const json& record) {
  const auto path = dir / "run.json";
  json records = json::array();
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      records = json::parse(in);
    } catch (const json::exception&) {
      throw std::runtime_error(path.string() + " is not a JSON array of run records");
    }
    if (!records.is_array()) throw std::runtime_error(path.string() + " is not a JSON array of run records");
  }
  records.push_back(record);
  write_file(path, records.dump(2) + "\n");
}

json payload(const RunResult& r) {
  json files = json::array();
  for (const auto& f : r.files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(ss.str())));
    files.push_back({{"file", f.filename().string()}, {"fnv1a64", buf}});
  }
  return {{"files", files}, {"summary", r.output.summary}};
}

template <class Body>
RunResult execute_and_record(const Config& c, const std::filesystem::path& out_dir, const std::string& mode, Body&& body) {
  RunResult res;
  res.directory = out_dir / c.hash();
  std::filesystem::create_directories(res.directory);
  const std::string started = utc_now();
  coupling_spot_check(c);
  res.output = execute(c);
  body(res);
  json record = {{"spec_hash", c.hash()},
                 {"op", c.op},
                 {"mode", mode},
                 {"started", started},
                 {"finished", utc_now()},
                 {"version", artifact_version()},
                 {"spec", c.canonical()},
                 {"failed_replicates", res.output.failed},
                 {"results", payload(res)}};
  append_record(res.directory, record);
  return res;
}

}  // namespace

RunResult run(const Config& c, const std::filesystem::path& out_dir) {
  return execute_and_record(c, out_dir, "run", [&](RunResult& res) {
    const auto path = res.directory / (c.op + ".csv");
    write_file(path, to_csv(res.output.table));
    res.files.push_back(path);
  });
}

RunResult sweep(const Config& c, const std::filesystem::path& out_dir) {
  return execute_and_record(c, out_dir, "sweep", [&](RunResult& res) {
    // Long format: one row per (grid point, column).
    Table lng;
    lng.header = {"row", "column", "value"};
    for (std::size_t r = 0; r < res.output.table.rows.size(); ++r)
      for (std::size_t k = 0; k < res.output.table.header.size(); ++k)
        lng.rows.push_back({std::to_string(r), res.output.table.header[k], res.output.table.rows[r][k]});
    const auto path = res.directory / (c.op + "_sweep.csv");
    write_file(path, to_csv(lng));
    res.files.push_back(path);
    if (!res.output.replicates.empty()) {
      const auto rp = res.directory / (c.op + "_replicates.csv");
      write_file(rp, to_csv(res.output.replicates));
      res.files.push_back(rp);
    }
  });
}

GraphOverlay overlay_from_name(const std::string& name) {
  if (name == "none") return GraphOverlay::none;
  if (name == "face") return GraphOverlay::face;
  if (name == "star") return GraphOverlay::star;
  throw ParameterError("show_graph must be face, star or none; got '" + name + "'");
}

namespace {

template <class Fn>
void for_each_overlay_edge(const tess::Tessellation& tess, const RenderOptions& o, Fn&& fn) {
  if (o.show_graph == GraphOverlay::none) return;
  const auto& g = tess.graph(o.show_graph == GraphOverlay::face ? tess::Adjacency::face : tess::Adjacency::star);
  for (std::uint32_t a = 0; a < g.size(); ++a)
    for (auto b : g.neighbors[a]) {
      if (b <= a) continue;
      if (o.core_only && !(tess.core_window.contains(tess.cells[a].center) &&
                           tess.core_window.contains(tess.cells[b].center)))
        continue;
      fn(a, b);
    }
}

}  // namespace

std::size_t overlay_edge_count(const tess::Tessellation& tess, const RenderOptions& options) {
  std::size_t n = 0;
  for_each_overlay_edge(tess, options, [&](std::uint32_t, std::uint32_t) { ++n; });
  return n;
}

std::string svg_document(const tess::Tessellation& tess, const perc::Coloring& coloring, const RenderOptions& o) {
  if (coloring.uniforms.size() != tess.size()) throw ParameterError("coloring does not match the tessellation");
  Window view = tess.core_window;
  if (!o.core_only)
    for (const auto& c : tess.cells)
      for (auto v : c.polygon) {
        view.lo = {std::min(view.lo.x, v.x), std::min(view.lo.y, v.y)};
        view.hi = {std::max(view.hi.x, v.x), std::max(view.hi.y, v.y)};
      }
  const double s = o.scale;
  auto px = [&](Vec2 v) { return num((v.x - view.lo.x) * s) + "," + num((view.hi.y - v.y) * s); };
  std::ostringstream out;
  out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << num(view.width() * s)
      << "\" height=\"" << num(view.height() * s) << "\" viewBox=\"0 0 " << num(view.width() * s) << " "
      << num(view.height() * s) << "\">\n";
  if (o.core_only)
    out << "<defs><clipPath id=\"core\"><rect x=\"0\" y=\"0\" width=\"" << num(view.width() * s) << "\" height=\""
        << num(view.height() * s) << "\"/></clipPath></defs>\n<g clip-path=\"url(#core)\">\n";
  else
    out << "<g>\n";
  for (const auto& c : tess.cells) {
    out << "<polygon id=\"cell" << c.id << "\" points=\"";
    for (std::size_t k = 0; k < c.polygon.size(); ++k) out << (k ? " " : "") << px(c.polygon[k]);
    out << "\" fill=\"" << (coloring.black(c.id) ? "black" : "white") << "\" stroke=\"gray\" stroke-width=\"0.5\"/>\n";
  }
  for_each_overlay_edge(tess, o, [&](std::uint32_t a, std::uint32_t b) {
    const auto pa = tess.cells[a].center, pb = tess.cells[b].center;
    out << "<line x1=\"" << num((pa.x - view.lo.x) * s) << "\" y1=\"" << num((view.hi.y - pa.y) * s) << "\" x2=\""
        << num((pb.x - view.lo.x) * s) << "\" y2=\"" << num((view.hi.y - pb.y) * s)
        << "\" stroke=\"red\" stroke-width=\"0.75\"/>\n";
  });
  out << "</g>\n</svg>\n";
  return out.str();
}

void render_svg(const tess::Tessellation& tess, const perc::Coloring& coloring, const std::filesystem::path& path,
                const RenderOptions& options) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << svg_document(tess, coloring, options);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

Table configuration_table(const pp::PointConfiguration& points) {
  Table t;
  t.header = {"id", "x", "y"};
  for (std::size_t k = 0; k < points.size(); ++k)
    t.rows.push_back({std::to_string(k), num(points.points[k].x), num(points.points[k].y)});
  return t;
}

}  // namespace tessperc::harness
