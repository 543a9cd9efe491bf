#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "tessperc/diagnostics.hpp"
#include "tessperc/percolation.hpp"

namespace tessperc::harness {

/// Malformed or invalid configuration, with the 1-based line the problem was traced to.
class ConfigError : public ParameterError {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& what)
      : ParameterError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// A parsed experiment. Keys:
///   op            operation name (see operation_names())
///   process       {"kind": ..., "params": {...}}; default Poisson, intensity 1
///   tessellation  {"type": "voronoi"} or {"type": "lattice", "kind": "square"|"hexagonal",
///                 "spacing": s, "random_shift": bool}; default voronoi
///   adjacency     "face" | "star"
///   window        {"lo": [x, y], "hi": [x, y]}
///   buffer        Voronoi buffer width; omitted or 0 selects 5 / sqrt(intensity)
///   p             number or array of numbers in [0, 1]
///   t             number or array of positive numbers
///   replicates    positive integer
///   seed          non-negative integer
///   params        operation-specific object
struct Config {
  std::string op;
  perc::ExperimentSpec spec;
  std::vector<double> p_grid;
  std::vector<double> t_schedule;
  std::size_t replicates = 100;
  nlohmann::json params = nlohmann::json::object();

  //! Canonical form: every field explicit, sorted keys, no worker count.
  nlohmann::json canonical() const;
  //! FNV-1a 64 of canonical().dump(), as 16 lowercase hex digits.
  std::string hash() const;
};

std::vector<std::string> operation_names();

Config parse_config(const std::string& text, const std::string& source = "<config>");
Config load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::string& bytes);

/// Shortest decimal that round-trips, independent of locale.
std::string format_number(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  bool empty() const { return rows.empty(); }
};

//! RFC 4180: CRLF line ends, fields quoted when they hold commas, quotes or line breaks.
void write_csv(const Table& table, std::ostream& out);
std::string to_csv(const Table& table);

struct OpOutput {
  //! Summary rows, one per grid point.
  Table table;
  //! Per-replicate rows; empty when the operation has none.
  Table replicates;
  nlohmann::json summary = nlohmann::json::object();
  std::size_t failed = 0;
};

/// Runs the configured operation in memory.
OpOutput execute(const Config& config);

/// Rebuilds a sample of replicates and checks that black sets and crossing indicators are nested
/// along the p-grid. Returns the number of replicates checked; throws std::runtime_error on a
/// violation.
std::size_t coupling_spot_check(const Config& config, double fraction = 0.01);

struct RunResult {
  std::filesystem::path directory;
  std::vector<std::filesystem::path> files;
  OpOutput output;
};

/// Writes out_dir/{hash}/{op}.csv and appends a record to out_dir/{hash}/run.json.
RunResult run(const Config& config, const std::filesystem::path& out_dir);
/// Writes out_dir/{hash}/{op}_sweep.csv (long format) and {op}_replicates.csv, and appends to run.json.
RunResult sweep(const Config& config, const std::filesystem::path& out_dir);

enum class GraphOverlay { none, face, star };
GraphOverlay overlay_from_name(const std::string& name);

struct RenderOptions {
  GraphOverlay show_graph = GraphOverlay::none;
  bool core_only = false;
  double scale = 20.0;
};

//! SVG 1.1 document: one polygon per cell in id order, then overlay lines.
std::string svg_document(const tess::Tessellation& tess, const perc::Coloring& coloring, const RenderOptions& options);
void render_svg(const tess::Tessellation& tess, const perc::Coloring& coloring, const std::filesystem::path& path,
                const RenderOptions& options = {});
//! Overlay edges drawn for these options (both endpoints' centers in the core when core_only).
std::size_t overlay_edge_count(const tess::Tessellation& tess, const RenderOptions& options);

//! Generator configuration as CSV (id, x, y).
Table configuration_table(const pp::PointConfiguration& points);

std::string artifact_version();

}  // namespace tessperc::harness
