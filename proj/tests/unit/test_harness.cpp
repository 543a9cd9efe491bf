#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "tessperc/harness.hpp"

using namespace tessperc;
using namespace tessperc::harness;

namespace {

const char* kCrossing = R"({
  "op": "crossing",
  "window": {"lo": [-6, -6], "hi": [6, 6]},
  "p": [0.0, 0.4, 0.5, 0.6, 1.0],
  "replicates": 60,
  "seed": 3
})";

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tessperc_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_of(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(-0.0) == "0");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1e-20) == "1e-20");
  CHECK(format_number(3.0) == "3");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("CSV quoting and CRLF line ends") {
  Table t;
  t.header = {"a", "b"};
  t.rows = {{"1", "x,y"}, {"say \"hi\"", "line\nbreak"}};
  CHECK(to_csv(t) == "a,b\r\n1,\"x,y\"\r\n\"say \"\"hi\"\"\",\"line\nbreak\"\r\n");
}

TEST_CASE("config hash is stable under key reordering and sensitive to values") {
  const auto a = parse_config(kCrossing);
  const auto b = parse_config(R"({"seed": 3, "replicates": 60, "p": [0.0, 0.4, 0.5, 0.6, 1.0],
    "window": {"hi": [6, 6], "lo": [-6, -6]}, "op": "crossing"})");
  CHECK(a.hash() == b.hash());
  CHECK(a.hash().size() == 16);
  auto c = a;
  c.spec.seed = 4;
  CHECK(c.hash() != a.hash());
  auto d = a;
  d.spec.workers = 4;
  CHECK(d.hash() == a.hash());
  CHECK(a.params["rect"] == a.canonical()["params"]["rect"]);
}

TEST_CASE("config errors carry the offending line") {
  try {
    parse_config("{\n  \"op\": \"crossing\",\n  \"p\": [],\n  \"replicates\": 10\n}", "x.json");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).starts_with("x.json:3:"));
  }
  try {
    parse_config("{\n  \"op\": \"crossing\",\n  \"p\": 0.5,\n  \"colour\": 1\n}", "y.json");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line() == 4);
  }
  try {
    parse_config(R"({"op": "crossing", "p": 0.5, "process": {"kind": "poisson", "params": {"intensity": -1}}})");
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("intensity") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"op": "nope"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"op": "crossing"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"op": "crossing", "p": 1.5})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"op": "void_probability", "t": [0]})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"op": "crossing", "p": 0.5, "seed": -1})"), ConfigError);
  CHECK_THROWS_AS(parse_config("{\"op\": \"crossing\",\n \"p\": 0.5,"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"op": "crossing", "p": 0.5, "process": {"kind": "poisson_line"}})"), ConfigError);
}

TEST_CASE("every operation parses with defaults") {
  for (const auto& op : operation_names()) {
    std::string text = R"({"op": ")" + op + R"(", "p": 0.5, "t": 1)";
    if (op == "peierls") text += R"(, "params": {"c3": 0.2, "c4": 0.1})";
    text += "}";
    CHECK_NOTHROW(parse_config(text));
  }
}

TEST_CASE("p-grid endpoints give 0 and 1 rows") {
  auto c = parse_config(R"({"op": "crossing", "window": {"lo": [-4, -4], "hi": [4, 4]}, "p": [0, 1],
    "replicates": 50, "params": {"color": "black"}})");
  const auto out = execute(c);
  REQUIRE(out.table.rows.size() == 2);
  CHECK(out.table.rows[0][1] == "0");
  CHECK(out.table.rows[1][1] == "1");
}

TEST_CASE("CSV output is byte-identical across worker counts") {
  auto c = parse_config(kCrossing);
  std::string first;
  for (int w : {1, 2, 4}) {
    c.spec.workers = w;
    const auto csv = to_csv(execute(c).table) + to_csv(execute(c).replicates);
    if (first.empty()) first = csv;
    CHECK(csv == first);
  }
}

TEST_CASE("run writes a CSV and appends to run.json") {
  const auto dir = scratch("run");
  const auto c = parse_config(kCrossing);
  const auto r1 = run(c, dir);
  CHECK(r1.directory == dir / c.hash());
  REQUIRE(r1.files.size() == 1);
  const auto csv = slurp(r1.files[0]);
  CHECK(csv.starts_with("p,estimate,ci_lo,ci_hi,replicates,failed\r\n"));
  CHECK(count_of(csv, "\r\n") == 6);
  run(c, dir);
  const auto log = nlohmann::json::parse(slurp(r1.directory / "run.json"));
  REQUIRE(log.is_array());
  CHECK(log.size() == 2);
  CHECK(log[0]["spec_hash"] == c.hash());
  CHECK(log[0]["version"] == artifact_version());
  CHECK(log[0]["spec"] == c.canonical());
  CHECK(log[0]["results"] == log[1]["results"]);
  std::filesystem::remove_all(dir);
}

TEST_CASE("sweeps over two seeds land in distinct directories with distinct results") {
  const auto dir = scratch("sweep");
  auto a = parse_config(kCrossing);
  auto b = a;
  b.spec.seed = 99;
  const auto ra = sweep(a, dir), rb = sweep(b, dir);
  CHECK(ra.directory != rb.directory);
  REQUIRE(ra.files.size() == 2);
  CHECK(slurp(ra.files[0]).starts_with("row,column,value\r\n"));
  CHECK(slurp(ra.files[1]) != slurp(rb.files[1]));
  std::filesystem::remove_all(dir);
}

TEST_CASE("coupling spot check passes") {
  auto c = parse_config(kCrossing);
  c.replicates = 300;
  CHECK(coupling_spot_check(c) == 3);
}

TEST_CASE("SVG rendering of a colored grid") {
  const auto t = tess::build_lattice_tessellation(tess::LatticeKind::square, 1.0, {0, 0}, Window{{0, 0}, {2, 2}});
  std::vector<bool> black(t.size(), false);
  std::size_t cells_in_core = 0, painted = 0;
  for (std::size_t k = 0; k < t.size(); ++k)
    if (t.core_window.contains(t.cells[k].center)) {
      ++cells_in_core;
      if (painted < 2) black[k] = true, ++painted;
    }
  REQUIRE(cells_in_core == 4);
  const auto svg = svg_document(t, perc::fixed_coloring(black), {});
  CHECK(count_of(svg, "<polygon") == t.size());
  CHECK(count_of(svg, "fill=\"black\"") == 2);
  CHECK(count_of(svg, "<line") == 0);

  const auto white = svg_document(t, perc::Coloring{std::vector<double>(t.size(), 0.5), 0.0}, {});
  CHECK(count_of(white, "fill=\"black\"") == 0);

  CHECK_THROWS_AS(svg_document(t, perc::Coloring{{0.1}, 0.5}, {}), ParameterError);
}

TEST_CASE("face overlay on a grid draws 2 nr nc - nr - nc edges in the core") {
  for (auto [nr, nc] : {std::pair{2, 2}, std::pair{3, 5}, std::pair{6, 4}}) {
    const auto t = tess::build_lattice_tessellation(tess::LatticeKind::square, 1.0, {0, 0},
                                                    Window{{0, 0}, {double(nc), double(nr)}});
    RenderOptions o;
    o.show_graph = GraphOverlay::face;
    o.core_only = true;
    const auto expect = static_cast<std::size_t>(2 * nr * nc - nr - nc);
    CHECK(overlay_edge_count(t, o) == expect);
    const auto svg = svg_document(t, perc::Coloring{std::vector<double>(t.size(), 0.5), 0.5}, o);
    CHECK(count_of(svg, "<line") == expect);
    CHECK(count_of(svg, "clipPath") >= 1);
    o.show_graph = GraphOverlay::star;
    CHECK(overlay_edge_count(t, o) == expect + static_cast<std::size_t>(2 * (nr - 1) * (nc - 1)));
  }
  CHECK_THROWS_AS(overlay_from_name("hex"), ParameterError);
}

TEST_CASE("configuration table") {
  pp::PointConfiguration pts;
  pts.points = {{0.5, 1.0}, {-2, 0.25}};
  const auto t = configuration_table(pts);
  CHECK(to_csv(t) == "id,x,y\r\n0,0.5,1\r\n1,-2,0.25\r\n");
}
