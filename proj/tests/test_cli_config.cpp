#include <cmath>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "conespec/errors.hpp"
#include "doctest.h"
#include "json.hpp"
#include "run_config.hpp"

using namespace conespec;
using namespace conespec::cli;
using nlohmann::json;

namespace {

const std::string kFlat = R"({
  "command": "spectrum",
  "manifold": {
    "n": 3,
    "cross_section": {"kind": "round_sphere", "radius": 1.0},
    "profile": {"kind": "exact_cone"}
  },
  "lambda_max": 60.0
})";

RunConfig load(const std::string& text, const std::vector<std::string>& set = {}, const std::string& cmd = "spectrum") {
  return load_config(text, "cfg.json", ".", cmd, set);
}

std::string config_error(const std::string& text, const std::vector<std::string>& set = {}) {
  try {
    load(text, set);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

// First data row of a command CSV.
std::vector<std::string> first_row(const std::string& csv) {
  std::istringstream is(csv);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  std::vector<std::string> cells;
  std::stringstream rs(row);
  for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
  return cells;
}

}  // namespace

TEST_CASE("FNV-1a 64 reference values") {
  // Published test vectors of the 64-bit FNV-1a hash.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("line index maps dotted paths to source lines") {
  const auto idx = line_index(kFlat);
  CHECK(idx.at("command") == 2);
  CHECK(idx.at("manifold") == 3);
  CHECK(idx.at("manifold.n") == 4);
  CHECK(idx.at("manifold.cross_section.radius") == 5);
  CHECK(idx.at("lambda_max") == 8);
  const auto arr = line_index("{\n  \"eps\": [\n    0.5,\n    1.0\n  ]\n}");
  CHECK(arr.at("eps") == 2);
  CHECK(arr.at("eps[0]") == 3);
  CHECK(arr.at("eps[1]") == 4);
}

TEST_CASE("defaults are filled and the config validates") {
  const RunConfig c = load(kFlat);
  CHECK(c.command == "spectrum");
  CHECK(c.doc.at("grid").at("nodes").get<int>() == 2048);
  CHECK(c.doc.at("grid").at("r_min_factor").get<double>() == 1e-6);
  CHECK(c.doc.at("seed").is_number_integer());
  CHECK(c.hash.size() == 16);
  CHECK(c.at("manifold.n").get<int>() == 3);
  CHECK(validate(c.doc, run_config_schema()).empty());
}

TEST_CASE("schema violations carry line anchors") {
  std::string bad = kFlat;
  bad.replace(bad.find("\"n\": 3"), 6, "\"n\": 2");
  CHECK(config_error(bad).rfind("cfg.json:4: manifold.n:", 0) == 0);

  std::string typo = kFlat;
  typo.replace(typo.find("\"radius\": 1.0"), 13, "\"radius\": \"x\"");
  CHECK(config_error(typo).rfind("cfg.json:5: manifold.cross_section.radius: expected number", 0) == 0);

  std::string extra = kFlat;
  extra.replace(extra.find("\"lambda_max\""), 12, "\"lambda_mx\"");
  CHECK(config_error(extra).rfind("cfg.json:8:", 0) == 0);

  const std::string broken = "{\n  \"command\": \"spectrum\",\n  \"manifold\": {\n}";
  CHECK(config_error(broken).rfind("cfg.json:", 0) == 0);
  CHECK(config_error("{\n  \"command\": \"spectrum\"\n}").find("missing required key \"manifold\"") !=
        std::string::npos);
}

TEST_CASE("validator subset") {
  const json schema = {{"type", "object"},
                       {"required", {"a"}},
                       {"additionalProperties", false},
                       {"properties",
                        {{"a", {{"type", "number"}, {"exclusiveMinimum", 0}, {"maximum", 2}}},
                         {"k", {{"enum", {"x", "y"}}}},
                         {"v", {{"type", "array"}, {"minItems", 2}, {"items", {{"type", "integer"}}}}}}}};
  CHECK(validate(json{{"a", 1.0}}, schema).empty());
  CHECK(validate(json{{"a", 0.0}}, schema).size() == 1);
  CHECK(validate(json{{"a", 3.0}}, schema).size() == 1);
  CHECK(validate(json{{"a", 1.0}, {"k", "z"}}, schema).size() == 1);
  CHECK(validate(json{{"a", 1.0}, {"q", 1}}, schema).size() == 1);
  CHECK(validate(json::object(), schema).size() == 1);
  const auto issues = validate(json{{"a", 1.0}, {"v", {1, 2.5}}}, schema);
  REQUIRE(issues.size() == 1);
  CHECK(issues[0].path == "v[1]");
  CHECK(validate(json{{"a", 1.0}, {"v", {1}}}, schema).size() == 1);
}

TEST_CASE("overrides: scalars only, anchored to the flag") {
  const RunConfig c = load(kFlat, {"grid.nodes=1024", "lambda_max=80"});
  CHECK(c.doc.at("grid").at("nodes").get<int>() == 1024);
  CHECK(c.doc.at("lambda_max").get<double>() == 80.0);
  CHECK(c.anchor("grid.nodes") == "--set grid.nodes");
  CHECK(config_error(kFlat, {"grid.nodes=abc"}).rfind("--set grid.nodes:", 0) == 0);
  CHECK(!config_error(kFlat, {"manifold={}"}).empty());
  CHECK(!config_error(kFlat, {"novalue"}).empty());
}

TEST_CASE("hash: deterministic, key-order free, output excluded") {
  const RunConfig a = load(kFlat);
  const std::string reordered = R"({"lambda_max": 60.0, "manifold": {"profile": {"kind": "exact_cone"},
    "cross_section": {"radius": 1.0, "kind": "round_sphere"}, "n": 3}, "command": "spectrum"})";
  CHECK(load(reordered).hash == a.hash);
  CHECK(load(kFlat, {"output.dir=\"elsewhere\""}).hash == a.hash);
  CHECK(load(kFlat, {"grid.nodes=1024"}).hash != a.hash);
  CHECK_THROWS_AS(load(kFlat, {}, "modes"), ConfigError);
  // Without a command key the requested command still enters the hash.
  std::string bare = kFlat;
  bare.erase(bare.find("\"command\""), std::string("\"command\": \"spectrum\",\n  ").size());
  CHECK(load(bare).hash == a.hash);
  CHECK(load(bare, {}, "modes").hash != a.hash);
  CHECK(canonical_dump(a.doc).find("\"output\"") == std::string::npos);
  CHECK(canonical_dump(a.doc).find(kVersion) != std::string::npos);
}

TEST_CASE("spectrum command: first row is the Bessel ground state") {
  const CommandResult r = run_command(load(kFlat));
  const auto row = first_row(r.csv);
  REQUIRE(row.size() == 4);
  CHECK(std::stod(row[0]) == doctest::Approx(39.4784176).epsilon(1e-4));
  CHECK(row[1] == "0");
  CHECK(row[2] == "1");
  CHECK(row[3] == "1");
  CHECK(r.headline.at("semibounded").get<bool>());
  CHECK(r.checks_passed);
  // Re-running gives the same bytes.
  CHECK(run_command(load(kFlat)).csv == r.csv);
}

TEST_CASE("hardy on S^2(sqrt 2) reports margin 0, not admissible") {
  const std::string text = R"({
    "command": "hardy",
    "manifold": {"n": 3, "cross_section": {"kind": "round_sphere", "radius": 1.4142135623730951},
                 "profile": {"kind": "exact_cone"}, "diagnostic": true}
  })";
  const CommandResult r = run_command(load(text, {}, "hardy"));
  CHECK(r.headline.at("verdict").get<std::string>() == "margin 0, not admissible");
  CHECK(std::abs(r.headline.at("margin").get<double>()) <= 1e-12);
  CHECK(!r.headline.at("admissible").get<bool>());
}

TEST_CASE("manifold errors found while building are anchored") {
  const std::string text = R"({
    "command": "spectrum",
    "manifold": {"n": 3, "cross_section": {"kind": "round_sphere", "radius": 1.6},
                 "profile": {"kind": "exact_cone"}}
  })";
  try {
    run_command(load(text));
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("cfg.json:3:", 0) == 0);
  }
}

TEST_CASE("selftest passes") {
  const CommandResult r = run_selftest();
  CHECK(r.checks_passed);
  CHECK(r.headline.at("failed").get<int>() == 0);
  CHECK(r.headline.at("checks").get<int>() > 20);
}
