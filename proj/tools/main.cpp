#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "commands.hpp"
#include "conespec/errors.hpp"
#include "json.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using conespec::cli::CommandResult;
using conespec::cli::RunConfig;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

// Minimal configuration used when selftest runs without --config.
constexpr const char* kSelftestConfig =
    R"({"manifold": {"n": 3, "cross_section": {"kind": "round_sphere", "radius": 1.0},
                     "profile": {"kind": "exact_cone"}}})";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw conespec::ConfigError(p.string() + ":1: cannot read configuration file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::string summary_json(const RunConfig& cfg, const std::string& status, const json& headline,
                         const json& diagnostic = nullptr) {
  json s = {{"config_hash", cfg.hash},
            {"command", cfg.command},
            {"status", status},
            {"headline_numbers", headline},
            {"version", conespec::cli::kVersion}};
  if (!diagnostic.is_null()) s["diagnostic"] = diagnostic;
  return s.dump(2) + "\n";
}

std::string error_kind(const conespec::Error& e) {
  if (dynamic_cast<const conespec::NonSemibounded*>(&e)) return "non_semibounded";
  if (dynamic_cast<const conespec::FlowBreakdown*>(&e)) return "flow_breakdown";
  if (dynamic_cast<const conespec::DegenerateGroundState*>(&e)) return "degenerate_ground_state";
  if (dynamic_cast<const conespec::InsufficientResolution*>(&e)) return "insufficient_resolution";
  if (dynamic_cast<const conespec::SubcriticalMode*>(&e)) return "subcritical_mode";
  if (dynamic_cast<const conespec::NoAdmissibleDelta*>(&e)) return "no_admissible_delta";
  if (dynamic_cast<const conespec::UnsupportedOperation*>(&e)) return "unsupported_operation";
  if (dynamic_cast<const conespec::InvalidParameter*>(&e)) return "invalid_parameter";
  return "numerical_failure";
}

fs::path cache_root() {
  if (const char* env = std::getenv("CONESPEC_CACHE_DIR"); env && *env) return env;
  return ".conespec_cache";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conespec: spectra of -4 Laplace + R on manifolds with conical singularities"};
  app.set_version_flag("--version", std::string("conespec ") + conespec::cli::kVersion);
  std::string command;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool no_cache = false;
  app.add_option("command", command, "spectrum | modes | hardy | sobolev-check | asymptotics | lambda | "
                                     "variation | flow | selftest")
      ->required()
      ->check(CLI::IsMember({"spectrum", "modes", "hardy", "sobolev-check", "asymptotics", "lambda", "variation",
                             "flow", "selftest"}));
  app.add_option("-c,--config", config_path, "JSON run configuration");
  app.add_option("--set", overrides, "override a scalar field, key.path=value (repeatable)");
  app.add_option("-o,--out", out_dir, "output directory (overrides output.dir)");
  app.add_flag("--no-cache", no_cache, "recompute even when a cached result exists");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  RunConfig cfg;
  try {
    if (config_path.empty() && command != "selftest")
      throw conespec::ConfigError("--config: a configuration file is required for " + command);
    const std::string text = config_path.empty() ? std::string(kSelftestConfig) : read_file(config_path);
    const std::string origin = config_path.empty() ? "<selftest>" : config_path;
    const std::string base = config_path.empty() ? "." : fs::path(config_path).parent_path().string();
    if (!out_dir.empty()) overrides.push_back("output.dir=\"" + out_dir + "\"");
    cfg = conespec::cli::load_config(text, origin, base.empty() ? "." : base, command, overrides);
  } catch (const conespec::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  }

  const fs::path out = cfg.output_dir();
  const std::string csv_name = command + ".csv";
  const fs::path cached = cache_root() / cfg.hash;
  try {
    fs::create_directories(out);
    if (!no_cache && fs::exists(cached / csv_name) && fs::exists(cached / "summary.json")) {
      fs::copy_file(cached / csv_name, out / csv_name, fs::copy_options::overwrite_existing);
      fs::copy_file(cached / "summary.json", out / "summary.json", fs::copy_options::overwrite_existing);
      std::cerr << "conespec: cache hit " << cfg.hash << '\n';
      return kExitOk;
    }
  } catch (const fs::filesystem_error& e) {
    std::cerr << "conespec: " << e.what() << '\n';
    return kExitNumerical;
  }

  CommandResult res;
  try {
    res = conespec::cli::run_command(cfg);
  } catch (const conespec::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const conespec::Error& e) {
    const json diag = {{"error", error_kind(e)}, {"message", e.what()}};
    try {
      write_file(out / "summary.json", summary_json(cfg, "failed", json::object(), diag));
    } catch (const std::exception&) {
    }
    std::cerr << "conespec: " << error_kind(e) << ": " << e.what() << '\n';
    return kExitNumerical;
  }

  const std::string csv = "# conespec " + std::string(conespec::cli::kVersion) + " config_hash=" + cfg.hash +
                          "\n" + res.csv;
  const std::string summary = summary_json(cfg, res.checks_passed ? "ok" : "checks_failed", res.headline);
  try {
    write_file(out / csv_name, csv);
    write_file(out / "summary.json", summary);
    if (!no_cache && res.checks_passed) {
      fs::create_directories(cached);
      write_file(cached / csv_name, csv);
      write_file(cached / "summary.json", summary);
    }
  } catch (const std::exception& e) {
    std::cerr << "conespec: " << e.what() << '\n';
    return kExitNumerical;
  }
  std::cout << res.headline.dump() << '\n';
  return res.checks_passed ? kExitOk : kExitNumerical;
}
