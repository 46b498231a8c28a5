#include <iostream>

#include "CLI11.hpp"
#include "pmc/cli.hpp"

namespace {

constexpr int kExitRunFailed = 1;
constexpr int kExitBadConfig = 2;

struct Shared {
  std::string config;
  std::string out;
  int threads = 0;
  bool deterministic = false;
};

void add_shared(CLI::App* cmd, Shared& s, bool run_options) {
  cmd->add_option("config", s.config, "Scenario JSON file")->required();
  if (!run_options) return;
  cmd->add_option("--out", s.out, "Output directory (overrides the config)");
  cmd->add_option("--threads", s.threads, "Worker threads, 0 for the runtime default")->check(CLI::NonNegativeNumber);
  cmd->add_flag("--deterministic", s.deterministic, "Single thread with a fixed reduction order");
}

pmc::RunOptions options(const Shared& s) {
  pmc::RunOptions o;
  o.out_dir = s.out;
  o.threads = s.threads;
  o.deterministic = s.deterministic;
  return o;
}

int report(const pmc::RunArtifacts& a) {
  if (a.ok) {
    std::cout << "ok: " << a.out_dir.string() << " (" << a.files.size() << " files)\n";
    return 0;
  }
  const auto& e = a.manifest["error"];
  std::cerr << "error [" << e.value("stage", "") << "/" << e.value("code", "") << "]: " << e.value("message", "")
            << "\nmanifest: " << (a.out_dir / "manifest.json").string() << '\n';
  return kExitRunFailed;
}

// Loads the config; on failure writes an error manifest when an output directory is known.
std::optional<pmc::ScenarioConfig> load(const Shared& s) {
  try {
    return pmc::load_config(s.config);
  } catch (const pmc::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    if (!s.out.empty()) pmc::record_failure(s.out, "config-parse", e, s.config);
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prescribed mean curvature lab"};
  app.set_version_flag("--version", pmc::kToolVersion);
  app.require_subcommand(1);
  Shared run_args, validate_args, dump_args;
  CLI::App* run = app.add_subcommand("run", "Run a scenario and write its artifacts");
  CLI::App* validate = app.add_subcommand("validate", "Parse and check a scenario without running it");
  CLI::App* dump = app.add_subcommand("dump-domain", "Rasterize the scenario domain and write the mask");
  add_shared(run, run_args, true);
  add_shared(validate, validate_args, false);
  add_shared(dump, dump_args, true);
  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      const auto cfg = load(validate_args);
      if (!cfg) return kExitBadConfig;
      if (cfg->task != "stability") pmc::build_domain(*cfg);
      std::cout << "valid: " << cfg->name << " (task " << cfg->task << ")\n";
      return 0;
    }
    Shared& s = *run ? run_args : dump_args;
    const auto cfg = load(s);
    if (!cfg) return kExitBadConfig;
    return report(*run ? pmc::run_scenario(*cfg, options(s)) : pmc::dump_domain(*cfg, options(s)));
  } catch (const pmc::Error& e) {
    std::cerr << "error [" << pmc::to_string(e.code()) << "]: " << e.what() << '\n';
    return kExitRunFailed;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRunFailed;
  }
}
