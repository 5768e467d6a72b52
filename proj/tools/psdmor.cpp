#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "psd/harness.hpp"
#include "psd/io.hpp"

namespace {

using psd::harness::ExperimentConfig;

enum ExitCode { kOk = 0, kUsage = 2, kConfig = 3, kRuntime = 4 };

int fail(int code, const std::string& type, const std::string& message) {
  nlohmann::json j;
  j["error"] = {{"type", type}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << std::endl;
  return code;
}

struct Options {
  std::string config;
  std::string mode = "psd";
  std::vector<long> ks;
  std::string out = "out";
  std::uint64_t seed = 0;
  int repeats = 10;
  std::vector<double> betas;
  std::size_t stride = 1;
  int jobs = 1;
  bool p_error = false;
  bool trajectories = false;
  double gamma = 1.0;
  double symplectic_tol = psd::kSymplecticTolerance;
  double blowup = 1e12;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "key = value parameter file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--mode", o.mode, "full, coarse, pod, psd or psd_energy")->capture_default_str();
  cmd->add_option("--k", o.ks, "comma-separated basis sizes")->delimiter(',');
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", o.seed, "recorded in the provenance hash")->capture_default_str();
  cmd->add_option("--repeats", o.repeats, "timing repetitions per run")->capture_default_str();
  cmd->add_option("--beta-sweep", o.betas, "damping values for table2.csv")->delimiter(',');
  cmd->add_option("--stride", o.stride, "row stride for time series files")->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "worker threads over k")->capture_default_str();
  cmd->add_flag("--p-error", o.p_error, "also report the momentum error");
  cmd->add_flag("--trajectories", o.trajectories, "write trajectory.csv per run");
  cmd->add_option("--gamma", o.gamma, "force weight in psd_energy snapshots")->capture_default_str();
  cmd->add_option("--symplectic-tol", o.symplectic_tol, "relative symplecticity tolerance");
  cmd->add_option("--blowup", o.blowup, "state-norm blowup threshold")->capture_default_str();
}

ExperimentConfig to_config(const Options& o) {
  ExperimentConfig cfg;
  cfg.params = psd::io::read_config(o.config);
  cfg.mode = psd::harness::parse_mode(o.mode);
  cfg.ks.assign(o.ks.begin(), o.ks.end());
  cfg.out_dir = o.out;
  cfg.seed = o.seed;
  cfg.repeats = o.repeats;
  cfg.beta_sweep = o.betas;
  cfg.stride = o.stride;
  cfg.jobs = o.jobs;
  cfg.p_error = o.p_error;
  cfg.write_trajectories = o.trajectories;
  cfg.gamma = o.gamma;
  cfg.symplectic_tol = o.symplectic_tol;
  cfg.blowup_threshold = o.blowup;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structure-preserving model reduction experiments on the damped wave benchmark"};
  app.require_subcommand(1);
  Options opts;
  auto* run = app.add_subcommand("run", "run one mode over a list of k and write CSV results");
  add_common(run, opts);
  auto* timing = app.add_subcommand("timing", "time full and reduced integrations, write timing.csv");
  add_common(timing, opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail(kUsage, "usage", e.what());
  }

  ExperimentConfig cfg;
  try {
    cfg = to_config(opts);
  } catch (const psd::io::ParseError& e) {
    return fail(kConfig, "config", e.what());
  } catch (const std::invalid_argument& e) {
    return fail(kConfig, "config", e.what());
  }

  try {
    nlohmann::json report;
    report["config_hash"] = cfg.hash();
    report["version"] = psd::io::version_string();
    report["out"] = cfg.out_dir.string();
    if (*run) {
      const auto result = psd::harness::run_experiment(cfg);
      for (const auto& r : result.runs) {
        nlohmann::json j{{"mode", psd::harness::to_string(r.mode)},
                         {"k", r.k},
                         {"status", psd::harness::to_string(r.status)},
                         {"wall_time", r.wall_mean}};
        if (std::isfinite(r.total_error)) j["total_error"] = r.total_error;
        if (!r.message.empty()) j["message"] = r.message;
        report["runs"].push_back(j);
      }
      report["files"] = result.files.size();
    } else {
      for (const auto& row : psd::harness::timing_sweep(cfg))
        report["timing"].push_back({{"mode", psd::harness::to_string(row.mode)},
                                    {"k", row.k},
                                    {"mean", row.mean},
                                    {"stddev", row.stddev},
                                    {"repeats", row.repeats}});
    }
    std::cout << report.dump(2) << std::endl;
  } catch (const std::exception& e) {
    return fail(kRuntime, "runtime", e.what());
  }
  return kOk;
}
