#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psd/integrator.hpp"
#include "psd/io.hpp"
#include "psd/stability.hpp"
#include "psd/wave.hpp"

namespace psd::harness {

enum class Mode { full, coarse, pod, psd, psd_energy };

std::string to_string(Mode m);
/// Accepts full, coarse, pod, psd, psd_energy (also psd-energy).
Mode parse_mode(std::string_view s);

/// Everything a run depends on. How `k` is read depends on the mode:
///   full       ignored (reported as 2n)
///   coarse     total state dimension; k / 2 grid points
///   pod        number of POD modes; reduced dimension k
///   psd(_energy) number of cotangent-lift modes; reduced dimension 2k
struct ExperimentConfig {
  wave::WaveParams params;
  Mode mode = Mode::psd;
  std::vector<Index> ks;
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;
  int repeats = 10;
  std::vector<double> beta_sweep;  // nonempty: also emit table2.csv
  bool p_error = false;
  std::size_t stride = 1;
  int jobs = 1;
  double gamma = 1.0;
  double symplectic_tol = kSymplecticTolerance;
  double blowup_threshold = 1e12;
  bool write_trajectories = false;

  /// Throws std::invalid_argument for infeasible k or option values.
  void validate() const;
  /// FNV-1a over the canonical text of all result-affecting fields.
  std::string hash() const;
};

/// Shared state for all runs at one parameter set: the full model, the time
/// grid, the reference solution at every step and (optionally) snapshots.
struct RunContext {
  wave::WaveParams params;
  Vector<double> y0;
  std::vector<double> times;
  Matrix<double> reference;  // 2n x (steps + 1)
  std::optional<SnapshotEnsemble<double>> snapshots;
  double snapshot_time = 0;  // wall time of the snapshot run

  static RunContext prepare(const wave::WaveParams& p, bool with_snapshots);
};

enum class RunStatus { ok, blowup, failed };
std::string to_string(RunStatus s);

struct RunSettings {
  int repeats = 1;
  double gamma = 1.0;
  double symplectic_tol = kSymplecticTolerance;
  double blowup_threshold = 1e12;
  bool p_error = false;
};

struct RunResult {
  Mode mode = Mode::full;
  Index k = 0;
  Index reduced_dim = 0;
  RunStatus status = RunStatus::ok;
  std::string message;
  std::vector<double> times;      // steps actually reached
  std::vector<double> error_q;    // ||q_hat(t) - q_ref(t)||_2 on the fine grid
  std::vector<double> error_p;    // filled when p_error
  EnergySeries<double> energy;
  double total_error = 0;         // sqrt(trapz ||e||^2); inf on blowup
  double total_error_p = 0;
  double wall_mean = 0;           // online integration only
  double wall_std = 0;
  int repeats = 0;
  double offline_time = 0;        // basis and operator construction
  std::optional<double> blowup_time;
  std::optional<StabilityReport> stability;
  std::optional<SingularSpectrum<double>> spectrum;
  std::optional<Trajectory<double>> trajectory;  // lifted to full coordinates
};

/// One mode at one k. Never throws for numerical failures; they are
/// reported through `status` and `message`.
RunResult run_single(const RunContext& ctx, Mode mode, Index k, const RunSettings& settings,
                     bool keep_trajectory = false);

/// sqrt of the trapezoid integral of e(t)^2.
double trapezoid_l2(const std::vector<double>& t, const std::vector<double>& e);

/// Periodic linear interpolation of coarse grid values (x_j = j l / m) onto n fine points.
Vector<double> interpolate_periodic(const Vector<double>& coarse, Index n_fine);

struct Table2Row {
  double beta = 0;
  Index k = 0;
  StabilityReport report;
};

/// POD stability cells for each beta and k; snapshots are regenerated per beta.
std::vector<Table2Row> table2_sweep(const wave::WaveParams& p, const std::vector<double>& betas,
                                    const std::vector<Index>& ks);

struct TimingRow {
  Mode mode = Mode::full;
  Index k = 0;
  double mean = 0;
  double stddev = 0;
  int repeats = 0;
};

/// Mean and standard deviation of the online integration time over
/// cfg.repeats runs, for the full model and for cfg.mode at each k.
std::vector<TimingRow> timing_sweep(const ExperimentConfig& cfg);

/// Files written by run_experiment, relative to cfg.out_dir.
struct ExperimentOutput {
  std::vector<RunResult> runs;
  std::vector<Table2Row> table2;
  std::vector<std::filesystem::path> files;
};

/// Runs cfg.mode at every k and writes
///   <mode>/k<k>/{error,energy,spectrum}.csv, <mode>/k<k>/status.json,
///   <mode>/summary.csv, <mode>/stability.csv (pod, psd, psd_energy),
///   diagnostics.csv, and table2.csv when cfg.beta_sweep is set.
ExperimentOutput run_experiment(const ExperimentConfig& cfg);

}  // namespace psd::harness
