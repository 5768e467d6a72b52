#include "psd/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "psd/reduction.hpp"

namespace psd::harness {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Index snapshot_count(const wave::WaveParams& p) {
  const double ratio = p.snapshot_interval / p.dt;
  const long stride = std::lround(ratio);
  if (stride < 1 || std::abs(ratio - static_cast<double>(stride)) > 1e-9 * ratio)
    throw std::invalid_argument("snapshot_interval must be a positive multiple of dt");
  return static_cast<Index>(step_count(p.dt, p.T) / stride) + 1;
}

bool needs_snapshots(Mode m) { return m == Mode::pod || m == Mode::psd || m == Mode::psd_energy; }

void run_pool(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, jobs)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  for (auto& t : pool) t.join();
}

std::string join(const std::vector<Index>& ks) {
  std::string s;
  for (std::size_t i = 0; i < ks.size(); ++i) s += (i ? "," : "") + std::to_string(ks[i]);
  return s;
}

}  // namespace

std::string to_string(Mode m) {
  switch (m) {
    case Mode::full: return "full";
    case Mode::coarse: return "coarse";
    case Mode::pod: return "pod";
    case Mode::psd: return "psd";
    case Mode::psd_energy: return "psd_energy";
  }
  return "unknown";
}

Mode parse_mode(std::string_view s) {
  if (s == "full") return Mode::full;
  if (s == "coarse") return Mode::coarse;
  if (s == "pod") return Mode::pod;
  if (s == "psd") return Mode::psd;
  if (s == "psd_energy" || s == "psd-energy") return Mode::psd_energy;
  throw std::invalid_argument("unknown mode '" + std::string(s) +
                              "' (expected full, coarse, pod, psd, psd_energy)");
}

std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::ok: return "ok";
    case RunStatus::blowup: return "blowup";
    case RunStatus::failed: return "failed";
  }
  return "unknown";
}

void ExperimentConfig::validate() const {
  params.validate();
  auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
  if (repeats < 1) fail("repeats must be >= 1");
  if (stride < 1) fail("stride must be >= 1");
  if (jobs < 1) fail("jobs must be >= 1");
  if (!(gamma >= 0) || !std::isfinite(gamma)) fail("gamma must be finite and >= 0");
  if (!(symplectic_tol > 0)) fail("symplectic tolerance must be positive");
  if (!(blowup_threshold > 0)) fail("blowup threshold must be positive");
  step_count(params.dt, params.T);
  const Index n = params.n;
  const Index N = snapshot_count(params);
  if (mode != Mode::full && ks.empty()) fail("mode " + to_string(mode) + " needs at least one k");
  for (Index k : ks) {
    const std::string tag = "k = " + std::to_string(k) + ": ";
    switch (mode) {
      case Mode::full:
        break;
      case Mode::coarse:
        if (k % 2 != 0) fail(tag + "coarse k is the state dimension and must be even");
        if (k < 6 || k > 2 * n) fail(tag + "coarse k must lie in [6, 2n]");
        break;
      case Mode::pod:
        if (k < 1 || k > std::min(2 * n, N)) fail(tag + "pod k must lie in [1, min(2n, snapshots)]");
        break;
      case Mode::psd:
        if (k < 1 || k > std::min(n, 2 * N)) fail(tag + "psd k must lie in [1, min(n, 2 * snapshots)]");
        break;
      case Mode::psd_energy:
        if (k < 1 || k > std::min(n, 3 * N))
          fail(tag + "psd_energy k must lie in [1, min(n, 3 * snapshots)]");
        break;
    }
  }
  for (double b : beta_sweep) {
    if (!(b >= 0) || !std::isfinite(b)) fail("beta sweep values must be finite and >= 0");
    for (Index k : ks)
      if (k < 1 || k > std::min(2 * n, N))
        fail("beta sweep: k = " + std::to_string(k) + " exceeds min(2n, snapshots)");
  }
}

std::string ExperimentConfig::hash() const {
  std::ostringstream s;
  s << io::config_text(params) << "mode = " << to_string(mode) << "\nk = " << join(ks)
    << "\nseed = " << seed << "\ngamma = " << io::format_double(gamma)
    << "\nsymplectic_tol = " << io::format_double(symplectic_tol)
    << "\nblowup = " << io::format_double(blowup_threshold) << "\np_error = " << p_error
    << "\nstride = " << stride << "\nbeta_sweep =";
  for (double b : beta_sweep) s << ' ' << io::format_double(b);
  s << '\n';
  return io::hex64(io::fnv1a(s.str()));
}

RunContext RunContext::prepare(const wave::WaveParams& p, bool with_snapshots) {
  p.validate();
  RunContext ctx;
  ctx.params = p;
  ctx.y0 = wave::initial_condition(p);
  const long steps = step_count(p.dt, p.T);
  ctx.times.resize(steps + 1);
  for (long i = 0; i <= steps; ++i) ctx.times[i] = p.dt * static_cast<double>(i);
  ctx.reference = wave::ModalReference(p, ctx.y0).evaluate(ctx.times);
  if (with_snapshots) {
    const auto start = Clock::now();
    ctx.snapshots = wave::generate_snapshots(p);
    ctx.snapshot_time = seconds_since(start);
  }
  return ctx;
}

double trapezoid_l2(const std::vector<double>& t, const std::vector<double>& e) {
  if (t.size() != e.size()) throw DimensionError("trapezoid_l2: size mismatch");
  double sum = 0;
  for (std::size_t i = 1; i < t.size(); ++i)
    sum += 0.5 * (t[i] - t[i - 1]) * (e[i] * e[i] + e[i - 1] * e[i - 1]);
  return std::sqrt(sum);
}

Vector<double> interpolate_periodic(const Vector<double>& coarse, Index n_fine) {
  const Index m = coarse.size();
  if (m < 1 || n_fine < 1) throw DimensionError("interpolate_periodic: empty grid");
  Vector<double> out(n_fine);
  // coarse node j (1-based) sits at x = j / m, fine node i at x = i / n_fine (units of l)
  for (Index i = 1; i <= n_fine; ++i) {
    const double s = static_cast<double>(i) * static_cast<double>(m) / static_cast<double>(n_fine);
    const double fl = std::floor(s);
    const double w = s - fl;
    const Index j = static_cast<Index>(fl);  // coarse 1-based index to the left; 0 wraps to m
    const double left = coarse(((j - 1) % m + m) % m);
    const double right = coarse((j % m + m) % m);
    out(i - 1) = (1 - w) * left + w * right;
  }
  return out;
}

namespace {

/// The integrable piece of a run: initial state, operator, energy and the map
/// from the integrated state to the fine-grid state.
struct Prepared {
  Index dim = 0;
  Vector<double> z0;
  Matrix<double> op;
  std::function<double(const Vector<double>&)> energy;
  std::function<Matrix<double>(const Matrix<double>&)> to_full;  // columns of states -> 2n x m
  std::shared_ptr<const ReducedModel<double>> reduced;
  std::optional<wave::WaveParams> own_params;  // full/coarse: parameters of the integrated model
};

Prepared prepare_run(const RunContext& ctx, Mode mode, Index k, const RunSettings& s,
                     RunResult& r) {
  const auto& p = ctx.params;
  const Index n = p.n;
  Prepared prep;
  auto require_snapshots = [&]() -> const SnapshotEnsemble<double>& {
    if (!ctx.snapshots) throw std::logic_error("run context has no snapshots");
    return *ctx.snapshots;
  };
  switch (mode) {
    case Mode::full:
    case Mode::coarse: {
      const wave::WaveParams own = mode == Mode::full ? p : wave::coarse_params(p, k);
      const auto model = wave::assemble_wave_model(own);
      prep.dim = 2 * own.n;
      prep.z0 = mode == Mode::full ? ctx.y0 : wave::initial_condition(own);
      prep.op = model.linear_form().operator_matrix();
      prep.energy = model.hamiltonian_fn();
      const Index m = own.n;
      prep.to_full = [m, n](const Matrix<double>& states) {
        if (m == n) return states;
        Matrix<double> out(2 * n, states.cols());
        for (Index j = 0; j < states.cols(); ++j) {
          out.col(j).head(n) = interpolate_periodic(states.col(j).head(m), n);
          out.col(j).tail(n) = interpolate_periodic(states.col(j).tail(m), n);
        }
        return out;
      };
      prep.own_params = own;
      break;
    }
    case Mode::pod: {
      const auto model = wave::assemble_wave_model(p);
      const auto pod = pod_basis(build_state_matrix(require_snapshots()), k);
      r.spectrum = pod.spectrum;
      prep.reduced = std::make_shared<const ReducedModel<double>>(reduce_pod_galerkin(model, pod.basis));
      break;
    }
    case Mode::psd:
    case Mode::psd_energy: {
      const auto model = wave::assemble_wave_model(p);
      const auto& ens = require_snapshots();
      auto lift = mode == Mode::psd ? cotangent_lift(ens, k) : cotangent_lift_energy(ens, k, s.gamma);
      const double residual = lift.basis.residual();
      if (!(residual <= s.symplectic_tol * std::max(1.0, lift.basis.frobenius_norm())))
        throw NotSymplecticError("cotangent-lift basis fails the symplecticity check", residual);
      r.spectrum = lift.spectrum;
      prep.reduced = std::make_shared<const ReducedModel<double>>(
          reduce_structure_preserving(model, lift.basis));
      break;
    }
  }
  if (prep.reduced) {
    const auto& red = *prep.reduced;
    prep.dim = red.dim();
    prep.z0 = red.reduce_state(ctx.y0);
    prep.op = red.operator_matrix();
    prep.energy = [keep = prep.reduced](const Vector<double>& z) { return keep->energy(z); };
    const Matrix<double> lift = red.lift_matrix();
    prep.to_full = [lift](const Matrix<double>& states) -> Matrix<double> { return lift * states; };
  }
  return prep;
}

}  // namespace

RunResult run_single(const RunContext& ctx, Mode mode, Index k, const RunSettings& s,
                     bool keep_trajectory) {
  RunResult r;
  r.mode = mode;
  r.k = mode == Mode::full ? 2 * ctx.params.n : k;
  const auto& p = ctx.params;
  const Index n = p.n;
  try {
    if (s.repeats < 1) throw std::invalid_argument("repeats must be >= 1");
    const auto offline_start = Clock::now();
    Prepared prep = prepare_run(ctx, mode, k, s, r);
    r.offline_time = seconds_since(offline_start);
    r.reduced_dim = prep.dim;
    if (prep.reduced) {
      r.stability = analyze_operator(prep.op, prep.z0, p.beta, k);
    }

    IntegrateOptions opts;
    opts.blowup_threshold = s.blowup_threshold;
    std::vector<double> walls;
    std::optional<IntegrationResult<double>> first;
    for (int rep = 0; rep < s.repeats; ++rep) {
      const auto start = Clock::now();
      auto run = integrate<double>(prep.op, prep.energy, prep.z0, p.dt, p.T, opts, to_string(mode));
      walls.push_back(seconds_since(start));
      if (!first) first = std::move(run);
    }
    double mean = 0;
    for (double w : walls) mean += w;
    mean /= static_cast<double>(walls.size());
    double var = 0;
    for (double w : walls) var += (w - mean) * (w - mean);
    r.wall_mean = mean;
    r.wall_std = walls.size() > 1 ? std::sqrt(var / static_cast<double>(walls.size() - 1)) : 0.0;
    r.repeats = s.repeats;

    auto& run = *first;
    const auto& traj = run.trajectory;
    const Index m = static_cast<Index>(traj.states.size());
    Matrix<double> states(prep.dim, m);
    for (Index j = 0; j < m; ++j) states.col(j) = traj.states[j];
    const Matrix<double> full = prep.to_full(states);

    r.times = traj.times;
    r.error_q.resize(m);
    if (s.p_error) r.error_p.resize(m);
    for (Index j = 0; j < m; ++j) {
      r.error_q[j] = (full.col(j).head(n) - ctx.reference.col(j).head(n)).norm();
      if (s.p_error) r.error_p[j] = (full.col(j).tail(n) - ctx.reference.col(j).tail(n)).norm();
    }
    r.energy = std::move(run.energy);

    if (prep.own_params && run.completed()) {
      const auto ens = wave::snapshots_from_trajectory(*prep.own_params, traj);
      r.spectrum = singular_spectrum(build_extended_matrix(ens), SpectrumSource::cotangent);
    }
    if (keep_trajectory) {
      Trajectory<double> lifted;
      lifted.times = traj.times;
      lifted.step = traj.step;
      lifted.model_tag = traj.model_tag;
      for (Index j = 0; j < m; ++j) lifted.states.push_back(full.col(j));
      r.trajectory = std::move(lifted);
    }

    switch (run.status) {
      case IntegrationStatus::completed:
        r.status = RunStatus::ok;
        r.total_error = trapezoid_l2(r.times, r.error_q);
        r.total_error_p = s.p_error ? trapezoid_l2(r.times, r.error_p) : kNaN;
        break;
      case IntegrationStatus::blowup: {
        r.status = RunStatus::blowup;
        r.message = run.message;
        const bool last_over = !traj.states.empty() && traj.states.back().norm() > s.blowup_threshold;
        r.blowup_time = last_over ? traj.times.back() : traj.times.back() + p.dt;
        r.total_error = kInf;
        r.total_error_p = kInf;
        break;
      }
      case IntegrationStatus::step_failure:
        r.status = RunStatus::failed;
        r.message = run.message;
        r.total_error = kNaN;
        r.total_error_p = kNaN;
        break;
    }
  } catch (const std::exception& e) {
    r.status = RunStatus::failed;
    r.message = e.what();
    r.total_error = kNaN;
    r.total_error_p = kNaN;
  }
  return r;
}

std::vector<Table2Row> table2_sweep(const wave::WaveParams& p, const std::vector<double>& betas,
                                    const std::vector<Index>& ks) {
  std::vector<Table2Row> rows;
  for (double beta : betas) {
    wave::WaveParams pb = p;
    pb.beta = beta;
    const auto ens = wave::generate_snapshots(pb);
    for (Index k : ks) rows.push_back({beta, k, table2_cell(pb, beta, k, ens)});
  }
  return rows;
}

std::vector<TimingRow> timing_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto ctx = RunContext::prepare(cfg.params, needs_snapshots(cfg.mode));
  RunSettings s;
  s.repeats = cfg.repeats;
  s.gamma = cfg.gamma;
  s.symplectic_tol = cfg.symplectic_tol;
  s.blowup_threshold = cfg.blowup_threshold;

  std::vector<std::pair<Mode, Index>> plan{{Mode::full, 0}};
  if (cfg.mode != Mode::full)
    for (Index k : cfg.ks) plan.emplace_back(cfg.mode, k);
  std::vector<TimingRow> rows;
  // sequential on purpose: concurrent runs would perturb each other's timings
  for (const auto& [mode, k] : plan) {
    const auto r = run_single(ctx, mode, k, s);
    if (r.status == RunStatus::failed)
      throw std::runtime_error("timing run " + to_string(mode) + " k=" + std::to_string(k) +
                               " failed: " + r.message);
    rows.push_back({mode, r.k, r.wall_mean, r.wall_std, r.repeats});
  }

  io::CsvStamp stamp{cfg.hash(), io::version_string(), io::iso_timestamp()};
  io::CsvWriter w(cfg.out_dir / "timing.csv", {"mode", "k", "mean", "stddev", "repeats"}, stamp);
  for (const auto& row : rows)
    w.row({to_string(row.mode), std::to_string(row.k), io::format_double(row.mean),
           io::format_double(row.stddev), std::to_string(row.repeats)});
  w.close();
  return rows;
}

namespace {

void write_status(const fs::path& path, const RunResult& r) {
  nlohmann::json j;
  j["mode"] = to_string(r.mode);
  j["k"] = r.k;
  j["reduced_dim"] = r.reduced_dim;
  j["status"] = to_string(r.status);
  j["message"] = r.message;
  if (r.blowup_time) j["blowup_time"] = *r.blowup_time;
  if (std::isfinite(r.total_error)) j["total_error"] = r.total_error;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto ctx = RunContext::prepare(cfg.params, needs_snapshots(cfg.mode));
  RunSettings s;
  s.repeats = cfg.repeats;
  s.gamma = cfg.gamma;
  s.symplectic_tol = cfg.symplectic_tol;
  s.blowup_threshold = cfg.blowup_threshold;
  s.p_error = cfg.p_error;

  const std::vector<Index> ks = cfg.mode == Mode::full ? std::vector<Index>{2 * cfg.params.n} : cfg.ks;
  ExperimentOutput out;
  out.runs.resize(ks.size());
  const io::CsvStamp stamp{cfg.hash(), io::version_string(), std::nullopt};
  const io::CsvStamp timed{cfg.hash(), io::version_string(), io::iso_timestamp()};
  const fs::path mode_dir = cfg.out_dir / to_string(cfg.mode);
  std::mutex files_mutex;

  run_pool(ks.size(), cfg.jobs, [&](std::size_t i) {
    RunResult r = run_single(ctx, cfg.mode, ks[i], s, cfg.write_trajectories);
    const fs::path dir = mode_dir / ("k" + std::to_string(r.k));
    fs::create_directories(dir);
    std::vector<fs::path> written;

    std::vector<std::string> header{"t", "error_q"};
    if (cfg.p_error) header.push_back("error_p");
    {
      io::CsvWriter w(dir / "error.csv", header, stamp);
      auto emit = [&](std::size_t j) {
        std::vector<std::string> cells{io::format_double(r.times[j]), io::format_double(r.error_q[j])};
        if (cfg.p_error) cells.push_back(io::format_double(r.error_p[j]));
        w.row(cells);
      };
      const std::size_t m = r.times.size();
      for (std::size_t j = 0; j < m; j += cfg.stride) emit(j);
      if (m > 0 && (m - 1) % cfg.stride != 0) emit(m - 1);  // always keep the final time
      w.close();
    }
    io::write_energy(dir / "energy.csv", r.energy, cfg.stride, stamp);
    written.insert(written.end(), {dir / "error.csv", dir / "energy.csv"});
    if (r.spectrum) {
      io::CsvWriter w(dir / "spectrum.csv", {"k", "lambda_k"}, stamp);
      for (Index j = 0; j < r.spectrum->values.size(); ++j)
        w.row({static_cast<double>(j + 1), r.spectrum->values(j)});
      w.close();
      written.push_back(dir / "spectrum.csv");
    }
    if (r.trajectory) {
      io::write_trajectory(dir / "trajectory.csv", *r.trajectory, cfg.stride, stamp);
      written.push_back(dir / "trajectory.csv");
      r.trajectory.reset();
    }
    write_status(dir / "status.json", r);
    written.push_back(dir / "status.json");

    std::lock_guard lock(files_mutex);
    out.files.insert(out.files.end(), written.begin(), written.end());
    out.runs[i] = std::move(r);
  });

  {
    io::CsvWriter w(mode_dir / "summary.csv",
                    {"k", "reduced_dim", "total_error", "total_error_p", "wall_time", "wall_time_std",
                     "repeats", "offline_time", "status", "blowup_time"},
                    timed);
    for (const auto& r : out.runs)
      w.row({std::to_string(r.k), std::to_string(r.reduced_dim), io::format_double(r.total_error),
             io::format_double(cfg.p_error ? r.total_error_p : kNaN), io::format_double(r.wall_mean),
             io::format_double(r.wall_std), std::to_string(r.repeats),
             io::format_double(r.offline_time), to_string(r.status),
             io::format_double(r.blowup_time.value_or(kNaN))});
    w.close();
    out.files.push_back(mode_dir / "summary.csv");
  }

  if (cfg.mode == Mode::pod || cfg.mode == Mode::psd || cfg.mode == Mode::psd_energy) {
    io::CsvWriter w(mode_dir / "stability.csv",
                    {"k", "re_lambda_star", "im_lambda_star", "a_star", "stable"}, stamp);
    for (const auto& r : out.runs) {
      if (!r.stability) continue;
      const auto& st = *r.stability;
      w.row({std::to_string(r.k), io::format_double(st.lambda_star.real()),
             io::format_double(st.lambda_star.imag()), io::format_double(st.a_star),
             st.stable ? "1" : "0"});
    }
    w.close();
    out.files.push_back(mode_dir / "stability.csv");
  }

  {
    const double discrete = wave::discrete_hamiltonian(cfg.params, ctx.y0);
    const double continuum = wave::spline_continuum_energy(cfg.params);
    io::CsvWriter w(cfg.out_dir / "diagnostics.csv",
                    {"discrete_energy", "continuum_energy", "energy_gap"}, stamp);
    w.row({discrete, continuum, discrete - continuum});
    w.close();
    out.files.push_back(cfg.out_dir / "diagnostics.csv");
  }

  if (!cfg.beta_sweep.empty()) {
    out.table2 = table2_sweep(cfg.params, cfg.beta_sweep, cfg.ks);
    io::CsvWriter w(cfg.out_dir / "table2.csv", {"beta", "k", "re_lambda_star", "a_star", "stable"},
                    stamp);
    for (const auto& row : out.table2)
      w.row({io::format_double(row.beta), std::to_string(row.k),
             io::format_double(row.report.lambda_star.real()), io::format_double(row.report.a_star),
             row.report.stable ? "1" : "0"});
    w.close();
    out.files.push_back(cfg.out_dir / "table2.csv");
  }
  return out;
}

}  // namespace psd::harness
