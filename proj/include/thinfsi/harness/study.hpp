#ifndef THINFSI_HARNESS_STUDY_HPP
#define THINFSI_HARNESS_STUDY_HPP

#include <filesystem>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "thinfsi/analysis.hpp"
#include "thinfsi/forces.hpp"
#include "thinfsi/harness/fit.hpp"
#include "thinfsi/harness/io.hpp"
#include "thinfsi/harness/svg.hpp"
#include "thinfsi/oracle.hpp"
#include "thinfsi/params.hpp"
#include "thinfsi/reconstruct.hpp"
#include "thinfsi/reduced.hpp"

namespace thinfsi {

/// Run configuration shared by all CLI subcommands that read a config file.
struct RunConfig {
  std::string experiment_id = "run";
  Rational gamma{1};
  Rational kappa{7, 2};
  std::vector<Rational> h_list;
  MaterialParams materials;
  ForceSpec force;
  int n = 16;
  int m_f = 6;
  int m_s = 6;
  int modes = 16;
  double t_end = 5e-3;
  double dt = 2.5e-4;
  uint64_t seed = 7;
  bool allow_inapplicable = false;
  int workers = 2;

  static RunConfig parse(const Config& cfg) {
    RunConfig rc;
    rc.experiment_id = cfg.get_or("experiment.id", "run");
    rc.gamma = cfg.get_rational("regime.gamma");
    rc.kappa = cfg.get_rational("regime.kappa");
    rc.h_list = cfg.get_rational_list("regime.h_list");
    rc.materials.eta = cfg.get_double_or("materials.eta", 1.0);
    rc.materials.rho_f = cfg.get_double_or("materials.rho_f", 1.0);
    rc.materials.mu_hat = cfg.get_double_or("materials.mu_hat", 1.0);
    rc.materials.lambda_hat = cfg.get_double_or("materials.lambda_hat", 0.0);
    rc.materials.rho_s_hat = cfg.get_double_or("materials.rho_s_hat", 1.0);
    rc.force = ForceSpec::parse_kind(cfg.get_or("force.id", "zero"));
    rc.force.amplitude = cfg.get_double_or("force.amplitude", 1.0);
    rc.force.constant = {cfg.get_double_or("force.c1", 1.0), cfg.get_double_or("force.c2", 0.0)};
    rc.force.k1 = cfg.get_int_or("force.k1", 1);
    rc.force.k2 = cfg.get_int_or("force.k2", 0);
    rc.force.component = cfg.get_int_or("force.component", 1);
    rc.force.phase = cfg.get_double_or("force.phase", 0.0);
    rc.force.profile = {cfg.get_double_or("force.p0", 1.0), cfg.get_double_or("force.p1", 0.0),
                        cfg.get_double_or("force.p2", 0.0)};
    rc.force.omega = cfg.get_double_or("force.omega", 0.0);
    rc.n = cfg.get_int_or("grid.n", 16);
    rc.m_f = cfg.get_int_or("grid.m_f", 6);
    rc.m_s = cfg.get_int_or("grid.m_s", 6);
    rc.modes = cfg.get_int_or("grid.modes", rc.n);
    rc.t_end = cfg.get_double_or("time.horizon", 5e-3);
    rc.dt = cfg.get_double_or("time.dt", 2.5e-4);
    rc.seed = static_cast<uint64_t>(cfg.get_double_or("seed", 7));
    rc.allow_inapplicable = cfg.get_bool_or("study.allow_inapplicable", false);
    rc.workers = cfg.get_int_or("study.workers", 2);
    rc.validate();
    return rc;
  }

  void validate() const {
    materials.validate();
    if (h_list.empty()) throw std::invalid_argument("regime.h_list must not be empty");
    for (size_t i = 1; i < h_list.size(); ++i)
      if (!(h_list[i] < h_list[i - 1]))
        throw std::invalid_argument("regime.h_list must be strictly decreasing");
    for (const auto& h : h_list)
      if (!(h > Rational(0)) || !(h < Rational(1)))
        throw std::invalid_argument("h values must lie in (0,1)");
    if (n < 4 || m_f < 4 || m_s < 4 || modes < 4)
      throw std::invalid_argument("grid sizes must be >= 4");
    if (!(dt > 0.0) || !(t_end >= dt)) throw std::invalid_argument("invalid time grid");
  }

  std::vector<double> times() const {
    const int steps = static_cast<int>(std::llround(t_end / dt));
    std::vector<double> t(steps + 1);
    for (int i = 0; i <= steps; ++i) t[i] = i * dt;
    return t;
  }
};

struct PipelineResult {
  ReducedTrajectory traj;
  std::vector<ForcingIngredients> forcing;
  LimitFields limit;
  ApproxSolution approx;
};

/// Reduced solve + reconstruction for one regime: force sampling, kernel
/// build, sixth-order solve, limit fields, approximate solution.
inline PipelineResult run_reduced_pipeline(const ScalingRegime& regime,
                                           const MaterialParams& materials,
                                           const ForceSpec& force, int modes,
                                           VerticalGridPtr ref_grid,
                                           VerticalGridPtr structure_grid,
                                           const std::vector<double>& times) {
  PipelineResult out;
  const bool steady = force.constant_in_time();
  std::vector<PeriodicField2D> F;
  F.reserve(times.size());
  out.forcing.reserve(times.size());
  ForcingIngredients base;
  for (size_t i = 0; i < times.size(); ++i) {
    if (i == 0 || !steady) {
      const VectorSlabField3 f = force.sample(modes, modes, ref_grid, times[i]);
      base = build_forcing(f, materials.eta);
    }
    out.forcing.push_back(base);
    F.push_back(base.F);
  }
  out.traj = solve_w3(F, regime, materials, times);
  out.limit = build_limit_fields(out.traj, out.forcing);
  out.approx = assemble_approx(out.limit, out.traj, regime, std::move(structure_grid));
  return out;
}

/// Per-norm convergence summary against the predicted rates.
struct NormSummary {
  std::string name;
  std::vector<double> errors;
  std::vector<double> normalized;  // errors divided by the leading norm scale
  std::optional<SlopeFit> slope_raw;
  std::optional<SlopeFit> slope_norm;
  double predicted_h_exp = 0.0;
  double scale_exp = 0.0;  // exponent of the leading norm scale h^scale_exp
  bool monotone = false;
  bool positive_slope = false;
  bool trivial = false;
};

struct RateReport {
  std::vector<double> h;
  std::vector<double> eps;
  std::vector<ErrorNorms> norms;
  std::vector<double> translation_gap;
  std::vector<NormSummary> summary;
  bool theorem_applicable = false;
  bool self_test = false;
};

struct LevelResult {
  double h = 0.0, eps = 0.0;
  ErrorNorms norms;
  std::vector<EnergyBreakdown> energy;
  double max_balance_residual = 0.0;
  double max_interface_mean_u3 = 0.0;
};

/// One h-level of the study: oracle run, reduced pipeline with the same
/// force and time grid (uniform vertical layouts matched to the mesh),
/// Theorem-level error norms.
inline LevelResult run_study_level(const RunConfig& rc, const Rational& h_rat,
                                   bool self_test) {
  LevelResult lr;
  const double h = to_double(h_rat);
  const ScalingRegime regime = build_regime(rc.gamma, rc.kappa, h);
  const double eps = regime.eps();
  lr.h = h;
  lr.eps = eps;

  auto ref_grid = make_uniform(-1.0, 0.0, rc.m_f);
  auto structure_grid = make_uniform(0.0, h, rc.m_s);
  const std::vector<double> times = rc.times();
  PipelineResult pipe = run_reduced_pipeline(regime, rc.materials, rc.force, rc.n, ref_grid,
                                             structure_grid, times);

  FsiFieldSeries series;
  series.times = times;
  if (self_test) {
    for (size_t i = 0; i < times.size(); ++i) {
      series.v.push_back(pipe.approx.v[i]);
      series.u.push_back(pipe.approx.u[i]);
      series.p.push_back(SlabField3D::from_layers(
          pipe.approx.v[i].comp[0].vgrid_ptr(),
          std::vector<PeriodicField2D>(pipe.approx.v[i].comp[0].layer_count(),
                                       pipe.approx.p[i])));
    }
  } else {
    FsiMesh mesh{rc.n, rc.m_f, rc.m_s, eps, h};
    FsiOracle oracle(mesh, regime, rc.materials, rc.force);
    FsiOracle::RunResult run = oracle.run(rc.t_end, rc.dt);
    if (run.states.size() != times.size())
      throw std::runtime_error("oracle produced unexpected number of snapshots");
    for (const auto& st : run.states) {
      series.v.push_back(oracle.velocity_field(st));
      series.p.push_back(oracle.pressure_field(st));
      series.u.push_back(oracle.displacement_field(st));
    }
    lr.energy = energy_functional(run.energy, regime, rc.materials);
    for (double b : run.balance_residual)
      lr.max_balance_residual = std::max(lr.max_balance_residual, b);
    for (double m : run.interface_mean_u3)
      lr.max_interface_mean_u3 = std::max(lr.max_interface_mean_u3, std::fabs(m));
  }
  lr.norms = error_norms(series, pipe.approx, regime);
  return lr;
}

inline RateReport convergence_study(const RunConfig& rc, bool self_test,
                                    const std::filesystem::path& outdir) {
  if (rc.h_list.size() < 3) throw std::invalid_argument("convergence study needs >= 3 h-levels");
  {
    const ScalingRegime probe = build_regime(rc.gamma, rc.kappa, to_double(rc.h_list.front()));
    const RatePrediction rp = predict_rates(probe);
    if (!probe.reduced_model_valid)
      throw std::invalid_argument("regime is not reduced-model-valid (tau > -1)");
    if (!rp.theorem_applicable && !rc.allow_inapplicable)
      throw std::invalid_argument(
          "regime outside the error-theorem window; set study.allow_inapplicable = true to force");
  }

  std::filesystem::create_directories(outdir);
  RateReport report;
  report.self_test = self_test;

  // Bounded worker pool over h-levels.
  std::vector<LevelResult> levels(rc.h_list.size());
  std::vector<std::string> failures;
  const int workers = std::max(1, rc.workers);
  for (size_t base = 0; base < rc.h_list.size(); base += workers) {
    std::vector<std::future<LevelResult>> batch;
    const size_t end = std::min(base + static_cast<size_t>(workers), rc.h_list.size());
    for (size_t i = base; i < end; ++i)
      batch.push_back(std::async(std::launch::async, [&, i] {
        return run_study_level(rc, rc.h_list[i], self_test);
      }));
    for (size_t i = base; i < end; ++i) {
      try {
        levels[i] = batch[i - base].get();
      } catch (const std::exception& e) {
        failures.push_back("h = " + to_string(rc.h_list[i]) + ": " + e.what());
      }
    }
    if (!failures.empty()) break;  // abort remaining levels, keep partial results
  }

  for (size_t i = 0; i < rc.h_list.size(); ++i) {
    if (levels[i].h == 0.0) continue;  // failed or skipped level
    report.h.push_back(levels[i].h);
    report.eps.push_back(levels[i].eps);
    report.norms.push_back(levels[i].norms);
    report.translation_gap.push_back(levels[i].norms.translation_gap);
    if (!levels[i].energy.empty()) {
      const auto dir = outdir / ("h_" + std::to_string(i));
      std::filesystem::create_directories(dir);
      CsvWriter ledger((dir / "energy.csv").string(),
                       {"step", "t", "kinetic_f", "dissipation", "kinetic_s", "elastic",
                        "lhs_over_t_eps3"});
      for (size_t s = 0; s < levels[i].energy.size(); ++s) {
        const auto& b = levels[i].energy[s];
        ledger.row({std::to_string(s), CsvWriter::num(b.t_rescaled), CsvWriter::num(b.kinetic_f),
                    CsvWriter::num(b.dissipation), CsvWriter::num(b.kinetic_s),
                    CsvWriter::num(b.elastic), CsvWriter::num(b.ratio)});
      }
    }
  }

  const ScalingRegime regime0 = build_regime(rc.gamma, rc.kappa, to_double(rc.h_list.front()));
  const RatePrediction pred = predict_rates(regime0);
  report.theorem_applicable = pred.theorem_applicable;

  struct Spec {
    const char* name;
    double predicted;
    double scale_exp;
    double (*pick)(const ErrorNorms&);
  };
  const double g = to_double(rc.gamma), k = to_double(rc.kappa);
  const Spec specs[4] = {
      {"velocity", to_double(pred.vel_h_exp), 2.5 * g,
       [](const ErrorNorms& e) { return e.velocity; }},
      {"pressure", to_double(pred.pressure_h_exp), 0.5 * g,
       [](const ErrorNorms& e) { return e.pressure; }},
      {"disp_horiz", to_double(pred.disp_horiz_exp), k - 1.5,
       [](const ErrorNorms& e) { return e.disp_horiz; }},
      {"disp_vert", to_double(pred.disp_vert_exp), k - 2.5,
       [](const ErrorNorms& e) { return e.disp_vert; }},
  };
  for (const auto& spec : specs) {
    NormSummary s;
    s.name = spec.name;
    s.predicted_h_exp = spec.predicted;
    s.scale_exp = spec.scale_exp;
    std::vector<std::pair<double, double>> raw, norm;
    for (size_t i = 0; i < report.h.size(); ++i) {
      const double e = spec.pick(report.norms[i]);
      s.errors.push_back(e);
      const double scaled = e / std::pow(report.h[i], spec.scale_exp);
      s.normalized.push_back(scaled);
      raw.emplace_back(report.h[i], e);
      norm.emplace_back(report.h[i], scaled);
    }
    s.trivial = self_test;
    if (!self_test) {
      s.slope_raw = fit_slope(raw);
      s.slope_norm = fit_slope(norm);
      s.monotone = true;
      for (size_t i = 1; i < s.errors.size(); ++i)
        if (!(s.errors[i] < s.errors[i - 1])) s.monotone = false;
      s.positive_slope = s.slope_raw && s.slope_raw->slope > 0.0;
    }
    report.summary.push_back(std::move(s));
  }

  // Persist: per-h rows, per-norm summary, plots, per-level energy ledgers.
  {
    CsvWriter rates((outdir / "rates.csv").string(),
                    {"h", "eps", "velocity", "pressure", "disp_horiz", "disp_vert",
                     "translation_gap"});
    for (size_t i = 0; i < report.h.size(); ++i)
      rates.row({CsvWriter::num(report.h[i]), CsvWriter::num(report.eps[i]),
                 CsvWriter::num(report.norms[i].velocity), CsvWriter::num(report.norms[i].pressure),
                 CsvWriter::num(report.norms[i].disp_horiz),
                 CsvWriter::num(report.norms[i].disp_vert),
                 CsvWriter::num(report.norms[i].translation_gap)});
  }
  {
    CsvWriter slopes((outdir / "slopes.csv").string(),
                     {"norm", "slope_raw", "slope_normalized", "predicted_h_exp", "scale_exp",
                      "gap", "monotone", "positive_slope", "trivial"});
    for (const auto& s : report.summary) {
      const double sn = s.slope_norm ? s.slope_norm->slope : NAN;
      slopes.row({s.name, s.slope_raw ? CsvWriter::num(s.slope_raw->slope) : "nan",
                  s.slope_norm ? CsvWriter::num(sn) : "nan", CsvWriter::num(s.predicted_h_exp),
                  CsvWriter::num(s.scale_exp),
                  s.slope_norm ? CsvWriter::num(sn - s.predicted_h_exp) : "nan",
                  s.monotone ? "1" : "0", s.positive_slope ? "1" : "0", s.trivial ? "1" : "0"});
    }
  }
  for (const auto& s : report.summary) {
    LogLogPlot plot("error vs h: " + s.name, "h", "error");
    LogLogPlot::Series raw{s.name, "#1f76b4", {}};
    for (size_t i = 0; i < report.h.size(); ++i) raw.points.emplace_back(report.h[i], s.errors[i]);
    plot.add_series(std::move(raw));
    if (!report.h.empty() && s.errors.front() > 0.0) {
      LogLogPlot::Series ref{"predicted", "#d62727", {}};
      const double c = s.errors.front() / std::pow(report.h.front(), s.scale_exp + s.predicted_h_exp);
      for (size_t i = 0; i < report.h.size(); ++i)
        ref.points.emplace_back(report.h[i],
                                c * std::pow(report.h[i], s.scale_exp + s.predicted_h_exp));
      plot.add_series(std::move(ref));
    }
    plot.write((outdir / (s.name + ".svg")).string());
  }

  if (!failures.empty()) {
    std::string msg = "oracle failure aborted the study (partial results preserved): ";
    for (const auto& f : failures) msg += f + "; ";
    throw std::runtime_error(msg);
  }
  return report;
}

/// Regenerates summary plots from a persisted rates.csv without rerunning
/// anything.
inline void regenerate_report(const std::filesystem::path& outdir) {
  std::ifstream in(outdir / "rates.csv");
  if (!in) throw std::runtime_error("no rates.csv in " + outdir.string());
  std::string header;
  std::getline(in, header);
  std::vector<std::array<double, 7>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::array<double, 7> row{};
    std::stringstream ss(line);
    std::string cell;
    int c = 0;
    while (std::getline(ss, cell, ',') && c < 7) row[c++] = std::stod(cell);
    rows.push_back(row);
  }
  const char* names[4] = {"velocity", "pressure", "disp_horiz", "disp_vert"};
  for (int k = 0; k < 4; ++k) {
    LogLogPlot plot(std::string("error vs h: ") + names[k], "h", "error");
    LogLogPlot::Series s{names[k], "#1f76b4", {}};
    for (const auto& row : rows) s.points.emplace_back(row[0], row[2 + k]);
    plot.add_series(std::move(s));
    plot.write((outdir / (std::string(names[k]) + ".svg")).string());
  }
}

/// Residual-scaling study: steady manufactured limit data held fixed in
/// reference variables, fluid residual norm evaluated on physical slabs of
/// decreasing thickness.
struct ResidualScalingResult {
  std::vector<double> eps;
  std::vector<double> norm;
  std::optional<SlopeFit> fit;
};

inline ResidualScalingResult residual_scaling_study(const MaterialParams& materials,
                                                    const ForceSpec& force,
                                                    const std::vector<double>& eps_list,
                                                    int modes, int m) {
  ResidualScalingResult out;
  auto ref_grid = make_gauss_lobatto(-1.0, 0.0, m);
  const VectorSlabField3 f = force.sample(modes, modes, ref_grid, 0.0);
  const ForcingIngredients ing = build_forcing(f, materials.eta);

  for (const double eps : eps_list) {
    const ScalingRegime regime = build_regime(Rational(1), Rational(7, 2), eps);
    const ReducedCoefficients coeffs = rescaled_coefficients(regime, materials);
    // Steady state of the sixth-order equation: w_k = F_k / (c_plate |k|^6).
    const int n = ing.F.n1();
    std::vector<std::complex<double>> w(ing.F.spectrum());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double k1 = detail::signed_freq(i, n);
        const double k2 = detail::signed_freq(j, n);
        const double ksq = 4.0 * M_PI * M_PI * (k1 * k1 + k2 * k2);
        const double lam = coeffs.c_plate * ksq * ksq * ksq;
        w[static_cast<size_t>(i) * n + j] =
            lam > 0.0 ? w[static_cast<size_t>(i) * n + j] / lam : 0.0;
      }
    ReducedTrajectory traj;
    traj.times = {0.0};
    traj.regime = regime;
    traj.materials = materials;
    traj.coeffs = coeffs;
    traj.w3.push_back(PeriodicField2D::from_spectrum(n, n, std::move(w)));
    traj.dt_w3.push_back(PeriodicField2D::zero(n, n));
    traj.forcing.push_back(ing.F);

    const LimitFields limit = build_limit_fields(traj, {ing});
    const ApproxSolution approx = assemble_approx(limit, traj, regime);
    std::vector<VectorSlabField3> dt_v{
        VectorSlabField3::zero(n, n, approx.v.front().comp[0].vgrid_ptr())};
    const FluidResidual rf = fluid_residual(approx, dt_v, regime, materials);
    out.eps.push_back(eps);
    out.norm.push_back(rf.norm.front());
  }
  std::vector<std::pair<double, double>> pairs;
  for (size_t i = 0; i < out.eps.size(); ++i) pairs.emplace_back(out.eps[i], out.norm[i]);
  out.fit = fit_slope(pairs);
  return out;
}

/// Seeded inequality ensemble over random admissible fields; returns the
/// per-field reports (three checks per field).
struct InequalityEnsemble {
  std::vector<InequalityReport> reports;
  bool all_pass = true;
  double max_korn_ratio = 0.0;
};

inline InequalityEnsemble run_inequality_ensemble(double eps, uint64_t seed, int count, int n,
                                                  int m, double korn_bound) {
  InequalityEnsemble out;
  std::mt19937_64 rng(seed);
  auto vgrid = make_gauss_lobatto(-eps, 0.0, m);
  for (int i = 0; i < count; ++i) {
    const VectorSlabField3 v = random_admissible_field(n, vgrid, rng);
    for (auto rep : {poincare_check(v, eps), trace_check(v, eps), korn_check(v, eps, korn_bound)}) {
      out.all_pass = out.all_pass && rep.pass;
      if (rep.check_id == "korn" && rep.rhs > 0.0)
        out.max_korn_ratio = std::max(out.max_korn_ratio, rep.lhs / (rep.rhs / rep.constant));
      out.reports.push_back(std::move(rep));
    }
  }
  return out;
}

}  // namespace thinfsi

#endif
