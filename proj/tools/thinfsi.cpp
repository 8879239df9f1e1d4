// thinfsi: command-line laboratory for the reduced thin-film model, its
// reconstruction to the coupled thin-domain problem, and the verification
// harness (inequalities, residual scalings, convergence studies).

#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "thinfsi/analysis.hpp"
#include "thinfsi/harness/io.hpp"
#include "thinfsi/harness/study.hpp"
#include "thinfsi/oracle.hpp"
#include "thinfsi/params.hpp"
#include "thinfsi/reconstruct.hpp"
#include "thinfsi/reduced.hpp"

namespace fs = std::filesystem;
using namespace thinfsi;

namespace {

constexpr const char* kVersion = "0.1.0";

Manifest base_manifest(const Config& cfg, const RunConfig& rc) {
  Manifest m;
  m.set("config_hash", fnv1a_hash(cfg.canonical_text()));
  m.set("code_version", std::string(kVersion));
  m.set("experiment_id", rc.experiment_id);
  m.set("regime.gamma", to_string(rc.gamma));
  m.set("regime.kappa", to_string(rc.kappa));
  m.set("regime.gamma_decimal", to_double(rc.gamma));
  m.set("regime.kappa_decimal", to_double(rc.kappa));
  std::string hs;
  for (const auto& h : rc.h_list) hs += (hs.empty() ? "" : " ") + to_string(h);
  m.set("regime.h_list", hs);
  const Rational tau = rc.kappa - Rational(3) * rc.gamma - Rational(3);
  m.set("regime.tau", to_string(tau));
  m.set("regime.tau_decimal", to_double(tau));
  m.set("grid.n", rc.n);
  m.set("grid.m_f", rc.m_f);
  m.set("grid.m_s", rc.m_s);
  m.set("grid.modes", rc.modes);
  m.set("time.horizon", rc.t_end);
  m.set("time.dt", rc.dt);
  m.set("force.id", rc.force.id());
  m.set("rng", std::string("mt19937_64"));
  m.set("seed", rc.seed);
  return m;
}

int cmd_regime(const std::string& gamma_s, const std::string& kappa_s, const std::string& h_s) {
  const Rational gamma = parse_rational(gamma_s);
  const Rational kappa = parse_rational(kappa_s);
  const double h = h_s.empty() ? 0.5 : to_double(parse_rational(h_s));
  const ScalingRegime regime = build_regime(gamma, kappa, h);
  const RatePrediction rates = predict_rates(regime);
  std::printf("gamma        = %s\n", to_string(gamma).c_str());
  std::printf("kappa        = %s\n", to_string(kappa).c_str());
  std::printf("tau          = %s  (%.6g)\n", to_string(regime.tau).c_str(), to_double(regime.tau));
  std::printf("chi_tau      = %d\n", regime.chi_tau);
  std::printf("h            = %.6g, eps = h^gamma = %.6g, T = h^tau = %.6g\n", regime.h,
              regime.eps(), regime.time_scale());
  std::printf("reduced-model valid (tau <= -1): %s\n", regime.reduced_model_valid ? "yes" : "no");
  std::printf("error theorem applicable:        %s\n",
              rates.theorem_applicable ? "yes" : "no");
  std::printf("%-22s %-10s\n", "exponent", "value");
  std::printf("%-22s %-10s\n", "velocity eps power", to_string(rates.vel_eps_pow).c_str());
  std::printf("%-22s %-10s\n", "velocity h rate", to_string(rates.vel_h_exp).c_str());
  std::printf("%-22s %-10s\n", "pressure eps power", to_string(rates.pressure_eps_pow).c_str());
  std::printf("%-22s %-10s\n", "pressure h rate", to_string(rates.pressure_h_exp).c_str());
  std::printf("%-22s %-10s\n", "disp horizontal rate", to_string(rates.disp_horiz_exp).c_str());
  std::printf("%-22s %-10s\n", "disp vertical rate", to_string(rates.disp_vert_exp).c_str());
  return 0;
}

void export_trajectory(const ReducedTrajectory& traj, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream index(dir / "index.txt");
  for (size_t i = 0; i < traj.times.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "w3_%04zu.csv", i);
    index << CsvWriter::num(traj.times[i]) << " " << name << "\n";
    std::ofstream out(dir / name);
    write_field_csv(out, traj.w3[i], "omega", "w3",
                    "t=" + std::string(CsvWriter::num(traj.times[i])));
  }
}

int cmd_solve_reduced(const std::string& config_path, const std::string& out_dir) {
  const Config cfg = Config::from_file(config_path);
  const RunConfig rc = RunConfig::parse(cfg);
  const fs::path dir = output_root(out_dir) / rc.experiment_id;
  fs::create_directories(dir);

  const double h = to_double(rc.h_list.front());
  const ScalingRegime regime = build_regime(rc.gamma, rc.kappa, h);
  auto ref_grid = make_gauss_lobatto(-1.0, 0.0, std::max(8, rc.m_f));
  const PipelineResult pipe = run_reduced_pipeline(regime, rc.materials, rc.force, rc.modes,
                                                   ref_grid, nullptr, rc.times());
  export_trajectory(pipe.traj, dir / "trajectory");

  const auto p = limit_pressure(pipe.traj);
  const auto residual = reynolds_residual(pipe.traj, p);
  CsvWriter res((dir / "reynolds_residual.csv").string(), {"t", "l2_residual"});
  for (size_t i = 0; i < residual.size(); ++i)
    res.row({CsvWriter::num(pipe.traj.times[i]), CsvWriter::num(residual[i])});

  Manifest m = base_manifest(cfg, rc);
  m.set("regime.h", h);
  m.set("regime.eps", regime.eps());
  m.write((dir / "manifest.txt").string());
  std::printf("reduced solve written to %s (%zu snapshots)\n", dir.string().c_str(),
              pipe.traj.times.size());
  return 0;
}

int cmd_reconstruct(const std::string& config_path, const std::string& out_dir) {
  const Config cfg = Config::from_file(config_path);
  const RunConfig rc = RunConfig::parse(cfg);
  const fs::path dir = output_root(out_dir) / rc.experiment_id;
  fs::create_directories(dir);

  const double h = to_double(rc.h_list.front());
  const ScalingRegime regime = build_regime(rc.gamma, rc.kappa, h);
  auto ref_grid = make_gauss_lobatto(-1.0, 0.0, std::max(8, rc.m_f));
  const PipelineResult pipe = run_reduced_pipeline(regime, rc.materials, rc.force, rc.modes,
                                                   ref_grid, nullptr, rc.times());

  const std::string heights =
      "eps=" + std::string(CsvWriter::num(regime.eps())) + " h=" + CsvWriter::num(h);
  {
    std::ofstream out(dir / "approx_final.csv");
    const size_t last = pipe.approx.times.size() - 1;
    write_field_csv(out, pipe.approx.p[last], "omega", "p", heights);
    const char* names[3] = {"vx", "vy", "vz"};
    for (int c = 0; c < 3; ++c)
      write_field_csv(out, pipe.approx.v[last].comp[c], "fluid_eps", names[c], heights);
    const char* unames[3] = {"ux", "uy", "uz"};
    for (int c = 0; c < 3; ++c)
      write_field_csv(out, pipe.approx.u[last].comp[c], "structure_h", unames[c], heights);
  }

  // Residual diagnostics along the trajectory.
  std::vector<VectorSlabField3> dt_v;
  if (rc.force.constant_in_time() && regime.chi_tau == 0) {
    // dt of the approximation through the mode ODE: rebuild the pipeline's
    // limit fields from dt_w3-driven pressure. dt F_alpha = 0 and dtt a = 0,
    // so only the pressure part moves.
    for (size_t i = 0; i < pipe.traj.times.size(); ++i) {
      PeriodicField2D dtp = pipe.traj.dt_w3[i].laplacian(2);
      dtp *= pipe.traj.coeffs.c_biharm;
      ForcingIngredients zero_ing;
      const int nm = rc.modes;
      zero_ing.F1 = SlabField3D::zero(nm, nm, ref_grid);
      zero_ing.F2 = SlabField3D::zero(nm, nm, ref_grid);
      zero_ing.F = PeriodicField2D::zero(nm, nm);
      zero_ing.d3F1_at0 = PeriodicField2D::zero(nm, nm);
      zero_ing.d3F2_at0 = PeriodicField2D::zero(nm, nm);
      auto [dv1, dv2] = limit_velocity(dtp, zero_ing, {0.0, 0.0}, rc.materials.eta);
      LimitFields dlim;
      dlim.times = {pipe.traj.times[i]};
      dlim.ref_grid = ref_grid;
      dlim.p.push_back(dtp);
      dlim.v1.push_back(dv1);
      dlim.v2.push_back(dv2);
      dlim.dt_a.push_back({0.0, 0.0});
      dlim.a.push_back({0.0, 0.0});
      ReducedTrajectory dtraj;
      dtraj.times = {pipe.traj.times[i]};
      dtraj.regime = regime;
      dtraj.materials = rc.materials;
      dtraj.coeffs = pipe.traj.coeffs;
      dtraj.w3.push_back(pipe.traj.dt_w3[i]);
      dtraj.dt_w3.push_back(PeriodicField2D::zero(rc.modes, rc.modes));
      dtraj.forcing.push_back(PeriodicField2D::zero(rc.modes, rc.modes));
      const ApproxSolution da = assemble_approx(dlim, dtraj, regime);
      dt_v.push_back(da.v.front());
    }
  } else {
    dt_v = time_derivative_central(pipe.approx.v, pipe.approx.times);
  }
  const FluidResidual rf = fluid_residual(pipe.approx, dt_v, regime, rc.materials);

  CsvWriter res((dir / "residuals.csv").string(),
                {"t", "fluid_residual_l2", "boundary_r1_l2", "boundary_r2_l2", "boundary_r3_l2",
                 "div_v_max"});
  for (size_t i = 0; i < pipe.approx.times.size(); ++i) {
    const BoundaryResidual rb = boundary_residual(pipe.limit.v1[i], pipe.limit.v2[i],
                                                  regime.eps(), rc.materials.eta);
    const double divmax = discrete_divergence(pipe.approx.v[i]).linf_norm();
    res.row({CsvWriter::num(pipe.approx.times[i]), CsvWriter::num(rf.norm[i]),
             CsvWriter::num(rb.r1.l2_norm()), CsvWriter::num(rb.r2.l2_norm()),
             CsvWriter::num(rb.r3.l2_norm()), CsvWriter::num(divmax)});
  }

  Manifest m = base_manifest(cfg, rc);
  m.set("regime.h", h);
  m.set("regime.eps", regime.eps());
  m.write((dir / "manifest.txt").string());
  std::printf("reconstruction written to %s\n", dir.string().c_str());
  return 0;
}

int cmd_verify_inequalities(const std::string& eps_s, uint64_t seed, int count,
                            const std::string& out_dir) {
  const double eps = to_double(parse_rational(eps_s));
  if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("eps must lie in (0,1)");
  if (count < 1) throw std::invalid_argument("count must be >= 1");
  const InequalityEnsemble ens = run_inequality_ensemble(eps, seed, count, 16, 8,
                                                         kKornCalibratedBound);
  const fs::path dir = output_root(out_dir);
  fs::create_directories(dir);
  CsvWriter ledger((dir / "inequalities.csv").string(),
                   {"check_id", "h", "eps", "lhs", "rhs", "ratio", "pass"});
  int idx = 0;
  for (const auto& r : ens.reports) {
    ledger.row({r.check_id, "0", CsvWriter::num(eps), CsvWriter::num(r.lhs),
                CsvWriter::num(r.rhs), CsvWriter::num(r.ratio), r.pass ? "1" : "0"});
    if (idx % 3 == 0) std::printf("field %3d: ", idx / 3);
    std::printf("%s=%s ", r.check_id.c_str(), r.pass ? "pass" : "FAIL");
    if (idx % 3 == 2) std::printf("\n");
    ++idx;
  }
  std::printf("max empirical korn ratio: %.6g (bound %.6g)\n", ens.max_korn_ratio,
              kKornCalibratedBound);
  return ens.all_pass ? 0 : 1;
}

int cmd_run_oracle(const std::string& config_path, const std::string& out_dir) {
  const Config cfg = Config::from_file(config_path);
  const RunConfig rc = RunConfig::parse(cfg);
  const fs::path dir = output_root(out_dir) / rc.experiment_id;
  fs::create_directories(dir);

  const double h = to_double(rc.h_list.front());
  const ScalingRegime regime = build_regime(rc.gamma, rc.kappa, h);
  FsiMesh mesh{rc.n, rc.m_f, rc.m_s, regime.eps(), h};
  FsiOracle oracle(mesh, regime, rc.materials, rc.force);
  const FsiOracle::RunResult run = oracle.run(rc.t_end, rc.dt);
  const auto energy = energy_functional(run.energy, regime, rc.materials);

  CsvWriter ledger((dir / "energy.csv").string(),
                   {"step", "t", "kinetic_f", "dissipation", "kinetic_s", "elastic",
                    "lhs_over_t_eps3"});
  for (size_t s = 0; s < energy.size(); ++s)
    ledger.row({std::to_string(s), CsvWriter::num(energy[s].t_rescaled),
                CsvWriter::num(energy[s].kinetic_f), CsvWriter::num(energy[s].dissipation),
                CsvWriter::num(energy[s].kinetic_s), CsvWriter::num(energy[s].elastic),
                CsvWriter::num(energy[s].ratio)});

  CsvWriter diag((dir / "diagnostics.csv").string(),
                 {"step", "t", "balance_residual", "interface_mean_u3", "mean_transl_1",
                  "mean_transl_2"});
  for (size_t s = 0; s < run.states.size(); ++s)
    diag.row({std::to_string(s), CsvWriter::num(run.states[s].t),
              CsvWriter::num(s == 0 ? 0.0 : run.balance_residual[s - 1]),
              CsvWriter::num(run.interface_mean_u3[s]), CsvWriter::num(run.mean_transl[s][0]),
              CsvWriter::num(run.mean_transl[s][1])});

  {
    const auto& last = run.states.back();
    std::ofstream out(dir / "state_final.csv");
    const VectorSlabField3 v = oracle.velocity_field(last);
    const SlabField3D p = oracle.pressure_field(last);
    const VectorSlabField3 u = oracle.displacement_field(last);
    const std::string heights =
        "eps=" + std::string(CsvWriter::num(regime.eps())) + " h=" + CsvWriter::num(h);
    const char* vn[3] = {"vx", "vy", "vz"};
    const char* un[3] = {"ux", "uy", "uz"};
    for (int c = 0; c < 3; ++c) write_field_csv(out, v.comp[c], "fluid_eps", vn[c], heights);
    write_field_csv(out, p, "fluid_eps", "p", heights);
    for (int c = 0; c < 3; ++c) write_field_csv(out, u.comp[c], "structure_h", un[c], heights);
  }

  Manifest m = base_manifest(cfg, rc);
  m.set("regime.h", h);
  m.set("regime.eps", regime.eps());
  m.write((dir / "manifest.txt").string());
  std::printf("oracle run written to %s (%zu steps)\n", dir.string().c_str(),
              run.states.size() - 1);
  return 0;
}

int cmd_convergence_study(const std::string& config_path, const std::string& out_dir,
                          bool self_test) {
  const Config cfg = Config::from_file(config_path);
  const RunConfig rc = RunConfig::parse(cfg);
  const fs::path dir = output_root(out_dir) / rc.experiment_id;

  const RateReport report = convergence_study(rc, self_test, dir);
  Manifest m = base_manifest(cfg, rc);
  m.set("self_test", self_test ? 1 : 0);
  m.write((dir / "manifest.txt").string());

  for (const auto& s : report.summary) {
    if (s.trivial) {
      std::printf("%-12s errors all %.3g, slopes not-a-number, pass=trivial\n", s.name.c_str(),
                  s.errors.empty() ? 0.0 : s.errors.front());
      continue;
    }
    std::printf("%-12s slope=%.3f normalized=%.3f predicted=%.3f monotone=%s\n", s.name.c_str(),
                s.slope_raw ? s.slope_raw->slope : NAN, s.slope_norm ? s.slope_norm->slope : NAN,
                s.predicted_h_exp, s.monotone ? "yes" : "no");
  }
  std::printf("report written to %s\n", dir.string().c_str());
  return 0;
}

int cmd_report(const std::string& out_dir) {
  regenerate_report(output_root(out_dir));
  std::printf("plots regenerated in %s\n", output_root(out_dir).string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thinfsi: reduced thin-film FSI model laboratory"};
  app.require_subcommand(1);

  std::string gamma = "1", kappa = "7/2", h_opt, config_path, out_dir, eps_s = "1/16";
  uint64_t seed = 7;
  int count = 100;
  bool self_test = false;

  auto* regime = app.add_subcommand("regime", "evaluate a scaling regime");
  regime->add_option("--gamma", gamma, "fluid-thickness exponent (rational)");
  regime->add_option("--kappa", kappa, "stiffness exponent (rational)");
  regime->add_option("--h", h_opt, "structure thickness in (0,1)");

  auto* solve = app.add_subcommand("solve-reduced", "solve the sixth-order model");
  solve->add_option("--config", config_path, "key=value config file")->required();
  solve->add_option("--out", out_dir, "output directory root");

  auto* recon = app.add_subcommand("reconstruct", "reduced solve plus reconstruction/residuals");
  recon->add_option("--config", config_path, "key=value config file")->required();
  recon->add_option("--out", out_dir, "output directory root");

  auto* verify = app.add_subcommand("verify-inequalities", "seeded inequality ensemble");
  verify->add_option("--eps", eps_s, "fluid thickness (rational)");
  verify->add_option("--seed", seed, "rng seed");
  verify->add_option("--count", count, "ensemble size");
  verify->add_option("--out", out_dir, "output directory root");

  auto* orac = app.add_subcommand("run-oracle", "run the monolithic coupled solver");
  orac->add_option("--config", config_path, "key=value config file")->required();
  orac->add_option("--out", out_dir, "output directory root");

  auto* study = app.add_subcommand("convergence-study", "oracle vs reconstruction rate study");
  study->add_option("--config", config_path, "key=value config file")->required();
  study->add_option("--out", out_dir, "output directory root");
  study->add_flag("--self-test", self_test, "compare the reconstruction against itself");

  auto* report = app.add_subcommand("report", "regenerate plots from persisted rates.csv");
  report->add_option("--out", out_dir, "output directory root");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << app.help() << "\n" << e.what() << "\n";
    return 1;
  }

  try {
    if (regime->parsed()) return cmd_regime(gamma, kappa, h_opt);
    if (solve->parsed()) return cmd_solve_reduced(config_path, out_dir);
    if (recon->parsed()) return cmd_reconstruct(config_path, out_dir);
    if (verify->parsed()) return cmd_verify_inequalities(eps_s, seed, count, out_dir);
    if (orac->parsed()) return cmd_run_oracle(config_path, out_dir);
    if (study->parsed()) return cmd_convergence_study(config_path, out_dir, self_test);
    if (report->parsed()) return cmd_report(out_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::runtime_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    // Config/file problems are validation failures; solver breakdowns are not.
    const std::string msg = e.what();
    if (msg.find("config") != std::string::npos || msg.find("cannot open") != std::string::npos ||
        msg.find("missing") != std::string::npos || msg.find("no rates.csv") != std::string::npos)
      return 1;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
