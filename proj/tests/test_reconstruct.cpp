#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <random>

#include "thinfsi/analysis.hpp"
#include "thinfsi/forces.hpp"
#include "thinfsi/reconstruct.hpp"
#include "thinfsi/reduced.hpp"

using namespace thinfsi;

namespace {

MaterialParams unit_materials() {
  MaterialParams m;
  m.eta = 1.0;
  m.mu_hat = 1.0;
  m.lambda_hat = 0.0;
  m.rho_s_hat = 1.0;
  return m;
}

/// Dense second-order two-point solve of -eta v'' = rhs(y) on (-1,0),
/// v(-1) = v0, v(0) = v1, with Richardson extrapolation. Independent of the
/// kernel-quadrature path used by the implementation.
std::vector<double> bvp_solve(const std::function<double(double)>& rhs, double eta, double v0,
                              double v1, int n_coarse, const std::vector<double>& eval_at) {
  auto solve = [&](int n) {
    const double h = 1.0 / n;
    std::vector<double> a(n - 1, -1.0), b(n - 1, 2.0), c(n - 1, -1.0), d(n - 1);
    for (int k = 1; k < n; ++k) d[k - 1] = h * h / eta * rhs(-1.0 + k * h);
    d[0] += v0;
    d[n - 2] += v1;
    // Thomas algorithm
    for (int k = 1; k < n - 1; ++k) {
      const double m = a[k] / b[k - 1];
      b[k] -= m * c[k - 1];
      d[k] -= m * d[k - 1];
    }
    std::vector<double> v(n + 1);
    v[0] = v0;
    v[n] = v1;
    v[n - 1] = d[n - 2] / b[n - 2];
    for (int k = n - 2; k >= 1; --k) v[k] = (d[k - 1] - c[k - 1] * v[k + 1]) / b[k - 1];
    return v;
  };
  const auto coarse = solve(n_coarse);
  const auto fine = solve(2 * n_coarse);
  std::vector<double> out;
  for (double y : eval_at) {
    const int kc = static_cast<int>(std::lround((y + 1.0) * n_coarse));
    const int kf = 2 * kc;
    out.push_back((4.0 * fine[kf] - coarse[kc]) / 3.0);
  }
  return out;
}

}  // namespace

TEST_CASE("limit pressure from the plate relation") {
  const int n = 16;
  const MaterialParams mat = unit_materials();

  SECTION("product-mode eigenfunction, viscous regime") {
    const auto regime = build_regime(Rational(1), Rational(7, 2), 0.25);
    ReducedTrajectory traj;
    traj.times = {0.0};
    traj.regime = regime;
    traj.materials = mat;
    traj.coeffs = rescaled_coefficients(regime, mat);
    traj.w3.push_back(PeriodicField2D::from_function(n, n, [](double y1, double y2) {
      return std::cos(2 * M_PI * y1) * std::cos(2 * M_PI * y2);
    }));
    traj.dt_w3.push_back(PeriodicField2D::zero(n, n));
    const auto p = limit_pressure(traj);
    const double factor = (4.0 / 3.0) * 64.0 * std::pow(M_PI, 4);
    PeriodicField2D expected = traj.w3[0];
    expected *= factor;
    CHECK((p[0] - expected).linf_norm() <= 1e-10 * factor);
  }

  SECTION("zero displacement gives zero pressure") {
    const auto regime = build_regime(Rational(1), Rational(7, 2), 0.25);
    ReducedTrajectory traj;
    traj.times = {0.0};
    traj.regime = regime;
    traj.materials = mat;
    traj.coeffs = rescaled_coefficients(regime, mat);
    traj.w3.push_back(PeriodicField2D::zero(n, n));
    traj.dt_w3.push_back(PeriodicField2D::zero(n, n));
    CHECK(limit_pressure(traj)[0].linf_norm() == 0.0);
  }

  SECTION("critical case adds the inertial term additively") {
    MaterialParams m2 = mat;
    m2.rho_s_hat = 3.0;
    const auto crit = build_regime(Rational(1), Rational(5), 0.25);
    ReducedTrajectory traj;
    traj.times = {0.0};
    traj.regime = crit;
    traj.materials = m2;
    traj.coeffs = rescaled_coefficients(crit, m2);
    std::mt19937_64 rng(3);
    traj.w3.push_back(PeriodicField2D::random_bandlimited(n, n, 4, rng));
    traj.dt_w3.push_back(PeriodicField2D::zero(n, n));
    const auto g = PeriodicField2D::random_bandlimited(n, n, 4, rng);
    traj.dtt_w3.push_back(g);
    const auto p_crit = limit_pressure(traj);

    ReducedTrajectory visc = traj;
    visc.regime = build_regime(Rational(1), Rational(7, 2), 0.25);
    visc.coeffs = rescaled_coefficients(visc.regime, m2);
    visc.dtt_w3.clear();
    const auto p_visc = limit_pressure(visc);

    PeriodicField2D diff = p_crit[0];
    diff -= p_visc[0];
    PeriodicField2D expected = g;
    expected *= m2.rho_s_hat;
    // roundoff rides on the large bi-Laplacian part that cancels in the
    // difference, so the tolerance scales with the full pressure
    CHECK((diff - expected).linf_norm() <= 1e-12 * (1.0 + p_crit[0].linf_norm()));

    traj.dtt_w3.clear();
    CHECK_THROWS_AS(limit_pressure(traj), std::invalid_argument);
  }
}

TEST_CASE("translational velocities") {
  const int n = 16;
  auto vg = make_gauss_lobatto(-1.0, 0.0, 8);
  const double eta = 2.0;

  SECTION("zero force") {
    const auto ing = build_forcing(VectorSlabField3::zero(n, n, vg), eta);
    const auto dta = translational_velocity(ing);
    CHECK(dta[0] == 0.0);
    CHECK(dta[1] == 0.0);
  }

  SECTION("constant horizontal force drags the plate along") {
    VectorSlabField3 f = VectorSlabField3::zero(n, n, vg);
    f.comp[0] = SlabField3D::from_function(n, n, vg, [](double, double, double) { return 1.0; });
    const auto ing = build_forcing(f, eta);
    const auto dta = translational_velocity(ing);
    // dt a_1 = -int_omega d3 F_1(.,0) = +1/(2 eta) with the kernel solving
    // eta d33 F = -f (see the decisions ledger for the sign discussion)
    CHECK(dta[0] == Catch::Approx(0.5 / eta).margin(1e-13));
    CHECK(dta[1] == Catch::Approx(0.0).margin(1e-14));
  }

  SECTION("pure modes average out") {
    VectorSlabField3 f = VectorSlabField3::zero(n, n, vg);
    f.comp[0] = SlabField3D::from_function(
        n, n, vg, [](double y1, double, double) { return std::sin(2 * M_PI * y1); });
    const auto ing = build_forcing(f, eta);
    CHECK(translational_velocity(ing)[0] == Catch::Approx(0.0).margin(1e-14));
  }
}

TEST_CASE("limit velocity formula") {
  const int n = 16;
  const double eta = 1.5;
  auto vg = make_gauss_lobatto(-1.0, 0.0, 8);

  SECTION("pure translation term") {
    const auto ing = build_forcing(VectorSlabField3::zero(n, n, vg), eta);
    const auto [v1, v2] = limit_velocity(PeriodicField2D::zero(n, n), ing, {1.0, 0.0}, eta);
    for (int j = 0; j < vg->node_count(); ++j) {
      CHECK(v1.layer(j).mean() == Catch::Approx(1.0 + vg->node(j)).margin(1e-13));
      CHECK(v2.layer(j).linf_norm() <= 1e-14);
    }
  }

  SECTION("pressure-driven Poiseuille profile and midpoint value") {
    const auto ing = build_forcing(VectorSlabField3::zero(n, n, vg), eta);
    const auto p = PeriodicField2D::from_function(
        n, n, [](double y1, double) { return std::cos(2 * M_PI * y1); });
    const auto [v1, v2] = limit_velocity(p, ing, {0.0, 0.0}, eta);
    // v1 = (1/2eta) y3(y3+1) (-2 pi sin 2 pi y1); at y3 = -1/2 the parabola
    // equals -1/4
    auto midnode = vg->node_count() / 2;
    REQUIRE(vg->node(midnode) == Catch::Approx(-0.5).margin(1e-14));
    const auto expected = PeriodicField2D::from_function(n, n, [&](double y1, double) {
      return (-0.25) * (1.0 / (2 * eta)) * (-2 * M_PI * std::sin(2 * M_PI * y1));
    });
    CHECK((v1.layer(midnode) - expected).linf_norm() <= 1e-12 * (1.0 + expected.linf_norm()));
    CHECK(v2.layer(midnode).linf_norm() <= 1e-13);
  }

  SECTION("no-slip and interface trace identities for random data") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 5; ++trial) {
      VectorSlabField3 f = VectorSlabField3::zero(n, n, vg);
      for (int c = 0; c < 2; ++c) {
        const auto g = PeriodicField2D::random_bandlimited(n, n, 3, rng);
        std::vector<PeriodicField2D> layers;
        for (int j = 0; j < vg->node_count(); ++j) {
          const double z = vg->node(j);
          PeriodicField2D l = PeriodicField2D::zero(n, n);
          l.axpy(1.0 + 0.3 * z - 0.8 * z * z, g);
          layers.push_back(std::move(l));
        }
        f.comp[c] = SlabField3D::from_layers(vg, std::move(layers));
      }
      const auto ing = build_forcing(f, eta);
      const auto dta = translational_velocity(ing);
      const auto p = PeriodicField2D::random_bandlimited(n, n, 3, rng);
      const auto [v1, v2] = limit_velocity(p, ing, dta, eta);
      CHECK(v1.trace_bottom().linf_norm() <= 1e-12);
      CHECK(v2.trace_bottom().linf_norm() <= 1e-12);
      PeriodicField2D top1 = v1.trace_top();
      top1.axpy(-dta[0], PeriodicField2D::constant(n, n, 1.0));
      CHECK(top1.linf_norm() <= 1e-12);
      PeriodicField2D top2 = v2.trace_top();
      top2.axpy(-dta[1], PeriodicField2D::constant(n, n, 1.0));
      CHECK(top2.linf_norm() <= 1e-12);
    }
  }

  SECTION("dense BVP oracle: -eta v'' = f - da p, Dirichlet data from the construction") {
    // Uniform implementation grid whose nodes are shared with the BVP grid.
    auto ug = make_uniform(-1.0, 0.0, 8);
    std::mt19937_64 rng(77);
    const auto gmode = PeriodicField2D::random_bandlimited(n, n, 2, rng);
    auto fprofile = [](double z) { return 0.7 - 0.4 * z + 1.1 * z * z; };
    VectorSlabField3 f = VectorSlabField3::zero(n, n, ug);
    {
      std::vector<PeriodicField2D> layers;
      for (int j = 0; j < ug->node_count(); ++j) {
        PeriodicField2D l = PeriodicField2D::zero(n, n);
        l.axpy(fprofile(ug->node(j)), gmode);
        layers.push_back(std::move(l));
      }
      f.comp[0] = SlabField3D::from_layers(ug, std::move(layers));
    }
    const auto p = PeriodicField2D::random_bandlimited(n, n, 2, rng);
    const auto ing = build_forcing(f, eta);
    const auto dta = translational_velocity(ing);
    const auto [v1, v2] = limit_velocity(p, ing, dta, eta);

    const auto d1p = p.derivative(1, 1);
    double max_err = 0.0;
    for (int i = 0; i < n; i += 3)
      for (int j = 0; j < n; j += 3) {
        const double fval = gmode.value(i, j);
        const double pval = d1p.value(i, j);
        const auto oracle = bvp_solve(
            [&](double y) { return fval * fprofile(y) - pval; }, eta, 0.0, dta[0], 256,
            ug->nodes());
        for (int l = 0; l < ug->node_count(); ++l)
          max_err = std::max(max_err, std::fabs(oracle[l] - v1.layer(l).value(i, j)));
      }
    CHECK(max_err <= 1e-9);
  }
}

TEST_CASE("approximate solution assembly") {
  const int n = 16;
  const MaterialParams mat = unit_materials();
  const auto regime = build_regime(Rational(1), Rational(7, 2), 0.125);
  const double eps = regime.eps();
  auto vg = make_gauss_lobatto(-1.0, 0.0, 8);

  auto single_mode_pipeline = [&](const ForceSpec& force) {
    const std::vector<double> times{0.0, 1e-4, 2e-4};
    std::vector<ForcingIngredients> ings;
    std::vector<PeriodicField2D> F;
    for (double t : times) {
      ings.push_back(build_forcing(force.sample(n, n, vg, t), mat.eta));
      F.push_back(ings.back().F);
    }
    auto traj = solve_w3(F, regime, mat, times);
    auto limit = build_limit_fields(traj, ings);
    auto approx = assemble_approx(limit, traj, regime);
    return std::make_tuple(std::move(traj), std::move(limit), std::move(approx));
  };

  SECTION("x'-independent velocities give a vanishing vertical component") {
    ForceSpec force = ForceSpec::parse_kind("constant_horizontal");
    force.constant = {1.0, 0.5};
    auto [traj, limit, approx] = single_mode_pipeline(force);
    for (const auto& v : approx.v) {
      CHECK(v.comp[2].linf_norm() <= 1e-14);
      CHECK(discrete_divergence(v).linf_norm() <= 1e-12);
    }
  }

  SECTION("single-mode pressure with zero force: explicit vertical profile") {
    // manufactured limit: p prescribed, f = 0, so the only divergence source
    // is the Poiseuille part
    const auto p = PeriodicField2D::from_function(
        n, n, [](double y1, double y2) { return std::cos(2 * M_PI * (y1 + y2)); });
    const auto ing = build_forcing(VectorSlabField3::zero(n, n, vg), mat.eta);
    const auto [v1, v2] = limit_velocity(p, ing, {0.0, 0.0}, mat.eta);
    ReducedTrajectory traj;
    traj.times = {0.0};
    traj.regime = regime;
    traj.materials = mat;
    traj.coeffs = rescaled_coefficients(regime, mat);
    traj.w3.push_back(PeriodicField2D::zero(n, n));
    traj.dt_w3.push_back(PeriodicField2D::zero(n, n));
    traj.forcing.push_back(PeriodicField2D::zero(n, n));
    LimitFields limit;
    limit.times = {0.0};
    limit.ref_grid = vg;
    limit.p.push_back(p);
    limit.v1.push_back(v1);
    limit.v2.push_back(v2);
    limit.dt_a.push_back({0.0, 0.0});
    limit.a.push_back({0.0, 0.0});
    const auto approx = assemble_approx(limit, traj, regime);

    const auto lapp = p.laplacian(1);
    const auto& fluid_grid = *approx.fluid_grid;
    double max_err = 0.0;
    for (int j = 0; j < fluid_grid.node_count(); ++j) {
      const double y3 = fluid_grid.node(j) / eps;
      const double prof = (y3 * y3 * y3 / 3.0 + y3 * y3 / 2.0) - (-1.0 / 3.0 + 0.5);
      PeriodicField2D expected = PeriodicField2D::zero(n, n);
      expected.axpy(-eps * eps * eps / (2.0 * mat.eta) * prof, lapp);
      PeriodicField2D got = approx.v[0].comp[2].layer(j);
      got -= expected;
      max_err = std::max(max_err, got.linf_norm());
    }
    CHECK(max_err <= 1e-12 * (1.0 + eps * eps * eps * lapp.linf_norm()));
    CHECK(discrete_divergence(approx.v[0]).linf_norm() <= 1e-10);
  }

  SECTION("divergence-free reconstruction for forced trajectories") {
    ForceSpec force = ForceSpec::parse_kind("single_mode");
    force.k1 = 1;
    force.k2 = 0;
    auto [traj, limit, approx] = single_mode_pipeline(force);
    for (const auto& v : approx.v)
      CHECK(discrete_divergence(v).linf_norm() <= 1e-10);
  }

  SECTION("pressure field has no vertical dependence and matches the limit") {
    ForceSpec force = ForceSpec::parse_kind("single_mode");
    auto [traj, limit, approx] = single_mode_pipeline(force);
    for (size_t i = 0; i < approx.times.size(); ++i)
      CHECK((approx.p[i] - limit.p[i]).linf_norm() == 0.0);
  }

  SECTION("displacement: midsurface value and bending parity") {
    ForceSpec force = ForceSpec::parse_kind("single_mode");
    auto [traj, limit, approx] = single_mode_pipeline(force);
    const size_t last = approx.times.size() - 1;
    const auto& sg = *approx.structure_grid;
    const int mid = sg.node_count() / 2;
    REQUIRE(sg.node(mid) == Catch::Approx(regime.h / 2).margin(1e-15));
    const double transl_scale =
        rational_pow(regime.h, regime.kappa - Rational(3) - regime.gamma);
    CHECK(approx.u[last].comp[0].layer(mid).mean() ==
          Catch::Approx(transl_scale * approx.a[last][0]).margin(1e-12));
    // u - translation is (odd, odd, even) about the midsurface
    for (int c = 0; c < 3; ++c) {
      const auto& slab = approx.u[last].comp[c];
      const double tr = (c < 2) ? transl_scale * approx.a[last][c] : 0.0;
      for (int j = 0; j < sg.node_count(); ++j) {
        const int jr = sg.node_count() - 1 - j;
        PeriodicField2D a = slab.layer(j);
        a.axpy(-tr, PeriodicField2D::constant(n, n, 1.0));
        PeriodicField2D b = slab.layer(jr);
        b.axpy(-tr, PeriodicField2D::constant(n, n, 1.0));
        if (c < 2)
          b *= -1.0;  // odd components
        a -= b;
        REQUIRE(a.linf_norm() <= 1e-12);
      }
    }
  }

  SECTION("maps are linear in the field inputs") {
    ForceSpec f1 = ForceSpec::parse_kind("single_mode");
    ForceSpec f2 = ForceSpec::parse_kind("single_mode");
    f2.k1 = 2;
    f2.amplitude = -0.6;
    auto [t1, l1, a1] = single_mode_pipeline(f1);
    auto [t2, l2, a2] = single_mode_pipeline(f2);
    // combined force sampled directly
    const std::vector<double> times{0.0, 1e-4, 2e-4};
    std::vector<ForcingIngredients> ings;
    std::vector<PeriodicField2D> F;
    for (double t : times) {
      VectorSlabField3 fs = f1.sample(n, n, vg, t);
      fs.axpy(1.0, f2.sample(n, n, vg, t));
      ings.push_back(build_forcing(fs, mat.eta));
      F.push_back(ings.back().F);
    }
    auto traj = solve_w3(F, regime, mat, times);
    auto limit = build_limit_fields(traj, ings);
    auto approx = assemble_approx(limit, traj, regime);
    for (size_t i = 0; i < times.size(); ++i) {
      PeriodicField2D dp = approx.p[i];
      dp -= a1.p[i];
      dp -= a2.p[i];
      REQUIRE(dp.linf_norm() <= 1e-11 * (1.0 + approx.p[i].linf_norm()));
      for (int c = 0; c < 3; ++c) {
        SlabField3D dv = approx.v[i].comp[c];
        dv -= a1.v[i].comp[c];
        dv -= a2.v[i].comp[c];
        REQUIRE(dv.linf_norm() <= 1e-11 * (1.0 + approx.v[i].comp[c].linf_norm()));
      }
    }
  }
}

TEST_CASE("fluid residual") {
  const int n = 16;
  const MaterialParams mat = unit_materials();

  auto steady_residual_norm = [&](double eps_val, int m) {
    const auto regime = build_regime(Rational(1), Rational(7, 2), eps_val);
    auto vg = make_gauss_lobatto(-1.0, 0.0, m);
    ForceSpec force = ForceSpec::parse_kind("single_mode");
    const auto ing = build_forcing(force.sample(n, n, vg, 0.0), mat.eta);
    const auto coeffs = rescaled_coefficients(regime, mat);
    // steady state: w = F / (c_plate |k|^6) per mode
    std::vector<std::complex<double>> w(ing.F.spectrum());
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double k1 = i <= n / 2 ? i : i - n;
        const double k2 = j <= n / 2 ? j : j - n;
        const double ksq = 4 * M_PI * M_PI * (k1 * k1 + k2 * k2);
        const double lam = coeffs.c_plate * ksq * ksq * ksq;
        auto& c = w[static_cast<size_t>(i) * n + j];
        c = lam > 0 ? c / lam : 0.0;
      }
    ReducedTrajectory traj;
    traj.times = {0.0};
    traj.regime = regime;
    traj.materials = mat;
    traj.coeffs = coeffs;
    traj.w3.push_back(PeriodicField2D::from_spectrum(n, n, std::move(w)));
    traj.dt_w3.push_back(PeriodicField2D::zero(n, n));
    traj.forcing.push_back(ing.F);
    const auto limit = build_limit_fields(traj, {ing});
    const auto approx = assemble_approx(limit, traj, regime);
    std::vector<VectorSlabField3> dt_v{
        VectorSlabField3::zero(n, n, approx.v[0].comp[0].vgrid_ptr())};
    return fluid_residual(approx, dt_v, regime, mat).norm[0];
  };

  SECTION("zero data gives zero residual") {
    const auto regime = build_regime(Rational(1), Rational(7, 2), 0.125);
    auto vg = make_gauss_lobatto(-1.0, 0.0, 8);
    const auto ing = build_forcing(VectorSlabField3::zero(n, n, vg), mat.eta);
    ReducedTrajectory traj;
    traj.times = {0.0};
    traj.regime = regime;
    traj.materials = mat;
    traj.coeffs = rescaled_coefficients(regime, mat);
    traj.w3.push_back(PeriodicField2D::zero(n, n));
    traj.dt_w3.push_back(PeriodicField2D::zero(n, n));
    traj.forcing.push_back(ing.F);
    const auto limit = build_limit_fields(traj, {ing});
    const auto approx = assemble_approx(limit, traj, regime);
    std::vector<VectorSlabField3> dt_v{
        VectorSlabField3::zero(n, n, approx.v[0].comp[0].vgrid_ptr())};
    CHECK(fluid_residual(approx, dt_v, regime, mat).norm[0] == 0.0);
  }

  SECTION("steady single-mode data scale like eps^{3/2}") {
    const double r1 = steady_residual_norm(std::pow(2.0, -4), 8);
    const double r2 = steady_residual_norm(std::pow(2.0, -5), 8);
    CHECK(r1 / r2 == Catch::Approx(std::pow(2.0, 1.5)).epsilon(0.05));
  }
}

TEST_CASE("boundary residual") {
  const int n = 16;
  const double eta = 1.0;
  const MaterialParams mat = unit_materials();
  auto vg = make_gauss_lobatto(-1.0, 0.0, 8);

  auto make_limit = [&](const ForceSpec& force) {
    const auto ing = build_forcing(force.sample(n, n, vg, 0.0), eta);
    const auto dta = translational_velocity(ing);
    std::mt19937_64 rng(5);
    const auto p = PeriodicField2D::from_function(
        n, n, [](double y1, double y2) { return std::sin(2 * M_PI * (y1 + y2)); });
    return limit_velocity(p, ing, dta, eta);
  };

  SECTION("leading shear components are mean free by construction") {
    ForceSpec force = ForceSpec::parse_kind("single_mode");
    const auto [v1, v2] = make_limit(force);
    const auto rb = boundary_residual(v1, v2, 0.125, eta);
    // the eps^1 part is eta eps d3 v_alpha(0) whose omega-mean vanishes via
    // the translational-velocity choice; the eps^3 correction is mean free
    // as a derivative field
    CHECK(std::fabs(rb.r1.mean()) <= 1e-12 * (1.0 + rb.r1.linf_norm()));
    CHECK(std::fabs(rb.r2.mean()) <= 1e-12 * (1.0 + rb.r2.linf_norm()));
  }

  SECTION("zero limit gives zero residual") {
    const auto ing = build_forcing(VectorSlabField3::zero(n, n, vg), eta);
    const auto [v1, v2] = limit_velocity(PeriodicField2D::zero(n, n), ing, {0.0, 0.0}, eta);
    const auto rb = boundary_residual(v1, v2, 0.125, eta);
    CHECK(rb.r1.linf_norm() == 0.0);
    CHECK(rb.r2.linf_norm() == 0.0);
    CHECK(rb.r3.linf_norm() == 0.0);
  }

  SECTION("leading components scale linearly in eps") {
    ForceSpec force = ForceSpec::parse_kind("single_mode");
    const auto [v1, v2] = make_limit(force);
    const double e1 = std::pow(2.0, -8), e2 = std::pow(2.0, -9);
    const auto ra = boundary_residual(v1, v2, e1, eta);
    const auto rb = boundary_residual(v1, v2, e2, eta);
    CHECK(ra.r1.l2_norm() / rb.r1.l2_norm() == Catch::Approx(2.0).epsilon(1e-3));
    CHECK(ra.r2.l2_norm() / rb.r2.l2_norm() == Catch::Approx(2.0).epsilon(1e-3));
    // the third component carries the eps^2 prefactor exactly
    CHECK(ra.r3.l2_norm() / rb.r3.l2_norm() == Catch::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("structure residual action") {
  const int n = 16;
  const MaterialParams mat = unit_materials();
  const auto regime = build_regime(Rational(1), Rational(7, 2), 0.25);
  const double h = regime.h;
  auto vg = make_gauss_lobatto(-1.0, 0.0, 8);

  // Pipeline with a single-mode force so that w3, a are both active.
  const std::vector<double> times{0.0, 1e-4, 2e-4};
  ForceSpec force = ForceSpec::parse_kind("single_mode");
  std::vector<ForcingIngredients> ings;
  std::vector<PeriodicField2D> F;
  for (double t : times) {
    ings.push_back(build_forcing(force.sample(n, n, vg, t), mat.eta));
    F.push_back(ings.back().F);
  }
  const auto traj = solve_w3(F, regime, mat, times);
  const auto limit = build_limit_fields(traj, ings);
  const auto approx = assemble_approx(limit, traj, regime);
  const auto sg = approx.u.front().comp[0].vgrid_ptr();

  SECTION("zero test field gives zero action") {
    std::vector<VectorSlabField3> psi(times.size(), VectorSlabField3::zero(n, n, sg));
    CHECK(structure_residual_action(approx, psi, psi, regime, mat) == 0.0);
  }

  SECTION("even-even-odd test fields cancel the div coupling by parity") {
    // psi = (even, even, odd) in (x3 - h/2), constant in time
    std::mt19937_64 rng(21);
    const auto g1 = PeriodicField2D::random_bandlimited(n, n, 2, rng);
    const auto g3 = PeriodicField2D::random_bandlimited(n, n, 2, rng);
    VectorSlabField3 psi = VectorSlabField3::zero(n, n, sg);
    {
      std::vector<PeriodicField2D> l1, l2, l3;
      for (int j = 0; j < sg->node_count(); ++j) {
        const double z = sg->node(j) - h / 2;
        PeriodicField2D a = PeriodicField2D::zero(n, n);
        a.axpy(1.0 + z * z, g1);
        l1.push_back(a);
        l2.push_back(PeriodicField2D::constant(n, n, 0.4 * (1.0 + z * z)));
        PeriodicField2D c = PeriodicField2D::zero(n, n);
        c.axpy(z + z * z * z, g3);
        l3.push_back(c);
      }
      psi.comp[0] = SlabField3D::from_layers(sg, l1);
      psi.comp[1] = SlabField3D::from_layers(sg, l2);
      psi.comp[2] = SlabField3D::from_layers(sg, l3);
    }
    std::vector<VectorSlabField3> psis(times.size(), psi);
    std::vector<VectorSlabField3> dt_psis(times.size(), VectorSlabField3::zero(n, n, sg));
    const double action = structure_residual_action(approx, psis, dt_psis, regime, mat);
    // with dt psi = 0 the inertial part dies too, so parity kills everything
    const double stiff = regime.stiffness_factor();
    const double scale = regime.time_scale() * stiff *
                         discrete_divergence(approx.u.back()).l2_norm() *
                         (psi.comp[0].l2_norm() + psi.comp[2].l2_norm());
    CHECK(std::fabs(action) <= 1e-10 * (1.0 + scale));
  }

  SECTION("pure translation matches the hand formula") {
    // constant horizontal force: F = 0, w3 = 0, translations only
    ForceSpec cforce = ForceSpec::parse_kind("constant_horizontal");
    cforce.constant = {1.0, 0.0};
    std::vector<ForcingIngredients> cings;
    std::vector<PeriodicField2D> cF;
    for (double t : times) {
      cings.push_back(build_forcing(cforce.sample(n, n, vg, t), mat.eta));
      cF.push_back(cings.back().F);
    }
    const auto ctraj = solve_w3(cF, regime, mat, times);
    const auto climit = build_limit_fields(ctraj, cings);
    const auto capprox = assemble_approx(climit, ctraj, regime);
    REQUIRE(ctraj.w3.back().linf_norm() <= 1e-12);

    // psi with constant time slope: psi(t) = t * (1, 0, 0)
    std::vector<VectorSlabField3> psis, dt_psis;
    for (double t : times) {
      VectorSlabField3 p = VectorSlabField3::zero(n, n, capprox.u[0].comp[0].vgrid_ptr());
      std::vector<PeriodicField2D> l(p.comp[0].layer_count(),
                                     PeriodicField2D::constant(n, n, t));
      p.comp[0] = SlabField3D::from_layers(capprox.u[0].comp[0].vgrid_ptr(), l);
      psis.push_back(p);
      VectorSlabField3 d = VectorSlabField3::zero(n, n, capprox.u[0].comp[0].vgrid_ptr());
      std::vector<PeriodicField2D> dl(d.comp[0].layer_count(),
                                      PeriodicField2D::constant(n, n, 1.0));
      d.comp[0] = SlabField3D::from_layers(capprox.u[0].comp[0].vgrid_ptr(), dl);
      dt_psis.push_back(d);
    }
    const double action = structure_residual_action(capprox, psis, dt_psis, regime, mat);
    // <r_s, psi> = -rho_s^h T^{-1} h^{kappa-3-gamma} dt a_1 * int_t int_x dt psi_1
    const double stiff = regime.stiffness_factor();
    const double transl_scale = rational_pow(h, regime.kappa - Rational(3) - regime.gamma);
    const double dta1 = climit.dt_a.back()[0];
    const double expected = -mat.rho_s_hat * stiff / regime.time_scale() * transl_scale * dta1 *
                            (times.back() - times.front()) * h;  // int over Omega_h of 1 = h
    CHECK(action == Catch::Approx(expected).epsilon(1e-10));
  }
}
