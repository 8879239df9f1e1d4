#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "thinfsi/analysis.hpp"
#include "thinfsi/forces.hpp"
#include "thinfsi/harness/study.hpp"
#include "thinfsi/reduced.hpp"

using namespace thinfsi;

namespace {
VectorSlabField3 linear_shear(int n, const VerticalGridPtr& vg, double eps) {
  // v = (x3 + eps) e1
  VectorSlabField3 v = VectorSlabField3::zero(n, n, vg);
  std::vector<PeriodicField2D> layers;
  for (int j = 0; j < vg->node_count(); ++j)
    layers.push_back(PeriodicField2D::constant(n, n, vg->node(j) + eps));
  v.comp[0] = SlabField3D::from_layers(vg, std::move(layers));
  return v;
}
}  // namespace

TEST_CASE("thin-domain Poincare inequality with the proof constant") {
  const int n = 16;
  const double eps = 0.125;
  auto vg = make_gauss_lobatto(-eps, 0.0, 8);

  SECTION("linear shear evaluates both sides in closed form") {
    const auto v = linear_shear(n, vg, eps);
    const auto rep = poincare_check(v, eps);
    CHECK(rep.lhs == Catch::Approx(std::sqrt(eps * eps * eps / 3.0)).epsilon(1e-12));
    CHECK(rep.rhs == Catch::Approx(std::sqrt(1.5) * eps * std::sqrt(eps)).epsilon(1e-12));
    CHECK(rep.pass);
  }

  SECTION("zero field passes trivially") {
    const auto rep = poincare_check(VectorSlabField3::zero(n, n, vg), eps);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.pass);
  }

  SECTION("random admissible ensemble never violates") {
    std::mt19937_64 rng(19);
    for (int i = 0; i < 30; ++i) {
      const auto v = random_admissible_field(n, vg, rng);
      CHECK(poincare_check(v, eps).pass);
    }
  }

  SECTION("nonzero bottom trace is rejected, not silently passed") {
    VectorSlabField3 v = VectorSlabField3::zero(n, n, vg);
    std::vector<PeriodicField2D> layers(vg->node_count(), PeriodicField2D::constant(n, n, 1.0));
    v.comp[0] = SlabField3D::from_layers(vg, std::move(layers));
    CHECK_THROWS_AS(poincare_check(v, eps), std::invalid_argument);
  }
}

TEST_CASE("interface trace inequality") {
  const int n = 16;
  const double eps = 0.0625;
  auto vg = make_gauss_lobatto(-eps, 0.0, 8);

  SECTION("linear shear sits on the equality boundary") {
    const auto v = linear_shear(n, vg, eps);
    const auto rep = trace_check(v, eps);
    CHECK(rep.lhs == Catch::Approx(eps).epsilon(1e-12));
    CHECK(rep.rhs == Catch::Approx(eps).epsilon(1e-12));
    CHECK(rep.pass);  // equality passes through the 1e-9 slack
  }

  SECTION("zero and random fields pass") {
    CHECK(trace_check(VectorSlabField3::zero(n, n, vg), eps).pass);
    std::mt19937_64 rng(23);
    for (int i = 0; i < 30; ++i)
      CHECK(trace_check(random_admissible_field(n, vg, rng), eps).pass);
  }
}

TEST_CASE("thin-domain Korn ratio") {
  const int n = 16;
  const double eps = 0.125;
  auto vg = make_gauss_lobatto(-eps, 0.0, 8);

  SECTION("gradient fields give a finite recorded ratio") {
    // v = grad phi with phi = sin(2 pi y1)(x3+eps)^2 (admissible: v3|bottom=0
    // fails... use phi with (x3+eps)^2 so that d3 phi vanishes at the bottom)
    std::vector<PeriodicField2D> l1, l3;
    for (int j = 0; j < vg->node_count(); ++j) {
      const double z = vg->node(j) + eps;
      l1.push_back(PeriodicField2D::from_function(n, n, [&](double y1, double) {
        return 2 * M_PI * std::cos(2 * M_PI * y1) * z * z;
      }));
      l3.push_back(PeriodicField2D::from_function(n, n, [&](double y1, double) {
        return std::sin(2 * M_PI * y1) * 2.0 * z;
      }));
    }
    VectorSlabField3 v = VectorSlabField3::zero(n, n, vg);
    v.comp[0] = SlabField3D::from_layers(vg, std::move(l1));
    v.comp[2] = SlabField3D::from_layers(vg, std::move(l3));
    const auto rep = korn_check(v, eps, kKornCalibratedBound);
    CHECK(rep.lhs > 0.0);
    CHECK(std::isfinite(rep.ratio));
    CHECK(rep.pass);
  }

  SECTION("zero field: ratio defined as zero") {
    const auto rep = korn_check(VectorSlabField3::zero(n, n, vg), eps, kKornCalibratedBound);
    CHECK(rep.ratio == 0.0);
    CHECK(rep.pass);
  }

  SECTION("pure shear has no vertical-component variation") {
    const auto rep = korn_check(linear_shear(n, vg, eps), eps, kKornCalibratedBound);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.pass);
  }
}

TEST_CASE("Griso decomposition") {
  const int n = 16;
  const double h = 0.25;
  auto vg = make_gauss_lobatto(0.0, h, 8);
  std::mt19937_64 rng(29);

  SECTION("pure mean field") {
    VectorSlabField3 u = VectorSlabField3::zero(n, n, vg);
    const auto g = PeriodicField2D::random_bandlimited(n, n, 3, rng);
    std::vector<PeriodicField2D> layers(vg->node_count(), g);
    u.comp[0] = SlabField3D::from_layers(vg, std::move(layers));
    const auto parts = griso_decompose(u, h);
    CHECK((parts.w[0] - g).linf_norm() <= 1e-13 * (1.0 + g.linf_norm()));
    CHECK(parts.r[0].linf_norm() <= 1e-13);
    CHECK(parts.r[1].linf_norm() <= 1e-13);
    CHECK(parts.warping.l2_norm() <= 1e-13);
  }

  SECTION("linear profile is reproduced exactly by the projection") {
    const auto g = PeriodicField2D::random_bandlimited(n, n, 3, rng);
    VectorSlabField3 u = VectorSlabField3::zero(n, n, vg);
    std::vector<PeriodicField2D> layers;
    for (int j = 0; j < vg->node_count(); ++j) {
      PeriodicField2D l = PeriodicField2D::zero(n, n);
      l.axpy(vg->node(j) - h / 2, g);
      layers.push_back(std::move(l));
    }
    u.comp[0] = SlabField3D::from_layers(vg, std::move(layers));
    const auto parts = griso_decompose(u, h);
    CHECK((parts.r[1] - g).linf_norm() <= 1e-11 * (1.0 + g.linf_norm()));
    CHECK(parts.w[0].linf_norm() <= 1e-13);
    CHECK(parts.warping.l2_norm() <= 1e-12);
  }

  SECTION("quadratic profile: mean h^2/12, zero linear part, orthogonal warping") {
    const auto g = PeriodicField2D::random_bandlimited(n, n, 3, rng);
    VectorSlabField3 u = VectorSlabField3::zero(n, n, vg);
    std::vector<PeriodicField2D> layers;
    for (int j = 0; j < vg->node_count(); ++j) {
      const double z = vg->node(j) - h / 2;
      PeriodicField2D l = PeriodicField2D::zero(n, n);
      l.axpy(z * z, g);
      layers.push_back(std::move(l));
    }
    u.comp[0] = SlabField3D::from_layers(vg, std::move(layers));
    const auto parts = griso_decompose(u, h);
    PeriodicField2D expected_mean = PeriodicField2D::zero(n, n);
    expected_mean.axpy(h * h / 12.0, g);
    CHECK((parts.w[0] - expected_mean).linf_norm() <= 1e-13 * (1.0 + g.linf_norm()));
    CHECK(parts.r[1].linf_norm() <= 1e-11 * (1.0 + g.linf_norm()));
    // warping = (z^2 - h^2/12) g
    for (int j = 0; j < vg->node_count(); ++j) {
      const double z = vg->node(j) - h / 2;
      PeriodicField2D w = parts.warping.comp[0].layer(j);
      w.axpy(-(z * z - h * h / 12.0), g);
      CHECK(w.linf_norm() <= 1e-12 * (1.0 + g.linf_norm()));
    }
  }

  SECTION("recomposition and double orthogonality on random plate fields") {
    for (int trial = 0; trial < 10; ++trial) {
      const auto u = random_plate_field(n, vg, rng);
      const auto parts = griso_decompose(u, h);
      const auto back = griso_recompose(parts);
      double scale = 0.0;
      for (int c = 0; c < 3; ++c) scale = std::max(scale, u.comp[c].linf_norm());
      for (int c = 0; c < 3; ++c) {
        SlabField3D diff = back.comp[c];
        diff -= u.comp[c];
        REQUIRE(diff.linf_norm() <= 1e-12 * (1.0 + scale));
      }
      // zero mean for every component, zero first moment where a linear part
      // was extracted
      for (int c = 0; c < 3; ++c) {
        const auto mean = vertical_integral(parts.warping.comp[c]);
        REQUIRE(mean.linf_norm() <= 1e-12 * (1.0 + scale));
      }
      for (int c = 0; c < 2; ++c) {
        const auto mom = vertical_integral(parts.warping.comp[c],
                                           [&](double z) { return z - h / 2; });
        REQUIRE(mom.linf_norm() <= 1e-12 * (1.0 + scale) * h);
      }
      REQUIRE(parts.r[2].linf_norm() == 0.0);
    }
  }

  SECTION("degenerate thickness rejected") {
    const auto u = random_plate_field(n, vg, rng);
    CHECK_THROWS_AS(griso_decompose(u, -1.0), std::invalid_argument);
  }
}

TEST_CASE("Griso estimate ratio") {
  const int n = 16;
  std::mt19937_64 rng(31);

  SECTION("elementary displacement only: ratio 1") {
    const double h = 0.25;
    auto vg = make_gauss_lobatto(0.0, h, 8);
    const auto g = PeriodicField2D::random_bandlimited(n, n, 2, rng);
    VectorSlabField3 u = VectorSlabField3::zero(n, n, vg);
    std::vector<PeriodicField2D> layers;
    for (int j = 0; j < vg->node_count(); ++j) {
      PeriodicField2D l = PeriodicField2D::zero(n, n);
      l.axpy(vg->node(j) - h / 2, g);
      layers.push_back(std::move(l));
    }
    u.comp[0] = SlabField3D::from_layers(vg, std::move(layers));
    const auto ratio = griso_estimate_ratio(u, h);
    REQUIRE(ratio.has_value());
    CHECK(*ratio == Catch::Approx(1.0).epsilon(1e-9));
  }

  SECTION("rigid translation is reported not-applicable") {
    const double h = 0.25;
    auto vg = make_gauss_lobatto(0.0, h, 8);
    VectorSlabField3 u = VectorSlabField3::zero(n, n, vg);
    std::vector<PeriodicField2D> layers(vg->node_count(), PeriodicField2D::constant(n, n, 2.0));
    u.comp[0] = SlabField3D::from_layers(vg, std::move(layers));
    CHECK_FALSE(griso_estimate_ratio(u, h).has_value());
  }

  SECTION("ensemble maxima stay bounded when h halves") {
    double max_coarse = 0.0, max_fine = 0.0;
    for (const double h : {0.25, 0.125}) {
      auto vg = make_gauss_lobatto(0.0, h, 8);
      std::mt19937_64 ensemble_rng(47);
      double maxr = 0.0;
      for (int i = 0; i < 50; ++i) {
        const auto u = random_plate_field(n, vg, ensemble_rng);
        const auto ratio = griso_estimate_ratio(u, h);
        if (ratio) maxr = std::max(maxr, *ratio);
      }
      (h == 0.25 ? max_coarse : max_fine) = maxr;
    }
    CHECK(max_coarse > 0.0);
    CHECK(std::isfinite(max_fine));
    CHECK(max_fine < 2.0 * max_coarse);
  }
}

TEST_CASE("energy functional addends") {
  const auto regime = build_regime(Rational(1), Rational(7, 2), 0.25);
  MaterialParams mat;
  mat.eta = 2.0;
  mat.rho_f = 3.0;
  mat.mu_hat = 1.5;
  mat.lambda_hat = 0.5;
  mat.rho_s_hat = 2.5;

  SECTION("zero states produce zero addends") {
    std::vector<EnergySample> s(3);
    for (int i = 0; i < 3; ++i) s[i].t = i * 0.1;
    const auto e = energy_functional(s, regime, mat);
    for (const auto& b : e) {
      CHECK(b.kinetic_f == 0.0);
      CHECK(b.dissipation == 0.0);
      CHECK(b.kinetic_s == 0.0);
      CHECK(b.elastic == 0.0);
      CHECK(b.ratio == 0.0);
    }
  }

  SECTION("manufactured quadratic forms map through the scaling factors") {
    std::vector<EnergySample> s(2);
    s[0].t = 0.0;
    s[1].t = 0.5;
    s[1].v_sq = 2.0;
    s[0].grad_v_sq = 1.0;
    s[1].grad_v_sq = 3.0;
    s[1].udot_sq = 4.0;
    s[1].sym_u_sq = 5.0;
    s[1].div_u_sq = 6.0;
    const auto e = energy_functional(s, regime, mat);
    const double T = regime.time_scale();
    const double stiff = regime.stiffness_factor();
    CHECK(e[1].kinetic_f == Catch::Approx(0.5 * mat.rho_f * 2.0));
    CHECK(e[1].dissipation ==
          Catch::Approx(0.5 * mat.eta * T * 0.5 * 0.5 * (1.0 + 3.0)));  // trapezoid then /2
    CHECK(e[1].kinetic_s == Catch::Approx(0.5 * mat.rho_s_hat * stiff / (T * T) * 4.0));
    CHECK(e[1].elastic ==
          Catch::Approx(mat.mu_hat * stiff * 5.0 + 0.5 * mat.lambda_hat * stiff * 6.0));
    const double lhs = e[1].kinetic_f + e[1].dissipation + e[1].kinetic_s + e[1].elastic;
    CHECK(e[1].lhs == Catch::Approx(lhs));
    CHECK(e[1].ratio == Catch::Approx(lhs / (T * 0.5 * std::pow(regime.eps(), 3))));
  }

  SECTION("dissipation is nondecreasing along a sample path") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> dist(0.0, 2.0);
    std::vector<EnergySample> s(20);
    for (int i = 0; i < 20; ++i) {
      s[i].t = 0.1 * i;
      s[i].grad_v_sq = dist(rng);
    }
    const auto e = energy_functional(s, regime, mat);
    for (size_t i = 1; i < e.size(); ++i) {
      CHECK(e[i].dissipation >= e[i - 1].dissipation);
      CHECK(e[i].kinetic_f >= 0.0);
      CHECK(e[i].elastic >= 0.0);
    }
  }
}

TEST_CASE("Theorem-level error norms") {
  const int n = 16;
  MaterialParams mat;
  const auto regime = build_regime(Rational(1), Rational(7, 2), 0.25);
  auto ref_grid = make_uniform(-1.0, 0.0, 6);
  auto structure_grid = make_uniform(0.0, regime.h, 6);
  ForceSpec force = ForceSpec::parse_kind("single_mode");
  const std::vector<double> times{0.0, 1e-4, 2e-4, 3e-4};
  const auto pipe =
      run_reduced_pipeline(regime, mat, force, n, ref_grid, structure_grid, times);

  FsiFieldSeries self;
  self.times = times;
  for (size_t i = 0; i < times.size(); ++i) {
    self.v.push_back(pipe.approx.v[i]);
    self.u.push_back(pipe.approx.u[i]);
    self.p.push_back(SlabField3D::from_layers(
        pipe.approx.v[i].comp[0].vgrid_ptr(),
        std::vector<PeriodicField2D>(pipe.approx.v[i].comp[0].layer_count(),
                                     pipe.approx.p[i])));
  }

  SECTION("self-comparison vanishes") {
    const auto norms = error_norms(self, pipe.approx, regime);
    CHECK(norms.velocity == 0.0);
    CHECK(norms.pressure == 0.0);
    CHECK(norms.disp_horiz == 0.0);
    CHECK(norms.disp_vert == 0.0);
  }

  SECTION("a known perturbation shows up with its exact norm") {
    const double delta = 1e-3;
    const auto mode = PeriodicField2D::from_function(
        n, n, [](double y1, double) { return std::sin(2 * M_PI * y1); });
    FsiFieldSeries pert = self;
    for (auto& v : pert.v) {
      std::vector<PeriodicField2D> layers;
      for (int j = 0; j < v.comp[0].layer_count(); ++j) {
        PeriodicField2D l = v.comp[0].layer(j);
        l.axpy(delta, mode);
        layers.push_back(std::move(l));
      }
      v.comp[0] = SlabField3D::from_layers(v.comp[0].vgrid_ptr(), std::move(layers));
    }
    const auto norms = error_norms(pert, pipe.approx, regime);
    // |delta * mode| over Omega_eps = delta / sqrt(2) * sqrt(eps), then L2 in time
    const double space = delta / std::sqrt(2.0) * std::sqrt(regime.eps());
    const double expected = space * std::sqrt(times.back());
    CHECK(norms.velocity == Catch::Approx(expected).epsilon(1e-10));
    CHECK(norms.pressure == 0.0);
  }

  SECTION("time-grid mismatch is rejected") {
    FsiFieldSeries bad = self;
    bad.times.back() += 1e-6;
    CHECK_THROWS_AS(error_norms(bad, pipe.approx, regime), std::invalid_argument);
  }
}
