#ifndef THINFSI_RECONSTRUCT_HPP
#define THINFSI_RECONSTRUCT_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "thinfsi/fields.hpp"
#include "thinfsi/params.hpp"
#include "thinfsi/reduced.hpp"

namespace thinfsi {

/// Limit pressure p = chi_tau rho_s_hat dtt w3 + C_biharm (Delta')^2 w3,
/// per trajectory snapshot.
inline std::vector<PeriodicField2D> limit_pressure(const ReducedTrajectory& traj) {
  const bool critical = traj.regime.chi_tau == 1;
  if (critical && traj.dtt_w3.size() != traj.w3.size())
    throw std::invalid_argument("critical regime needs dtt_w3 snapshots");
  std::vector<PeriodicField2D> p;
  p.reserve(traj.w3.size());
  for (size_t i = 0; i < traj.w3.size(); ++i) {
    PeriodicField2D pi = traj.w3[i].laplacian(2);
    pi *= traj.coeffs.c_biharm;
    if (critical) pi.axpy(traj.materials.rho_s_hat, traj.dtt_w3[i]);
    p.push_back(std::move(pi));
  }
  return p;
}

/// Translational structure velocities dt a_alpha = -int_omega d3 F_alpha(.,0).
/// The trace derivative comes from the analytic kernel derivative carried
/// by ForcingIngredients.
inline std::array<double, 2> translational_velocity(const ForcingIngredients& forcing) {
  return {-forcing.d3F1_at0.mean(), -forcing.d3F2_at0.mean()};
}

/// Explicit limit velocity on the reference slab:
/// v_alpha = (1/2eta) y3 (y3+1) da p + F_alpha + (1+y3) dt a_alpha.
inline std::pair<SlabField3D, SlabField3D> limit_velocity(const PeriodicField2D& p,
                                                          const ForcingIngredients& forcing,
                                                          const std::array<double, 2>& dt_a,
                                                          double eta) {
  auto vg = forcing.F1.vgrid_ptr();
  const int n1 = p.n1(), n2 = p.n2();
  auto one = [&](int axis, const SlabField3D& Fa, double dta) {
    const PeriodicField2D dap = p.derivative(axis, 1);
    std::vector<PeriodicField2D> layers;
    layers.reserve(vg->node_count());
    for (int j = 0; j < vg->node_count(); ++j) {
      const double y3 = vg->node(j);
      PeriodicField2D l = PeriodicField2D::constant(n1, n2, (1.0 + y3) * dta);
      l.axpy(0.5 / eta * y3 * (y3 + 1.0), dap);
      l += Fa.layer(j);
      layers.push_back(std::move(l));
    }
    return SlabField3D::from_layers(vg, std::move(layers));
  };
  return {one(1, forcing.F1, dt_a[0]), one(2, forcing.F2, dt_a[1])};
}

/// Limit fields along a trajectory: pressure, horizontal velocities on the
/// reference slab, translational velocities and their running integrals
/// (trapezoidal in time).
struct LimitFields {
  std::vector<double> times;
  std::vector<PeriodicField2D> p;
  std::vector<SlabField3D> v1, v2;
  std::vector<std::array<double, 2>> dt_a;
  std::vector<std::array<double, 2>> a;
  VerticalGridPtr ref_grid;
};

inline LimitFields build_limit_fields(const ReducedTrajectory& traj,
                                      const std::vector<ForcingIngredients>& forcing) {
  if (forcing.size() != traj.times.size())
    throw std::invalid_argument("forcing ingredients must be sampled at trajectory times");
  LimitFields out;
  out.times = traj.times;
  out.ref_grid = forcing.front().F1.vgrid_ptr();
  out.p = limit_pressure(traj);
  std::array<double, 2> acc{0.0, 0.0};
  for (size_t i = 0; i < traj.times.size(); ++i) {
    const auto dta = translational_velocity(forcing[i]);
    if (i > 0) {
      const double dt = traj.times[i] - traj.times[i - 1];
      acc[0] += 0.5 * dt * (out.dt_a.back()[0] + dta[0]);
      acc[1] += 0.5 * dt * (out.dt_a.back()[1] + dta[1]);
    }
    out.dt_a.push_back(dta);
    out.a.push_back(acc);
    auto [v1, v2] = limit_velocity(out.p[i], forcing[i], dta, traj.materials.eta);
    out.v1.push_back(std::move(v1));
    out.v2.push_back(std::move(v2));
  }
  return out;
}

/// Approximate solution on the physical domain, in rescaled time:
/// fluid velocity/pressure on (0,1)^2 x (-eps,0), displacement on
/// (0,1)^2 x (0,h). The pressure has no vertical dependence and is stored
/// as a single horizontal field per time.
struct ApproxSolution {
  std::vector<double> times;
  double eps = 0.0;
  double h = 0.0;
  std::vector<PeriodicField2D> p;
  std::vector<VectorSlabField3> v;
  std::vector<VectorSlabField3> u;
  std::vector<VectorSlabField3> dt_u;  // analytic time derivative of u
  std::vector<std::array<double, 2>> a;
  VerticalGridPtr fluid_grid;
  VerticalGridPtr structure_grid;
};

/// Builds the approximate solution from the limit fields. The vertical
/// component is the divergence-free completion
///   v3^eps(x) = -eps^3 int_{-1}^{x3/eps} (d1 v1 + d2 v2) dxi
/// as a component of v^eps (the eps^2 prefactor included), which makes the
/// discrete divergence of v^eps vanish identically. The displacement is
///   u^h = h^{kappa-3} (h^{-gamma} a_alpha - (x3 - h/2) da w3, w3).
inline ApproxSolution assemble_approx(const LimitFields& limit, const ReducedTrajectory& traj,
                                      const ScalingRegime& regime,
                                      VerticalGridPtr structure_grid = nullptr) {
  if (limit.times != traj.times) throw std::invalid_argument("limit/trajectory time mismatch");
  ApproxSolution out;
  out.times = limit.times;
  out.eps = regime.eps();
  out.h = regime.h;
  out.a = limit.a;
  out.fluid_grid =
      std::make_shared<const VerticalGrid>(limit.ref_grid->remapped(-out.eps, 0.0));
  out.structure_grid =
      structure_grid ? std::move(structure_grid) : make_gauss_lobatto(0.0, out.h, 8);
  if (std::fabs(out.structure_grid->lower()) > 1e-14 ||
      std::fabs(out.structure_grid->upper() - out.h) > 1e-12)
    throw std::invalid_argument("structure grid must live on (0,h)");

  const int n1 = limit.p.front().n1(), n2 = limit.p.front().n2();
  const double eps = out.eps;
  const double hk3 = rational_pow(regime.h, regime.kappa - Rational(3));
  const double hg = rational_pow(regime.h, -regime.gamma);

  for (size_t i = 0; i < limit.times.size(); ++i) {
    out.p.push_back(limit.p[i]);

    // Fluid: layers transfer index-for-index across the affine map.
    VectorSlabField3 vi;
    {
      std::vector<PeriodicField2D> l1, l2, l3;
      const SlabField3D div_h =
          limit.v1[i].horizontal_derivative(1, 1) + limit.v2[i].horizontal_derivative(2, 1);
      const SlabField3D cum = div_h.vertical_cumulative();
      for (int j = 0; j < limit.ref_grid->node_count(); ++j) {
        l1.push_back(eps * eps * limit.v1[i].layer(j));
        l2.push_back(eps * eps * limit.v2[i].layer(j));
        l3.push_back(-eps * eps * eps * cum.layer(j));
      }
      vi.comp[0] = SlabField3D::from_layers(out.fluid_grid, std::move(l1));
      vi.comp[1] = SlabField3D::from_layers(out.fluid_grid, std::move(l2));
      vi.comp[2] = SlabField3D::from_layers(out.fluid_grid, std::move(l3));
    }
    out.v.push_back(std::move(vi));

    // Structure: affine-in-thickness bending profile plus translations.
    auto bending = [&](const PeriodicField2D& w, const std::array<double, 2>& transl) {
      VectorSlabField3 ui;
      const PeriodicField2D d1w = w.derivative(1, 1);
      const PeriodicField2D d2w = w.derivative(2, 1);
      std::vector<PeriodicField2D> l1, l2, l3;
      for (int j = 0; j < out.structure_grid->node_count(); ++j) {
        const double z = out.structure_grid->node(j) - 0.5 * regime.h;
        PeriodicField2D c1 = PeriodicField2D::constant(n1, n2, hk3 * hg * transl[0]);
        c1.axpy(-hk3 * z, d1w);
        PeriodicField2D c2 = PeriodicField2D::constant(n1, n2, hk3 * hg * transl[1]);
        c2.axpy(-hk3 * z, d2w);
        l1.push_back(std::move(c1));
        l2.push_back(std::move(c2));
        PeriodicField2D c3 = PeriodicField2D::zero(n1, n2);
        c3.axpy(hk3, w);
        l3.push_back(std::move(c3));
      }
      ui.comp[0] = SlabField3D::from_layers(out.structure_grid, std::move(l1));
      ui.comp[1] = SlabField3D::from_layers(out.structure_grid, std::move(l2));
      ui.comp[2] = SlabField3D::from_layers(out.structure_grid, std::move(l3));
      return ui;
    };
    out.u.push_back(bending(traj.w3[i], limit.a[i]));
    out.dt_u.push_back(bending(traj.dt_w3[i], limit.dt_a[i]));
  }
  return out;
}

/// Discrete divergence on a physical slab: spectral horizontal derivatives
/// plus the vertical differentiation matrix.
inline SlabField3D discrete_divergence(const VectorSlabField3& v) {
  SlabField3D d = v.comp[0].horizontal_derivative(1, 1);
  d += v.comp[1].horizontal_derivative(2, 1);
  d += v.comp[2].vertical_derivative();
  return d;
}

/// Fluid residual of the modified Stokes system,
///   r_f = rho_f T^{-1} dt v^eps - eta Lap' v^eps - eta d33 v3^eps e3,
/// with the caller supplying dt v^eps (analytic for steady or chi=0
/// constant-forcing data, central differences otherwise).
struct FluidResidual {
  std::vector<VectorSlabField3> r;
  std::vector<double> norm;  // L2(Omega_eps) per time
};

inline FluidResidual fluid_residual(const ApproxSolution& approx,
                                    const std::vector<VectorSlabField3>& dt_v,
                                    const ScalingRegime& regime, const MaterialParams& mat) {
  if (dt_v.size() != approx.v.size())
    throw std::invalid_argument("dt_v must be sampled at approx times");
  FluidResidual out;
  const double inv_T = 1.0 / regime.time_scale();
  for (size_t i = 0; i < approx.v.size(); ++i) {
    VectorSlabField3 r;
    for (int c = 0; c < 3; ++c) {
      SlabField3D lap = approx.v[i].comp[c].horizontal_derivative(1, 2);
      lap += approx.v[i].comp[c].horizontal_derivative(2, 2);
      SlabField3D rc = dt_v[i].comp[c];
      rc *= mat.rho_f * inv_T;
      rc.axpy(-mat.eta, lap);
      r.comp[c] = std::move(rc);
    }
    r.comp[2].axpy(-mat.eta,
                   approx.v[i].comp[2].vertical_derivative().vertical_derivative());
    out.norm.push_back(r.l2_norm());
    out.r.push_back(std::move(r));
  }
  return out;
}

/// Central time differences of a snapshot series (one-sided at the ends).
inline std::vector<VectorSlabField3> time_derivative_central(
    const std::vector<VectorSlabField3>& series, const std::vector<double>& times) {
  if (series.size() < 3) throw std::invalid_argument("need at least 3 snapshots to difference");
  std::vector<VectorSlabField3> out(series.size());
  const size_t n = series.size();
  for (size_t i = 0; i < n; ++i) {
    const size_t lo = (i == 0) ? 0 : i - 1;
    const size_t hi = (i + 1 == n) ? n - 1 : i + 1;
    const double dt = times[hi] - times[lo];
    VectorSlabField3 d = series[hi];
    d.axpy(-1.0, series[lo]);
    for (int c = 0; c < 3; ++c) d.comp[c] *= 1.0 / dt;
    out[i] = std::move(d);
  }
  return out;
}

/// Boundary residual on omega:
///   r_b = eta ( eps d3 v1 - eps^3 int(d11 v1 + d12 v2),
///               eps d3 v2 - eps^3 int(d21 v1 + d22 v2),
///               -2 eps^2 (d1 v1 + d2 v2) ),
/// traces taken at y3 = 0, integrals over the reference depth.
struct BoundaryResidual {
  PeriodicField2D r1, r2, r3;
};

inline BoundaryResidual boundary_residual(const SlabField3D& v1, const SlabField3D& v2,
                                          double eps, double eta) {
  BoundaryResidual out;
  const PeriodicField2D d3v1 = v1.vertical_derivative().trace_top();
  const PeriodicField2D d3v2 = v2.vertical_derivative().trace_top();
  const PeriodicField2D i1 = vertical_integral(v1.horizontal_derivative(1, 2) +
                                               v2.horizontal_derivative(2, 1).horizontal_derivative(1, 1));
  const PeriodicField2D i2 = vertical_integral(v1.horizontal_derivative(1, 1).horizontal_derivative(2, 1) +
                                               v2.horizontal_derivative(2, 2));
  PeriodicField2D r1 = PeriodicField2D::zero(v1.n1(), v1.n2());
  r1.axpy(eta * eps, d3v1);
  r1.axpy(-eta * eps * eps * eps, i1);
  PeriodicField2D r2 = PeriodicField2D::zero(v1.n1(), v1.n2());
  r2.axpy(eta * eps, d3v2);
  r2.axpy(-eta * eps * eps * eps, i2);
  PeriodicField2D r3 = v1.horizontal_derivative(1, 1).trace_top();
  r3 += v2.horizontal_derivative(2, 1).trace_top();
  r3 *= -2.0 * eta * eps * eps;
  out.r1 = std::move(r1);
  out.r2 = std::move(r2);
  out.r3 = std::move(r3);
  return out;
}

inline double slab_inner(const SlabField3D& a, const SlabField3D& b) {
  a.check_same_grid(b);
  const auto& q = a.vgrid().quad_weights();
  double s = 0.0;
  for (int j = 0; j < a.layer_count(); ++j)
    s += q[j] * inner_product_omega(a.layer(j), b.layer(j));
  return s;
}

inline double slab_inner(const VectorSlabField3& a, const VectorSlabField3& b) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += slab_inner(a.comp[c], b.comp[c]);
  return s;
}

/// Action of the structure residual on a test field psi(t) on Omega_h:
///   <r_s, psi> = -rho_s^h T^{-1} int_t int dt(u^h) . dt(psi)
///                + T int_t int [ (lambda^h)^2/(2 mu^h + lambda^h) div u^h (d1 psi1 + d2 psi2)
///                                + lambda^h div u^h d3 psi3 ].
/// Time integration is trapezoidal over the snapshot times.
inline double structure_residual_action(const ApproxSolution& approx,
                                        const std::vector<VectorSlabField3>& psi,
                                        const std::vector<VectorSlabField3>& dt_psi,
                                        const ScalingRegime& regime,
                                        const MaterialParams& mat) {
  if (psi.size() != approx.times.size() || dt_psi.size() != approx.times.size())
    throw std::invalid_argument("test field must be sampled at approx times");
  const double stiff = regime.stiffness_factor();
  const double mu_h = mat.mu_hat * stiff;
  const double la_h = mat.lambda_hat * stiff;
  const double rho_h = mat.rho_s_hat * stiff;
  const double T = regime.time_scale();

  std::vector<double> integrand(approx.times.size());
  for (size_t i = 0; i < approx.times.size(); ++i) {
    const SlabField3D div_u = discrete_divergence(approx.u[i]);
    const SlabField3D div_psi_h = psi[i].comp[0].horizontal_derivative(1, 1) +
                                  psi[i].comp[1].horizontal_derivative(2, 1);
    const SlabField3D d3psi3 = psi[i].comp[2].vertical_derivative();
    double val = -rho_h / T * slab_inner(approx.dt_u[i], dt_psi[i]);
    val += T * (la_h * la_h / (2.0 * mu_h + la_h)) * slab_inner(div_u, div_psi_h);
    val += T * la_h * slab_inner(div_u, d3psi3);
    integrand[i] = val;
  }
  double s = 0.0;
  for (size_t i = 1; i < integrand.size(); ++i)
    s += 0.5 * (approx.times[i] - approx.times[i - 1]) * (integrand[i] + integrand[i - 1]);
  return s;
}

}  // namespace thinfsi

#endif
