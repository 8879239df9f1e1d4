#ifndef THINFSI_ANALYSIS_HPP
#define THINFSI_ANALYSIS_HPP

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "thinfsi/fields.hpp"
#include "thinfsi/params.hpp"
#include "thinfsi/reconstruct.hpp"

namespace thinfsi {

struct InequalityReport {
  std::string check_id;
  double lhs = 0.0;
  double rhs = 0.0;
  double constant = 0.0;  // the proof constant (or calibrated bound) used
  double ratio = 0.0;     // lhs / rhs-scale, diagnostic
  bool pass = false;

  static InequalityReport make(std::string id, double lhs, double rhs, double constant) {
    InequalityReport r;
    r.check_id = std::move(id);
    r.lhs = lhs;
    r.rhs = rhs;
    r.constant = constant;
    r.ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? INFINITY : 0.0);
    r.pass = lhs <= rhs * (1.0 + 1e-9);
    return r;
  }
};

/// d_i v_j for a vector slab field; i = 0,1 horizontal (spectral),
/// i = 2 vertical (differentiation matrix, physical scaling).
inline SlabField3D partial(const SlabField3D& f, int i) {
  if (i == 0) return f.horizontal_derivative(1, 1);
  if (i == 1) return f.horizontal_derivative(2, 1);
  return f.vertical_derivative();
}

inline double grad_norm_sq(const VectorSlabField3& v) {
  double s = 0.0;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) {
      const double n = partial(v.comp[j], i).l2_norm();
      s += n * n;
    }
  return s;
}

inline double sym_grad_norm_sq(const VectorSlabField3& v) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      SlabField3D e = partial(v.comp[j], i);
      e += partial(v.comp[i], j);
      e *= 0.5;
      const double n = e.l2_norm();
      s += (i == j ? 1.0 : 2.0) * n * n;
    }
  return s;
}

inline double div_norm_sq(const VectorSlabField3& v) {
  const double n = discrete_divergence(v).l2_norm();
  return n * n;
}

namespace detail {
inline void require_zero_bottom_trace(const VectorSlabField3& v, const char* who) {
  double trace = 0.0, scale = 0.0;
  for (int c = 0; c < 3; ++c) {
    trace = std::max(trace, v.comp[c].trace_bottom().l2_norm());
    scale = std::max(scale, v.comp[c].linf_norm());
  }
  if (trace > 1e-10 * std::max(1.0, scale))
    throw std::invalid_argument(std::string(who) + ": field violates the zero bottom trace precondition");
}
}  // namespace detail

/// || v ||_{L2(Omega_eps)} <= sqrt(3/2) eps || d3 v ||, the thin-domain
/// Poincare inequality with the explicit proof constant. The field must
/// vanish on the bottom face x3 = -eps.
inline InequalityReport poincare_check(const VectorSlabField3& v, double eps) {
  detail::require_zero_bottom_trace(v, "poincare_check");
  double lhs_sq = 0.0, d3_sq = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double a = v.comp[c].l2_norm();
    const double b = v.comp[c].vertical_derivative().l2_norm();
    lhs_sq += a * a;
    d3_sq += b * b;
  }
  const double constant = std::sqrt(1.5);
  return InequalityReport::make("poincare", std::sqrt(lhs_sq),
                                constant * eps * std::sqrt(d3_sq), constant);
}

/// || v ||_{L2(omega)} <= sqrt(eps) || d3 v ||_{L2(Omega_eps)}, trace taken
/// on the interface x3 = 0; proof constant 1.
inline InequalityReport trace_check(const VectorSlabField3& v, double eps) {
  detail::require_zero_bottom_trace(v, "trace_check");
  double lhs_sq = 0.0, d3_sq = 0.0;
  for (int c = 0; c < 3; ++c) {
    const double a = v.comp[c].trace_top().l2_norm();
    const double b = v.comp[c].vertical_derivative().l2_norm();
    lhs_sq += a * a;
    d3_sq += b * b;
  }
  return InequalityReport::make("trace", std::sqrt(lhs_sq), std::sqrt(eps) * std::sqrt(d3_sq),
                                1.0);
}

/// Regression bound for korn_check: twice the maximum empirical ratio over
/// a frozen calibration ensemble (seed 12345, 64 admissible fields at
/// n = 16, m = 8, eps in {1/4, 1/16}; observed maximum 0.150944), held
/// fixed thereafter.
inline constexpr double kKornCalibratedBound = 0.301888;

/// Thin-domain Korn: eps || da v3 || <= C_test || sym grad v ||. The paper
/// proves existence of the constant; C_test is calibrated once over a
/// frozen ensemble and then held fixed as a regression bound.
inline InequalityReport korn_check(const VectorSlabField3& v, double eps, double c_test) {
  detail::require_zero_bottom_trace(v, "korn_check");
  double lhs = 0.0;
  for (int axis = 1; axis <= 2; ++axis)
    lhs = std::max(lhs, v.comp[2].horizontal_derivative(axis, 1).l2_norm());
  const double sym = std::sqrt(sym_grad_norm_sq(v));
  InequalityReport r = InequalityReport::make("korn", eps * lhs, c_test * sym, c_test);
  if (sym == 0.0) {  // rigid-like input, ratio defined as 0
    r.pass = lhs == 0.0;
    r.ratio = 0.0;
  }
  return r;
}

/// Plate displacement split u = w(x') + (x3 - h/2)(r2, -r1, 0) + warping.
/// The first-moment coefficients use the exact L2(0,h) projection onto
/// (x3 - h/2) (factor 12/h^3), so linear profiles are reproduced exactly
/// and the horizontal warping components are doubly orthogonal; the third
/// component has only its vertical mean removed.
struct GrisoParts {
  std::array<PeriodicField2D, 3> w;
  std::array<PeriodicField2D, 3> r;  // r[2] identically zero
  VectorSlabField3 warping;
  double h = 0.0;
};

inline GrisoParts griso_decompose(const VectorSlabField3& u, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("griso_decompose: h must be > 0");
  const auto& vg = u.comp[0].vgrid();
  if (std::fabs(vg.lower()) > 1e-14 || std::fabs(vg.upper() - h) > 1e-12 * std::max(1.0, h))
    throw std::invalid_argument("griso_decompose: field must live on (0,h)");
  GrisoParts parts;
  parts.h = h;
  const double mid = 0.5 * h;
  auto moment0 = [&](const SlabField3D& f) {
    PeriodicField2D m = vertical_integral(f);
    m *= 1.0 / h;
    return m;
  };
  auto moment1 = [&](const SlabField3D& f) {
    PeriodicField2D m = vertical_integral(f, [&](double z) { return z - mid; });
    m *= 12.0 / (h * h * h);
    return m;
  };
  for (int c = 0; c < 3; ++c) parts.w[c] = moment0(u.comp[c]);
  const PeriodicField2D c1 = moment1(u.comp[0]);
  const PeriodicField2D c2 = moment1(u.comp[1]);
  parts.r[0] = PeriodicField2D::zero(u.comp[0].n1(), u.comp[0].n2());
  parts.r[0].axpy(-1.0, c2);
  parts.r[1] = c1;
  parts.r[2] = PeriodicField2D::zero(u.comp[0].n1(), u.comp[0].n2());

  auto strip = [&](const SlabField3D& f, const PeriodicField2D& mean,
                   const PeriodicField2D* linear) {
    std::vector<PeriodicField2D> layers;
    for (int j = 0; j < f.layer_count(); ++j) {
      PeriodicField2D l = f.layer(j);
      l -= mean;
      if (linear) l.axpy(-(vg.node(j) - mid), *linear);
      layers.push_back(std::move(l));
    }
    return SlabField3D::from_layers(f.vgrid_ptr(), std::move(layers));
  };
  parts.warping.comp[0] = strip(u.comp[0], parts.w[0], &c1);
  parts.warping.comp[1] = strip(u.comp[1], parts.w[1], &c2);
  parts.warping.comp[2] = strip(u.comp[2], parts.w[2], nullptr);
  return parts;
}

/// Recomposition u_1 = w1 + z r2 + ~u1, u_2 = w2 - z r1 + ~u2,
/// u_3 = w3 + ~u3 with z = x3 - h/2; used by the exactness property test.
inline VectorSlabField3 griso_recompose(const GrisoParts& parts) {
  const auto& vg = parts.warping.comp[0].vgrid();
  const double mid = 0.5 * parts.h;
  VectorSlabField3 out = parts.warping;
  std::array<std::vector<PeriodicField2D>, 3> layers;
  for (int c = 0; c < 3; ++c)
    for (int j = 0; j < parts.warping.comp[c].layer_count(); ++j) {
      const double z = vg.node(j) - mid;
      PeriodicField2D l = parts.warping.comp[c].layer(j);
      l += parts.w[c];
      if (c == 0) l.axpy(z, parts.r[1]);
      if (c == 1) l.axpy(-z, parts.r[0]);
      layers[c].push_back(std::move(l));
    }
  for (int c = 0; c < 3; ++c)
    out.comp[c] = SlabField3D::from_layers(parts.warping.comp[c].vgrid_ptr(),
                                           std::move(layers[c]));
  return out;
}

/// Ratio [ ||sym grad u_E||^2 + ||grad ~u||^2 + h^{-2} ||~u||^2 ] /
/// ||sym grad u||^2 of the Griso estimate. Empty for rigid-motion-like
/// inputs (vanishing denominator).
inline std::optional<double> griso_estimate_ratio(const VectorSlabField3& u, double h) {
  const GrisoParts parts = griso_decompose(u, h);
  VectorSlabField3 elementary = u;
  elementary.axpy(-1.0, parts.warping);
  const double denom = sym_grad_norm_sq(u);
  double scale = 0.0;
  for (int c = 0; c < 3; ++c) scale = std::max(scale, u.comp[c].linf_norm());
  if (denom <= 1e-24 * std::max(1.0, scale * scale)) return std::nullopt;
  const double warp_n = parts.warping.l2_norm();
  const double num = sym_grad_norm_sq(elementary) + grad_norm_sq(parts.warping) +
                     warp_n * warp_n / (h * h);
  return num / denom;
}

/// Random smooth vector field with polynomial vertical profiles vanishing
/// on the bottom face (admissible for the thin-domain inequalities). The
/// low profile degree keeps every quadrature in the checks exact.
inline VectorSlabField3 random_admissible_field(int n, const VerticalGridPtr& vgrid,
                                                std::mt19937_64& rng, int kmax = 3) {
  const double a = vgrid->lower(), b = vgrid->upper();
  VectorSlabField3 v = VectorSlabField3::zero(n, n, vgrid);
  for (int c = 0; c < 3; ++c) {
    for (int deg = 1; deg <= 2; ++deg) {
      const PeriodicField2D g = PeriodicField2D::random_bandlimited(n, n, kmax, rng);
      std::vector<PeriodicField2D> layers;
      for (int j = 0; j < vgrid->node_count(); ++j) {
        const double s = (vgrid->node(j) - a) / (b - a);
        PeriodicField2D l = PeriodicField2D::zero(n, n);
        l.axpy(std::pow(s, deg), g);
        layers.push_back(std::move(l));
      }
      v.comp[c] += SlabField3D::from_layers(vgrid, std::move(layers));
    }
  }
  return v;
}

/// Random smooth plate displacement (periodic, no trace condition) with
/// vertical profiles up to cubic.
inline VectorSlabField3 random_plate_field(int n, const VerticalGridPtr& vgrid,
                                           std::mt19937_64& rng, int kmax = 3) {
  const double a = vgrid->lower(), b = vgrid->upper();
  VectorSlabField3 v = VectorSlabField3::zero(n, n, vgrid);
  for (int c = 0; c < 3; ++c) {
    for (int deg = 0; deg <= 3; ++deg) {
      const PeriodicField2D g = PeriodicField2D::random_bandlimited(n, n, kmax, rng);
      std::vector<PeriodicField2D> layers;
      for (int j = 0; j < vgrid->node_count(); ++j) {
        const double s = (vgrid->node(j) - a) / (b - a);
        PeriodicField2D l = PeriodicField2D::zero(n, n);
        l.axpy(std::pow(s, deg), g);
        layers.push_back(std::move(l));
      }
      v.comp[c] += SlabField3D::from_layers(vgrid, std::move(layers));
    }
  }
  return v;
}

/// Raw quadratic forms of a coupled state at a (rescaled) time step,
/// produced by the monolithic solver.
struct EnergySample {
  double t = 0.0;            // rescaled time
  double v_sq = 0.0;         // |v|^2 over Omega_eps
  double grad_v_sq = 0.0;    // |grad v|^2 over Omega_eps
  double udot_sq = 0.0;      // |dt u|^2 over Omega_h (rescaled-time derivative)
  double sym_u_sq = 0.0;     // |sym grad u|^2 over Omega_h
  double div_u_sq = 0.0;     // |div u|^2 over Omega_h
};

/// Addends of the improved energy estimate, in original time, plus the
/// ratio LHS / (t eps^3). The dissipation addend is the running trapezoidal
/// integral of the gradient form.
struct EnergyBreakdown {
  double t_rescaled = 0.0;
  double kinetic_f = 0.0;
  double dissipation = 0.0;
  double kinetic_s = 0.0;
  double elastic = 0.0;
  double lhs = 0.0;
  double ratio = 0.0;  // defined for t > 0 only; 0 at the initial sample
};

inline std::vector<EnergyBreakdown> energy_functional(const std::vector<EnergySample>& samples,
                                                      const ScalingRegime& regime,
                                                      const MaterialParams& mat) {
  std::vector<EnergyBreakdown> out;
  out.reserve(samples.size());
  const double T = regime.time_scale();
  const double stiff = regime.stiffness_factor();
  const double eps3 = std::pow(regime.eps(), 3);
  double dissip = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    if (i > 0) {
      const double dt = samples[i].t - samples[i - 1].t;
      dissip += 0.5 * mat.eta * T * dt * (samples[i].grad_v_sq + samples[i - 1].grad_v_sq);
    }
    EnergyBreakdown b;
    b.t_rescaled = samples[i].t;
    b.kinetic_f = 0.5 * mat.rho_f * samples[i].v_sq;
    b.dissipation = 0.5 * dissip;  // (eta T / 2) int |grad v|^2 in rescaled time
    b.kinetic_s = 0.5 * mat.rho_s_hat * stiff / (T * T) * samples[i].udot_sq;
    b.elastic = mat.mu_hat * stiff * samples[i].sym_u_sq +
                0.5 * mat.lambda_hat * stiff * samples[i].div_u_sq;
    b.lhs = b.kinetic_f + b.dissipation + b.kinetic_s + b.elastic;
    const double t_original = T * samples[i].t;
    b.ratio = t_original > 0.0 ? b.lhs / (t_original * eps3) : 0.0;
    out.push_back(b);
  }
  return out;
}

/// Full-solver snapshot series as field objects on the physical slabs,
/// sampled at the approximate-solution times.
struct FsiFieldSeries {
  std::vector<double> times;
  std::vector<VectorSlabField3> v;  // fluid slab (-eps, 0)
  std::vector<SlabField3D> p;       // fluid slab
  std::vector<VectorSlabField3> u;  // structure slab (0, h)
};

/// The four Theorem-level error norms plus the separately reported
/// translation gap. Velocity and pressure are L2 in time, displacements
/// L-infinity in time of L2 in space.
struct ErrorNorms {
  double velocity = 0.0;
  double pressure = 0.0;
  double disp_horiz = 0.0;
  double disp_vert = 0.0;
  double translation_gap = 0.0;  // sup_t max_alpha |a_alpha^h - h^{kappa-3-gamma} a_alpha|
};

inline ErrorNorms error_norms(const FsiFieldSeries& full, const ApproxSolution& approx,
                              const ScalingRegime& regime) {
  if (full.times != approx.times) throw std::invalid_argument("error_norms: time grid mismatch");
  const size_t n = full.times.size();
  ErrorNorms out;
  std::vector<double> vel_sq(n), prs_sq(n);
  const double transl_scale = rational_pow(regime.h, regime.kappa - Rational(3) - regime.gamma);
  for (size_t i = 0; i < n; ++i) {
    VectorSlabField3 dv = full.v[i];
    dv.axpy(-1.0, approx.v[i]);
    const double nv = dv.l2_norm();
    vel_sq[i] = nv * nv;

    // The approximate pressure has no vertical dependence; broadcast it.
    SlabField3D dp = full.p[i];
    dp -= SlabField3D::from_layers(
        full.p[i].vgrid_ptr(),
        std::vector<PeriodicField2D>(full.p[i].layer_count(), approx.p[i]));
    const double np = dp.l2_norm();
    prs_sq[i] = np * np;

    VectorSlabField3 du = full.u[i];
    du.axpy(-1.0, approx.u[i]);
    const double nh = std::sqrt(std::pow(du.comp[0].l2_norm(), 2) +
                                std::pow(du.comp[1].l2_norm(), 2));
    out.disp_horiz = std::max(out.disp_horiz, nh);
    out.disp_vert = std::max(out.disp_vert, du.comp[2].l2_norm());

    for (int alpha = 0; alpha < 2; ++alpha) {
      const PeriodicField2D mean_layer = vertical_integral(full.u[i].comp[alpha]);
      const double a_full = mean_layer.mean() / regime.h;
      const double gap = std::fabs(a_full - transl_scale * approx.a[i][alpha]);
      out.translation_gap = std::max(out.translation_gap, gap);
    }
  }
  auto l2_time = [&](const std::vector<double>& sq) {
    double s = 0.0;
    for (size_t i = 1; i < n; ++i)
      s += 0.5 * (full.times[i] - full.times[i - 1]) * (sq[i] + sq[i - 1]);
    return std::sqrt(s);
  };
  out.velocity = l2_time(vel_sq);
  out.pressure = l2_time(prs_sq);
  return out;
}

}  // namespace thinfsi

#endif
