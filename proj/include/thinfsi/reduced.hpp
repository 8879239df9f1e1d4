#ifndef THINFSI_REDUCED_HPP
#define THINFSI_REDUCED_HPP

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "thinfsi/fields.hpp"
#include "thinfsi/forces.hpp"
#include "thinfsi/params.hpp"

namespace thinfsi {

/// Forcing data derived from the fluid volume force: the horizontal kernel
/// fields F_alpha on the reference slab, the depth-integrated right-hand
/// side F of the sixth-order equation, and the analytic vertical derivative
/// of F_alpha on the interface (used for the translational velocities; it
/// is never formed by numerical differentiation).
///
/// Sign convention: F_alpha is the solution of eta * d33 F_alpha = -f_alpha
/// with F_alpha(-1) = F_alpha(0) = 0 up to the linear interface part, so
/// that v_alpha = (1/2eta) y3 (y3+1) da p + F_alpha + (1+y3) dt a_alpha
/// solves -eta d33 v_alpha = f_alpha - da p. Equivalently
///   F_alpha(y3) = -(y3+1)/eta int_{-1}^{0} z f_alpha dz
///                 - (1/eta) int_{-1}^{y3} (y3 - z) f_alpha dz.
struct ForcingIngredients {
  SlabField3D F1, F2;
  PeriodicField2D F;                 // -int_{-1}^0 (d1 F1 + d2 F2) dy3
  PeriodicField2D d3F1_at0, d3F2_at0;
};

inline ForcingIngredients build_forcing(const VectorSlabField3& f, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
  const auto& grid = f.comp[0].vgrid();
  if (std::fabs(grid.lower() + 1.0) > 1e-14 || std::fabs(grid.upper()) > 1e-14)
    throw std::invalid_argument("volume force must live on the reference slab (-1,0)");
  ForcingIngredients out;
  const int n1 = f.comp[0].n1(), n2 = f.comp[0].n2();
  auto vg = f.comp[0].vgrid_ptr();

  auto kernel = [&](const SlabField3D& fa, SlabField3D& Fa, PeriodicField2D& d3F0) {
    // I1 = int z f dz, I0 = int f dz over the full slab.
    const PeriodicField2D I1 = vertical_integral(fa, [](double z) { return z; });
    const PeriodicField2D I0 = vertical_integral(fa);
    // Cumulative pieces: C(y3) = int_{-1}^{y3} f, D(y3) = int_{-1}^{y3} z f.
    const SlabField3D C = fa.vertical_cumulative();
    const SlabField3D D = fa.scaled_by_profile([](double z) { return z; }).vertical_cumulative();
    std::vector<PeriodicField2D> layers;
    layers.reserve(grid.node_count());
    for (int j = 0; j < grid.node_count(); ++j) {
      const double y3 = grid.node(j);
      PeriodicField2D l = PeriodicField2D::zero(n1, n2);
      l.axpy(-(y3 + 1.0) / eta, I1);
      l.axpy(-y3 / eta, C.layer(j));
      l.axpy(1.0 / eta, D.layer(j));
      layers.push_back(std::move(l));
    }
    Fa = SlabField3D::from_layers(vg, std::move(layers));
    d3F0 = PeriodicField2D::zero(n1, n2);
    d3F0.axpy(-1.0 / eta, I1);
    d3F0.axpy(-1.0 / eta, I0);
  };

  kernel(f.comp[0], out.F1, out.d3F1_at0);
  kernel(f.comp[1], out.F2, out.d3F2_at0);

  PeriodicField2D div = vertical_integral(out.F1.horizontal_derivative(1, 1) +
                                          out.F2.horizontal_derivative(2, 1));
  div *= -1.0;
  out.F = std::move(div);
  return out;
}

/// Time-sampled solution of the sixth-order evolution equation, with the
/// forcing and time derivatives attached. dtt_w3 is populated only in the
/// critical (chi_tau = 1) regime.
struct ReducedTrajectory {
  std::vector<double> times;
  std::vector<PeriodicField2D> w3;
  std::vector<PeriodicField2D> dt_w3;
  std::vector<PeriodicField2D> dtt_w3;
  std::vector<PeriodicField2D> forcing;
  ScalingRegime regime;
  MaterialParams materials;
  ReducedCoefficients coeffs;
};

namespace detail {

/// sinh(z t)/z, stable near z = 0.
inline std::complex<double> sinhc(std::complex<double> z, double t) {
  const std::complex<double> zt = z * t;
  if (std::abs(zt) < 1e-5) {
    const std::complex<double> zt2 = zt * zt;
    return t * (1.0 + zt2 / 6.0 + zt2 * zt2 / 120.0);
  }
  return std::sinh(zt) / z;
}

/// Exact step of a w'' + w' + lam w = g on [0,dt] with constant g;
/// state (w, w') advanced in place. Handles real and complex root pairs
/// uniformly; the nearly-degenerate discriminant goes through the sinhc
/// series.
inline void oscillator_step(double a, double lam, std::complex<double> g, double dt,
                            std::complex<double>& w, std::complex<double>& wdot) {
  const std::complex<double> wp = g / lam;
  const double mu = -1.0 / (2.0 * a);
  const std::complex<double> nu =
      std::sqrt(std::complex<double>(1.0 - 4.0 * a * lam, 0.0)) / (2.0 * a);
  const std::complex<double> d0 = w - wp;
  const std::complex<double> b = wdot - mu * d0;
  const double E = std::exp(mu * dt);
  const std::complex<double> C = std::cosh(nu * dt);
  const std::complex<double> S = sinhc(nu, dt);
  const std::complex<double> bracket = d0 * C + b * S;
  w = wp + E * bracket;
  wdot = mu * E * bracket + E * (d0 * (nu * nu) * S + b * C);
}

}  // namespace detail

/// Solves dt w + C_inertia |k|^2 dtt w + C_plate |k|^6 w = F_k per Fourier
/// mode with trivial initial data. The forcing is treated as piecewise
/// constant on steps (value at the left endpoint), for which the updates
/// are exact: the chi=0 path uses the scalar exponential integrator, the
/// chi=1 path the closed-form damped-oscillator solution. The k = 0 mode
/// integrates dt w = F_0 directly; no zero-mean projection is applied.
/// Attached time derivatives are right limits taken from the mode ODE
/// itself, never finite differences.
inline ReducedTrajectory solve_w3(const std::vector<PeriodicField2D>& F,
                                  const ScalingRegime& regime, const MaterialParams& materials,
                                  const std::vector<double>& times) {
  if (!regime.reduced_model_valid)
    throw std::invalid_argument("reduced model requires tau <= -1");
  if (times.size() < 2) throw std::invalid_argument("need at least two time samples");
  if (F.size() != times.size())
    throw std::invalid_argument("forcing must be sampled at every time");
  for (size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw std::invalid_argument("time grid must be strictly increasing");

  const ReducedCoefficients coeffs = rescaled_coefficients(regime, materials);
  if (!(coeffs.c_plate > 0.0)) throw std::invalid_argument("c_plate must be > 0");
  const bool critical = regime.chi_tau == 1;

  const int n1 = F[0].n1(), n2 = F[0].n2();
  const size_t modes = static_cast<size_t>(n1) * n2;

  std::vector<double> lam(modes), ak(modes);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      const double k1 = detail::signed_freq(i, n1);
      const double k2 = detail::signed_freq(j, n2);
      const double ksq = 4.0 * M_PI * M_PI * (k1 * k1 + k2 * k2);
      lam[static_cast<size_t>(i) * n2 + j] = coeffs.c_plate * ksq * ksq * ksq;
      ak[static_cast<size_t>(i) * n2 + j] = coeffs.c_inertia * ksq;
    }

  std::vector<std::complex<double>> w(modes, 0.0), wdot(modes, 0.0);

  ReducedTrajectory traj;
  traj.times = times;
  traj.regime = regime;
  traj.materials = materials;
  traj.coeffs = coeffs;
  traj.forcing = F;

  auto snapshot = [&](size_t step) {
    const auto& Fhat = F[step].spectrum();
    std::vector<std::complex<double>> dt(modes), dtt(modes);
    for (size_t m = 0; m < modes; ++m) {
      if (lam[m] == 0.0) {
        dt[m] = Fhat[m];
        if (critical) {
          // The mean mode carries no inertia term; dtt is the forcing slope,
          // zero for piecewise-constant forcing.
          const size_t nxt = std::min(step + 1, F.size() - 1);
          const double dtm = traj.times[nxt] - traj.times[step];
          dtt[m] = (dtm > 0.0) ? (F[nxt].spectrum()[m] - Fhat[m]) / dtm : 0.0;
        }
      } else if (!critical) {
        dt[m] = Fhat[m] - lam[m] * w[m];
      } else {
        dt[m] = wdot[m];
        dtt[m] = (Fhat[m] - wdot[m] - lam[m] * w[m]) / ak[m];
      }
    }
    traj.w3.push_back(PeriodicField2D::from_spectrum(n1, n2, w));
    traj.dt_w3.push_back(PeriodicField2D::from_spectrum(n1, n2, std::move(dt)));
    if (critical) traj.dtt_w3.push_back(PeriodicField2D::from_spectrum(n1, n2, std::move(dtt)));
  };

  snapshot(0);
  for (size_t step = 0; step + 1 < times.size(); ++step) {
    const double dt = times[step + 1] - times[step];
    const auto& Fhat = F[step].spectrum();
    for (size_t m = 0; m < modes; ++m) {
      if (lam[m] == 0.0) {
        w[m] += dt * Fhat[m];
      } else if (!critical) {
        const double decay = std::exp(-lam[m] * dt);
        w[m] = decay * w[m] - std::expm1(-lam[m] * dt) / lam[m] * Fhat[m];
      } else {
        detail::oscillator_step(ak[m], lam[m], Fhat[m], dt, w[m], wdot[m]);
      }
    }
    snapshot(step + 1);
  }
  return traj;
}

/// L2(omega) norm of dt w3 - (1/12eta) Lap' p - F at each time. For
/// trajectories produced by solve_w3 with p from the limit-pressure
/// relation this vanishes to roundoff; it is the consistency check tying
/// the Reynolds equation to the sixth-order form.
inline std::vector<double> reynolds_residual(const ReducedTrajectory& traj,
                                             const std::vector<PeriodicField2D>& pressure) {
  if (pressure.size() != traj.times.size())
    throw std::invalid_argument("pressure must be sampled at trajectory times");
  std::vector<double> out;
  out.reserve(traj.times.size());
  const double inv12eta = 1.0 / (12.0 * traj.materials.eta);
  for (size_t i = 0; i < traj.times.size(); ++i) {
    PeriodicField2D r = traj.dt_w3[i];
    r.axpy(-inv12eta, pressure[i].laplacian(1));
    r -= traj.forcing[i];
    out.push_back(r.l2_norm());
  }
  return out;
}

}  // namespace thinfsi

#endif
