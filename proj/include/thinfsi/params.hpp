#ifndef THINFSI_PARAMS_HPP
#define THINFSI_PARAMS_HPP

#include <algorithm>
#include <stdexcept>

#include "thinfsi/rationals.hpp"

namespace thinfsi {

/// Non-dimensional material numbers. mu_hat/lambda_hat/rho_s_hat are the
/// structure coefficients already stripped of their h^{-kappa} stiffness
/// factor; the fluid data carry no thickness scaling.
struct MaterialParams {
  double eta = 1.0;         // fluid viscosity
  double rho_f = 1.0;       // fluid density number
  double mu_hat = 1.0;      // rescaled first Lame number
  double lambda_hat = 0.0;  // rescaled second Lame number
  double rho_s_hat = 1.0;   // rescaled structure density

  void validate() const {
    if (!(eta > 0.0)) throw std::invalid_argument("eta must be > 0");
    if (!(rho_f > 0.0)) throw std::invalid_argument("rho_f must be > 0");
    if (!(mu_hat > 0.0)) throw std::invalid_argument("mu_hat must be > 0");
    if (!(lambda_hat >= 0.0)) throw std::invalid_argument("lambda_hat must be >= 0");
    if (!(rho_s_hat > 0.0)) throw std::invalid_argument("rho_s_hat must be > 0");
  }
};

/// The (gamma, kappa, h) scaling triple and everything derived from it.
/// gamma and kappa are exact rationals so that the critical-case indicator
/// chi_tau (an equality test on tau) is well defined.
struct ScalingRegime {
  Rational gamma{1};
  Rational kappa{3};
  double h = 0.5;
  Rational tau{0};  // kappa - 3*gamma - 3
  int chi_tau = 0;  // 1 iff tau == -1
  bool reduced_model_valid = false;  // tau <= -1

  double eps() const { return rational_pow(h, gamma); }      // fluid thickness h^gamma
  double time_scale() const { return rational_pow(h, tau); } // T = h^tau
  /// Structure coefficients on the physical domain: mu^h = mu_hat h^{-kappa} etc.
  double stiffness_factor() const { return rational_pow(h, -kappa); }
};

/// Theorem-level error-rate prediction. The eps powers are the leading
/// norm scales of the quantities themselves; the h exponents are the
/// genuine approximation rates on top of them.
struct RatePrediction {
  Rational vel_eps_pow{5, 2};
  Rational pressure_eps_pow{1, 2};
  Rational vel_h_exp{0};
  Rational pressure_h_exp{0};
  Rational disp_horiz_exp{0};
  Rational disp_vert_exp{0};
  bool theorem_applicable = false;
};

inline ScalingRegime build_regime(const Rational& gamma, const Rational& kappa, double h) {
  if (!(gamma > Rational(0))) throw std::invalid_argument("gamma must be > 0");
  if (!(kappa > Rational(0))) throw std::invalid_argument("kappa must be > 0");
  if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("h must lie in (0,1)");
  ScalingRegime r;
  r.gamma = gamma;
  r.kappa = kappa;
  r.h = h;
  r.tau = kappa - Rational(3) * gamma - Rational(3);
  r.chi_tau = (r.tau == Rational(-1)) ? 1 : 0;
  r.reduced_model_valid = (r.tau <= Rational(-1));
  return r;
}

inline RatePrediction predict_rates(const ScalingRegime& regime) {
  const Rational& g = regime.gamma;
  const Rational& k = regime.kappa;
  RatePrediction p;
  const Rational half(1, 2);
  const Rational fluid_rate = std::min(g * half, Rational(2) * g - k + Rational(2));
  p.vel_h_exp = fluid_rate;
  p.pressure_h_exp = fluid_rate;
  p.disp_horiz_exp = std::min({Rational(1), g * half, Rational(2) * g + Rational(2) - k});
  p.disp_vert_exp = std::min({half, g * half, Rational(2) * g + Rational(2) - k});
  const Rational lower = std::max(Rational(2) * g + Rational(1),
                                  Rational(7, 4) * g + Rational(3, 2));
  p.theorem_applicable = (lower <= k) && (k < Rational(2) + Rational(2) * g);
  return p;
}

/// Coefficients of the reduced sixth-order model.
struct ReducedCoefficients {
  double c_plate = 0.0;    // multiplies (Delta')^3 w3 in the evolution equation
  double c_biharm = 0.0;   // multiplies (Delta')^2 w3 in the pressure relation
  double c_inertia = 0.0;  // multiplies Delta' dtt w3; nonzero only when chi_tau = 1
};

inline ReducedCoefficients rescaled_coefficients(const ScalingRegime& regime,
                                                 const MaterialParams& m) {
  m.validate();
  ReducedCoefficients c;
  const double mu = m.mu_hat, la = m.lambda_hat;
  c.c_biharm = 8.0 * mu * (mu + la) / (3.0 * (2.0 * mu + la));
  c.c_plate = 2.0 * mu * (mu + la) / (9.0 * m.eta * (2.0 * mu + la));
  c.c_inertia = regime.chi_tau ? m.rho_s_hat / (12.0 * m.eta) : 0.0;
  return c;
}

}  // namespace thinfsi

#endif
