#ifndef THINFSI_FORCES_HPP
#define THINFSI_FORCES_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "thinfsi/fields.hpp"

namespace thinfsi {

/// Closed-form fluid volume forces on the reference slab Omega_- =
/// (0,1)^2 x (-1,0). The physical force is the same profile read at
/// y3 = x3/eps, which makes the (A1)-type sqrt(eps) norm scaling on the
/// physical domain automatic.
///
/// Registry ids: "zero", "constant_horizontal", "single_mode".
struct ForceSpec {
  enum class Kind { Zero, ConstantHorizontal, SingleMode };

  Kind kind = Kind::Zero;
  double amplitude = 1.0;
  std::array<double, 2> constant{1.0, 0.0};  // constant_horizontal components
  int k1 = 1, k2 = 0;                        // single-mode wavevector
  int component = 1;                         // 1..3, forced component of single_mode
  double phase = 0.0;
  std::array<double, 3> profile{1.0, 0.0, 0.0};  // p0 + p1 y3 + p2 y3^2
  double omega = 0.0;                             // cos(omega t) modulation; 0 = steady

  static ForceSpec parse_kind(const std::string& id) {
    ForceSpec s;
    if (id == "zero")
      s.kind = Kind::Zero;
    else if (id == "constant_horizontal")
      s.kind = Kind::ConstantHorizontal;
    else if (id == "single_mode")
      s.kind = Kind::SingleMode;
    else
      throw std::invalid_argument("unknown force id '" + id + "'");
    return s;
  }

  std::string id() const {
    switch (kind) {
      case Kind::Zero: return "zero";
      case Kind::ConstantHorizontal: return "constant_horizontal";
      case Kind::SingleMode: return "single_mode";
    }
    return "?";
  }

  bool constant_in_time() const { return kind == Kind::Zero || omega == 0.0; }

  double time_factor(double t) const { return omega == 0.0 ? 1.0 : std::cos(omega * t); }

  std::array<double, 3> eval(double y1, double y2, double y3, double t) const {
    switch (kind) {
      case Kind::Zero:
        return {0.0, 0.0, 0.0};
      case Kind::ConstantHorizontal:
        return {amplitude * constant[0] * time_factor(t),
                amplitude * constant[1] * time_factor(t), 0.0};
      case Kind::SingleMode: {
        const double s = amplitude * std::sin(2.0 * M_PI * (k1 * y1 + k2 * y2) + phase) *
                         (profile[0] + profile[1] * y3 + profile[2] * y3 * y3) *
                         time_factor(t);
        std::array<double, 3> f{0.0, 0.0, 0.0};
        f[component - 1] = s;
        return f;
      }
    }
    return {0.0, 0.0, 0.0};
  }

  /// Samples the force on a discrete reference slab at time t.
  VectorSlabField3 sample(int n1, int n2, const VerticalGridPtr& vgrid, double t) const {
    VectorSlabField3 out;
    for (int c = 0; c < 3; ++c)
      out.comp[c] = SlabField3D::from_function(
          n1, n2, vgrid,
          [&](double y1, double y2, double y3) { return eval(y1, y2, y3, t)[c]; });
    return out;
  }
};

}  // namespace thinfsi

#endif
