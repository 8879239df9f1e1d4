#ifndef THINFSI_HARNESS_FIT_HPP
#define THINFSI_HARNESS_FIT_HPP

#include <cmath>
#include <optional>
#include <vector>

namespace thinfsi {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // rms of log-space fit residuals
  int excluded = 0;       // nonpositive errors dropped before fitting
};

/// Least squares on (log h, log error). Nonpositive errors are excluded;
/// fewer than three remaining pairs yields no fit.
inline std::optional<SlopeFit> fit_slope(const std::vector<std::pair<double, double>>& pairs) {
  std::vector<std::pair<double, double>> logs;
  int excluded = 0;
  for (const auto& [h, err] : pairs) {
    if (!(err > 0.0) || !(h > 0.0)) {
      ++excluded;
      continue;
    }
    logs.emplace_back(std::log(h), std::log(err));
  }
  if (logs.size() < 3) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(logs.size());
  for (const auto& [x, y] : logs) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  SlopeFit fit;
  fit.excluded = excluded;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss = 0.0;
  for (const auto& [x, y] : logs) {
    const double r = y - (fit.intercept + fit.slope * x);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace thinfsi

#endif
