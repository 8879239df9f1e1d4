#ifndef THINFSI_VERTICAL_HPP
#define THINFSI_VERTICAL_HPP

#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <vector>

namespace thinfsi {

/// One-dimensional node set on [a,b] with interpolation-based calculus:
/// quadrature weights, cumulative-integral weights (from a to every node)
/// and a differentiation matrix. All three act on nodal values and are
/// exact for polynomials up to the interpolation degree m, which is what
/// the thin-film reconstruction formulas (at most quadratic profiles
/// against kernels of degree <= 2) require.
///
/// Endpoints are always nodes, so traces are plain reads of the first or
/// last layer.
class VerticalGrid {
 public:
  static VerticalGrid gauss_lobatto(double a, double b, int m) {
    if (m < 2) throw std::invalid_argument("vertical grid needs m >= 2");
    std::vector<double> xi(m + 1);
    for (int j = 0; j <= m; ++j)
      xi[j] = -std::cos(M_PI * static_cast<double>(j) / m);  // ascending in [-1,1]
    return VerticalGrid(a, b, xi);
  }

  static VerticalGrid uniform(double a, double b, int m) {
    if (m < 2) throw std::invalid_argument("vertical grid needs m >= 2");
    std::vector<double> xi(m + 1);
    for (int j = 0; j <= m; ++j) xi[j] = -1.0 + 2.0 * static_cast<double>(j) / m;
    return VerticalGrid(a, b, xi);
  }

  int order() const { return static_cast<int>(nodes_.size()) - 1; }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  double lower() const { return a_; }
  double upper() const { return b_; }
  const std::vector<double>& nodes() const { return nodes_; }
  double node(int j) const { return nodes_[j]; }

  /// Weights q with sum_j q_j f(x_j) = int_a^b interpolant(f).
  const std::vector<double>& quad_weights() const { return quad_; }

  /// Row i holds weights for int_a^{x_i} interpolant(f).
  const std::vector<std::vector<double>>& cumulative_weights() const { return cum_; }

  /// D[i][j]: derivative of the interpolant at node i from nodal values.
  const std::vector<std::vector<double>>& diff_matrix() const { return diff_; }

  double integrate(const std::vector<double>& nodal) const {
    double s = 0.0;
    for (int j = 0; j <= order(); ++j) s += quad_[j] * nodal[j];
    return s;
  }

  /// Same relative node layout on a different interval.
  VerticalGrid remapped(double a, double b) const {
    std::vector<double> xi(nodes_.size());
    for (size_t j = 0; j < nodes_.size(); ++j)
      xi[j] = 2.0 * (nodes_[j] - a_) / (b_ - a_) - 1.0;
    return VerticalGrid(a, b, xi);
  }

  /// True when the other grid is an affine image of this one (layer
  /// indices then correspond across the two intervals).
  bool same_layout(const VerticalGrid& o) const {
    if (o.node_count() != node_count()) return false;
    for (int j = 0; j < node_count(); ++j) {
      const double xi = 2.0 * (nodes_[j] - a_) / (b_ - a_) - 1.0;
      const double xo = 2.0 * (o.nodes_[j] - o.a_) / (o.b_ - o.a_) - 1.0;
      if (std::fabs(xi - xo) > 1e-12) return false;
    }
    return true;
  }

 private:
  VerticalGrid(double a, double b, const std::vector<double>& xi) : a_(a), b_(b) {
    if (!(b > a)) throw std::invalid_argument("vertical grid needs b > a");
    const int m = static_cast<int>(xi.size()) - 1;
    nodes_.resize(m + 1);
    for (int j = 0; j <= m; ++j) nodes_[j] = a + 0.5 * (b - a) * (xi[j] + 1.0);
    build_quadrature(xi);
    build_diff(xi);
  }

  // Moment-matching on the reference interval: solve V^T w = mu with
  // V[p][j] = xi_j^p, mu_p the exact monomial integrals. Long double keeps
  // the Vandermonde solve accurate for the modest m used here.
  static std::vector<long double> solve_moments(const std::vector<double>& xi,
                                                const std::vector<long double>& mu) {
    const int n = static_cast<int>(xi.size());
    std::vector<std::vector<long double>> A(n, std::vector<long double>(n));
    for (int p = 0; p < n; ++p)
      for (int j = 0; j < n; ++j)
        A[p][j] = std::pow(static_cast<long double>(xi[j]), p);
    std::vector<long double> rhs = mu;
    // Gaussian elimination with partial pivoting.
    std::vector<int> piv(n);
    for (int i = 0; i < n; ++i) piv[i] = i;
    for (int col = 0; col < n; ++col) {
      int best = col;
      for (int r = col + 1; r < n; ++r)
        if (std::fabs((double)A[r][col]) > std::fabs((double)A[best][col])) best = r;
      std::swap(A[col], A[best]);
      std::swap(rhs[col], rhs[best]);
      if (A[col][col] == 0.0L) throw std::runtime_error("singular vertical moment system");
      for (int r = col + 1; r < n; ++r) {
        const long double f = A[r][col] / A[col][col];
        for (int c = col; c < n; ++c) A[r][c] -= f * A[col][c];
        rhs[r] -= f * rhs[col];
      }
    }
    std::vector<long double> w(n);
    for (int r = n - 1; r >= 0; --r) {
      long double s = rhs[r];
      for (int c = r + 1; c < n; ++c) s -= A[r][c] * w[c];
      w[r] = s / A[r][r];
    }
    return w;
  }

  void build_quadrature(const std::vector<double>& xi) {
    const int n = static_cast<int>(xi.size());
    const long double scale = 0.5L * (b_ - a_);
    {
      std::vector<long double> mu(n);
      for (int p = 0; p < n; ++p) {
        // int_{-1}^{1} xi^p dxi
        mu[p] = (p % 2 == 0) ? 2.0L / (p + 1) : 0.0L;
      }
      auto w = solve_moments(xi, mu);
      quad_.resize(n);
      for (int j = 0; j < n; ++j) quad_[j] = static_cast<double>(w[j] * scale);
    }
    cum_.assign(n, std::vector<double>(n, 0.0));
    for (int i = 1; i < n; ++i) {
      std::vector<long double> mu(n);
      for (int p = 0; p < n; ++p) {
        const long double up = std::pow(static_cast<long double>(xi[i]), p + 1);
        const long double lo = std::pow(-1.0L, p + 1);
        mu[p] = (up - lo) / (p + 1);
      }
      auto w = solve_moments(xi, mu);
      for (int j = 0; j < n; ++j) cum_[i][j] = static_cast<double>(w[j] * scale);
    }
  }

  void build_diff(const std::vector<double>& xi) {
    const int n = static_cast<int>(xi.size());
    // Barycentric weights on the reference nodes.
    std::vector<long double> bw(n, 1.0L);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (k != j) bw[j] /= (static_cast<long double>(xi[j]) - xi[k]);
    diff_.assign(n, std::vector<double>(n, 0.0));
    const long double scale = 2.0L / (b_ - a_);
    for (int i = 0; i < n; ++i) {
      long double rowsum = 0.0L;
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const long double d = (bw[j] / bw[i]) / (static_cast<long double>(xi[i]) - xi[j]);
        diff_[i][j] = static_cast<double>(d * scale);
        rowsum += d;
      }
      diff_[i][i] = static_cast<double>(-rowsum * scale);  // rows of D kill constants
    }
  }

  double a_, b_;
  std::vector<double> nodes_;
  std::vector<double> quad_;
  std::vector<std::vector<double>> cum_;
  std::vector<std::vector<double>> diff_;
};

using VerticalGridPtr = std::shared_ptr<const VerticalGrid>;

inline VerticalGridPtr make_gauss_lobatto(double a, double b, int m) {
  return std::make_shared<const VerticalGrid>(VerticalGrid::gauss_lobatto(a, b, m));
}

inline VerticalGridPtr make_uniform(double a, double b, int m) {
  return std::make_shared<const VerticalGrid>(VerticalGrid::uniform(a, b, m));
}

}  // namespace thinfsi

#endif
