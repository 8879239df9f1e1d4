#ifndef THINFSI_FIELDS_HPP
#define THINFSI_FIELDS_HPP

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "thinfsi/vertical.hpp"

namespace thinfsi {

namespace detail {

/// Process-wide FFTW plan cache. Plan creation is not thread safe, so it
/// is mutex guarded; fftw_execute_dft on caller buffers is safe.
class FftPlans {
 public:
  static FftPlans& instance() {
    static FftPlans p;
    return p;
  }

  void forward(int n1, int n2, std::complex<double>* data) { run(n1, n2, data, FFTW_FORWARD); }
  void backward(int n1, int n2, std::complex<double>* data) { run(n1, n2, data, FFTW_BACKWARD); }

 private:
  struct Pair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
  };

  void run(int n1, int n2, std::complex<double>* data, int sign) {
    Pair* p;
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto& slot = plans_[{n1, n2}];
      if (slot.fwd == nullptr) {
        std::vector<std::complex<double>> tmp(static_cast<size_t>(n1) * n2);
        auto* buf = reinterpret_cast<fftw_complex*>(tmp.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        slot.fwd = fftw_plan_dft_2d(n1, n2, buf, buf, FFTW_FORWARD, flags);
        slot.bwd = fftw_plan_dft_2d(n1, n2, buf, buf, FFTW_BACKWARD, flags);
      }
      p = &slot;
    }
    auto* buf = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(sign == FFTW_FORWARD ? p->fwd : p->bwd, buf, buf);
  }

  std::mutex mutex_;
  std::map<std::pair<int, int>, Pair> plans_;
};

inline int signed_freq(int idx, int n) { return idx <= n / 2 ? idx : idx - n; }

}  // namespace detail

/// Real scalar field on the periodic unit square, held in both nodal and
/// spectral form. Nodes are y = (i/n1, j/n2); coefficients follow
/// f(y) = sum_k c_k exp(2 pi i k . y), i.e. the DFT is normalized by
/// 1/(n1 n2) so that c_0 is the field mean. Grid sizes must be even.
class PeriodicField2D {
 public:
  PeriodicField2D() = default;

  static PeriodicField2D zero(int n1, int n2) {
    check_sizes(n1, n2);
    PeriodicField2D f;
    f.n1_ = n1;
    f.n2_ = n2;
    f.nodal_.assign(static_cast<size_t>(n1) * n2, 0.0);
    f.coef_.assign(static_cast<size_t>(n1) * n2, {0.0, 0.0});
    return f;
  }

  static PeriodicField2D constant(int n1, int n2, double value) {
    PeriodicField2D f = zero(n1, n2);
    for (auto& v : f.nodal_) v = value;
    f.coef_[0] = value;
    return f;
  }

  static PeriodicField2D from_nodal(int n1, int n2, std::vector<double> values) {
    check_sizes(n1, n2);
    if (values.size() != static_cast<size_t>(n1) * n2)
      throw std::invalid_argument("nodal array size mismatch");
    PeriodicField2D f;
    f.n1_ = n1;
    f.n2_ = n2;
    f.nodal_ = std::move(values);
    f.coef_.resize(f.nodal_.size());
    for (size_t i = 0; i < f.nodal_.size(); ++i) f.coef_[i] = f.nodal_[i];
    detail::FftPlans::instance().forward(n1, n2, f.coef_.data());
    const double norm = 1.0 / (static_cast<double>(n1) * n2);
    for (auto& c : f.coef_) c *= norm;
    return f;
  }

  template <class F>
  static PeriodicField2D from_function(int n1, int n2, F&& fn) {
    std::vector<double> vals(static_cast<size_t>(n1) * n2);
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j)
        vals[static_cast<size_t>(i) * n2 + j] =
            fn(static_cast<double>(i) / n1, static_cast<double>(j) / n2);
    return from_nodal(n1, n2, std::move(vals));
  }

  /// Inverse transform; the imaginary residue of the synthesis is dropped,
  /// so callers must hand in conjugate-symmetric spectra.
  static PeriodicField2D from_spectrum(int n1, int n2,
                                       std::vector<std::complex<double>> coef) {
    check_sizes(n1, n2);
    if (coef.size() != static_cast<size_t>(n1) * n2)
      throw std::invalid_argument("spectral array size mismatch");
    PeriodicField2D f;
    f.n1_ = n1;
    f.n2_ = n2;
    f.coef_ = std::move(coef);
    std::vector<std::complex<double>> tmp = f.coef_;
    detail::FftPlans::instance().backward(n1, n2, tmp.data());
    f.nodal_.resize(tmp.size());
    for (size_t i = 0; i < tmp.size(); ++i) f.nodal_[i] = tmp[i].real();
    return f;
  }

  /// Smooth random field: white nodal noise truncated to |k_alpha| <= kmax.
  static PeriodicField2D random_bandlimited(int n1, int n2, int kmax, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    std::vector<double> vals(static_cast<size_t>(n1) * n2);
    for (auto& v : vals) v = dist(rng);
    PeriodicField2D white = from_nodal(n1, n2, std::move(vals));
    std::vector<std::complex<double>> coef = white.coef_;
    for (int i = 0; i < n1; ++i)
      for (int j = 0; j < n2; ++j) {
        const int k1 = detail::signed_freq(i, n1);
        const int k2 = detail::signed_freq(j, n2);
        if (std::abs(k1) > kmax || std::abs(k2) > kmax)
          coef[static_cast<size_t>(i) * n2 + j] = 0.0;
      }
    return from_spectrum(n1, n2, std::move(coef));
  }

  int n1() const { return n1_; }
  int n2() const { return n2_; }
  size_t size() const { return nodal_.size(); }
  const std::vector<double>& nodal() const { return nodal_; }
  const std::vector<std::complex<double>>& spectrum() const { return coef_; }
  double value(int i, int j) const { return nodal_[static_cast<size_t>(i) * n2_ + j]; }
  std::complex<double> coef(int i, int j) const {
    return coef_[static_cast<size_t>(i) * n2_ + j];
  }

  double mean() const { return coef_[0].real(); }

  /// Exact spectral d^order/dy_axis^order. The Nyquist column is zeroed for
  /// odd orders (real-field derivative convention).
  PeriodicField2D derivative(int axis, int order) const {
    if (axis != 1 && axis != 2) throw std::invalid_argument("axis must be 1 or 2");
    if (order < 1 || order > 6) throw std::invalid_argument("derivative order must be in 1..6");
    std::vector<std::complex<double>> coef = coef_;
    for (int i = 0; i < n1_; ++i)
      for (int j = 0; j < n2_; ++j) {
        const int n = (axis == 1) ? n1_ : n2_;
        const int idx = (axis == 1) ? i : j;
        const int k = detail::signed_freq(idx, n);
        const std::complex<double> base(0.0, 2.0 * M_PI * k);
        std::complex<double> sym(1.0, 0.0);
        for (int o = 0; o < order; ++o) sym *= base;
        if (order % 2 == 1 && idx == n / 2) sym = 0.0;
        coef[static_cast<size_t>(i) * n2_ + j] *= sym;
      }
    return from_spectrum(n1_, n2_, std::move(coef));
  }

  /// (Delta')^power with the symbol (-|2 pi k|^2)^power.
  PeriodicField2D laplacian(int power = 1) const {
    if (power < 1 || power > 3) throw std::invalid_argument("laplacian power must be in 1..3");
    std::vector<std::complex<double>> coef = coef_;
    for (int i = 0; i < n1_; ++i)
      for (int j = 0; j < n2_; ++j) {
        const double k1 = detail::signed_freq(i, n1_);
        const double k2 = detail::signed_freq(j, n2_);
        const double k2abs = 4.0 * M_PI * M_PI * (k1 * k1 + k2 * k2);
        double sym = 1.0;
        for (int p = 0; p < power; ++p) sym *= -k2abs;
        coef[static_cast<size_t>(i) * n2_ + j] *= sym;
      }
    return from_spectrum(n1_, n2_, std::move(coef));
  }

  double l2_norm() const {
    double s = 0.0;
    for (const auto& c : coef_) s += std::norm(c);
    return std::sqrt(s);
  }

  double linf_norm() const {
    double s = 0.0;
    for (double v : nodal_) s = std::max(s, std::fabs(v));
    return s;
  }

  PeriodicField2D& operator+=(const PeriodicField2D& o) { return axpy(1.0, o); }
  PeriodicField2D& operator-=(const PeriodicField2D& o) { return axpy(-1.0, o); }

  PeriodicField2D& axpy(double a, const PeriodicField2D& o) {
    check_same_grid(o);
    for (size_t i = 0; i < nodal_.size(); ++i) nodal_[i] += a * o.nodal_[i];
    for (size_t i = 0; i < coef_.size(); ++i) coef_[i] += a * o.coef_[i];
    return *this;
  }

  PeriodicField2D& operator*=(double a) {
    for (auto& v : nodal_) v *= a;
    for (auto& c : coef_) c *= a;
    return *this;
  }

  friend PeriodicField2D operator+(PeriodicField2D a, const PeriodicField2D& b) { return a += b; }
  friend PeriodicField2D operator-(PeriodicField2D a, const PeriodicField2D& b) { return a -= b; }
  friend PeriodicField2D operator*(double a, PeriodicField2D f) { return f *= a; }

  void check_same_grid(const PeriodicField2D& o) const {
    if (n1_ != o.n1_ || n2_ != o.n2_) throw std::invalid_argument("periodic grid mismatch");
  }

 private:
  static void check_sizes(int n1, int n2) {
    if (n1 < 4 || n2 < 4 || n1 % 2 != 0 || n2 % 2 != 0)
      throw std::invalid_argument("grid sizes must be even and >= 4");
  }

  int n1_ = 0, n2_ = 0;
  std::vector<double> nodal_;
  std::vector<std::complex<double>> coef_;
};

inline double inner_product_omega(const PeriodicField2D& a, const PeriodicField2D& b) {
  a.check_same_grid(b);
  double s = 0.0;
  const auto& x = a.nodal();
  const auto& y = b.nodal();
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s / static_cast<double>(x.size());
}

/// Scalar field on a slab (0,1)^2 x (a,b): one horizontal spectral layer
/// per vertical node. Layers are ordered with the vertical grid, bottom
/// first; both endpoints are nodes.
class SlabField3D {
 public:
  SlabField3D() = default;

  static SlabField3D zero(int n1, int n2, VerticalGridPtr vgrid) {
    SlabField3D f;
    f.vgrid_ = std::move(vgrid);
    f.layers_.assign(f.vgrid_->node_count(), PeriodicField2D::zero(n1, n2));
    return f;
  }

  static SlabField3D from_layers(VerticalGridPtr vgrid, std::vector<PeriodicField2D> layers) {
    if (static_cast<int>(layers.size()) != vgrid->node_count())
      throw std::invalid_argument("layer count does not match vertical grid");
    SlabField3D f;
    f.vgrid_ = std::move(vgrid);
    f.layers_ = std::move(layers);
    return f;
  }

  template <class F>
  static SlabField3D from_function(int n1, int n2, VerticalGridPtr vgrid, F&& fn) {
    std::vector<PeriodicField2D> layers;
    layers.reserve(vgrid->node_count());
    for (int j = 0; j < vgrid->node_count(); ++j) {
      const double z = vgrid->node(j);
      layers.push_back(PeriodicField2D::from_function(
          n1, n2, [&](double y1, double y2) { return fn(y1, y2, z); }));
    }
    return from_layers(std::move(vgrid), std::move(layers));
  }

  const VerticalGrid& vgrid() const { return *vgrid_; }
  VerticalGridPtr vgrid_ptr() const { return vgrid_; }
  int n1() const { return layers_.front().n1(); }
  int n2() const { return layers_.front().n2(); }
  int layer_count() const { return static_cast<int>(layers_.size()); }
  const PeriodicField2D& layer(int j) const { return layers_[j]; }

  const PeriodicField2D& trace_bottom() const { return layers_.front(); }
  const PeriodicField2D& trace_top() const { return layers_.back(); }

  SlabField3D horizontal_derivative(int axis, int order) const {
    std::vector<PeriodicField2D> layers;
    layers.reserve(layers_.size());
    for (const auto& l : layers_) layers.push_back(l.derivative(axis, order));
    return from_layers(vgrid_, std::move(layers));
  }

  SlabField3D vertical_derivative() const {
    const auto& D = vgrid_->diff_matrix();
    const int n = layer_count();
    std::vector<PeriodicField2D> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      PeriodicField2D acc = PeriodicField2D::zero(n1(), n2());
      for (int j = 0; j < n; ++j)
        if (D[i][j] != 0.0) acc.axpy(D[i][j], layers_[j]);
      out.push_back(std::move(acc));
    }
    return from_layers(vgrid_, std::move(out));
  }

  /// Per-node cumulative integral int_a^{z_i} f dz.
  SlabField3D vertical_cumulative() const {
    const auto& W = vgrid_->cumulative_weights();
    const int n = layer_count();
    std::vector<PeriodicField2D> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
      PeriodicField2D acc = PeriodicField2D::zero(n1(), n2());
      for (int j = 0; j < n; ++j)
        if (W[i][j] != 0.0) acc.axpy(W[i][j], layers_[j]);
      out.push_back(std::move(acc));
    }
    return from_layers(vgrid_, std::move(out));
  }

  /// Multiplies each layer by w(z_j). Used for polynomial kernels.
  template <class W>
  SlabField3D scaled_by_profile(W&& w) const {
    std::vector<PeriodicField2D> out;
    out.reserve(layers_.size());
    for (int j = 0; j < layer_count(); ++j) {
      PeriodicField2D l = layers_[j];
      l *= w(vgrid_->node(j));
      out.push_back(std::move(l));
    }
    return from_layers(vgrid_, std::move(out));
  }

  double l2_norm() const {
    const auto& q = vgrid_->quad_weights();
    double s = 0.0;
    for (int j = 0; j < layer_count(); ++j) {
      const double nj = layers_[j].l2_norm();
      s += q[j] * nj * nj;
    }
    return std::sqrt(std::max(0.0, s));
  }

  double linf_norm() const {
    double s = 0.0;
    for (const auto& l : layers_) s = std::max(s, l.linf_norm());
    return s;
  }

  SlabField3D& axpy(double a, const SlabField3D& o) {
    check_same_grid(o);
    for (int j = 0; j < layer_count(); ++j) layers_[j].axpy(a, o.layers_[j]);
    return *this;
  }

  SlabField3D& operator+=(const SlabField3D& o) { return axpy(1.0, o); }
  SlabField3D& operator-=(const SlabField3D& o) { return axpy(-1.0, o); }
  SlabField3D& operator*=(double a) {
    for (auto& l : layers_) l *= a;
    return *this;
  }

  friend SlabField3D operator+(SlabField3D a, const SlabField3D& b) { return a += b; }
  friend SlabField3D operator-(SlabField3D a, const SlabField3D& b) { return a -= b; }
  friend SlabField3D operator*(double a, SlabField3D f) { return f *= a; }

  void check_same_grid(const SlabField3D& o) const {
    if (layer_count() != o.layer_count() || n1() != o.n1() || n2() != o.n2() ||
        vgrid_->lower() != o.vgrid_->lower() || vgrid_->upper() != o.vgrid_->upper())
      throw std::invalid_argument("slab grid mismatch");
  }

 private:
  VerticalGridPtr vgrid_;
  std::vector<PeriodicField2D> layers_;
};

/// Weighted full-interval integral: returns int_a^b w(z) f(.,z) dz on omega.
template <class W>
PeriodicField2D vertical_integral(const SlabField3D& f, W&& weight) {
  const auto& q = f.vgrid().quad_weights();
  PeriodicField2D acc = PeriodicField2D::zero(f.n1(), f.n2());
  for (int j = 0; j < f.layer_count(); ++j)
    acc.axpy(q[j] * weight(f.vgrid().node(j)), f.layer(j));
  return acc;
}

inline PeriodicField2D vertical_integral(const SlabField3D& f) {
  return vertical_integral(f, [](double) { return 1.0; });
}

/// Three-component field on a slab.
struct VectorSlabField3 {
  std::array<SlabField3D, 3> comp;

  static VectorSlabField3 zero(int n1, int n2, VerticalGridPtr vgrid) {
    VectorSlabField3 v;
    for (auto& c : v.comp) c = SlabField3D::zero(n1, n2, vgrid);
    return v;
  }

  const SlabField3D& operator[](int i) const { return comp[i]; }
  SlabField3D& operator[](int i) { return comp[i]; }

  double l2_norm() const {
    double s = 0.0;
    for (const auto& c : comp) {
      const double n = c.l2_norm();
      s += n * n;
    }
    return std::sqrt(s);
  }

  VectorSlabField3& axpy(double a, const VectorSlabField3& o) {
    for (int i = 0; i < 3; ++i) comp[i].axpy(a, o.comp[i]);
    return *this;
  }
};

}  // namespace thinfsi

#endif
