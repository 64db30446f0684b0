#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cwsurf {

using cplx = std::complex<double>;

/// Largest supported ambient dimension n+2 (surfaces in S^n with n <= 4).
inline constexpr int kMaxDim = 6;

using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using CVec = Eigen::Matrix<cplx, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using CMat = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

/// Element of o(R^{n+1,1}) (complexified), acting on column vectors.
using SkewMap = CMat;

inline constexpr cplx kI{0.0, 1.0};

/// Raised for violated geometric preconditions and failed constructions.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed input files and arguments.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense two-dimensional field over a chart, index (i, j) with i along u
/// and j along v, stored row-major: k = i * nv + j.
template <class T>
class Grid {
 public:
  Grid() = default;
  Grid(int nu, int nv, const T& fill = T{}) : nu_(nu), nv_(nv), data_(static_cast<std::size_t>(nu) * nv, fill) {}

  int nu() const { return nu_; }
  int nv() const { return nv_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * nv_ + j]; }
  const T& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * nv_ + j]; }
  T& operator[](std::size_t k) { return data_[k]; }
  const T& operator[](std::size_t k) const { return data_[k]; }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  template <class U>
  bool same_shape(const Grid<U>& other) const {
    return nu_ == other.nu() && nv_ == other.nv();
  }

 private:
  int nu_ = 0;
  int nv_ = 0;
  std::vector<T> data_;
};

/// Pointwise map of one or more grids of equal shape.
template <class F, class T>
auto map_grid(const Grid<T>& a, F&& f) {
  using R = std::decay_t<decltype(f(a[0]))>;
  Grid<R> out;
  if (a.empty()) return out;
  out = Grid<R>(a.nu(), a.nv(), f(a[0]));
  for (std::size_t k = 1; k < a.size(); ++k) out[k] = f(a[k]);
  return out;
}

template <class F, class T, class U>
auto map_grid(const Grid<T>& a, const Grid<U>& b, F&& f) {
  if (!a.same_shape(b)) throw std::invalid_argument("map_grid: shape mismatch");
  using R = std::decay_t<decltype(f(a[0], b[0]))>;
  Grid<R> out;
  if (a.empty()) return out;
  out = Grid<R>(a.nu(), a.nv(), f(a[0], b[0]));
  for (std::size_t k = 1; k < a.size(); ++k) out[k] = f(a[k], b[k]);
  return out;
}

inline CVec to_complex(const RVec& x) { return x.cast<cplx>(); }
inline CMat to_complex(const RMat& x) { return x.cast<cplx>(); }

inline RVec real_part(const CVec& x) { return x.real(); }

inline double max_abs_imag(const CVec& x) { return x.imag().cwiseAbs().maxCoeff(); }
inline double max_abs_imag(const CMat& x) { return x.imag().cwiseAbs().maxCoeff(); }

/// Spectral norm of a small dense matrix.
inline double operator_norm(const CMat& a) {
  if (a.size() == 0) return 0.0;
  const CMat h = a.adjoint() * a;
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline CMat commutator(const CMat& a, const CMat& b) { return a * b - b * a; }

}  // namespace cwsurf
