#pragma once

// Linear algebra over R^{n+1,1} and its complexification.
//
// All pairings are complex *bilinear* (never Hermitian). Skew maps are stored
// as matrices acting on column vectors in the model basis.

#include "cwsurf/types.hpp"

#include <optional>
#include <sstream>

namespace cwsurf {

/// Which fixed basis the ambient coordinates refer to.
enum class Model {
  /// {e_1..e_n, v_0, v_inf} with (v_0, v_inf) = -1, both null.
  euclidean,
  /// {e_1..e_{n+1}, e_{n+2}} with diag(1, ..., 1, -1).
  spherical,
};

inline std::string to_string(Model m) { return m == Model::euclidean ? "euclidean" : "spherical"; }

/// The Lorentzian metric of R^{n+1,1} in one of the two model bases.
class Form {
 public:
  Form() = default;

  static Form euclidean(int n) {
    check_n(n);
    RMat g = RMat::Identity(n + 2, n + 2);
    g(n, n) = 0.0;
    g(n + 1, n + 1) = 0.0;
    g(n, n + 1) = -1.0;
    g(n + 1, n) = -1.0;
    return Form(Model::euclidean, n, g);
  }

  static Form spherical(int n) {
    check_n(n);
    RMat g = RMat::Identity(n + 2, n + 2);
    g(n + 1, n + 1) = -1.0;
    return Form(Model::spherical, n, g);
  }

  static Form make(Model m, int n) { return m == Model::euclidean ? euclidean(n) : spherical(n); }

  Model model() const { return model_; }
  /// Dimension n of the conformal sphere S^n.
  int n() const { return n_; }
  /// Ambient dimension n + 2.
  int dim() const { return n_ + 2; }
  const RMat& gram() const { return gram_; }
  const CMat& cgram() const { return cgram_; }

  /// Standard basis vector e_k (0-based).
  RVec basis(int k) const {
    RVec e = RVec::Zero(dim());
    e(k) = 1.0;
    return e;
  }

  /// v_0 of the Euclidean basis (origin of R^n).
  RVec v0() const {
    require(Model::euclidean, "v0");
    return basis(n_);
  }

  /// Standard point at infinity: v_inf for the Euclidean basis, e_{n+2} for
  /// the spherical one. In both cases pair(v, v_inf) = -1 picks the natural
  /// space form of the model.
  RVec v_inf() const { return basis(n_ + 1); }

  cplx pair(const CVec& u, const CVec& v) const {
    check_dim(u.size());
    check_dim(v.size());
    return (u.transpose() * cgram_ * v)(0, 0);
  }

  double pair(const RVec& u, const RVec& v) const {
    check_dim(u.size());
    check_dim(v.size());
    return (u.transpose() * gram_ * v)(0, 0);
  }

  /// u ^ v as the skew map w -> (u, w) v - (v, w) u.
  SkewMap wedge(const CVec& u, const CVec& v) const {
    check_dim(u.size());
    check_dim(v.size());
    return v * (cgram_ * u).transpose() - u * (cgram_ * v).transpose();
  }

  /// Metric adjoint A* with (A x, y) = (x, A* y).
  CMat adjoint(const CMat& a) const { return ginv_ * a.transpose() * cgram_; }

  /// Inverse of an orthogonal map, computed through the metric adjoint.
  CMat orthogonal_inverse(const CMat& a) const { return adjoint(a); }

  /// max |(A e_i, e_j) + (e_i, A e_j)| over basis pairs, relative to |A|.
  double skew_residual(const CMat& a) const {
    const CMat s = cgram_ * a + a.transpose() * cgram_;
    return s.cwiseAbs().maxCoeff() / (1.0 + a.cwiseAbs().maxCoeff());
  }

  /// max |(T e_i, T e_j) - (e_i, e_j)|, the failure of T to be orthogonal.
  double orthogonality_residual(const CMat& t) const {
    const CMat s = t.transpose() * cgram_ * t - cgram_;
    return s.cwiseAbs().maxCoeff();
  }

 private:
  Form(Model m, int n, const RMat& g) : model_(m), n_(n), gram_(g), cgram_(g.cast<cplx>()) {
    ginv_ = g.inverse().cast<cplx>();
  }

  static void check_n(int n) {
    if (n < 1 || n + 2 > kMaxDim) throw std::invalid_argument("Form: unsupported dimension n = " + std::to_string(n));
  }

  void check_dim(Eigen::Index k) const {
    if (k != dim()) {
      throw std::invalid_argument("dimension mismatch: vector of size " + std::to_string(k) + " against form of dimension " +
                                  std::to_string(dim()));
    }
  }

  void require(Model m, const char* what) const {
    if (model_ != m) throw std::logic_error(std::string(what) + " is only defined for the " + to_string(m) + " basis");
  }

  Model model_ = Model::euclidean;
  int n_ = 0;
  RMat gram_;
  CMat cgram_;
  CMat ginv_;
};

/// Relative thresholds used by the algebra layer.
struct AlgebraTolerances {
  /// Linear independence: smallest singular value above rank * largest.
  double rank = 1e-10;
  /// Degeneracy of an orthonormalised Gram matrix.
  double degenerate = 1e-10;
};

/// A complex linear subspace with a cached metric projector.
class Subspace {
 public:
  Subspace() = default;

  /// Columns of `basis` span the subspace. Throws GeometryError when the
  /// columns are numerically dependent.
  Subspace(const Form& form, const CMat& basis, AlgebraTolerances tol = {}) {
    if (basis.rows() != form.dim()) throw std::invalid_argument("Subspace: basis has wrong ambient dimension");
    if (basis.cols() == 0) throw std::invalid_argument("Subspace: empty basis");
    Eigen::JacobiSVD<CMat> svd(basis, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) <= tol.rank * s(0)) {
      std::ostringstream os;
      os << "Subspace: basis is linearly dependent (singular value ratio " << s(s.size() - 1) / s(0) << ")";
      throw GeometryError(os.str());
    }
    orth_ = svd.matrixU();
    gram_ = orth_.transpose() * form.cgram() * orth_;
    hgram_ = orth_.adjoint() * form.cgram() * orth_;
    const cplx det = gram_.determinant();
    if (std::abs(det) > tol.degenerate) {
      projector_ = orth_ * gram_.inverse() * orth_.transpose() * form.cgram();
    }
  }

  int rank() const { return static_cast<int>(orth_.cols()); }
  /// Euclidean-orthonormal basis (Hermitian sense).
  const CMat& basis() const { return orth_; }
  /// Bilinear Gram matrix of the orthonormal basis.
  const CMat& gram() const { return gram_; }
  bool degenerate() const { return !projector_.has_value(); }

  /// Metric orthogonal projector onto the subspace.
  const CMat& projector() const {
    if (!projector_) throw GeometryError("degenerate subspace");
    return *projector_;
  }

  /// Signature (positive, negative) of the Hermitian extension of the metric
  /// restricted to the subspace (the real signature for real subspaces).
  std::pair<int, int> signature(double tol = 1e-10) const {
    const CMat herm = 0.5 * (hgram_ + hgram_.adjoint());
    Eigen::SelfAdjointEigenSolver<CMat> es(herm, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    int pos = 0, neg = 0;
    for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
      if (es.eigenvalues()(k) > tol * scale) ++pos;
      else if (es.eigenvalues()(k) < -tol * scale) ++neg;
    }
    return {pos, neg};
  }

 private:
  CMat orth_;
  CMat gram_;
  CMat hgram_;
  std::optional<CMat> projector_;
};

/// pi_S x.
inline CVec orthoproject(const Subspace& s, const CVec& x) { return s.projector() * x; }

/// Canonical representative of a line: unit Euclidean norm with the first
/// entry of non-negligible modulus real and positive.
inline CVec normalize_line(const CVec& x) {
  const double nrm = x.norm();
  if (nrm == 0.0) throw GeometryError("normalize_line: zero vector");
  CVec y = x / nrm;
  for (Eigen::Index k = 0; k < y.size(); ++k) {
    if (std::abs(y(k)) > 1e-8) {
      y *= std::conj(y(k)) / std::abs(y(k));
      y(k) = std::abs(y(k));
      break;
    }
  }
  return y;
}

/// Result of intersecting two planes: the common line plus the measured
/// dimension defect (smallest singular value of the stacked bases).
struct LineIntersection {
  CVec line;
  double residual = 0.0;
};

/// Common line of two rank-2 subspaces with dim(P + Q) = 3.
inline LineIntersection intersect_lines(const Subspace& p, const Subspace& q, double rel_tol = 1e-6) {
  if (p.rank() != 2 || q.rank() != 2) throw std::invalid_argument("intersect_lines: both subspaces must have rank 2");
  const Eigen::Index m = p.basis().rows();
  CMat stacked(m, 4);
  stacked << p.basis(), q.basis();
  Eigen::JacobiSVD<CMat> svd(stacked, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int dim = 0;
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > rel_tol * s(0)) ++dim;
  if (dim != 3) {
    std::ostringstream os;
    os << "intersect_lines: dim(P + Q) = " << dim << " (expected 3; singular values";
    for (Eigen::Index k = 0; k < s.size(); ++k) os << ' ' << s(k);
    os << ")";
    throw GeometryError(os.str());
  }
  const CVec coeffs = svd.matrixV().col(3);
  const CVec w = p.basis() * coeffs.head(2);
  return {normalize_line(w), s(3) / s(0)};
}

}  // namespace cwsurf
