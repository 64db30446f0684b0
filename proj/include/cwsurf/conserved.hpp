#pragma once

// Polynomial conserved quantities p(lambda) = sum_k p_k lambda^k.

#include "cwsurf/connection_family.hpp"
#include "cwsurf/stats.hpp"

#include <limits>
#include <map>

namespace cwsurf {

/// Laurent polynomial section of type d. Only k >= 0 is stored; p_{-k} is
/// the complex conjugate of p_k.
class LaurentPolySection {
 public:
  LaurentPolySection() = default;
  LaurentPolySection(int d, std::vector<Grid<CVec>> coeffs) : d_(d), coeffs_(std::move(coeffs)) {
    if (d < 0) throw std::invalid_argument("LaurentPolySection: negative type");
    if (static_cast<int>(coeffs_.size()) != d + 1) throw std::invalid_argument("LaurentPolySection: need coefficients 0..d");
    for (const auto& c : coeffs_)
      if (!c.same_shape(coeffs_[0])) throw std::invalid_argument("LaurentPolySection: coefficient grids differ in shape");
  }

  int d() const { return d_; }
  int nu() const { return coeffs_[0].nu(); }
  int nv() const { return coeffs_[0].nv(); }
  std::size_t size() const { return coeffs_[0].size(); }
  int dim() const { return static_cast<int>(coeffs_[0][0].size()); }

  /// Stored coefficient k in 0..d.
  const Grid<CVec>& stored(int k) const { return coeffs_.at(k); }
  Grid<CVec>& stored(int k) { return coeffs_.at(k); }

  /// p_k at point s for any integer k (zero outside -d..d).
  CVec coeff(int k, std::size_t s) const {
    if (k > d_ || k < -d_) return CVec::Zero(dim());
    return k >= 0 ? coeffs_[k][s] : CVec(coeffs_[-k][s].conjugate());
  }

  Grid<CVec> coeff_grid(int k) const {
    Grid<CVec> g(nu(), nv(), CVec::Zero(dim()));
    for (std::size_t s = 0; s < size(); ++s) g[s] = coeff(k, s);
    return g;
  }

  CVec eval(cplx lambda, std::size_t s) const {
    if (lambda == cplx(0.0) && d_ > 0) throw std::domain_error("Laurent polynomial evaluated at lambda = 0");
    CVec out = coeff(0, s);
    cplx pw = 1.0;
    for (int k = 1; k <= d_; ++k) {
      pw *= lambda;
      out += pw * coeff(k, s) + coeff(-k, s) / pw;
    }
    return out;
  }

  Grid<CVec> eval_grid(cplx lambda) const {
    Grid<CVec> g(nu(), nv());
    for (std::size_t s = 0; s < size(); ++s) g[s] = eval(lambda, s);
    return g;
  }

  /// p(1), the space-form vector.
  Grid<CVec> at_one() const { return eval_grid(1.0); }

 private:
  int d_ = 0;
  std::vector<Grid<CVec>> coeffs_;
};

/// Result of check_shape.
struct ShapeReport {
  /// Worst |pi_S p_k| (k of the parity of d) or |pi_perp p_k| (otherwise).
  double parity = 0.0;
  /// Largest |p(1)| over the grid.
  double p1_max = 0.0;
  bool ok = false;
  std::string failure;
};

/// Parity and nontriviality of p against S; with a window only its points are
/// inspected.
inline ShapeReport check_shape(const LaurentPolySection& p, const SphereCongruence& S, double tol = 1e-8,
                               const Window* window = nullptr) {
  if (p.nu() != S.chart.nu || p.nv() != S.chart.nv) throw std::invalid_argument("conserved quantity and congruence differ in shape");
  if (p.dim() != S.form.dim()) throw std::invalid_argument("conserved quantity has wrong ambient dimension");
  ShapeReport r;
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (window && !window->contains(static_cast<int>(s) / p.nv(), static_cast<int>(s) % p.nv())) continue;
    const RMat& pr = S.proj[s];
    for (int k = 0; k <= p.d(); ++k) {
      const CVec& x = p.stored(k)[s];
      const bool in_perp = (p.d() - k) % 2 == 0;
      const CVec off = in_perp ? CVec(pr.cast<cplx>() * x) : CVec(x - pr.cast<cplx>() * x);
      r.parity = std::max(r.parity, off.norm());
    }
    r.p1_max = std::max(r.p1_max, p.eval(1.0, s).norm());
  }
  std::string f;
  if (!(r.p1_max > tol)) f += "nontriviality (p(1) = 0); ";
  if (!(r.parity <= tol)) f += "parity (coefficient in the wrong bundle, residual " + std::to_string(r.parity) + "); ";
  r.ok = f.empty();
  if (!r.ok) r.failure = f.substr(0, f.size() - 2);
  return r;
}

inline void require_shape(const LaurentPolySection& p, const SphereCongruence& S, double tol = 1e-8) {
  const ShapeReport r = check_shape(p, S, tol);
  if (!r.ok) throw GeometryError("conserved quantity rejected: " + r.failure);
}

/// p_{-1} = p_1 = v_perp / 2, p_0 = v_T.
inline LaurentPolySection build_type1(const MeanCurvatureData& m, const SplitConnection& sc, const Window& w, double parallel_tol) {
  const Grid<double> par = normal_parallelism(m, sc);
  const FieldStats st = field_stats(par, w);
  if (!(st.max <= parallel_tol)) {
    std::ostringstream os;
    os << "type-1 quantity needs parallel mean curvature (|D v_perp| = " << st.max << " > " << parallel_tol
       << "); the normal part of v_inf must be parallel";
    throw GeometryError(os.str());
  }
  std::vector<Grid<CVec>> c{complexify(m.v_T), map_grid(m.v_perp, [](const RVec& x) { return to_complex(RVec(0.5 * x)); })};
  return LaurentPolySection(1, std::move(c));
}

/// Type-0 quantity: a constant vector u with pi_S u = 0 on the window,
/// i.e. the surface lies in a proper subsphere.
struct Type0Result {
  std::optional<RVec> u;
  double residual = 0.0;
};

inline Type0Result detect_type0(const SphereCongruence& S, const Window& w, double tol = 1e-6) {
  const int m = S.form.dim();
  RMat acc = RMat::Zero(m, m);
  for (int i = w.i0; i < w.i1; ++i)
    for (int j = w.j0; j < w.j1; ++j) acc += S.proj(i, j).transpose() * S.proj(i, j);
  Eigen::SelfAdjointEigenSolver<RMat> es(acc);
  RVec u = es.eigenvectors().col(0);
  Type0Result r;
  for (int i = w.i0; i < w.i1; ++i)
    for (int j = w.j0; j < w.j1; ++j) r.residual = std::max(r.residual, (S.proj(i, j) * u).norm());
  if (r.residual < tol) {
    for (Eigen::Index k = 0; k < u.size(); ++k) {
      if (std::abs(u(k)) > 1e-8) {
        if (u(k) < 0) u = -u;
        break;
      }
    }
    r.u = u;
  }
  return r;
}

inline LaurentPolySection constant_quantity(const RVec& u, int nu, int nv) {
  return LaurentPolySection(0, {Grid<CVec>(nu, nv, to_complex(u))});
}

namespace detail {

// E_k(X) for X = u, v: the lambda^k coefficient of d^lambda_q p(lambda).
struct RecurrenceTerms {
  Grid<CVec> eu, ev;
};

inline RecurrenceTerms recurrence(const LaurentPolySection& p, const ConnectionFamily& fam, int k, const Grid<CVec>& du_k,
                                  const Grid<CVec>& dv_k) {
  RecurrenceTerms t{Grid<CVec>(p.nu(), p.nv()), Grid<CVec>(p.nu(), p.nv())};
  for (std::size_t s = 0; s < p.size(); ++s) {
    const CVec pk = p.coeff(k, s), pm1 = p.coeff(k - 1, s), pp1 = p.coeff(k + 1, s), pm2 = p.coeff(k - 2, s),
               pp2 = p.coeff(k + 2, s);
    const CMat& nz = fam.Nz[s];
    const CMat& nzb = fam.Nzb[s];
    const CMat& qz = fam.qz[s];
    const CMat& qzb = fam.qzb[s];
    const CMat nu = nz + nzb, nv = kI * (nz - nzb);
    const CMat qu = qz + qzb, qv = kI * (qz - qzb);
    t.eu[s] = du_k[s] - nu * pk + nz * pm1 + nzb * pp1 + qz * pm2 + qzb * pp2 - qu * pk;
    t.ev[s] = dv_k[s] - nv * pk + kI * (nz * pm1 - nzb * pp1 + qz * pm2 - qzb * pp2) - qv * pk;
  }
  return t;
}

}  // namespace detail

/// Residuals of the coefficient recurrence, k = 0..d+2 (negative k follow
/// by conjugation).
struct ConservationResidual {
  std::map<int, Grid<double>> per_k;

  Grid<double> worst() const {
    Grid<double> out = per_k.begin()->second;
    for (const auto& [k, g] : per_k)
      for (std::size_t s = 0; s < g.size(); ++s) out[s] = std::max(out[s], g[s]);
    return out;
  }
};

inline ConservationResidual conservation_residual(const LaurentPolySection& p, const ConnectionFamily& fam) {
  if (p.nu() != fam.chart.nu || p.nv() != fam.chart.nv) throw std::invalid_argument("conserved quantity and family differ in shape");
  ConservationResidual r;
  for (int k = 0; k <= p.d() + 2; ++k) {
    const Grid<CVec> pk = p.coeff_grid(k);
    const auto t = detail::recurrence(p, fam, k, d_du(pk, fam.chart), d_dv(pk, fam.chart));
    r.per_k[k] = map_grid(t.eu, t.ev, [](const CVec& a, const CVec& b) { return std::max(a.norm(), b.norm()); });
  }
  return r;
}

/// |(d + omega(lambda)) p(lambda)| evaluated directly.
inline Grid<double> direct_residual(const LaurentPolySection& p, const ConnectionFamily& fam, cplx lambda) {
  const Grid<CVec> pl = p.eval_grid(lambda);
  return section_residual(fam, lambda, pl);
}

/// |d^lambda p(lambda) - sum_k lambda^k E_k| per point: the direct and
/// recurrence forms are the same sum.
inline Grid<double> recurrence_mismatch(const LaurentPolySection& p, const ConnectionFamily& fam, cplx lambda) {
  const Grid<CVec> pl = p.eval_grid(lambda);
  const Grid<CVec> du = d_du(pl, fam.chart), dv = d_dv(pl, fam.chart);
  const auto c = ConnectionFamily::coefficients(lambda);
  Grid<CVec> su(p.nu(), p.nv(), CVec::Zero(p.dim())), sv = su;
  for (int k = -p.d() - 2; k <= p.d() + 2; ++k) {
    const Grid<CVec> pk = p.coeff_grid(k);
    const auto t = detail::recurrence(p, fam, k, d_du(pk, fam.chart), d_dv(pk, fam.chart));
    const cplx w = std::pow(lambda, k);
    for (std::size_t s = 0; s < su.size(); ++s) {
      su[s] += w * t.eu[s];
      sv[s] += w * t.ev[s];
    }
  }
  Grid<double> out(p.nu(), p.nv());
  for (std::size_t s = 0; s < out.size(); ++s) {
    const CVec a = du[s] + fam.omega_u(c, s) * pl[s], b = dv[s] + fam.omega_v(c, s) * pl[s];
    const double scale = 1.0 + pl[s].norm();
    out[s] = std::max((a - su[s]).norm(), (b - sv[s]).norm()) / scale;
  }
  return out;
}

/// Grid maxima (over a window) of the consequences every conserved
/// quantity must satisfy.
struct Consequences {
  double p1_constancy = 0.0;
  double p1_reality = 0.0;
  double p0_reality = 0.0;
  /// |D_zbar p_d|.
  double dbar_top = 0.0;
  /// |D_z p_d + N_z p_{d-1}|.
  double d_top = 0.0;
  /// |N_z p_d + q_z p_{d-1}|.
  double n_top = 0.0;
  /// Worst deviation of each coefficient of (p(lambda), p(lambda)) from its
  /// value at the base point, keyed by power of lambda.
  std::map<int, double> pair_constancy;
  /// Coefficients of (p(lambda), p(lambda)) at the base point.
  std::map<int, cplx> pair_coeffs;
};

/// Coefficients of (p(lambda), p(lambda)) at point s, powers -2d..2d.
inline std::map<int, cplx> pair_coefficients(const LaurentPolySection& p, const Form& f, std::size_t s) {
  std::map<int, cplx> c;
  for (int j = -2 * p.d(); j <= 2 * p.d(); ++j) {
    cplx acc = 0.0;
    for (int k = -p.d(); k <= p.d(); ++k) {
      if (std::abs(j - k) <= p.d()) acc += f.pair(p.coeff(k, s), p.coeff(j - k, s));
    }
    c[j] = acc;
  }
  return c;
}

inline Consequences consequences_report(const LaurentPolySection& p, const ConnectionFamily& fam, const Window& w) {
  const ConformalChart& c = fam.chart;
  const int d = p.d();
  const std::size_t base = static_cast<std::size_t>(c.nu / 2) * c.nv + c.nv / 2;
  const Grid<CVec> one = p.at_one();
  const Grid<CVec> top = p.coeff_grid(d);
  const Grid<CVec> dz_top = dz(top, c), dzb_top = dzbar(top, c);
  Consequences r;
  r.pair_coeffs = pair_coefficients(p, fam.form, base);
  for (const auto& [j, v] : r.pair_coeffs) r.pair_constancy[j] = 0.0;
  for (int i = w.i0; i < w.i1; ++i) {
    for (int j = w.j0; j < w.j1; ++j) {
      const std::size_t s = static_cast<std::size_t>(i) * c.nv + j;
      r.p1_constancy = std::max(r.p1_constancy, (one[s] - one[base]).norm());
      r.p1_reality = std::max(r.p1_reality, one[s].imag().norm());
      r.p0_reality = std::max(r.p0_reality, p.coeff(0, s).imag().norm());
      r.dbar_top = std::max(r.dbar_top, (dzb_top[s] - fam.Nzb[s] * top[s]).norm());
      r.d_top = std::max(r.d_top, (dz_top[s] - fam.Nz[s] * top[s] + fam.Nz[s] * p.coeff(d - 1, s)).norm());
      r.n_top = std::max(r.n_top, (fam.Nz[s] * top[s] + fam.qz[s] * p.coeff(d - 1, s)).norm());
      for (const auto& [pw, v] : pair_coefficients(p, fam.form, s)) {
        r.pair_constancy[pw] = std::max(r.pair_constancy[pw], std::abs(v - r.pair_coeffs[pw]));
      }
    }
  }
  return r;
}

/// s(lambda) = (1/lambda + lambda) p(lambda) / 2, of type d + 1.
inline LaurentPolySection raise_type(const LaurentPolySection& p) {
  std::vector<Grid<CVec>> c;
  for (int k = 0; k <= p.d() + 1; ++k) {
    Grid<CVec> g(p.nu(), p.nv());
    for (std::size_t s = 0; s < p.size(); ++s) g[s] = 0.5 * (p.coeff(k - 1, s) + p.coeff(k + 1, s));
    c.push_back(std::move(g));
  }
  return LaurentPolySection(p.d() + 1, std::move(c));
}

/// Multiplier q + t *eta and the matching type-1 quantity
/// p' = (p_{-1} + i t v_perp) / lambda + p_0 + (p_1 - i t v_perp) lambda.
struct ShiftedMultiplier {
  ConnectionFamily family;
  LaurentPolySection p;
};

inline ShiftedMultiplier shift_multiplier(const LaurentPolySection& p, const ConnectionFamily& fam, double t, const OneForm& eta,
                                          const Grid<RVec>& v_perp) {
  if (p.d() != 1) throw std::invalid_argument("shift_multiplier: needs a type-1 quantity");
  if (!std::isfinite(t)) throw std::invalid_argument("shift_multiplier: t must be real and finite");
  Grid<CMat> q10 = fam.qz, q01 = fam.qzb;
  Grid<CVec> p1 = p.stored(1);
  for (std::size_t s = 0; s < q10.size(); ++s) {
    q10[s] -= kI * t * eta.z10(s);
    q01[s] += kI * t * eta.z01(s);
    p1[s] -= kI * t * to_complex(v_perp[s]);
  }
  return {with_multiplier(fam, q10, q01), LaurentPolySection(1, {p.stored(0), std::move(p1)})};
}

/// Least-squares t with target = q - i t eta^{1,0} over a window, for
/// comparing multipliers of an isothermic surface.
struct MultiplierShiftFit {
  double t = 0.0;
  /// max - min of the pointwise fits.
  double spread = 0.0;
  /// max |target - (q - i t eta^{1,0})| with the global t.
  double residual = 0.0;
};

inline MultiplierShiftFit fit_multiplier_shift(const ConnectionFamily& fam, const Grid<CMat>& target_q10, const OneForm& eta,
                                               const Window& w) {
  const int nv = fam.chart.nv;
  double num = 0.0, den = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = w.i0; i < w.i1; ++i)
    for (int j = w.j0; j < w.j1; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * nv + j;
      const CMat e = -kI * eta.z10(k);
      const CMat d = target_q10[k] - fam.qz[k];
      const double ee = e.squaredNorm();
      if (ee < 1e-20) continue;
      const double tk = (e.adjoint() * d).trace().real();
      num += tk;
      den += ee;
      lo = std::min(lo, tk / ee);
      hi = std::max(hi, tk / ee);
    }
  if (den == 0.0) throw GeometryError("fit_multiplier_shift: eta vanishes on the window (surface is not isothermic here)");
  MultiplierShiftFit f;
  f.t = num / den;
  f.spread = hi - lo;
  for (int i = w.i0; i < w.i1; ++i)
    for (int j = w.j0; j < w.j1; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * nv + j;
      f.residual = std::max(f.residual, operator_norm(target_q10[k] - fam.qz[k] + kI * f.t * eta.z10(k)));
    }
  return f;
}

/// Classification of the top coefficient of a type-1 quantity.
enum class TopTerm { parallel, real, imaginary, generic };

inline std::string to_string(TopTerm t) {
  switch (t) {
    case TopTerm::parallel: return "parallel";
    case TopTerm::real: return "real";
    case TopTerm::imaginary: return "imaginary";
    case TopTerm::generic: return "generic";
  }
  return "?";
}

struct TopTermReport {
  TopTerm kind = TopTerm::generic;
  bool conserved = false;
  bool parallel = false;
  bool real = false;
  bool imaginary = false;
  double conservation = 0.0;
  /// max |D p_d|.
  double parallel_residual = 0.0;
  double imag_norm = 0.0;
  double real_norm = 0.0;
  /// 4 (Re p_1, Re p_1) over the window, when emitted.
  std::optional<FieldStats> H2;
  /// Grid value at the base point.
  std::optional<double> H2_base;
  /// Worst relative deviation from the mean curvature data, when supplied.
  std::optional<double> H2_mismatch;
};

struct ClassifyTolerances {
  double shape = 1e-8;
  /// Differential threshold for conservation and parallelism.
  double differential = 1e-4;
  double h2_relative = 1e-6;
};

/// Reports |D p_d|, |Im p_d|, |Re p_d|; a quantity that fails conservation
/// is generic. H^2 = 4 (Re p_1, Re p_1) is emitted for parallel top terms and
/// for every conserved type-1 quantity in codimension 1.
inline TopTermReport classify_top_term(const LaurentPolySection& p, const ConnectionFamily& fam, const Window& w,
                                       const ClassifyTolerances& tol, const Grid<double>* Hnorm2 = nullptr) {
  if (p.d() != 1) throw std::invalid_argument("classify_top_term: needs a type-1 quantity");
  TopTermReport r;
  r.conservation = field_stats(conservation_residual(p, fam).worst(), w).max;
  r.conserved = r.conservation <= tol.differential;

  const Grid<CVec>& top = p.stored(1);
  const Grid<CVec> du = d_du(top, fam.chart), dv = d_dv(top, fam.chart);
  const ConformalChart& c = fam.chart;
  Grid<double> h2(c.nu, c.nv, 0.0);
  for (int i = w.i0; i < w.i1; ++i) {
    for (int j = w.j0; j < w.j1; ++j) {
      const std::size_t s = static_cast<std::size_t>(i) * c.nv + j;
      const CMat nu = fam.Nz[s] + fam.Nzb[s], nv = kI * (fam.Nz[s] - fam.Nzb[s]);
      r.parallel_residual = std::max({r.parallel_residual, (du[s] - nu * top[s]).norm(), (dv[s] - nv * top[s]).norm()});
      r.imag_norm = std::max(r.imag_norm, top[s].imag().norm());
      r.real_norm = std::max(r.real_norm, top[s].real().norm());
      const RVec re = top[s].real();
      h2[s] = 4.0 * fam.form.pair(re, re);
    }
  }
  r.parallel = r.conserved && r.parallel_residual <= tol.differential;
  r.imaginary = r.conserved && r.real_norm <= tol.shape;
  r.real = r.conserved && r.imag_norm <= tol.shape;
  if (!r.conserved) r.kind = TopTerm::generic;
  else if (r.imaginary) r.kind = TopTerm::imaginary;
  else if (r.parallel) r.kind = TopTerm::parallel;
  else if (r.real) r.kind = TopTerm::real;
  else r.kind = TopTerm::generic;

  const bool emit = r.conserved && (r.parallel || fam.form.n() == 3);
  if (emit) {
    r.H2 = field_stats(h2, w);
    r.H2_base = h2(c.nu / 2, c.nv / 2);
    if (Hnorm2) {
      double worst = 0.0;
      for (int i = w.i0; i < w.i1; ++i) {
        for (int j = w.j0; j < w.j1; ++j) {
          const double ref = (*Hnorm2)(i, j);
          worst = std::max(worst, std::abs(h2(i, j) - ref) / std::max(std::abs(ref), 1.0));
        }
      }
      r.H2_mismatch = worst;
    }
  }
  return r;
}

/// |d beta| for beta = sqrt((Re p_1, Re p_1)), the coefficient of p_1 along
/// a unit normal in codimension 1.
inline Grid<double> normal_coefficient_gradient(const LaurentPolySection& p, const Form& f, const ConformalChart& c) {
  const Grid<double> beta = map_grid(p.stored(1), [&](const CVec& x) {
    const RVec re = x.real();
    return std::sqrt(std::max(0.0, f.pair(re, re)));
  });
  return map_grid(d_du(beta, c), d_dv(beta, c), [](double a, double b) { return std::hypot(a, b); });
}

}  // namespace cwsurf
