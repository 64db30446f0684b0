#pragma once

// Central sphere congruence, the splitting d = D + N, mean curvature data,
// the multiplier q_inf and the constrained Willmore residuals.

#include "cwsurf/surface.hpp"

namespace cwsurf {

/// Central sphere congruence S with its projector and reflection per point.
struct SphereCongruence {
  ConformalChart chart;
  Form form;
  /// Metric projector pi_S.
  Grid<RMat> proj;
  /// rho = pi_S - pi_{S^perp}.
  Grid<RMat> rho;

  RMat perp(std::size_t k) const { return RMat::Identity(form.dim(), form.dim()) - proj[k]; }
};

/// Largest principal angle (radians) between the column spaces of two
/// projectors of equal rank, measured in the Hermitian inner product.
inline double max_principal_angle(const CMat& p1, const CMat& p2, double rank_tol = 1e-8) {
  auto orth = [&](const CMat& p) {
    Eigen::JacobiSVD<CMat> svd(p, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    int r = 0;
    while (r < s.size() && s(r) > rank_tol * s(0)) ++r;
    return CMat(svd.matrixU().leftCols(r));
  };
  const CMat a = orth(p1), b = orth(p2);
  if (a.cols() != b.cols()) return std::numbers::pi / 2;
  Eigen::JacobiSVD<CMat> svd(a.adjoint() * b);
  const double c = std::clamp(svd.singularValues().minCoeff(), 0.0, 1.0);
  return std::acos(c);
}

inline double max_principal_angle(const RMat& p1, const RMat& p2, double rank_tol = 1e-8) {
  return max_principal_angle(to_complex(p1), to_complex(p2), rank_tol);
}

/// S = span{sigma, sigma_u, sigma_v, sigma_uu + sigma_vv} per point.
inline SphereCongruence central_sphere_congruence(const LightConeLift& lift) {
  const ConformalChart& c = lift.chart;
  const Form& f = lift.form();
  const int m = f.dim();
  const Grid<RVec> su = d_du(lift.sigma, c);
  const Grid<RVec> sv = d_dv(lift.sigma, c);
  const Grid<RVec> lap = laplacian(lift.sigma, c);
  SphereCongruence S{c, f, Grid<RMat>(c.nu, c.nv), Grid<RMat>(c.nu, c.nv)};
  const RMat id = RMat::Identity(m, m);
  for (int i = 0; i < c.nu; ++i) {
    for (int j = 0; j < c.nv; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * c.nv + j;
      RMat b(m, 4);
      b.col(0) = lift.sigma[k] / lift.sigma[k].norm();
      b.col(1) = su[k] / su[k].norm();
      b.col(2) = sv[k] / sv[k].norm();
      b.col(3) = lap[k] / lap[k].norm();
      Eigen::JacobiSVD<RMat> svd(b);
      const auto& s = svd.singularValues();
      if (!(s(3) > 1e-10 * s(0))) {
        std::ostringstream os;
        os << "central sphere congruence has rank < 4 at (" << i << ", " << j << ") (singular value ratio " << s(3) / s(0) << ")";
        throw GeometryError(os.str());
      }
      const RMat gram = b.transpose() * f.gram() * b;
      Eigen::SelfAdjointEigenSolver<RMat> es(gram, Eigen::EigenvaluesOnly);
      const auto& ev = es.eigenvalues();
      const double tol = 1e-12 * ev.cwiseAbs().maxCoeff();
      if (!(ev(0) < -tol && ev(1) > tol)) {
        std::ostringstream os;
        os << "central sphere congruence is not of signature (3,1) at (" << i << ", " << j << ")";
        throw GeometryError(os.str());
      }
      S.proj[k] = b * gram.inverse() * b.transpose() * f.gram();
      S.rho[k] = 2.0 * S.proj[k] - id;
    }
  }
  return S;
}

/// Largest |x - pi_S x| / |x| for x in {sigma, sigma_u, sigma_v}.
inline Grid<double> congruence_containment(const LightConeLift& lift, const SphereCongruence& S) {
  const Grid<RVec> su = d_du(lift.sigma, lift.chart);
  const Grid<RVec> sv = d_dv(lift.sigma, lift.chart);
  Grid<double> out(lift.chart.nu, lift.chart.nv, 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (const RVec* x : {&lift.sigma[k], &su[k], &sv[k]}) {
      out[k] = std::max(out[k], (*x - S.proj[k] * *x).norm() / x->norm());
    }
  }
  return out;
}

/// Off-diagonal part N of the trivial connection, plus the multiplier q.
struct SplitConnection {
  ConformalChart chart;
  Form form;
  Grid<RMat> Nu, Nv;
  Grid<CMat> q10, q01;

  CMat N10(std::size_t k) const { return 0.5 * (Nu[k].cast<cplx>() - kI * Nv[k].cast<cplx>()); }
  CMat N01(std::size_t k) const { return 0.5 * (Nu[k].cast<cplx>() + kI * Nv[k].cast<cplx>()); }
  CMat qu(std::size_t k) const { return q10[k] + q01[k]; }
  CMat qv(std::size_t k) const { return kI * (q10[k] - q01[k]); }
};

/// N_X = pi_perp (d_X pi_S) pi_S - pi_S (d_X pi_S) pi_perp, q = 0.
inline SplitConnection split_connection(const SphereCongruence& S) {
  const ConformalChart& c = S.chart;
  const int m = S.form.dim();
  const Grid<RMat> pu = d_du(S.proj, c);
  const Grid<RMat> pv = d_dv(S.proj, c);
  SplitConnection sc{c, S.form, Grid<RMat>(c.nu, c.nv), Grid<RMat>(c.nu, c.nv),
                     Grid<CMat>(c.nu, c.nv, CMat::Zero(m, m)), Grid<CMat>(c.nu, c.nv, CMat::Zero(m, m))};
  for (std::size_t k = 0; k < S.proj.size(); ++k) {
    const RMat& p = S.proj[k];
    const RMat pp = S.perp(k);
    sc.Nu[k] = pp * pu[k] * p - p * pu[k] * pp;
    sc.Nv[k] = pp * pv[k] * p - p * pv[k] * pp;
  }
  return sc;
}

/// D_X A = d_X A - [N_X, A] for an endomorphism field A.
inline Grid<CMat> covariant_end(const Grid<CMat>& a, const SplitConnection& sc, Axis x) {
  Grid<CMat> out = d_dx(a, sc.chart, x);
  const Grid<RMat>& n = x == Axis::u ? sc.Nu : sc.Nv;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= commutator(n[k].cast<cplx>(), a[k]);
  return out;
}

/// D_X s = d_X s - N_X s for a section s.
inline Grid<CVec> covariant_section(const Grid<CVec>& s, const SplitConnection& sc, Axis x) {
  Grid<CVec> out = d_dx(s, sc.chart, x);
  const Grid<RMat>& n = x == Axis::u ? sc.Nu : sc.Nv;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] -= n[k].cast<cplx>() * s[k];
  return out;
}

/// Pointwise algebraic invariants of a split connection.
struct SplitInvariants {
  /// |pi_S N pi_S| + |pi_perp N pi_perp|.
  Grid<double> block_diagonal;
  /// |N - adjoint(N)|-type failure of skewness.
  Grid<double> skew;
  /// |conj(q10) - q01|.
  Grid<double> q_reality;
  /// |q pi_perp|.
  Grid<double> q_on_perp;
};

inline SplitInvariants split_invariants(const SphereCongruence& S, const SplitConnection& sc) {
  const int nu = S.chart.nu, nv = S.chart.nv;
  SplitInvariants r{Grid<double>(nu, nv), Grid<double>(nu, nv), Grid<double>(nu, nv), Grid<double>(nu, nv)};
  for (std::size_t k = 0; k < S.proj.size(); ++k) {
    const CMat p = S.proj[k].cast<cplx>(), pp = S.perp(k).cast<cplx>();
    double bd = 0, sk = 0;
    for (const RMat* n : {&sc.Nu[k], &sc.Nv[k]}) {
      const CMat nc = n->cast<cplx>();
      bd = std::max(bd, operator_norm(p * nc * p) + operator_norm(pp * nc * pp));
      sk = std::max(sk, S.form.skew_residual(nc));
    }
    r.block_diagonal[k] = bd;
    r.skew[k] = sk;
    r.q_reality[k] = operator_norm(CMat(sc.q10[k].conjugate()) - sc.q01[k]);
    r.q_on_perp[k] = std::max(operator_norm(sc.q10[k] * pp), operator_norm(sc.q01[k] * pp));
  }
  return r;
}

/// Mean curvature data relative to the space form of the lift.
struct MeanCurvatureData {
  Grid<RVec> v_T, v_perp, H;
  Grid<double> Hnorm2;
  /// sigma normalised against v_inf.
  Grid<RVec> sigma_inf;
};

inline MeanCurvatureData mean_curvature(const LightConeLift& lift, const SphereCongruence& S) {
  const Form& f = lift.form();
  const RVec& vinf = lift.spaceform.v_inf;
  const int nu = lift.chart.nu, nv = lift.chart.nv;
  MeanCurvatureData m{Grid<RVec>(nu, nv), Grid<RVec>(nu, nv), Grid<RVec>(nu, nv), Grid<double>(nu, nv), Grid<RVec>(nu, nv)};
  for (std::size_t k = 0; k < S.proj.size(); ++k) {
    m.sigma_inf[k] = normalize_against(f, lift.sigma[k], vinf);
    m.v_T[k] = S.proj[k] * vinf;
    m.v_perp[k] = vinf - m.v_T[k];
    const double h2 = f.pair(m.v_perp[k], m.v_perp[k]);
    // Q H = -v_perp with Q x = (H, x) sigma_inf + x; (v_perp, sigma_inf) = 0
    // and sigma_inf null give (H, H) = (v_perp, v_perp).
    m.H[k] = -m.v_perp[k] - h2 * m.sigma_inf[k];
    m.Hnorm2[k] = h2;
  }
  return m;
}

/// |Q H + v_perp| per point.
inline Grid<double> mean_curvature_residual(const Form& f, const MeanCurvatureData& m) {
  Grid<double> out(m.H.nu(), m.H.nv());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const RVec qh = f.pair(m.H[k], m.H[k]) * m.sigma_inf[k] + m.H[k];
    out[k] = (qh + m.v_perp[k]).norm();
  }
  return out;
}

/// |D v_perp| = max over u, v of |d_X v_perp - N_X v_perp|.
inline Grid<double> normal_parallelism(const MeanCurvatureData& m, const SplitConnection& sc) {
  const Grid<CVec> vp = complexify(m.v_perp);
  const Grid<CVec> du = covariant_section(vp, sc, Axis::u);
  const Grid<CVec> dv = covariant_section(vp, sc, Axis::v);
  return map_grid(du, dv, [](const CVec& a, const CVec& b) { return std::max(a.norm(), b.norm()); });
}

/// The 1-form eta(X) = sigma_inf ^ N_X v_perp, as its (u, v) components.
struct OneForm {
  Grid<CMat> u, v;

  CMat z10(std::size_t k) const { return 0.5 * (u[k] - kI * v[k]); }
  CMat z01(std::size_t k) const { return 0.5 * (u[k] + kI * v[k]); }
};

inline OneForm isothermic_eta(const MeanCurvatureData& m, const SplitConnection& sc) {
  const int nu = sc.chart.nu, nv = sc.chart.nv;
  OneForm eta{Grid<CMat>(nu, nv), Grid<CMat>(nu, nv)};
  for (std::size_t k = 0; k < eta.u.size(); ++k) {
    const CVec s = to_complex(m.sigma_inf[k]);
    eta.u[k] = sc.form.wedge(s, to_complex(RVec(sc.Nu[k] * m.v_perp[k])));
    eta.v[k] = sc.form.wedge(s, to_complex(RVec(sc.Nv[k] * m.v_perp[k])));
  }
  return eta;
}

/// |d eta (du, dv)| per point.
inline Grid<double> closedness_residual(const OneForm& w, const ConformalChart& c) {
  const Grid<CMat> a = d_du(w.v, c);
  const Grid<CMat> b = d_dv(w.u, c);
  return map_grid(a, b, [](const CMat& x, const CMat& y) { return operator_norm(x - y); });
}

/// Outcome of installing q_inf; `warning` is non-empty when the normal part
/// of v_inf is not parallel, in which case q_inf is not a multiplier.
struct MultiplierReport {
  double parallel_residual = 0.0;
  std::string warning;
};

/// q_inf = 1/2 sigma_inf ^ N v_perp written into sc.q10, sc.q01.
inline MultiplierReport multiplier_q_infty(const MeanCurvatureData& m, SplitConnection& sc, const Window& w,
                                           double parallel_tol) {
  const OneForm eta = isothermic_eta(m, sc);
  for (std::size_t k = 0; k < eta.u.size(); ++k) {
    sc.q10[k] = 0.5 * eta.z10(k);
    sc.q01[k] = 0.5 * eta.z01(k);
  }
  MultiplierReport rep;
  const Grid<double> par = normal_parallelism(m, sc);
  for (int i = w.i0; i < w.i1; ++i)
    for (int j = w.j0; j < w.j1; ++j) rep.parallel_residual = std::max(rep.parallel_residual, par(i, j));
  if (rep.parallel_residual > parallel_tol) rep.warning = "input not parallel-mean-curvature; q_inf not a multiplier";
  return rep;
}

/// Residuals of the constrained Willmore equations evaluated on (du, dv):
/// r1 = |d^D q|, r2 = |d^D *N - 2 [q ^ *N]| with *N = -N_v du + N_u dv.
struct CWResidual {
  Grid<double> r1, r2;
};

inline CWResidual cw_residual(const SplitConnection& sc) {
  const int nu = sc.chart.nu, nv = sc.chart.nv;
  Grid<CMat> qu(nu, nv), qv(nu, nv), nuc(nu, nv), nvc(nu, nv);
  for (std::size_t k = 0; k < qu.size(); ++k) {
    qu[k] = sc.qu(k);
    qv[k] = sc.qv(k);
    nuc[k] = sc.Nu[k].cast<cplx>();
    nvc[k] = sc.Nv[k].cast<cplx>();
  }
  const Grid<CMat> du_qv = covariant_end(qv, sc, Axis::u);
  const Grid<CMat> dv_qu = covariant_end(qu, sc, Axis::v);
  const Grid<CMat> du_nu = d_du(nuc, sc.chart);
  const Grid<CMat> dv_nv = d_dv(nvc, sc.chart);
  CWResidual r{Grid<double>(nu, nv), Grid<double>(nu, nv)};
  for (std::size_t k = 0; k < qu.size(); ++k) {
    r.r1[k] = operator_norm(du_qv[k] - dv_qu[k]);
    const CMat rhs = 2.0 * (commutator(qu[k], nuc[k]) + commutator(qv[k], nvc[k]));
    r.r2[k] = operator_norm(du_nu[k] + dv_nv[k] - rhs);
  }
  return r;
}

/// |d^D N (du, dv)| = |d_u N_v - d_v N_u - 2 [N_u, N_v]|.
inline Grid<double> harmonicity_residual(const SplitConnection& sc) {
  const Grid<RMat> a = d_du(sc.Nv, sc.chart);
  const Grid<RMat> b = d_dv(sc.Nu, sc.chart);
  Grid<double> out(sc.chart.nu, sc.chart.nv);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const RMat nn = sc.Nu[k] * sc.Nv[k] - sc.Nv[k] * sc.Nu[k];
    out[k] = operator_norm((a[k] - b[k] - 2.0 * nn).cast<cplx>());
  }
  return out;
}

/// |d^D q (du, dv)| for a 1-form given by its (u, v) components.
inline Grid<double> covariant_closedness(const OneForm& w, const SplitConnection& sc) {
  const Grid<CMat> a = covariant_end(w.v, sc, Axis::u);
  const Grid<CMat> b = covariant_end(w.u, sc, Axis::v);
  return map_grid(a, b, [](const CMat& x, const CMat& y) { return operator_norm(x - y); });
}

}  // namespace cwsurf
