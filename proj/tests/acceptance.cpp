// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "common.hpp"

#include <cstdio>
#include <functional>

using namespace cwsurf;
using namespace cwsurf::testing;

namespace {

// Pinned tolerances.
constexpr double kMinOrder = 1.8;
constexpr double kMinRatio = 3.5;
constexpr double kFlatAbs128 = 1e-3;
constexpr double kNegativeControl = 1e-1;
constexpr double kConstancy = 1e-8;
constexpr double kH2Relative = 1e-5;
constexpr double kCliffordH = 1e-6;
constexpr double kType0 = 1e-6;
constexpr double kRaise = 1e-12;
constexpr double kGauge = 1e-8;
constexpr double kFit = 1e-6;
constexpr double kBacklund = 1e-8;
constexpr double kAlgebra = 1e-10;
constexpr int kProbes = 1000;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string notes;

  void note(const std::string& what) { notes += (notes.empty() ? "" : "; ") + what; }

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

struct Level {
  Built b;
  LaurentPolySection p;
};

Level level(SurfaceKind k, int nu) {
  Built b = build(exemplar(k, nu), nu / 8);
  LaurentPolySection p = type1_of(b);
  return {std::move(b), std::move(p)};
}

/// Runs f at 64 and 128 and checks ratio and observed order.
void refine(Outcome& o, const std::string& what, const std::function<double(int)>& f) {
  const double c = f(64), fine = f(128);
  const double order = std::log2(c / fine);
  const std::string m = what + fmt(" %.3g -> %.3g (order %.2f)", c, fine, order);
  o.check(c / fine >= kMinRatio && order >= kMinOrder, m);
  o.note(m);
}

double conservation(const LaurentPolySection& p, const ConnectionFamily& fam, const Window& w) {
  return wmax(conservation_residual(p, fam).worst(), w);
}

double p_at_one_constancy(const LaurentPolySection& p, const Window& w, int nv) {
  const Grid<CVec> one = p.at_one();
  const CVec ref = one((w.i0 + w.i1) / 2, (w.j0 + w.j1) / 2);
  double worst = 0.0;
  for (int i = w.i0; i < w.i1; ++i)
    for (int j = w.j0; j < w.j1; ++j) worst = std::max(worst, (one[static_cast<std::size_t>(i) * nv + j] - ref).norm());
  return worst;
}

const std::vector<cplx> kFlatLambdas = {kI, -kI, 2.0, 0.5, cplx(0.3, 0.4)};

Outcome flatness() {
  Outcome o;
  std::vector<double> r;
  for (int nu : {64, 128}) {
    const Built b = build(exemplar(SurfaceKind::cylinder, nu), nu / 8);
    double m = 0.0;
    for (cplx l : kFlatLambdas) m = std::max(m, wmax(curvature_residual(b.fam, l), b.w));
    r.push_back(m);
  }
  const double order = std::log2(r[0] / r[1]);
  o.check(r[0] / r[1] >= kMinRatio && order >= kMinOrder, fmt("ratio %.3g order %.2f", r[0] / r[1], order));
  o.check(r[1] < kFlatAbs128, fmt("residual at 128 %.3g", r[1]));
  const Built bad = build(perturbed_cylinder(64, 0.05, 1));
  const double neg = wmax(curvature_residual(bad.fam, kI), bad.w);
  o.check(neg > kNegativeControl, fmt("negative control %.3g", neg));
  if (o.pass) o.detail = fmt("%.3g -> %.3g, order %.2f, control %.3g", r[0], r[1], order, neg);
  return o;
}

Outcome cw_equations() {
  Outcome o;
  for (SurfaceKind k : {SurfaceKind::cylinder, SurfaceKind::unduloid}) {
    const std::string name = to_string(k);
    std::vector<Built> levels;
    for (int nu : {64, 128}) levels.push_back(build(exemplar(k, nu), nu / 8));
    refine(o, name + " dDq", [&](int nu) {
      const Built& b = levels[nu == 64 ? 0 : 1];
      return wmax(cw_residual(b.sc).r1, b.w);
    });
    refine(o, name + " d*N", [&](int nu) {
      const Built& b = levels[nu == 64 ? 0 : 1];
      return wmax(cw_residual(b.sc).r2, b.w);
    });
  }
  return o;
}

Outcome type1() {
  Outcome o;
  for (SurfaceKind k : {SurfaceKind::cylinder, SurfaceKind::unduloid}) {
    const std::string name = to_string(k);
    const Level a = level(k, 64), b = level(k, 128);
    refine(o, name + " conservation", [&](int nu) {
      const Level& l = nu == 64 ? a : b;
      return conservation(l.p, l.b.fam, l.b.w);
    });
    for (const Level* l : {&a, &b}) {
      const double h2 = l->b.lift.chart.h * l->b.lift.chart.h;
      const ShapeReport shape = check_shape(l->p, l->b.S, 1e-8, &l->b.w);
      o.check(shape.ok, name + " shape: " + shape.failure);
      const Consequences c = consequences_report(l->p, l->b.fam, l->b.w);
      o.check(c.p1_constancy < h2, name + fmt(" p1 constancy %.3g", c.p1_constancy));
      o.check(c.p1_reality < 1e-10 && c.p0_reality < 1e-10, name + " reality");
      o.check(c.dbar_top < h2 && c.d_top < h2 && c.n_top < h2, name + fmt(" top term %.3g %.3g", c.dbar_top, c.d_top) + fmt(" %.3g", c.n_top));
      for (const auto& [deg, v] : c.pair_constancy) o.check(v < h2, name + fmt(" pair coefficient %.0f not constant (%.3g)", deg, v));
      const double one = p_at_one_constancy(l->p, l->b.w, l->b.lift.chart.nv);
      o.check(one < kConstancy, name + fmt(" p(1) varies by %.3g", one));
    }
  }
  return o;
}

Outcome cmc_extraction() {
  Outcome o;
  // Oracle values: cylinder r = 1, unit sphere, unduloid neck 0.3 bulge 0.7.
  const std::vector<std::pair<SurfaceKind, double>> cases = {
      {SurfaceKind::cylinder, 0.25}, {SurfaceKind::sphere, 1.0}, {SurfaceKind::unduloid, 1.0}};
  std::string worst;
  for (const auto& [k, H2] : cases) {
    const Level l = level(k, 128);
    double dev = 0.0;
    for (int i = l.b.w.i0; i < l.b.w.i1; ++i)
      for (int j = l.b.w.j0; j < l.b.w.j1; ++j) {
        const RVec re = l.p.stored(1)(i, j).real();
        dev = std::max(dev, std::abs(4.0 * l.b.lift.form().pair(re, re) - H2) / H2);
      }
    o.check(dev < kH2Relative, to_string(k) + fmt(" H^2 relative error %.3g", dev));
    worst += to_string(k) + fmt(" %.2g ", dev);
  }
  const Level t = level(SurfaceKind::clifford_torus, 128);
  double hmax = 0.0;
  for (int i = t.b.w.i0; i < t.b.w.i1; ++i)
    for (int j = t.b.w.j0; j < t.b.w.j1; ++j) {
      const RVec re = t.p.stored(1)(i, j).real();
      hmax = std::max(hmax, 2.0 * std::sqrt(std::abs(t.b.lift.form().pair(re, re))));
    }
  o.check(hmax < kCliffordH, fmt("clifford |H| %.3g", hmax));
  if (o.pass) o.detail = worst + fmt("clifford %.2g", hmax);
  return o;
}

Outcome fullness() {
  Outcome o;
  const Built b4 = build(exemplar(SurfaceKind::cylinder, 64, 4));
  const Type0Result r4 = detect_type0(b4.S, b4.w);
  o.check(r4.u.has_value(), "R^4 cylinder not detected as non-full");
  if (r4.u) {
    const Grid<CVec> u(b4.lift.chart.nu, b4.lift.chart.nv, to_complex(*r4.u));
    double res = 0.0;
    for (cplx l : kFlatLambdas) res = std::max(res, wmax(section_residual(b4.fam, l, u), b4.w));
    o.check(res < kType0, fmt("type-0 residual %.3g", res));
    if (o.pass) o.detail = fmt("R^4 residual %.3g", res);
  }
  const Built b3 = build(exemplar(SurfaceKind::cylinder, 64));
  o.check(!detect_type0(b3.S, b3.w).u.has_value(), "R^3 cylinder reported non-full");
  return o;
}

/// (d + omega(lambda)) x(lambda) as vectors on the window.
std::vector<CVec> direct_vectors(const LaurentPolySection& x, const ConnectionFamily& fam, cplx lambda, const Window& w) {
  const Grid<CVec> g = x.eval_grid(lambda);
  const Grid<CVec> gu = d_du(g, fam.chart), gv = d_dv(g, fam.chart);
  const auto c = ConnectionFamily::coefficients(lambda);
  std::vector<CVec> out;
  for (int i = w.i0; i < w.i1; ++i)
    for (int j = w.j0; j < w.j1; ++j) {
      const std::size_t k = static_cast<std::size_t>(i) * fam.chart.nv + j;
      out.push_back(gu[k] + fam.omega_u(c, k) * g[k]);
      out.push_back(gv[k] + fam.omega_v(c, k) * g[k]);
    }
  return out;
}

Outcome degree_raise() {
  Outcome o;
  const std::vector<cplx> lambdas = {kI, -kI, 2.0, 0.5, cplx(0.3, 0.4), std::polar(1.0, 0.9)};
  for (SurfaceKind k : {SurfaceKind::cylinder, SurfaceKind::unduloid}) {
    const std::string name = to_string(k);
    const Level l = level(k, 64);
    const LaurentPolySection s = raise_type(l.p);
    // s(1) = p(1) up to the rounding of two coefficient sums.
    double same = 0.0, scale = 0.0;
    for (std::size_t t = 0; t < l.p.size(); ++t) {
      same = std::max(same, (s.eval(1.0, t) - l.p.eval(1.0, t)).cwiseAbs().maxCoeff());
      scale = std::max(scale, l.p.eval(1.0, t).cwiseAbs().maxCoeff());
    }
    o.check(same <= 4 * std::numeric_limits<double>::epsilon() * scale, name + fmt(" s(1) - p(1) = %.3g", same));
    // The raised residual is the original one times (1/lambda + lambda) / 2.
    double dev = 0.0, res_p = 0.0, res_s = 0.0;
    for (cplx lam : lambdas) {
      const std::vector<CVec> rp = direct_vectors(l.p, l.b.fam, lam, l.b.w);
      const std::vector<CVec> rs = direct_vectors(s, l.b.fam, lam, l.b.w);
      const cplx f = 0.5 * (1.0 / lam + lam);
      for (std::size_t t = 0; t < rp.size(); ++t) {
        dev = std::max(dev, (rs[t] - f * rp[t]).norm());
        res_p = std::max(res_p, rp[t].norm());
        res_s = std::max(res_s, rs[t].norm());
      }
    }
    o.check(dev < kRaise, name + fmt(" raised residual differs by %.3g", dev));
    o.note(name + fmt(" residual %.3g vs %.3g, identity %.2g", res_s, res_p, dev));
  }
  return o;
}

Outcome multiplier_shift() {
  Outcome o;
  const Level a = level(SurfaceKind::cylinder, 64), b = level(SurfaceKind::cylinder, 128);
  for (double t : {0.3, 0.7, -1.0}) {
    auto shifted = [&](const Level& l) {
      return shift_multiplier(l.p, l.b.fam, t, isothermic_eta(l.b.mc, l.b.sc), l.b.mc.v_perp);
    };
    const ShiftedMultiplier sa = shifted(a), sb = shifted(b);
    refine(o, fmt("t=%.1f conservation", t), [&](int nu) {
      return nu == 64 ? conservation(sa.p, sa.family, a.b.w) : conservation(sb.p, sb.family, b.b.w);
    });
    ClassifyTolerances ct;
    ct.differential = b.b.lift.chart.h * b.b.lift.chart.h;
    const TopTermReport r = classify_top_term(sb.p, sb.family, b.b.w, ct);
    o.check(r.parallel, fmt("t=%.1f top term not parallel (%.3g)", t, r.parallel_residual));
  }
  return o;
}

Outcome spectral() {
  Outcome o;
  const Level l = level(SurfaceKind::cylinder, 64);
  const TransformResult r = spectral_deform(l.b.lift, l.b.S, l.b.fam, l.p, std::polar(1.0, std::numbers::pi / 7));
  for (const Certificate& c : r.certificates) o.check(c.pass, c.name + fmt(" %.3g > %.3g", c.stats.max, c.threshold));
  // Independent rebuild from the deformed lift alone: S, D, N, q_inf.
  const Built nb = build(r.new_lift);
  const double h2 = nb.lift.chart.h * nb.lift.chart.h;
  double flat = 0.0;
  for (cplx lam : kFlatLambdas) flat = std::max(flat, wmax(curvature_residual(nb.fam, lam), nb.w));
  o.check(flat < h2, fmt("rebuilt flatness %.3g", flat));
  // The cylinder is isothermic: the deformed multiplier is q_inf of the
  // rebuilt surface shifted by a constant multiple of *eta.
  const OneForm eta = isothermic_eta(nb.mc, nb.sc);
  const MultiplierShiftFit fit = fit_multiplier_shift(nb.fam, r.new_family.qz, eta, nb.w);
  o.check(fit.spread < h2 && fit.residual < h2, fmt("multiplier shift not constant (spread %.3g, residual %.3g)", fit.spread, fit.residual));
  const ShiftedMultiplier sh = shift_multiplier(type1_of(nb), nb.fam, fit.t, eta, nb.mc.v_perp);
  double flat_sh = 0.0;
  for (cplx lam : kFlatLambdas) flat_sh = std::max(flat_sh, wmax(curvature_residual(sh.family, lam), nb.w));
  o.check(flat_sh < h2, fmt("shifted flatness %.3g", flat_sh));
  const double cons = conservation(r.new_p, sh.family, nb.w);
  o.check(cons < h2, fmt("conservation of the deformed quantity %.3g", cons));
  double agree = 0.0;
  for (int k = 0; k <= 1; ++k)
    for (int i = nb.w.i0; i < nb.w.i1; ++i)
      for (int j = nb.w.j0; j < nb.w.j1; ++j) agree = std::max(agree, (r.new_p.stored(k)(i, j) - sh.p.stored(k)(i, j)).norm());
  o.check(agree < h2, fmt("deformed quantity vs rebuilt %.3g", agree));
  ClassifyTolerances ct;
  ct.differential = h2;
  const TopTermReport t = classify_top_term(r.new_p, sh.family, nb.w, ct, &nb.mc.Hnorm2);
  o.check(t.parallel, fmt("rebuilt top term %.3g", t.parallel_residual));
  const TransformResult id = spectral_deform(l.b.lift, l.b.S, l.b.fam, l.p, 1.0);
  double dev = 0.0;
  for (std::size_t k = 0; k < id.new_lift.sigma.size(); ++k)
    dev = std::max(dev, (id.new_lift.sigma[k] - l.b.lift.sigma[k]).cwiseAbs().maxCoeff());
  o.check(dev < 1e-12, fmt("mu = 1 deviation %.3g", dev));
  if (o.pass)
    o.detail = fmt("rebuilt flatness %.3g, shift t = %.4f (spread %.2g), conservation %.3g, p agreement %.3g, identity %.2g", flat,
                   fit.t, fit.spread, cons, agree, dev);
  return o;
}

struct Patch {
  Level l;
  DressingGauge g;
};

Patch patch() {
  const LightConeLift lift = make_surface(SurfaceKind::cylinder, {}, patch_chart(128));
  Built b = build(lift);
  LaurentPolySection p = type1_of(b);
  DressingGauge g = make_dressing(b.fam, b.S, p, 0.4);
  return {{std::move(b), std::move(p)}, std::move(g)};
}

Outcome gauge_algebra(const Patch& pt) {
  Outcome o;
  std::vector<cplx> lambdas;
  for (int k = 0; k < 10; ++k) lambdas.push_back(std::polar(0.5 + 0.25 * k, 0.3 + 0.6 * k));
  const GaugeIdentities id = gauge_identities(pt.g, lambdas, pt.l.b.w);
  o.check(id.factorization < kGauge, fmt("factorizations differ by %.3g", id.factorization));
  o.check(id.rho_symmetry < kGauge, fmt("rho symmetry %.3g", id.rho_symmetry));
  o.check(id.reality < kGauge, fmt("reality %.3g", id.reality));
  o.check(id.inversion < kGauge, fmt("inversion %.3g", id.inversion));
  o.check(id.factor_rho_symmetry < kGauge, fmt("factor rho symmetry %.3g", id.factor_rho_symmetry));
  o.check(id.orthogonality < kGauge, fmt("orthogonality %.3g", id.orthogonality));
  if (o.pass) o.detail = fmt("factorization %.2g, rho %.2g, reality %.2g", id.factorization, id.rho_symmetry, id.reality) + fmt(", inversion %.2g", id.inversion);
  return o;
}

Outcome backlund(const Patch& pt) {
  Outcome o;
  const TransformResult r = backlund_transform(pt.l.b.lift, pt.l.b.S, pt.l.b.fam, pt.l.p, pt.g);
  const double fit = r.certificate("fit_residual").stats.max;
  const double p1 = r.certificate("p1_preserved").stats.max;
  const double pair = r.certificate("pair_coefficients").stats.max;
  const double h2 = r.certificate("H2_preserved").stats.max;
  o.check(fit < kFit, fmt("fit residual %.3g", fit));
  o.check(p1 < kBacklund, fmt("p(1) deviation %.3g", p1));
  o.check(pair < kBacklund, fmt("pair coefficients %.3g", pair));
  o.check(h2 < kH2Relative, fmt("H^2 relative %.3g", h2));
  if (o.pass) o.detail = fmt("fit %.2g, p(1) %.2g, pair %.2g", fit, p1, pair) + fmt(", H^2 %.2g", h2);
  return o;
}

Outcome algebra() {
  Outcome o;
  std::mt19937_64 rng(2024);
  double skew = 0.0, idem = 0.0, comm = 0.0;
  for (const Form& f : {Form::euclidean(3), Form::spherical(3), Form::euclidean(4)}) {
    const int m = f.dim();
    for (int t = 0; t < kProbes; ++t) {
      const CVec a = random_cvec(rng, m), b = random_cvec(rng, m), x = random_cvec(rng, m), y = random_cvec(rng, m);
      const CMat w = f.wedge(a, b);
      skew = std::max(skew, std::abs(f.pair(CVec(w * x), y) + f.pair(x, CVec(w * y))) / (1 + w.norm()));
      CMat T = CMat::Zero(m, m);
      for (int s = 0; s < 3; ++s) T += f.wedge(random_cvec(rng, m), random_cvec(rng, m));
      const CMat lhs = commutator(T, w);
      const CMat rhs = f.wedge(T * a, b) + f.wedge(a, T * b);
      comm = std::max(comm, (lhs - rhs).cwiseAbs().maxCoeff() / (1 + lhs.cwiseAbs().maxCoeff()));
      CMat basis(m, 2);
      basis << a, b;
      const Subspace s(f, basis);
      if (s.degenerate()) continue;
      const CMat p = s.projector();
      idem = std::max(idem, (p * p - p).cwiseAbs().maxCoeff());
    }
  }
  o.check(skew < kAlgebra, fmt("skew-adjointness %.3g", skew));
  o.check(idem < kAlgebra, fmt("projector idempotence %.3g", idem));
  o.check(comm < kAlgebra, fmt("commutator identity %.3g", comm));
  if (o.pass) o.detail = fmt("skew %.2g, idempotence %.2g, commutator %.2g", skew, idem, comm);
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto line = [&](int id, const char* name, const std::function<Outcome()>& run) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    if (!o.pass) ++failures;
    const std::string& text = o.pass && o.detail.empty() ? o.notes : o.detail;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, text.c_str());
    std::fflush(stdout);
  };
  line(1, "flatness", flatness);
  line(2, "constrained Willmore equations", cw_equations);
  line(3, "type-1 conserved quantity", type1);
  line(4, "CMC extraction", cmc_extraction);
  line(5, "type-0 and fullness", fullness);
  line(6, "degree raise", degree_raise);
  line(7, "multiplier shift", multiplier_shift);
  line(8, "spectral deformation", spectral);
  std::optional<Patch> pt;
  std::string patch_error;
  try {
    pt = patch();
  } catch (const std::exception& e) {
    patch_error = e.what();
  }
  auto with_patch = [&](Outcome (*f)(const Patch&)) {
    return [&, f]() -> Outcome {
      if (!pt) throw std::runtime_error(patch_error);
      return f(*pt);
    };
  };
  line(9, "Backlund gauge algebra", with_patch(gauge_algebra));
  line(10, "Backlund preservation", with_patch(backlund));
  line(11, "algebra layer", algebra);
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
