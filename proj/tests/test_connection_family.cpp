#include "common.hpp"

#include <gtest/gtest.h>

using namespace cwsurf;
using namespace cwsurf::testing;

namespace {

double grid_max(const Grid<double>& g) {
  double m = 0.0;
  for (double x : g) m = std::max(m, x);
  return m;
}

std::size_t index(const ConformalChart& c, int i, int j) { return static_cast<std::size_t>(i) * c.nv + j; }

}  // namespace

TEST(Family, TrivialAtOne) {
  const Built b = build(exemplar(SurfaceKind::cylinder, 64));
  for (Axis x : {Axis::u, Axis::v})
    for (const CMat& w : b.fam.omega(1.0, x)) ASSERT_EQ(w.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(grid_max(curvature_residual(b.fam, 1.0)), 0.0);
  const auto phi = parallel_transport(b.fam, 1.0, plaquette(3, 4));
  for (const CMat& p : phi) EXPECT_EQ((p - CMat::Identity(5, 5)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Family, RealOnUnitCircle) {
  const Built b = build(exemplar(SurfaceKind::unduloid, 64));
  for (cplx mu : {kI, std::polar(1.0, 0.7), std::polar(1.0, -2.1)}) {
    double worst = 0.0;
    for (Axis x : {Axis::u, Axis::v})
      for (const CMat& w : b.fam.omega(mu, x)) worst = std::max(worst, max_abs_imag(w));
    EXPECT_LT(worst, 1e-12) << mu;
  }
  double off = 0.0;
  for (const CMat& w : b.fam.omega(2.0, Axis::u)) off = std::max(off, max_abs_imag(w));
  EXPECT_GT(off, 1e-3);
}

TEST(Family, MinusOneWithoutMultiplier) {
  Built b = build(exemplar(SurfaceKind::cylinder, 64));
  Grid<CMat> zero(b.fam.qz.nu(), b.fam.qz.nv(), CMat::Zero(5, 5));
  const ConnectionFamily fam = with_multiplier(b.fam, zero, zero);
  const Grid<CMat> wu = fam.omega(-1.0, Axis::u);
  double worst = 0.0;
  for (std::size_t k = 0; k < wu.size(); ++k) worst = std::max(worst, operator_norm(wu[k] + 2.0 * b.sc.Nu[k].cast<cplx>()));
  EXPECT_LT(worst, 1e-13);
}

TEST(Family, ZeroSpectralParameterThrows) {
  const Built b = build(exemplar(SurfaceKind::cylinder, 64));
  EXPECT_THROW(b.fam.omega(0.0, Axis::u), std::domain_error);
  EXPECT_THROW(curvature_residual(b.fam, 0.0), std::domain_error);
}

TEST(Family, SplitsAgainstTheCongruence) {
  // Off-diagonal part of omega is the N-part, diagonal part the q-part.
  const Built b = build(exemplar(SurfaceKind::cylinder, 64));
  const cplx l(0.3, 0.4);
  const auto c = ConnectionFamily::coefficients(l);
  double worst = 0.0;
  for (std::size_t k = 0; k < b.fam.Nz.size(); k += 7) {
    const CMat p = b.S.proj[k].cast<cplx>(), pp = b.S.perp(k).cast<cplx>();
    const CMat w = b.fam.omega_u(c, k);
    const CMat npart = c.a * b.fam.Nz[k] + c.b * b.fam.Nzb[k];
    const CMat qpart = c.c * b.fam.qz[k] + c.e * b.fam.qzb[k];
    worst = std::max(worst, operator_norm(p * w * pp + pp * w * p - npart));
    worst = std::max(worst, operator_norm(p * w * p + pp * w * pp - qpart));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Curvature, ConvergesForCWInput) {
  const std::vector<cplx> lambdas = {kI, -kI, 2.0, 0.5, cplx(0.5, 0.2), cplx(0.3, 0.4)};
  for (SurfaceKind kind : {SurfaceKind::cylinder, SurfaceKind::unduloid}) {
    std::vector<double> worst(2, 0.0);
    double h = 0.0;
    for (int r = 0; r < 2; ++r) {
      const int nu = 64 << r;
      const Built b = build(exemplar(kind, nu), 8 << r);
      for (cplx l : lambdas) worst[r] = std::max(worst[r], wmax(curvature_residual(b.fam, l), b.w));
      h = b.lift.chart.h;
    }
    EXPECT_LT(worst[1], h * h) << to_string(kind);
    EXPECT_GE(std::log2(worst[0] / worst[1]), 1.8) << to_string(kind);
  }
}

TEST(Curvature, PerturbedSurfaceIsNotFlat) {
  const Built b = build(perturbed_cylinder(64, 0.05, 1));
  EXPECT_GT(wmax(curvature_residual(b.fam, kI), b.w), 1e-1);
}

TEST(Transport, PlaquetteHolonomyIsSmall) {
  std::vector<double> worst;
  std::vector<double> hs;
  for (int nu : {64, 128}) {
    const Built b = build(exemplar(SurfaceKind::cylinder, nu), nu / 8);
    double m = 0.0;
    for (int i = b.w.i0; i < b.w.i1 - 1; i += 5)
      for (int j = b.w.j0; j < b.w.j1 - 1; j += 5) {
        const auto phi = parallel_transport(b.fam, kI, plaquette(i, j));
        m = std::max(m, operator_norm(phi.back() - CMat::Identity(5, 5)));
      }
    worst.push_back(m);
    hs.push_back(b.lift.chart.h);
  }
  for (std::size_t r = 0; r < worst.size(); ++r) EXPECT_LT(worst[r], std::pow(hs[r], 3)) << r;
}

TEST(Transport, PreservesFormOverLongPath) {
  const Built b = build(exemplar(SurfaceKind::unduloid, 64));
  std::vector<GridPoint> path;
  for (int i = 0; i < 40; ++i) path.push_back({i, 8});
  for (int j = 9; j < 24; ++j) path.push_back({39, j});
  for (int i = 38; i >= 30; --i) path.push_back({i, 23});
  ASSERT_EQ(path.size(), 64u);
  for (cplx l : {kI, cplx(2.0), cplx(0.3, 0.4)}) {
    const auto phi = parallel_transport(b.fam, l, path);
    double drift = 0.0;
    for (const CMat& p : phi) drift = std::max(drift, b.lift.form().orthogonality_residual(p));
    EXPECT_LT(drift, std::pow(b.lift.chart.h, 4)) << l;
  }
}

TEST(Transport, RejectsBrokenPaths) {
  const Built b = build(exemplar(SurfaceKind::cylinder, 64));
  EXPECT_THROW(parallel_transport(b.fam, kI, {{0, 0}, {1, 1}}), std::invalid_argument);
  EXPECT_THROW(parallel_transport(b.fam, kI, {{0, 0}, {-1, 0}}), std::invalid_argument);
  EXPECT_THROW(parallel_transport(b.fam, kI, {}), std::invalid_argument);
}

TEST(ParallelFrame, IdentityAtOne) {
  const Built b = build(exemplar(SurfaceKind::cylinder, 64));
  const TransportGrid t = parallel_frame(b.fam, 1.0);
  for (const CMat& p : t.op) ASSERT_EQ((p - CMat::Identity(5, 5)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(ParallelFrame, RealAndIsometricOnUnitCircle) {
  const Built b = build(exemplar(SurfaceKind::cylinder, 64));
  const TransportGrid t = parallel_frame(b.fam, std::polar(1.0, std::numbers::pi / 5));
  double imag = 0.0;
  for (const CMat& p : t.op) imag = std::max(imag, max_abs_imag(p));
  EXPECT_LT(imag, 1e-9);
  EXPECT_LT(grid_max(form_drift(b.lift.form(), t.op)), 1e-8);
  const double h = b.lift.chart.h;
  EXPECT_LT(grid_max(t.path_independence), h * h);
}

TEST(ParallelFrame, RejectsOffCircleParameter) {
  const Built b = build(exemplar(SurfaceKind::cylinder, 64));
  try {
    parallel_frame(b.fam, 1.1);
    FAIL();
  } catch (const std::domain_error& e) {
    EXPECT_STREQ(e.what(), "spectral deformation requires unit-circle parameter");
  }
}

TEST(ParallelFrame, PathIndependenceConverges) {
  std::vector<double> r;
  for (int nu : {64, 128}) {
    const Built b = build(exemplar(SurfaceKind::unduloid, nu), nu / 8);
    r.push_back(grid_max(parallel_frame(b.fam, std::polar(1.0, 1.0)).path_independence));
  }
  EXPECT_GE(std::log2(r[0] / r[1]), 1.8) << r[0] << " -> " << r[1];
}

TEST(ParallelFrame, Intertwines) {
  // d(Phi s) = Phi (d s + omega s).
  const Built b = build(exemplar(SurfaceKind::cylinder, 64));
  const cplx mu = std::polar(1.0, 0.9);
  const TransportGrid t = parallel_frame(b.fam, mu, false);
  // Phi is not periodic (holonomy), so stay away from the seam.
  const Window w = seamless(b);
  const Grid<CVec> s = complexify(b.lift.sigma);
  const Grid<CVec> phis = map_grid(t.op, s, [](const CMat& p, const CVec& x) { return CVec(p * x); });
  const auto c = ConnectionFamily::coefficients(mu);
  const Grid<CVec> su = d_du(s, b.lift.chart), sv = d_dv(s, b.lift.chart);
  const Grid<CVec> pu = d_du(phis, b.lift.chart), pv = d_dv(phis, b.lift.chart);
  double worst = 0.0;
  for (int i = w.i0; i < w.i1; ++i)
    for (int j = w.j0; j < w.j1; ++j) {
      const std::size_t k = index(b.lift.chart, i, j);
      worst = std::max(worst, (pu[k] - t.op[k] * (su[k] + b.fam.omega_u(c, k) * s[k])).norm());
      worst = std::max(worst, (pv[k] - t.op[k] * (sv[k] + b.fam.omega_v(c, k) * s[k])).norm());
    }
  EXPECT_LT(worst, b.lift.chart.h * b.lift.chart.h);
}

TEST(ParallelSection, ConstantAtOneAndNullityPreserved) {
  const Built b = build(exemplar(SurfaceKind::cylinder, 64));
  const ConformalChart& c = b.lift.chart;
  const CVec x0 = to_complex(b.lift.sigma(c.nu / 2, c.nv / 2));
  for (const CVec& s : parallel_section(b.fam, 1.0, x0)) ASSERT_EQ((s - x0).cwiseAbs().maxCoeff(), 0.0);
  for (cplx l : {kI, cplx(2.0), cplx(-1.5, 0.5)}) {
    const Grid<CVec> s = parallel_section(b.fam, l, x0);
    double drift = 0.0;
    for (const CVec& x : s) drift = std::max(drift, std::abs(b.lift.form().pair(x, x)));
    EXPECT_LT(drift, std::pow(c.h, 4)) << l;
    EXPECT_LT(wmax(section_residual(b.fam, l, s), seamless(b)), c.h * c.h) << l;
  }
}
