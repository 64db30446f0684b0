#pragma once

#include "cwsurf/cwsurf.hpp"

#include <random>

namespace cwsurf::testing {

/// Periodic chart around a full turn with nu points and nv = nu / 2 rows
/// centred on v = 0.
inline ConformalChart turn_chart(int nu, double period = 2 * std::numbers::pi) {
  ConformalChart c;
  c.nu = nu;
  c.nv = nu / 2;
  c.h = period / nu;
  c.periodic_u = true;
  c.v0 = -c.h * (c.nv - 1) / 2.0;
  return c;
}

/// Non-periodic square patch [-L/2, L/2]^2 with n points per side.
inline ConformalChart patch_chart(int n, double L = 2.0) {
  ConformalChart c;
  c.nu = c.nv = n;
  c.h = L / (n - 1);
  c.u0 = c.v0 = -L / 2;
  return c;
}

inline LightConeLift exemplar(SurfaceKind k, int nu, int ambient_n = 3) {
  SurfaceParams p;
  p.ambient_n = ambient_n;
  return make_surface(k, p, turn_chart(nu));
}

/// Full chain S, D + N, q_inf, family for a lift.
struct Built {
  LightConeLift lift;
  SphereCongruence S;
  SplitConnection sc;
  MeanCurvatureData mc;
  ConnectionFamily fam;
  Window w;
};

inline Built build(const LightConeLift& lift, int margin = 8) {
  Built b{lift, central_sphere_congruence(lift), {}, {}, {}, Window::interior(lift.chart, margin)};
  b.sc = split_connection(b.S);
  b.mc = mean_curvature(lift, b.S);
  multiplier_q_infty(b.mc, b.sc, b.w, 1e-2);
  b.fam = assemble(b.sc);
  return b;
}

/// Type-1 quantity with the parallel-mean-curvature check at h^2.
inline LaurentPolySection type1_of(const Built& b) {
  return build_type1(b.mc, b.sc, b.w, b.lift.chart.h * b.lift.chart.h);
}

/// The window with the periodic seam removed, for fields integrated
/// outward from the chart centre.
inline Window seamless(const Built& b, int margin = 8) {
  Window w = b.w;
  if (b.lift.chart.periodic_u) {
    w.i0 = margin;
    w.i1 = b.lift.chart.nu - margin;
  }
  return w;
}

inline double wmax(const Grid<double>& g, const Window& w) { return field_stats(g, w).max; }

inline CVec random_cvec(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CVec x(m);
  for (int k = 0; k < m; ++k) x(k) = cplx(u(rng), u(rng));
  return x;
}

inline RVec random_rvec(std::mt19937_64& rng, int m) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  RVec x(m);
  for (int k = 0; k < m; ++k) x(k) = u(rng);
  return x;
}

/// Cylinder points moved by amplitude * uniform noise and re-lifted.
inline LightConeLift perturbed_cylinder(int nu, double amplitude, std::uint64_t seed) {
  const LightConeLift clean = exemplar(SurfaceKind::cylinder, nu);
  Grid<RVec> x = recover_points(clean);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (RVec& p : x)
    for (Eigen::Index k = 0; k < p.size(); ++k) p(k) += amplitude * u(rng);
  return lift_immersion(x, clean.chart, clean.spaceform);
}

}  // namespace cwsurf::testing
