#pragma once

// The family of flat connections d + omega(lambda) and parallel transport.

#include "cwsurf/congruence.hpp"

namespace cwsurf {

/// omega(lambda) = (lambda - 1) N^{1,0} + (1/lambda - 1) N^{0,1}
///               + (lambda^2 - 1) q^{1,0} + (1/lambda^2 - 1) q^{0,1}
/// so that d^lambda_q = d + omega(lambda).
struct ConnectionFamily {
  ConformalChart chart;
  Form form;
  /// dz and dzbar components: N^{1,0} = N_z dz, N^{0,1} = N_zbar dzbar.
  Grid<CMat> Nz, Nzb, qz, qzb;

  struct Coefficients {
    cplx a, b, c, e;
  };

  static Coefficients coefficients(cplx lambda) {
    if (lambda == cplx(0.0)) throw std::domain_error("connection family evaluated at lambda = 0");
    if (!std::isfinite(lambda.real()) || !std::isfinite(lambda.imag())) {
      throw std::domain_error("connection family evaluated at lambda = infinity");
    }
    const cplx inv = 1.0 / lambda;
    return {lambda - 1.0, inv - 1.0, lambda * lambda - 1.0, inv * inv - 1.0};
  }

  /// omega(lambda)(d/du) at point k.
  CMat omega_u(const Coefficients& c, std::size_t k) const { return c.a * Nz[k] + c.b * Nzb[k] + c.c * qz[k] + c.e * qzb[k]; }

  /// omega(lambda)(d/dv) at point k.
  CMat omega_v(const Coefficients& c, std::size_t k) const {
    return kI * (c.a * Nz[k] - c.b * Nzb[k] + c.c * qz[k] - c.e * qzb[k]);
  }

  Grid<CMat> omega(cplx lambda, Axis x) const {
    const Coefficients c = coefficients(lambda);
    Grid<CMat> out(chart.nu, chart.nv);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = x == Axis::u ? omega_u(c, k) : omega_v(c, k);
    return out;
  }

  int dim() const { return form.dim(); }
};

inline ConnectionFamily assemble(const SplitConnection& sc) {
  ConnectionFamily fam{sc.chart, sc.form, Grid<CMat>(sc.chart.nu, sc.chart.nv), Grid<CMat>(sc.chart.nu, sc.chart.nv), sc.q10,
                       sc.q01};
  for (std::size_t k = 0; k < fam.Nz.size(); ++k) {
    fam.Nz[k] = sc.N10(k);
    fam.Nzb[k] = sc.N01(k);
  }
  return fam;
}

/// Same family with the multiplier replaced.
inline ConnectionFamily with_multiplier(ConnectionFamily fam, const Grid<CMat>& q10, const Grid<CMat>& q01) {
  if (!q10.same_shape(fam.qz) || !q01.same_shape(fam.qzb)) throw std::invalid_argument("with_multiplier: shape mismatch");
  fam.qz = q10;
  fam.qzb = q01;
  return fam;
}

/// Pointwise operator norm of F = d_u omega_v - d_v omega_u + [omega_u, omega_v].
inline Grid<double> curvature_residual(const ConnectionFamily& fam, cplx lambda) {
  const Grid<CMat> wu = fam.omega(lambda, Axis::u);
  const Grid<CMat> wv = fam.omega(lambda, Axis::v);
  const Grid<CMat> a = d_du(wv, fam.chart);
  const Grid<CMat> b = d_dv(wu, fam.chart);
  Grid<double> out(fam.chart.nu, fam.chart.nv);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = operator_norm(a[k] - b[k] + commutator(wu[k], wv[k]));
  return out;
}

/// Grid of operators produced by integrating along the chart.
struct TransportGrid {
  Grid<CMat> op;
  int base_i = 0, base_j = 0;
  /// |T_row - T_col| per point when both sweeps were run.
  Grid<double> path_independence;
};

struct GridPoint {
  int i, j;
  bool operator==(const GridPoint&) const = default;
};

namespace detail {

// Samples of a matrix-valued coefficient along one grid line, with cubic
// midpoint interpolation.
class LineCoefficient {
 public:
  LineCoefficient(const Grid<CMat>& field, Axis axis, int fixed) : field_(field), axis_(axis), fixed_(fixed) {
    n_ = axis == Axis::u ? field.nu() : field.nv();
  }

  const CMat& at(int m) const { return axis_ == Axis::u ? field_(m, fixed_) : field_(fixed_, m); }

  /// Value halfway between nodes m and m + 1.
  CMat mid(int m) const {
    if (m >= 1 && m + 2 < n_) return (-at(m - 1) + 9.0 * at(m) + 9.0 * at(m + 1) - at(m + 2)) / 16.0;
    if (m == 0) return (5.0 * at(0) + 15.0 * at(1) - 5.0 * at(2) + at(3)) / 16.0;
    return (5.0 * at(m + 1) + 15.0 * at(m) - 5.0 * at(m - 1) + at(m - 2)) / 16.0;
  }

  int size() const { return n_; }

 private:
  const Grid<CMat>& field_;
  Axis axis_;
  int fixed_;
  int n_;
};

enum class Side { right, left };

// One RK4 step of Y' = Y A (right) or Y' = -A Y (left) from node m to m + dir.
inline CMat rk4_step(const CMat& y, const LineCoefficient& a, int m, int dir, double h, Side side) {
  const int m1 = m + dir;
  const CMat& a0 = a.at(m);
  const CMat am = a.mid(std::min(m, m1));
  const CMat& a1 = a.at(m1);
  const double dt = dir * h;
  auto f = [&](const CMat& x, const CMat& c) -> CMat { return side == Side::right ? CMat(x * c) : CMat(-c * x); };
  const CMat k1 = f(y, a0);
  const CMat k2 = f(y + 0.5 * dt * k1, am);
  const CMat k3 = f(y + 0.5 * dt * k2, am);
  const CMat k4 = f(y + dt * k3, a1);
  return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline void sweep_line(Grid<CMat>& out, const LineCoefficient& a, Axis axis, int fixed, int start, double h, Side side) {
  auto ref = [&](int m) -> CMat& { return axis == Axis::u ? out(m, fixed) : out(fixed, m); };
  for (int m = start; m + 1 < a.size(); ++m) ref(m + 1) = rk4_step(ref(m), a, m, +1, h, side);
  for (int m = start; m - 1 >= 0; --m) ref(m - 1) = rk4_step(ref(m), a, m, -1, h, side);
}

// Integrates from the base along the first axis, then along the second.
inline Grid<CMat> sweep(const Grid<CMat>& wu, const Grid<CMat>& wv, const ConformalChart& c, int bi, int bj, Axis first,
                        Side side, const CMat& init) {
  Grid<CMat> out(c.nu, c.nv, init);
  if (first == Axis::u) {
    sweep_line(out, LineCoefficient(wu, Axis::u, bj), Axis::u, bj, bi, c.h, side);
    for (int i = 0; i < c.nu; ++i) sweep_line(out, LineCoefficient(wv, Axis::v, i), Axis::v, i, bj, c.h, side);
  } else {
    sweep_line(out, LineCoefficient(wv, Axis::v, bi), Axis::v, bi, bj, c.h, side);
    for (int j = 0; j < c.nv; ++j) sweep_line(out, LineCoefficient(wu, Axis::u, j), Axis::u, j, bi, c.h, side);
  }
  return out;
}

inline TransportGrid transport_grid(const ConnectionFamily& fam, cplx lambda, Side side, bool both) {
  const ConformalChart& c = fam.chart;
  const Grid<CMat> wu = fam.omega(lambda, Axis::u);
  const Grid<CMat> wv = fam.omega(lambda, Axis::v);
  const CMat id = CMat::Identity(fam.dim(), fam.dim());
  TransportGrid t;
  t.base_i = c.nu / 2;
  t.base_j = c.nv / 2;
  t.op = sweep(wu, wv, c, t.base_i, t.base_j, Axis::u, side, id);
  if (both) {
    const Grid<CMat> other = sweep(wu, wv, c, t.base_i, t.base_j, Axis::v, side, id);
    t.path_independence = map_grid(t.op, other, [](const CMat& a, const CMat& b) { return operator_norm(a - b); });
  }
  return t;
}

}  // namespace detail

/// Solves d Phi = Phi omega(lambda) along a 4-connected path of grid
/// points, Phi(start) = I. Returns Phi at every path point.
inline std::vector<CMat> parallel_transport(const ConnectionFamily& fam, cplx lambda, const std::vector<GridPoint>& path) {
  if (path.empty()) throw std::invalid_argument("parallel_transport: empty path");
  const ConformalChart& c = fam.chart;
  for (const GridPoint& p : path) {
    if (p.i < 0 || p.i >= c.nu || p.j < 0 || p.j >= c.nv) throw std::invalid_argument("parallel_transport: path leaves the grid");
  }
  const Grid<CMat> wu = fam.omega(lambda, Axis::u);
  const Grid<CMat> wv = fam.omega(lambda, Axis::v);
  std::vector<CMat> out;
  out.reserve(path.size());
  out.push_back(CMat::Identity(fam.dim(), fam.dim()));
  for (std::size_t s = 1; s < path.size(); ++s) {
    const GridPoint a = path[s - 1], b = path[s];
    const int di = b.i - a.i, dj = b.j - a.j;
    if (std::abs(di) + std::abs(dj) != 1) throw std::invalid_argument("parallel_transport: path is not 4-connected");
    if (di != 0) {
      out.push_back(detail::rk4_step(out.back(), detail::LineCoefficient(wu, Axis::u, a.j), a.i, di, c.h, detail::Side::right));
    } else {
      out.push_back(detail::rk4_step(out.back(), detail::LineCoefficient(wv, Axis::v, a.i), a.j, dj, c.h, detail::Side::right));
    }
  }
  return out;
}

/// Boundary of the plaquette with lower corner (i, j), traversed once
/// counter-clockwise and returning to the start.
inline std::vector<GridPoint> plaquette(int i, int j) { return {{i, j}, {i + 1, j}, {i + 1, j + 1}, {i, j + 1}, {i, j}}; }

/// Phi with d Phi = Phi omega(lambda), Phi(base) = I, base at the chart
/// centre; rows first, with the column-first sweep as a path-independence
/// check.
inline TransportGrid transport_frame(const ConnectionFamily& fam, cplx lambda, bool check_paths = true) {
  return detail::transport_grid(fam, lambda, detail::Side::right, check_paths);
}

/// The isometry phi^mu_q for |mu| = 1.
inline TransportGrid parallel_frame(const ConnectionFamily& fam, cplx mu, bool check_paths = true) {
  if (std::abs(std::abs(mu) - 1.0) > 1e-12) throw std::domain_error("spectral deformation requires unit-circle parameter");
  return transport_frame(fam, mu, check_paths);
}

/// Psi with d Psi = -omega(lambda) Psi, Psi(base) = I; Psi x0 is the
/// d^lambda_q-parallel section through x0.
inline TransportGrid section_transport(const ConnectionFamily& fam, cplx lambda, bool check_paths = false) {
  return detail::transport_grid(fam, lambda, detail::Side::left, check_paths);
}

/// The d^lambda_q-parallel section with value x0 at the chart centre.
inline Grid<CVec> parallel_section(const ConnectionFamily& fam, cplx lambda, const CVec& x0) {
  if (x0.size() != fam.dim()) throw std::invalid_argument("parallel_section: x0 has wrong dimension");
  const TransportGrid t = section_transport(fam, lambda);
  return map_grid(t.op, [&](const CMat& psi) { return CVec(psi * x0); });
}

/// |d_X Phi - Phi omega_X| per point (max over X = u, v).
inline Grid<double> frame_equation_residual(const ConnectionFamily& fam, cplx lambda, const Grid<CMat>& phi) {
  const Grid<CMat> pu = d_du(phi, fam.chart);
  const Grid<CMat> pv = d_dv(phi, fam.chart);
  const auto c = ConnectionFamily::coefficients(lambda);
  Grid<double> out(fam.chart.nu, fam.chart.nv);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = std::max(operator_norm(pu[k] - phi[k] * fam.omega_u(c, k)), operator_norm(pv[k] - phi[k] * fam.omega_v(c, k)));
  }
  return out;
}

/// |d_X s + omega_X s| per point (max over X = u, v).
inline Grid<double> section_residual(const ConnectionFamily& fam, cplx lambda, const Grid<CVec>& s) {
  const Grid<CVec> su = d_du(s, fam.chart);
  const Grid<CVec> sv = d_dv(s, fam.chart);
  const auto c = ConnectionFamily::coefficients(lambda);
  Grid<double> out(fam.chart.nu, fam.chart.nv);
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = std::max((su[k] + fam.omega_u(c, k) * s[k]).norm(), (sv[k] + fam.omega_v(c, k) * s[k]).norm());
  }
  return out;
}

/// Failure of each operator to preserve the pairing.
inline Grid<double> form_drift(const Form& f, const Grid<CMat>& op) {
  return map_grid(op, [&](const CMat& t) { return f.orthogonality_residual(t); });
}

}  // namespace cwsurf
