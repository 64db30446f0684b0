#pragma once

// Conformal immersions lifted to the light cone.

#include "cwsurf/chart.hpp"
#include "cwsurf/minkowski.hpp"
#include "cwsurf/stencil.hpp"

#include <numbers>
#include <optional>

namespace cwsurf {

/// Space form S_{v_inf} = {v null : (v, v_inf) = -1}.
struct SpaceForm {
  Form form;
  RVec v_inf;

  /// Sectional curvature -(v_inf, v_inf).
  double curvature() const { return -form.pair(v_inf, v_inf); }

  /// Euclidean space for the Euclidean basis, the unit sphere for the
  /// spherical one.
  static SpaceForm standard(Model m, int n) {
    SpaceForm s{Form::make(m, n), RVec()};
    s.v_inf = s.form.v_inf();
    return s;
  }

  bool is_standard() const { return (v_inf - form.v_inf()).cwiseAbs().maxCoeff() == 0.0; }

  void validate() const {
    if (v_inf.size() != form.dim()) throw InputError("space form vector has wrong dimension");
    if (!v_inf.allFinite()) throw InputError("space form vector is not finite");
    if (v_inf.norm() == 0.0) throw InputError("space form vector must be non-zero");
  }
};

/// Grid of null vectors sigma normalised against the space form.
struct LightConeLift {
  ConformalChart chart;
  SpaceForm spaceform;
  Grid<RVec> sigma;
  /// Conformality measured with analytic derivatives, when produced by a
  /// generator.
  std::optional<double> generator_conformality;

  const Form& form() const { return spaceform.form; }
  int n() const { return spaceform.form.n(); }
};

inline Grid<CVec> complexify(const Grid<RVec>& g) {
  return map_grid(g, [](const RVec& x) { return to_complex(x); });
}

/// sigma / -(sigma, v_inf).
inline RVec normalize_against(const Form& form, const RVec& sigma, const RVec& v_inf) {
  const double s = -form.pair(sigma, v_inf);
  if (std::abs(s) < 1e-300 || !std::isfinite(s)) throw GeometryError("lift meets the boundary of the space form");
  return sigma / s;
}

/// Nearly null x moved along v_inf onto the light cone, then normalised
/// against v_inf.
inline RVec cone_point(const Form& form, const RVec& x, const RVec& v_inf) {
  const RVec y = normalize_against(form, x, v_inf);
  const double t = form.pair(y, y) / 2.0;  // (y, v_inf) = -1
  return normalize_against(form, RVec(y + t * v_inf), v_inf);
}

/// Checks nullity, normalisation and immersion. Throws GeometryError.
inline void validate_lift(const LightConeLift& lift, double tol = 1e-10) {
  lift.chart.validate();
  lift.spaceform.validate();
  const Form& f = lift.form();
  if (lift.sigma.nu() != lift.chart.nu || lift.sigma.nv() != lift.chart.nv) {
    throw InputError("lift: sigma grid does not match the chart dimensions");
  }
  for (int i = 0; i < lift.chart.nu; ++i) {
    for (int j = 0; j < lift.chart.nv; ++j) {
      const RVec& s = lift.sigma(i, j);
      if (s.size() != f.dim()) throw InputError("lift: sigma vector of wrong dimension at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      if (!s.allFinite()) throw InputError("lift: non-finite sigma at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      const double scale = std::max(1.0, s.squaredNorm());
      const double null_res = std::abs(f.pair(s, s)) / scale;
      const double norm_res = std::abs(f.pair(s, lift.spaceform.v_inf) + 1.0);
      if (null_res > tol || norm_res > tol * std::sqrt(scale)) {
        std::ostringstream os;
        os << "lift invariant violated at (" << i << ", " << j << "): (sigma, sigma) residual " << null_res
           << ", (sigma, v_inf) + 1 = " << norm_res;
        throw GeometryError(os.str());
      }
    }
  }
  const Grid<RVec> su = d_du(lift.sigma, lift.chart);
  const Grid<RVec> sv = d_dv(lift.sigma, lift.chart);
  for (std::size_t k = 0; k < su.size(); ++k) {
    const double a = f.pair(su[k], su[k]), b = f.pair(su[k], sv[k]), c = f.pair(sv[k], sv[k]);
    if (!(a * c - b * b > 1e-12 * std::max(1e-300, a * c))) {
      std::ostringstream os;
      os << "lift is not immersed at (" << k / lift.chart.nv << ", " << k % lift.chart.nv << ")";
      throw GeometryError(os.str());
    }
  }
}

/// Lift of a space-form point: v_0 + x + |x|^2/2 v_inf (Euclidean, x in R^n)
/// or x + e_{n+2} (spherical, x in S^n in R^{n+1}).
inline RVec lift_point(const Form& f, const RVec& x) {
  RVec s = RVec::Zero(f.dim());
  if (f.model() == Model::euclidean) {
    if (x.size() != f.n()) throw InputError("Euclidean point must have " + std::to_string(f.n()) + " coordinates");
    s.head(f.n()) = x;
    s(f.n()) = 1.0;
    s(f.n() + 1) = 0.5 * x.squaredNorm();
  } else {
    if (x.size() != f.n() + 1) throw InputError("spherical point must have " + std::to_string(f.n() + 1) + " coordinates");
    s.head(f.n() + 1) = x;
    s(f.n() + 1) = 1.0;
  }
  return s;
}

/// Lifts a grid of space-form points. The space form must be the standard
/// one of its model.
inline LightConeLift lift_immersion(const Grid<RVec>& points, const ConformalChart& chart, const SpaceForm& sf,
                                    double tol = 1e-8) {
  chart.validate();
  if (!sf.is_standard()) throw InputError("lift_immersion: only the standard space form of each model is supported");
  if (points.nu() != chart.nu || points.nv() != chart.nv) throw InputError("lift_immersion: point grid does not match chart");
  LightConeLift lift{chart, sf, Grid<RVec>(chart.nu, chart.nv), std::nullopt};
  for (int i = 0; i < chart.nu; ++i) {
    for (int j = 0; j < chart.nv; ++j) {
      const RVec& x = points(i, j);
      if (!x.allFinite()) throw InputError("lift_immersion: non-finite point at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      if (sf.form.model() == Model::spherical && std::abs(x.norm() - 1.0) > tol) {
        std::ostringstream os;
        os << "lift_immersion: point (" << i << ", " << j << ") violates |x| = 1 by " << std::abs(x.norm() - 1.0);
        throw InputError(os.str());
      }
      lift.sigma(i, j) = lift_point(sf.form, x);
    }
  }
  return lift;
}

/// Inverse of lift_immersion: Euclidean coordinates, or points of the unit
/// sphere, read off after normalising against the standard v_inf.
inline Grid<RVec> recover_points(const LightConeLift& lift) {
  const Form& f = lift.form();
  const RVec vstd = f.v_inf();
  return map_grid(lift.sigma, [&](const RVec& s) -> RVec {
    const RVec t = normalize_against(f, s, vstd);
    return f.model() == Model::euclidean ? RVec(t.head(f.n())) : RVec(t.head(f.n() + 1));
  });
}

/// |(sigma_z, sigma_z)| / (sigma_z, conj sigma_z) from finite differences.
/// Vanishes exactly when z is a conformal coordinate.
inline Grid<double> conformality_residual(const LightConeLift& lift) {
  const Form& f = lift.form();
  const Grid<CVec> sz = dz(complexify(lift.sigma), lift.chart);
  return map_grid(sz, [&](const CVec& a) {
    const double den = std::abs(f.pair(a, CVec(a.conjugate())));
    return std::abs(f.pair(a, a)) / std::max(den, 1e-300);
  });
}

// ---------------------------------------------------------------------------
// Generators

enum class SurfaceKind { cylinder, sphere, unduloid, clifford_torus };

inline std::string to_string(SurfaceKind k) {
  switch (k) {
    case SurfaceKind::cylinder: return "cylinder";
    case SurfaceKind::sphere: return "sphere";
    case SurfaceKind::unduloid: return "unduloid";
    case SurfaceKind::clifford_torus: return "clifford_torus";
  }
  return "?";
}

inline SurfaceKind surface_kind_from_string(const std::string& s) {
  if (s == "cylinder") return SurfaceKind::cylinder;
  if (s == "sphere") return SurfaceKind::sphere;
  if (s == "unduloid") return SurfaceKind::unduloid;
  if (s == "clifford_torus") return SurfaceKind::clifford_torus;
  throw InputError("unknown surface kind '" + s + "'");
}

struct SurfaceParams {
  /// Cylinder and sphere radius.
  double radius = 1.0;
  /// Unduloid neck and bulge radii, 0 < neck < bulge.
  double neck = 0.3;
  double bulge = 0.7;
  /// Dimension n of the ambient space form (extra coordinates are zero).
  int ambient_n = 3;
};

/// Model used by each generator.
inline Model model_of(SurfaceKind k) { return k == SurfaceKind::clifford_torus ? Model::spherical : Model::euclidean; }

/// Profile of the Delaunay unduloid in the conformal parameter t
/// (metric r^2 (dt^2 + dtheta^2)); phi is the angle of the meridian.
struct UnduloidProfile {
  double a, b, H;

  struct State {
    double r, z, phi;
  };

  UnduloidProfile(double neck, double bulge) : a(neck), b(bulge), H(1.0 / (neck + bulge)) {}

  State rhs(const State& s) const {
    return {s.r * std::sin(s.phi), s.r * std::cos(s.phi), std::cos(s.phi) - 2.0 * H * s.r};
  }

  State step(const State& s, double dt) const {
    auto add = [](const State& x, const State& k, double c) { return State{x.r + c * k.r, x.z + c * k.z, x.phi + c * k.phi}; };
    const State k1 = rhs(s);
    const State k2 = rhs(add(s, k1, dt / 2));
    const State k3 = rhs(add(s, k2, dt / 2));
    const State k4 = rhs(add(s, k3, dt));
    return {s.r + dt / 6 * (k1.r + 2 * k2.r + 2 * k3.r + k4.r), s.z + dt / 6 * (k1.z + 2 * k2.z + 2 * k3.z + k4.z),
            s.phi + dt / 6 * (k1.phi + 2 * k2.phi + 2 * k3.phi + k4.phi)};
  }

  /// r cos(phi) - H r^2, constant along exact solutions.
  double first_integral(const State& s) const { return s.r * std::cos(s.phi) - H * s.r * s.r; }

  /// States at t = t0 + j h, j < count, integrated from the neck at t = 0
  /// with substep at most h / 10.
  std::vector<State> sample(double t0, double h, int count) const {
    State s{a, 0.0, 0.0};
    const int nsub0 = std::max(1, static_cast<int>(std::ceil(std::abs(t0) / (h / 10))));
    for (int k = 0; k < nsub0; ++k) s = step(s, t0 / nsub0);
    std::vector<State> out;
    out.reserve(count);
    out.push_back(s);
    for (int j = 1; j < count; ++j) {
      for (int k = 0; k < 10; ++k) s = step(s, h / 10);
      out.push_back(s);
    }
    return out;
  }
};

namespace detail {

struct Sample {
  RVec x, xu, xv;
};

inline void check_period(const ConformalChart& c, double period, const char* what) {
  if (c.periodic_u && std::abs(c.period_u() - period) > 1e-9 * period) {
    std::ostringstream os;
    os << what << ": periodic chart needs nu * h = " << period << " (got " << c.period_u() << ")";
    throw InputError(os.str());
  }
}

}  // namespace detail

/// Conformally parametrised exemplar surface, lifted to the light cone.
inline LightConeLift make_surface(SurfaceKind kind, const SurfaceParams& p, const ConformalChart& chart) {
  chart.validate();
  const std::string name = to_string(kind);
  const int n = p.ambient_n;
  if (n < 3 || n + 2 > kMaxDim) throw InputError(name + ": ambient dimension must be between 3 and " + std::to_string(kMaxDim - 2));
  const Model model = model_of(kind);
  const SpaceForm sf = SpaceForm::standard(model, n);
  const int m = model == Model::euclidean ? n : n + 1;  // coordinates of a point

  std::vector<UnduloidProfile::State> profile;
  std::optional<UnduloidProfile> und;
  switch (kind) {
    case SurfaceKind::cylinder:
      if (!(p.radius > 0)) throw InputError("cylinder: radius must be positive");
      detail::check_period(chart, 2 * std::numbers::pi * p.radius, "cylinder");
      break;
    case SurfaceKind::sphere:
      if (!(p.radius > 0)) throw InputError("sphere: radius must be positive");
      detail::check_period(chart, 2 * std::numbers::pi, "sphere");
      break;
    case SurfaceKind::clifford_torus:
      detail::check_period(chart, 2 * std::numbers::pi, "clifford_torus");
      break;
    case SurfaceKind::unduloid: {
      if (!(p.neck > 0 && p.neck < p.bulge)) throw InputError("unduloid: need 0 < neck < bulge");
      detail::check_period(chart, 2 * std::numbers::pi, "unduloid");
      und.emplace(p.neck, p.bulge);
      profile = und->sample(chart.v0, chart.h, chart.nv);
      const double i0 = und->first_integral({p.neck, 0.0, 0.0});
      double drift = 0.0;
      for (const auto& s : profile) drift = std::max(drift, std::abs(und->first_integral(s) - i0));
      if (drift > 1e-10) {
        std::ostringstream os;
        os << "unduloid: profile integration drift " << drift << " exceeds 1e-10; reduce h";
        throw GeometryError(os.str());
      }
      break;
    }
  }

  auto sample = [&](int i, int j) {
    const double u = chart.u(i), v = chart.v(j);
    detail::Sample s{RVec::Zero(m), RVec::Zero(m), RVec::Zero(m)};
    switch (kind) {
      case SurfaceKind::cylinder: {
        const double r = p.radius, c = std::cos(u / r), sn = std::sin(u / r);
        s.x(0) = r * c, s.x(1) = r * sn, s.x(2) = v;
        s.xu(0) = -sn, s.xu(1) = c;
        s.xv(2) = 1.0;
        break;
      }
      case SurfaceKind::sphere: {
        // Mercator chart: conformal factor R sech v.
        const double R = p.radius, c = std::cos(u), sn = std::sin(u);
        const double sech = 1.0 / std::cosh(v), th = std::tanh(v);
        s.x(0) = R * c * sech, s.x(1) = R * sn * sech, s.x(2) = R * th;
        s.xu(0) = -R * sn * sech, s.xu(1) = R * c * sech;
        s.xv(0) = -R * c * sech * th, s.xv(1) = -R * sn * sech * th, s.xv(2) = R * sech * sech;
        break;
      }
      case SurfaceKind::clifford_torus: {
        const double k = 1.0 / std::sqrt(2.0);
        s.x(0) = k * std::cos(u), s.x(1) = k * std::sin(u), s.x(2) = k * std::cos(v), s.x(3) = k * std::sin(v);
        s.xu(0) = -k * std::sin(u), s.xu(1) = k * std::cos(u);
        s.xv(2) = -k * std::sin(v), s.xv(3) = k * std::cos(v);
        break;
      }
      case SurfaceKind::unduloid: {
        const auto& st = profile[j];
        const auto d = und->rhs(st);
        const double c = std::cos(u), sn = std::sin(u);
        s.x(0) = st.r * c, s.x(1) = st.r * sn, s.x(2) = st.z;
        s.xu(0) = -st.r * sn, s.xu(1) = st.r * c;
        s.xv(0) = d.r * c, s.xv(1) = d.r * sn, s.xv(2) = d.z;
        break;
      }
    }
    return s;
  };

  LightConeLift lift{chart, sf, Grid<RVec>(chart.nu, chart.nv), 0.0};
  double worst = 0.0;
  for (int i = 0; i < chart.nu; ++i) {
    for (int j = 0; j < chart.nv; ++j) {
      const detail::Sample s = sample(i, j);
      lift.sigma(i, j) = lift_point(sf.form, s.x);
      const double e = s.xu.squaredNorm(), g = s.xv.squaredNorm(), f = s.xu.dot(s.xv);
      worst = std::max(worst, std::hypot(e - g, 2 * f) / (e + g));
    }
  }
  lift.generator_conformality = worst;
  if (worst > 1e-6) {
    std::ostringstream os;
    os << name << ": generated parametrisation is not conformal (residual " << worst << ")";
    throw GeometryError(os.str());
  }
  return lift;
}

/// Mean curvature |H| of the exemplar surfaces, from their classical
/// principal curvatures.
inline double exemplar_mean_curvature(SurfaceKind kind, const SurfaceParams& p) {
  switch (kind) {
    case SurfaceKind::cylinder: return 0.5 / p.radius;
    case SurfaceKind::sphere: return 1.0 / p.radius;
    case SurfaceKind::unduloid: return 1.0 / (p.neck + p.bulge);
    case SurfaceKind::clifford_torus: return 0.0;
  }
  return 0.0;
}

}  // namespace cwsurf
