#pragma once

// Certification pipeline shared by the command line front-end and the
// acceptance runner: builds S, D + N, q, the connection family and the
// type-1 quantity of a lift and certifies them, with observed orders taken
// against the same surface on every second grid point.

#include "cwsurf/io.hpp"
#include "cwsurf/transforms.hpp"

#include <cstdio>

namespace cwsurf {

/// Default spectral parameters: four on the unit circle, four off it.
inline std::vector<cplx> default_lambdas() {
  return {cplx(0, 1), cplx(0, -1), std::polar(1.0, std::numbers::pi / 5), cplx(-1, 0),
          cplx(2, 0), cplx(0.5, 0), cplx(0.3, 0.4),   cplx(-1.5, 0.5)};
}

/// Short label for a complex number, used in certificate names.
inline std::string label_complex(cplx z) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g%c%gi", z.real(), std::signbit(z.imag()) ? '-' : '+', std::abs(z.imag()));
  return buf;
}

struct AnalysisOptions {
  Tolerances tol;
  std::vector<cplx> lambdas = default_lambdas();
  /// Repeat the differential checks on the half-resolution grid.
  bool estimate_order = true;
  /// Residuals below this carry no order information.
  double noise_floor = 1e-9;
  /// The observed order is enforced only for residuals above this fraction
  /// of their C h^2 bound; smaller ones may sit on a defect of the data.
  double order_gate = 1e-2;
  /// Classical H^2 of the input, when known.
  std::optional<double> oracle_H2;

  void validate() const {
    tol.validate();
    if (lambdas.empty()) throw InputError("at least one spectral parameter is required");
    for (cplx l : lambdas)
      if (l == cplx(0.0) || !std::isfinite(std::abs(l))) throw InputError("spectral parameters must be finite and non-zero");
    if (!(noise_floor > 0) || !(order_gate > 0)) throw InputError("noise floor and order gate must be positive");
  }
};

/// Everything derived from one lift.
struct SurfaceData {
  LightConeLift lift;
  SphereCongruence S;
  SplitConnection sc;
  MeanCurvatureData mc;
  OneForm eta;
  ConnectionFamily fam;
  Window w;
  MultiplierReport multiplier;
  /// True when q_inf vanishes and the surface is treated as Willmore.
  bool willmore = false;
  std::optional<LaurentPolySection> p;
  std::string p_error;
  /// Residual fields that converge with h, keyed by certificate name.
  std::vector<std::pair<std::string, Grid<double>>> differential;
};

/// Every second grid point of a lift (h doubled).
inline LightConeLift subsample(const LightConeLift& lift) {
  const ConformalChart& c = lift.chart;
  if (c.periodic_u && c.nu % 2 != 0) throw InputError("subsample: periodic grids need an even Nu");
  ConformalChart cc = c;
  cc.h = 2 * c.h;
  cc.nu = c.periodic_u ? c.nu / 2 : (c.nu + 1) / 2;
  cc.nv = (c.nv + 1) / 2;
  cc.validate();
  LightConeLift out{cc, lift.spaceform, Grid<RVec>(cc.nu, cc.nv), std::nullopt};
  for (int i = 0; i < cc.nu; ++i)
    for (int j = 0; j < cc.nv; ++j) out.sigma(i, j) = lift.sigma(2 * i, 2 * j);
  return out;
}

inline SurfaceData build_surface_data(const LightConeLift& lift, const AnalysisOptions& opt) {
  validate_lift(lift);
  SurfaceData d;
  d.lift = lift;
  const ConformalChart& c = lift.chart;
  const double diff = opt.tol.differential(c.h);
  d.w = Window::interior(c, opt.tol.margin);
  d.S = central_sphere_congruence(lift);
  d.sc = split_connection(d.S);
  d.mc = mean_curvature(lift, d.S);
  d.multiplier = multiplier_q_infty(d.mc, d.sc, d.w, diff);
  d.eta = isothermic_eta(d.mc, d.sc);
  double qmax = 0.0;
  for (int i = d.w.i0; i < d.w.i1; ++i)
    for (int j = d.w.j0; j < d.w.j1; ++j) qmax = std::max(qmax, operator_norm(d.sc.q10(i, j)));
  if (qmax <= diff) {
    d.willmore = true;
    const int m = lift.form().dim();
    d.sc.q10 = Grid<CMat>(c.nu, c.nv, CMat::Zero(m, m));
    d.sc.q01 = d.sc.q10;
  }
  d.fam = assemble(d.sc);
  try {
    d.p = build_type1(d.mc, d.sc, d.w, diff);
  } catch (const GeometryError& e) {
    d.p_error = e.what();
  }

  auto& f = d.differential;
  f.emplace_back("conformality", conformality_residual(lift));
  const CWResidual cw = cw_residual(d.sc);
  f.emplace_back("cw_multiplier_closed", cw.r1);
  f.emplace_back("cw_harmonic", cw.r2);
  f.emplace_back("harmonicity", harmonicity_residual(d.sc));
  f.emplace_back("normal_parallelism", normal_parallelism(d.mc, d.sc));
  f.emplace_back("eta_closedness", closedness_residual(d.eta, c));
  for (cplx l : opt.lambdas) f.emplace_back("flatness[" + label_complex(l) + "]", curvature_residual(d.fam, l));
  if (d.p) {
    f.emplace_back("p_conservation", conservation_residual(*d.p, d.fam).worst());
    if (lift.n() == 3) f.emplace_back("normal_coefficient_constancy", normal_coefficient_gradient(*d.p, lift.form(), c));
  }
  return d;
}

/// Certificates and results of one analysis.
struct Analysis {
  SurfaceData data;
  std::vector<Certificate> certificates;
  json results = json::object();

  bool pass() const { return all_pass(certificates); }
  const Certificate& certificate(const std::string& name) const {
    for (const auto& c : certificates)
      if (c.name == name) return c;
    throw std::out_of_range("no certificate named " + name);
  }
};

namespace detail {

// Max of a fine field over the points shared with the coarse window.
inline double max_on_coarse_points(const Grid<double>& fine, const Window& cw) {
  double m = 0.0;
  for (int i = cw.i0; i < cw.i1; ++i)
    for (int j = cw.j0; j < cw.j1; ++j) m = std::max(m, fine(2 * i, 2 * j));
  return m;
}

}  // namespace detail

inline Analysis analyze(const LightConeLift& lift, const AnalysisOptions& opt = {}) {
  opt.validate();
  Analysis a;
  a.data = build_surface_data(lift, opt);
  const SurfaceData& d = a.data;
  const ConformalChart& c = lift.chart;
  const Form& f = lift.form();
  const Window& w = d.w;
  const double diff = opt.tol.differential(c.h);
  auto& cs = a.certificates;
  json& res = a.results;

  std::optional<SurfaceData> coarse;
  std::string order_note;
  if (opt.estimate_order) {
    try {
      // Half the margin in coarse cells covers the same region.
      AnalysisOptions co = opt;
      co.tol.margin = std::max(2, opt.tol.margin / 2);
      coarse = build_surface_data(subsample(lift), co);
    } catch (const std::exception& e) {
      order_note = e.what();
    }
  }

  // Differential certificates: C h^2 bound plus, when resolvable, the
  // observed order.
  json orders = json::object();
  for (const auto& [name, field] : d.differential) {
    Certificate cert = certify(name, field_stats(field, w), diff);
    if (coarse) {
      const auto it = std::find_if(coarse->differential.begin(), coarse->differential.end(),
                                   [&](const auto& e) { return e.first == name; });
      if (it != coarse->differential.end()) {
        const double cm = field_stats(it->second, coarse->w).max;
        const double fm = detail::max_on_coarse_points(field, coarse->w);
        if (fm > opt.noise_floor && cm > opt.noise_floor) {
          cert.order = observed_order(cm, fm);
          if (*cert.order < opt.tol.min_order && fm > opt.order_gate * diff) cert.pass = false;
        }
        orders[name] = {{"coarse", cm}, {"fine", fm}};
      }
    }
    cs.push_back(std::move(cert));
  }
  if (!order_note.empty()) res["order_estimate_skipped"] = order_note;
  res["order_points"] = orders;

  // Algebraic invariants of the congruence and split.
  cs.push_back(certify("congruence_containment", field_stats(congruence_containment(lift, d.S), w), 1e-9));
  double rho2 = 0.0;
  for (const RMat& r : d.S.rho) rho2 = std::max(rho2, (r * r - RMat::Identity(f.dim(), f.dim())).cwiseAbs().maxCoeff());
  cs.push_back(certify("rho_involution", rho2, 1e-10));
  const SplitInvariants si = split_invariants(d.S, d.sc);
  cs.push_back(certify("N_offdiagonal", field_stats(si.block_diagonal, w), 1e-9));
  cs.push_back(certify("q_reality", field_stats(si.q_reality, w), 1e-12));
  cs.push_back(certify("q_annihilates_perp", field_stats(si.q_on_perp, w), 1e-9));
  cs.push_back(certify("mean_curvature_equation", field_stats(mean_curvature_residual(f, d.mc), w), 1e-8));

  res["path"] = d.willmore ? "willmore (q=0)" : "constrained willmore (q_inf)";
  if (!d.multiplier.warning.empty()) res["multiplier_warning"] = d.multiplier.warning;
  res["lambdas"] = json::array();
  for (cplx l : opt.lambdas) res["lambdas"].push_back(format_complex(l));
  const FieldStats hn = field_stats(d.mc.Hnorm2, w);
  res["Hnorm2"] = {{"mean", hn.mean}, {"max", hn.max}};

  const Type0Result t0 = detect_type0(d.S, w);
  res["type0"] = {{"found", t0.u.has_value()}, {"residual", t0.residual}};
  if (t0.u) {
    res["type0"]["u"] = detail::real_array(*t0.u);
    const LaurentPolySection u = constant_quantity(*t0.u, c.nu, c.nv);
    double worst = 0.0;
    for (cplx l : opt.lambdas) worst = std::max(worst, field_stats(direct_residual(u, d.fam, l), w).max);
    cs.push_back(certify("type0_parallel", worst, diff));
  }

  if (!d.p) {
    res["type1"] = {{"built", false}, {"reason", d.p_error}};
    return a;
  }
  const LaurentPolySection& p = *d.p;
  res["type1"] = {{"built", true}};
  const ShapeReport shape = check_shape(p, d.S, opt.tol.shape, &w);
  cs.push_back(certify("p_parity", shape.parity, opt.tol.shape));
  cs.push_back(certify_at_least("p_nontrivial", shape.p1_max, opt.tol.shape));
  double agree = 0.0;
  for (cplx l : opt.lambdas) agree = std::max(agree, field_stats(recurrence_mismatch(p, d.fam, l), w).max);
  cs.push_back(certify("recurrence_agreement", agree, opt.tol.algebra));

  const Consequences q = consequences_report(p, d.fam, w);
  cs.push_back(certify("p1_constancy", q.p1_constancy, opt.tol.shape));
  cs.push_back(certify("p1_reality", q.p1_reality, opt.tol.algebra));
  cs.push_back(certify("p0_reality", q.p0_reality, opt.tol.algebra));
  cs.push_back(certify("top_dbar", q.dbar_top, diff));
  cs.push_back(certify("top_d", q.d_top, diff));
  cs.push_back(certify("top_n", q.n_top, diff));
  double pc = 0.0;
  json coeffs = json::object();
  for (const auto& [k, v] : q.pair_constancy) pc = std::max(pc, v);
  for (const auto& [k, v] : q.pair_coeffs) coeffs[std::to_string(k)] = format_complex(v);
  cs.push_back(certify("pair_constancy", pc, diff));
  res["type1"]["pair_coefficients"] = coeffs;

  const ClassifyTolerances ct{opt.tol.shape, diff, 1e-6};
  const TopTermReport tt = classify_top_term(p, d.fam, w, ct, &d.mc.Hnorm2);
  cs.push_back(certify("top_term_parallel", tt.parallel_residual, diff));
  res["type1"]["top_term"] = to_string(tt.kind);
  res["type1"]["top_term_real_norm"] = tt.real_norm;
  res["type1"]["top_term_imag_norm"] = tt.imag_norm;
  if (tt.H2) {
    res["type1"]["H2"] = {{"mean", tt.H2->mean}, {"max", tt.H2->max}, {"base", tt.H2_base.value_or(tt.H2->mean)}};
    res["type1"]["H"] = std::sqrt(std::max(0.0, tt.H2->mean));
    if (tt.H2_mismatch) cs.push_back(certify("H2_consistency", *tt.H2_mismatch, 1e-6));
    if (opt.oracle_H2) {
      double worst = 0.0;
      const double ref = *opt.oracle_H2;
      for (int i = w.i0; i < w.i1; ++i) {
        for (int j = w.j0; j < w.j1; ++j) {
          const RVec re = p.stored(1)(i, j).real();
          const double h2 = 4.0 * f.pair(re, re);
          worst = std::max(worst, ref > 0 ? std::abs(h2 - ref) / ref : std::abs(h2));
        }
      }
      res["type1"]["H2_oracle"] = ref;
      cs.push_back(certify("H2_oracle", worst, ref > 0 ? 1e-5 : 1e-12));
    }
  }
  return a;
}

/// Provenance block: input fingerprint, grid and parameters.
inline json provenance(const std::string& input_bytes, const ConformalChart& c, const json& params) {
  return json{{"input_fnv1a", hex64(fnv1a(input_bytes))}, {"grid", chart_to_json(c)}, {"parameters", params}};
}

}  // namespace cwsurf
