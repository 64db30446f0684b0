// cwsurf: generate surfaces, certify them, transform them, export meshes.

#include "cwsurf/cwsurf.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace cwsurf;

namespace {

constexpr int kExitCertificate = 1;
constexpr int kExitInput = 2;

struct ToleranceArgs {
  double diff_constant = 1.0;
  int margin = 8;
  double min_order = 1.8;

  void attach(CLI::App* app) {
    app->add_option("--diff-constant", diff_constant, "constant C of the differential bound C h^2");
    app->add_option("--margin", margin, "cells dropped along non-periodic edges");
    app->add_option("--min-order", min_order, "smallest accepted observed order");
  }

  Tolerances get() const {
    Tolerances t;
    t.diff_constant = diff_constant;
    t.margin = margin;
    t.min_order = min_order;
    t.validate();
    return t;
  }
};

struct Input {
  std::string bytes;
  json doc;
  LightConeLift lift;
  std::optional<double> oracle_H2;
};

Input load_surface(const std::string& path) {
  Input in;
  in.bytes = read_file(path);
  in.doc = parse_json(in.bytes, path);
  in.lift = surface_from_json(in.doc);
  validate_lift(in.lift);
  if (in.doc.contains("generator")) {
    try {
      const json& g = in.doc["generator"];
      SurfaceParams p;
      p.radius = g.at("radius").get<double>();
      p.neck = g.at("neck").get<double>();
      p.bulge = g.at("bulge").get<double>();
      const double H = exemplar_mean_curvature(surface_kind_from_string(g.at("kind").get<std::string>()), p);
      in.oracle_H2 = H * H;
    } catch (const json::exception& e) {
      throw InputError(path + ": malformed generator block (" + e.what() + ")");
    }
  }
  return in;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file(path, text);
  }
}

std::vector<cplx> parse_lambdas(const std::vector<std::string>& texts) {
  if (texts.empty()) return default_lambdas();
  std::vector<cplx> out;
  for (const auto& t : texts) out.push_back(parse_complex(t));
  return out;
}

json certificate_map(const std::vector<Certificate>& cs) {
  json m = json::object();
  for (const auto& c : cs) m[c.name] = c.stats.max;
  return m;
}

int finish(Report& r, const std::string& path) {
  emit(path, r.to_json().dump(2) + "\n");
  return r.pass() ? 0 : kExitCertificate;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string kind = "cylinder";
  SurfaceParams params;
  int nu = 64, nv = 64;
  std::optional<double> h, u0, v0;
  bool periodic = true;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  const SurfaceKind kind = surface_kind_from_string(a.kind);
  if (a.nu < 16 || a.nv < 16) throw InputError("grid must be at least 16x16");
  const double period = kind == SurfaceKind::cylinder ? 2 * std::numbers::pi * a.params.radius : 2 * std::numbers::pi;
  ConformalChart c;
  c.nu = a.nu;
  c.nv = a.nv;
  c.periodic_u = a.periodic;
  c.h = a.h.value_or(period / a.nu);
  c.u0 = a.u0.value_or(0.0);
  c.v0 = a.v0.value_or(-c.h * (a.nv - 1) / 2.0);
  const LightConeLift lift = make_surface(kind, a.params, c);
  json doc = surface_to_json(lift);
  doc["generator"] = {{"kind", a.kind},
                      {"radius", a.params.radius},
                      {"neck", a.params.neck},
                      {"bulge", a.params.bulge},
                      {"ambient_n", a.params.ambient_n}};
  const double conf = lift.generator_conformality.value_or(0.0);
  doc["certificates"] = {{"conformality", conf}};
  emit(a.out, doc.dump() + "\n");
  return 0;
}

// ---------------------------------------------------------------------------

struct AnalyzeArgs {
  std::string input, report;
  std::vector<std::string> lambdas;
  bool no_order = false;
  ToleranceArgs tol;
};

int cmd_analyze(const AnalyzeArgs& a) {
  const Input in = load_surface(a.input);
  AnalysisOptions opt;
  opt.tol = a.tol.get();
  opt.lambdas = parse_lambdas(a.lambdas);
  opt.estimate_order = !a.no_order;
  opt.oracle_H2 = in.oracle_H2;
  const Analysis an = analyze(in.lift, opt);
  Report r;
  r.command = "analyze";
  r.certificates = an.certificates;
  r.results = an.results;
  r.tolerances = tolerances_to_json(opt.tol, in.lift.chart.h);
  r.provenance = provenance(in.bytes, in.lift.chart, {{"input", a.input}, {"lambdas", an.results["lambdas"]}});
  return finish(r, a.report);
}

// ---------------------------------------------------------------------------

struct SweepArgs {
  std::string input, out;
  std::vector<double> radii{0.5, 1.0, 2.0};
  int angles = 8;
  ToleranceArgs tol;
};

int cmd_sweep(const SweepArgs& a) {
  if (a.angles < 1 || a.radii.empty()) throw InputError("sweep needs at least one radius and one angle");
  for (double r : a.radii)
    if (!(r > 0)) throw InputError("sweep radii must be positive");
  const Input in = load_surface(a.input);
  AnalysisOptions opt;
  opt.tol = a.tol.get();
  opt.lambdas = {cplx(0, 1)};
  const SurfaceData d = build_surface_data(in.lift, opt);
  std::ostringstream os;
  os << std::setprecision(17);
  os << "lambda_re,lambda_im,flatness_max,flatness_mean,flatness_l2,conservation_max\n";
  for (double r : a.radii) {
    for (int k = 0; k < a.angles; ++k) {
      const cplx lam = std::polar(r, 2 * std::numbers::pi * k / a.angles);
      const FieldStats fs = field_stats(curvature_residual(d.fam, lam), d.w);
      os << lam.real() << ',' << lam.imag() << ',' << fs.max << ',' << fs.mean << ',' << fs.l2 << ',';
      if (d.p) os << field_stats(direct_residual(*d.p, d.fam, lam), d.w).max;
      os << '\n';
    }
  }
  emit(a.out, os.str());
  return 0;
}

// ---------------------------------------------------------------------------

struct TransformArgs {
  std::string input, out, report;
  double mu_angle = 0.0;
  std::string alpha = "0.4";
  std::uint64_t seed = 7;
  ToleranceArgs tol;
};

json transform_file(const TransformResult& t) {
  json doc = surface_to_json(t.new_lift);
  doc["conserved"] = conserved_to_json(t.new_p);
  doc["certificates"] = certificate_map(t.certificates);
  return doc;
}

SurfaceData prepare(const Input& in, const Tolerances& tol) {
  AnalysisOptions opt;
  opt.tol = tol;
  SurfaceData d = build_surface_data(in.lift, opt);
  if (!d.p) throw GeometryError("no type-1 conserved quantity: " + d.p_error);
  return d;
}

int cmd_deform(const TransformArgs& a) {
  if (!std::isfinite(a.mu_angle)) throw InputError("--mu-angle must be finite");
  const Input in = load_surface(a.input);
  const Tolerances tol = a.tol.get();
  const SurfaceData d = prepare(in, tol);
  const cplx mu = std::polar(1.0, a.mu_angle);
  TransformTolerances tt;
  tt.base = tol;
  const TransformResult t = spectral_deform(d.lift, d.S, d.fam, *d.p, mu, tt);
  emit(a.out, transform_file(t).dump() + "\n");
  Report r;
  r.command = "deform";
  r.certificates = t.certificates;
  r.tolerances = tolerances_to_json(tol, in.lift.chart.h);
  r.provenance = provenance(in.bytes, in.lift.chart, {{"input", a.input}, {"mu", format_complex(mu)}});
  r.results = {{"spaceform", detail::real_array(t.new_lift.spaceform.v_inf)}};
  return finish(r, a.report);
}

int cmd_backlund(const TransformArgs& a) {
  const cplx alpha = parse_complex(a.alpha);
  if (alpha == cplx(0.0) || std::abs(std::abs(alpha) - 1.0) < 1e-12) {
    throw InputError("--alpha must be non-zero and off the unit circle (got " + a.alpha + ")");
  }
  const Input in = load_surface(a.input);
  const Tolerances tol = a.tol.get();
  const SurfaceData d = prepare(in, tol);
  DressingOptions dopt;
  dopt.seed = a.seed;
  const DressingGauge g = make_dressing(d.fam, d.S, *d.p, alpha, dopt);
  TransformTolerances tt;
  tt.base = tol;
  const TransformResult t = backlund_transform(d.lift, d.S, d.fam, *d.p, g, tt);

  std::vector<cplx> lams;
  for (int k = 0; k < 10; ++k) lams.push_back(std::polar(0.5 + 0.25 * k, 0.3 + 0.6 * k));
  ConformalChart cut = g.chart;
  const GaugeIdentities gi = gauge_identities(g, lams, Window::interior(cut, tol.margin));
  Report r;
  r.command = "backlund";
  r.certificates = t.certificates;
  r.certificates.push_back(certify("gauge_factorization", gi.factorization, 1e-8));
  r.certificates.push_back(certify("gauge_rho_symmetry", gi.rho_symmetry, 1e-8));
  r.certificates.push_back(certify("gauge_reality", gi.reality, 1e-8));
  r.certificates.push_back(certify("gauge_inversion", gi.inversion, 1e-10));
  r.certificates.push_back(certify("gauge_factor_rho_symmetry", gi.factor_rho_symmetry, 1e-9));
  r.certificates.push_back(certify("gauge_rho_commute", gi.rho_commute, 1e-9));
  r.certificates.push_back(certify("gauge_orthogonality", gi.orthogonality, 1e-9));
  emit(a.out, transform_file(t).dump() + "\n");
  r.tolerances = tolerances_to_json(tol, in.lift.chart.h);
  r.provenance = provenance(in.bytes, in.lift.chart,
                            {{"input", a.input}, {"alpha", format_complex(alpha)}, {"seed", a.seed}});
  r.results = {{"ell0", detail::complex_array(g.ell0)},
               {"condition_residual", g.condition_residual},
               {"min_rho_pairing", g.min_rho_pairing}};
  return finish(r, a.report);
}

// ---------------------------------------------------------------------------

int cmd_export_obj(const std::string& input, const std::string& out) {
  const Input in = load_surface(input);
  emit(out, to_obj(in.lift));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cwsurf: constrained Willmore surfaces in the light-cone model"};
  app.require_subcommand(1);
  int code = 0;

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "write an exemplar surface");
  g->set_help_flag("--help", "print this help message and exit");
  g->add_option("--kind", gen.kind, "cylinder | sphere | unduloid | clifford_torus")->required();
  g->add_option("--radius", gen.params.radius, "cylinder or sphere radius");
  g->add_option("--neck", gen.params.neck, "unduloid neck radius");
  g->add_option("--bulge", gen.params.bulge, "unduloid bulge radius");
  g->add_option("--ambient-n", gen.params.ambient_n, "dimension of the ambient space form");
  g->add_option("--nu", gen.nu, "grid points along u");
  g->add_option("--nv", gen.nv, "grid points along v");
  g->add_option("--h", gen.h, "grid spacing (default: period / nu)");
  g->add_option("--u0", gen.u0, "chart origin along u");
  g->add_option("--v0", gen.v0, "chart origin along v (default: centred)");
  g->add_flag("--periodic,!--no-periodic", gen.periodic, "wrap u (default on)");
  g->add_option("-o,--out", gen.out, "output surface file (default stdout)");
  g->callback([&] { code = cmd_generate(gen); });

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "certify a surface");
  a->add_option("input", an.input, "surface file")->required();
  a->add_option("--lambda", an.lambdas, "spectral parameter a+bi (repeatable)");
  a->add_flag("--no-order", an.no_order, "skip the half-resolution order estimate");
  a->add_option("-r,--report", an.report, "report file (default stdout)");
  an.tol.attach(a);
  a->callback([&] { code = cmd_analyze(an); });

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "flatness over a polar grid of spectral parameters (CSV)");
  s->add_option("input", sw.input, "surface file")->required();
  s->add_option("--radii", sw.radii, "moduli of lambda");
  s->add_option("--angles", sw.angles, "angles per modulus");
  s->add_option("-o,--out", sw.out, "CSV file (default stdout)");
  sw.tol.attach(s);
  s->callback([&] { code = cmd_sweep(sw); });

  TransformArgs de;
  auto* d = app.add_subcommand("deform", "spectral deformation by mu = exp(i angle)");
  d->add_option("input", de.input, "surface file")->required();
  d->add_option("--mu-angle", de.mu_angle, "argument of mu in radians");
  d->add_option("-o,--out", de.out, "transformed surface file")->required();
  d->add_option("-r,--report", de.report, "report file (default stdout)");
  de.tol.attach(d);
  d->callback([&] { code = cmd_deform(de); });

  TransformArgs ba;
  auto* b = app.add_subcommand("backlund", "Baecklund transform with parameter alpha");
  b->add_option("input", ba.input, "surface file")->required();
  b->add_option("--alpha", ba.alpha, "dressing parameter a+bi, off the unit circle");
  b->add_option("--seed", ba.seed, "seed for the initial null line");
  b->add_option("-o,--out", ba.out, "transformed surface file")->required();
  b->add_option("-r,--report", ba.report, "report file (default stdout)");
  ba.tol.attach(b);
  b->callback([&] { code = cmd_backlund(ba); });

  std::string obj_in, obj_out;
  auto* e = app.add_subcommand("export-obj", "write an OBJ mesh");
  e->add_option("input", obj_in, "surface file")->required();
  e->add_option("-o,--out", obj_out, "OBJ file (default stdout)");
  e->callback([&] { code = cmd_export_obj(obj_in, obj_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int rc = app.exit(err);
    return rc == 0 ? 0 : kExitInput;
  } catch (const InputError& err) {
    std::cerr << "input error: " << err.what() << '\n';
    return kExitInput;
  } catch (const GeometryError& err) {
    std::cerr << "geometry error: " << err.what() << '\n';
    return kExitInput;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitInput;
  }
  return code;
}
