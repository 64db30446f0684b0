#pragma once

// File formats: surface, conserved quantity and report JSON, OBJ meshes and
// complex scalars written as "a+bi".

#include "cwsurf/conserved.hpp"
#include "cwsurf/stats.hpp"
#include "cwsurf/surface.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <regex>

#include "json.hpp"

namespace cwsurf {

using json = nlohmann::json;

namespace detail {

inline const json& require_key(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key)) throw InputError(std::string(where) + ": missing field \"" + key + "\"");
  return j.at(key);
}

inline double require_number(const json& j, const char* key, const char* where) {
  const json& x = require_key(j, key, where);
  if (!x.is_number()) throw InputError(std::string(where) + ": field \"" + key + "\" must be a number");
  return x.get<double>();
}

inline int require_int(const json& j, const char* key, const char* where) {
  const json& x = require_key(j, key, where);
  if (!x.is_number_integer()) throw InputError(std::string(where) + ": field \"" + key + "\" must be an integer");
  return x.get<int>();
}

inline RVec real_vector(const json& j, int dim, const char* where) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw InputError(std::string(where) + ": expected an array of " + std::to_string(dim) + " numbers");
  }
  RVec v(dim);
  for (int k = 0; k < dim; ++k) {
    if (!j[k].is_number()) throw InputError(std::string(where) + ": non-numeric entry");
    v(k) = j[k].get<double>();
  }
  if (!v.allFinite()) throw InputError(std::string(where) + ": non-finite entry");
  return v;
}

inline json real_array(const RVec& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

inline json complex_array(const CVec& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(json::array({v(k).real(), v(k).imag()}));
  return a;
}

inline CVec complex_vector(const json& j, int dim, const char* where) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw InputError(std::string(where) + ": expected " + std::to_string(dim) + " complex entries");
  }
  CVec v(dim);
  for (int k = 0; k < dim; ++k) {
    const json& e = j[k];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
      throw InputError(std::string(where) + ": complex entries are [re, im] pairs");
    }
    v(k) = cplx(e[0].get<double>(), e[1].get<double>());
  }
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Surface files

inline json chart_to_json(const ConformalChart& c) {
  return json{{"u0", c.u0}, {"v0", c.v0}, {"h", c.h}, {"Nu", c.nu}, {"Nv", c.nv}, {"periodic_u", c.periodic_u}};
}

inline ConformalChart chart_from_json(const json& j) {
  constexpr const char* where = "chart";
  ConformalChart c;
  c.u0 = detail::require_number(j, "u0", where);
  c.v0 = detail::require_number(j, "v0", where);
  c.h = detail::require_number(j, "h", where);
  c.nu = detail::require_int(j, "Nu", where);
  c.nv = detail::require_int(j, "Nv", where);
  const json& p = detail::require_key(j, "periodic_u", where);
  if (!p.is_boolean()) throw InputError("chart: field \"periodic_u\" must be a boolean");
  c.periodic_u = p.get<bool>();
  c.validate();
  return c;
}

inline json surface_to_json(const LightConeLift& lift) {
  json sigma = json::array();
  for (const RVec& s : lift.sigma) sigma.push_back(detail::real_array(s));
  json out{{"chart", chart_to_json(lift.chart)},
           {"spaceform", {{"v_inf", detail::real_array(lift.spaceform.v_inf)}, {"model", to_string(lift.form().model())}}},
           {"sigma", std::move(sigma)}};
  return out;
}

inline LightConeLift surface_from_json(const json& j) {
  if (!j.is_object()) throw InputError("surface file: top level must be an object");
  LightConeLift lift;
  lift.chart = chart_from_json(detail::require_key(j, "chart", "surface file"));
  const json& sf = detail::require_key(j, "spaceform", "surface file");
  const json& model = detail::require_key(sf, "model", "spaceform");
  if (!model.is_string()) throw InputError("spaceform: field \"model\" must be a string");
  Model m;
  if (model == "euclidean") {
    m = Model::euclidean;
  } else if (model == "spherical") {
    m = Model::spherical;
  } else {
    throw InputError("spaceform: unknown model \"" + model.get<std::string>() + "\"");
  }
  const json& vinf = detail::require_key(sf, "v_inf", "spaceform");
  if (!vinf.is_array() || vinf.size() < 4 || vinf.size() > static_cast<std::size_t>(kMaxDim)) {
    throw InputError("spaceform: v_inf must have between 4 and " + std::to_string(kMaxDim) + " entries");
  }
  const int dim = static_cast<int>(vinf.size());
  lift.spaceform = SpaceForm{Form::make(m, dim - 2), detail::real_vector(vinf, dim, "spaceform.v_inf")};
  lift.spaceform.validate();

  const json& sigma = detail::require_key(j, "sigma", "surface file");
  const std::size_t count = static_cast<std::size_t>(lift.chart.nu) * lift.chart.nv;
  if (!sigma.is_array() || sigma.size() != count) {
    throw InputError("surface file: sigma must hold Nu*Nv = " + std::to_string(count) + " vectors");
  }
  lift.sigma = Grid<RVec>(lift.chart.nu, lift.chart.nv);
  for (std::size_t k = 0; k < count; ++k) lift.sigma[k] = detail::real_vector(sigma[k], dim, "sigma");
  return lift;
}

// ---------------------------------------------------------------------------
// Conserved quantity files

inline json conserved_to_json(const LaurentPolySection& p) {
  json coeffs = json::object();
  for (int k = 0; k <= p.d(); ++k) {
    json grid = json::array();
    for (const CVec& v : p.stored(k)) grid.push_back(detail::complex_array(v));
    coeffs[std::to_string(k)] = std::move(grid);
  }
  return json{{"d", p.d()}, {"coeffs", std::move(coeffs)}};
}

inline LaurentPolySection conserved_from_json(const json& j, const ConformalChart& chart, int dim) {
  constexpr const char* where = "conserved quantity";
  const int d = detail::require_int(j, "d", where);
  if (d < 0) throw InputError("conserved quantity: degree must be non-negative");
  const json& coeffs = detail::require_key(j, "coeffs", where);
  if (!coeffs.is_object() || static_cast<int>(coeffs.size()) != d + 1) {
    throw InputError("conserved quantity: coeffs must hold keys 0.." + std::to_string(d));
  }
  const std::size_t count = static_cast<std::size_t>(chart.nu) * chart.nv;
  std::vector<Grid<CVec>> stored;
  for (int k = 0; k <= d; ++k) {
    const json& g = detail::require_key(coeffs, std::to_string(k).c_str(), "coeffs");
    if (!g.is_array() || g.size() != count) throw InputError("conserved quantity: coefficient grid has wrong size");
    Grid<CVec> grid(chart.nu, chart.nv);
    for (std::size_t s = 0; s < count; ++s) grid[s] = detail::complex_vector(g[s], dim, "coeffs");
    stored.push_back(std::move(grid));
  }
  return LaurentPolySection(d, std::move(stored));
}

// ---------------------------------------------------------------------------
// Reports

/// 64-bit FNV-1a hash, used to fingerprint input files.
inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

inline json certificate_to_json(const Certificate& c) {
  json j{{"name", c.name}, {"max", c.stats.max},   {"mean", c.stats.mean},
         {"l2", c.stats.l2}, {"threshold", c.threshold}, {"pass", c.pass}};
  j["order_estimate"] = c.order ? json(*c.order) : json(nullptr);
  return j;
}

inline json tolerances_to_json(const Tolerances& t, double h) {
  return json{{"shape", t.shape},
              {"algebra", t.algebra},
              {"differential_constant", t.diff_constant},
              {"differential", t.differential(h)},
              {"min_order", t.min_order},
              {"margin", t.margin}};
}

struct Report {
  std::string command;
  std::vector<Certificate> certificates;
  json provenance = json::object();
  json tolerances = json::object();
  /// Command-specific results (classification, H^2, ...).
  json results = json::object();

  bool pass() const { return all_pass(certificates); }

  json to_json() const {
    json certs = json::array();
    for (const Certificate& c : certificates) certs.push_back(certificate_to_json(c));
    return json{{"command", command},
                {"pass", pass()},
                {"certificates", std::move(certs)},
                {"provenance", provenance},
                {"tolerances", tolerances},
                {"results", results}};
  }
};

// ---------------------------------------------------------------------------
// Complex scalars

/// Parses "a", "bi", "a+bi", "a-bi", "i" or "-i" with decimal or exponent
/// notation; anything else is rejected.
inline cplx parse_complex(const std::string& text) {
  static const std::string num = R"((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)";
  static const std::regex re_real("^([+-]?" + num + ")$");
  static const std::regex re_imag("^([+-]?)(" + num + ")?i$");
  static const std::regex re_full("^([+-]?" + num + ")([+-])(" + num + ")?i$");
  auto to_double = [&](const std::string& s) {
    double x = 0.0;
    const char* b = s.data();
    if (!s.empty() && s[0] == '+') ++b;
    const auto r = std::from_chars(b, s.data() + s.size(), x);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw InputError("malformed complex number \"" + text + "\"");
    return x;
  };
  std::smatch m;
  if (std::regex_match(text, m, re_real)) return {to_double(m[1]), 0.0};
  if (std::regex_match(text, m, re_imag)) {
    const double mag = m[2].matched ? to_double(m[2]) : 1.0;
    return {0.0, m[1] == "-" ? -mag : mag};
  }
  if (std::regex_match(text, m, re_full)) {
    const double mag = m[3].matched ? to_double(m[3]) : 1.0;
    return {to_double(m[1]), m[2] == "-" ? -mag : mag};
  }
  throw InputError("malformed complex number \"" + text + "\" (expected a+bi)");
}

inline std::string format_complex(cplx z) {
  std::ostringstream os;
  os << std::setprecision(17) << z.real() << (std::signbit(z.imag()) ? '-' : '+') << std::abs(z.imag()) << 'i';
  return os.str();
}

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  if (!out) throw InputError("write failed for " + path);
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(what + ": invalid JSON (" + e.what() + ")");
  }
}

/// Points in R^3 for meshing: x itself for Euclidean charts, stereographic
/// projection from the last axis for the spherical model.
inline std::vector<Eigen::Vector3d> mesh_points(const LightConeLift& lift) {
  if (lift.n() != 3) throw InputError("OBJ export needs surfaces in 3-space (n = 3)");
  const Grid<RVec> x = recover_points(lift);
  std::vector<Eigen::Vector3d> out;
  out.reserve(x.size());
  for (const RVec& p : x) {
    if (lift.form().model() == Model::euclidean) {
      out.emplace_back(p.head<3>());
    } else {
      const double den = 1.0 - p(3);
      if (std::abs(den) < 1e-12) throw GeometryError("surface passes through the projection pole");
      out.emplace_back(p.head<3>() / den);
    }
  }
  return out;
}

/// Wavefront OBJ with row-major vertices and two triangles per grid cell.
inline std::string to_obj(const LightConeLift& lift) {
  const std::vector<Eigen::Vector3d> pts = mesh_points(lift);
  std::ostringstream os;
  os << std::setprecision(17);
  os << "# " << lift.chart.nu << "x" << lift.chart.nv << " grid\n";
  for (const auto& p : pts) os << "v " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  const int nv = lift.chart.nv;
  auto id = [&](int i, int j) { return i * nv + j + 1; };
  for (int i = 0; i + 1 < lift.chart.nu; ++i) {
    for (int j = 0; j + 1 < nv; ++j) {
      os << "f " << id(i, j) << ' ' << id(i + 1, j) << ' ' << id(i + 1, j + 1) << '\n';
      os << "f " << id(i, j) << ' ' << id(i + 1, j + 1) << ' ' << id(i, j + 1) << '\n';
    }
  }
  return os.str();
}

}  // namespace cwsurf
