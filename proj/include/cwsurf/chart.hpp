#pragma once

#include "cwsurf/types.hpp"

#include <sstream>

namespace cwsurf {

/// Isotropic rectangular grid in the conformal coordinate z = u + iv.
/// Node (i, j) sits at (u0 + i h, v0 + j h).
struct ConformalChart {
  double u0 = 0.0;
  double v0 = 0.0;
  double h = 0.1;
  int nu = 16;
  int nv = 16;
  /// u wraps with period nu * h.
  bool periodic_u = false;
  /// Accuracy of the finite-difference operators (2 or 4). Not serialized.
  int stencil_order = 4;

  double u(int i) const { return u0 + i * h; }
  double v(int j) const { return v0 + j * h; }
  double period_u() const { return nu * h; }

  void validate() const {
    std::ostringstream os;
    if (!(h > 0.0) || !std::isfinite(h)) os << "grid spacing h must be positive (got " << h << "); ";
    if (nu < 16 || nv < 16) os << "grid must be at least 16x16 (got " << nu << "x" << nv << "); ";
    if (stencil_order != 2 && stencil_order != 4) os << "stencil order must be 2 or 4; ";
    if (!std::isfinite(u0) || !std::isfinite(v0)) os << "chart origin must be finite; ";
    const std::string msg = os.str();
    if (!msg.empty()) throw InputError("ConformalChart: " + msg.substr(0, msg.size() - 2));
  }

  bool operator==(const ConformalChart& o) const {
    return u0 == o.u0 && v0 == o.v0 && h == o.h && nu == o.nu && nv == o.nv && periodic_u == o.periodic_u;
  }
};

/// Interior index window used for diagnostics: a margin of cells is dropped
/// along every non-periodic direction.
struct Window {
  int i0, i1, j0, j1;  // half-open

  static Window interior(const ConformalChart& c, int margin) {
    Window w{0, c.nu, margin, c.nv - margin};
    if (!c.periodic_u) {
      w.i0 = margin;
      w.i1 = c.nu - margin;
    }
    if (w.i0 >= w.i1 || w.j0 >= w.j1) throw InputError("diagnostic margin leaves no interior points");
    return w;
  }

  bool contains(int i, int j) const { return i >= i0 && i < i1 && j >= j0 && j < j1; }
};

}  // namespace cwsurf
