#pragma once

// Finite-difference derivatives of grid fields on a conformal chart.
//
// Central stencils in the interior, one-sided stencils of the same order at
// non-periodic edges, wrap-around along u when the chart is periodic.

#include "cwsurf/chart.hpp"

#include <array>

namespace cwsurf {

enum class Axis { u, v };

namespace detail {

struct Weights {
  int offset = 0;  // relative index of the first weight
  int count = 0;
  std::array<double, 6> w{};
};

inline Weights make_weights(int offset, std::initializer_list<double> ws, double scale) {
  Weights r;
  r.offset = offset;
  r.count = static_cast<int>(ws.size());
  int k = 0;
  for (double x : ws) r.w[k++] = x * scale;
  return r;
}

// Left-edge and central weights, indexed by distance from the left edge.
inline Weights left_weights(int deriv, int order, int i) {
  if (order == 4) {
    if (deriv == 1) {
      if (i == 0) return make_weights(0, {-25, 48, -36, 16, -3}, 1.0 / 12);
      if (i == 1) return make_weights(-1, {-3, -10, 18, -6, 1}, 1.0 / 12);
      return make_weights(-2, {1, -8, 0, 8, -1}, 1.0 / 12);
    }
    if (i == 0) return make_weights(0, {45, -154, 214, -156, 61, -10}, 1.0 / 12);
    if (i == 1) return make_weights(-1, {10, -15, -4, 14, -6, 1}, 1.0 / 12);
    return make_weights(-2, {-1, 16, -30, 16, -1}, 1.0 / 12);
  }
  if (deriv == 1) {
    if (i == 0) return make_weights(0, {-1.5, 2, -0.5}, 1.0);
    return make_weights(-1, {-0.5, 0, 0.5}, 1.0);
  }
  if (i == 0) return make_weights(0, {2, -5, 4, -1}, 1.0);
  return make_weights(-1, {1, -2, 1}, 1.0);
}

inline Weights mirrored(const Weights& a, int deriv) {
  Weights r;
  r.count = a.count;
  r.offset = -(a.offset + a.count - 1);
  const double sign = deriv == 1 ? -1.0 : 1.0;
  for (int k = 0; k < a.count; ++k) r.w[k] = sign * a.w[a.count - 1 - k];
  return r;
}

inline int boundary_width(int order) { return order / 2; }
inline int min_points(int deriv, int order) { return order == 4 ? (deriv == 1 ? 5 : 6) : (deriv == 1 ? 3 : 4); }

inline std::vector<Weights> axis_weights(int deriv, int order, int n, bool periodic) {
  if (n < min_points(deriv, order)) {
    throw InputError("grid smaller than stencil: " + std::to_string(n) + " points, need " +
                     std::to_string(min_points(deriv, order)));
  }
  std::vector<Weights> out(n);
  const int b = boundary_width(order);
  for (int i = 0; i < n; ++i) {
    if (periodic || (i >= b && i < n - b)) out[i] = left_weights(deriv, order, b);
    else if (i < b) out[i] = left_weights(deriv, order, i);
    else out[i] = mirrored(left_weights(deriv, order, n - 1 - i), deriv);
  }
  return out;
}

template <class T>
Grid<T> apply(const Grid<T>& f, const ConformalChart& c, Axis axis, int deriv) {
  if (f.nu() != c.nu || f.nv() != c.nv) throw std::invalid_argument("derivative: field shape does not match chart");
  const bool along_u = axis == Axis::u;
  const int n = along_u ? c.nu : c.nv;
  const bool periodic = along_u && c.periodic_u;
  const auto ws = axis_weights(deriv, c.stencil_order, n, periodic);
  const double scale = deriv == 1 ? 1.0 / c.h : 1.0 / (c.h * c.h);

  Grid<T> out(c.nu, c.nv, f[0]);
  for (int i = 0; i < c.nu; ++i) {
    for (int j = 0; j < c.nv; ++j) {
      const int m = along_u ? i : j;
      const Weights& w = ws[m];
      auto at = [&](int k) -> const T& {
        int p = m + w.offset + k;
        if (periodic) p = ((p % n) + n) % n;
        return along_u ? f(p, j) : f(i, p);
      };
      T acc = (w.w[0] * scale) * at(0);
      for (int k = 1; k < w.count; ++k) {
        if (w.w[k] != 0.0) acc += (w.w[k] * scale) * at(k);
      }
      out(i, j) = acc;
    }
  }
  return out;
}

}  // namespace detail

template <class T>
Grid<T> d_du(const Grid<T>& f, const ConformalChart& c) {
  return detail::apply(f, c, Axis::u, 1);
}

template <class T>
Grid<T> d_dv(const Grid<T>& f, const ConformalChart& c) {
  return detail::apply(f, c, Axis::v, 1);
}

template <class T>
Grid<T> d_dx(const Grid<T>& f, const ConformalChart& c, Axis a) {
  return detail::apply(f, c, a, 1);
}

template <class T>
Grid<T> d2_du2(const Grid<T>& f, const ConformalChart& c) {
  return detail::apply(f, c, Axis::u, 2);
}

template <class T>
Grid<T> d2_dv2(const Grid<T>& f, const ConformalChart& c) {
  return detail::apply(f, c, Axis::v, 2);
}

/// Flat Laplacian f_uu + f_vv.
template <class T>
Grid<T> laplacian(const Grid<T>& f, const ConformalChart& c) {
  return map_grid(d2_du2(f, c), d2_dv2(f, c), [](const T& a, const T& b) -> T { return a + b; });
}

/// d/dz = (d/du - i d/dv) / 2 of a complex-valued field.
template <class T>
Grid<T> dz(const Grid<T>& f, const ConformalChart& c) {
  return map_grid(d_du(f, c), d_dv(f, c), [](const T& a, const T& b) -> T { return 0.5 * (a - kI * b); });
}

/// d/dzbar = (d/du + i d/dv) / 2 of a complex-valued field.
template <class T>
Grid<T> dzbar(const Grid<T>& f, const ConformalChart& c) {
  return map_grid(d_du(f, c), d_dv(f, c), [](const T& a, const T& b) -> T { return 0.5 * (a + kI * b); });
}

}  // namespace cwsurf
