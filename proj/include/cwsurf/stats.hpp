#pragma once

// Summary statistics of residual fields and tolerance bookkeeping.

#include "cwsurf/chart.hpp"

#include <limits>
#include <optional>

namespace cwsurf {

struct FieldStats {
  double max = 0.0;
  double mean = 0.0;
  /// Root mean square over the window.
  double l2 = 0.0;
  std::size_t count = 0;
};

inline FieldStats field_stats(const Grid<double>& g, const Window& w) {
  FieldStats s;
  double sum = 0.0, sq = 0.0;
  for (int i = w.i0; i < w.i1; ++i) {
    for (int j = w.j0; j < w.j1; ++j) {
      const double x = g(i, j);
      s.max = std::isnan(x) ? std::numeric_limits<double>::quiet_NaN() : std::max(s.max, x);
      sum += x;
      sq += x * x;
      ++s.count;
    }
  }
  if (s.count > 0) {
    s.mean = sum / s.count;
    s.l2 = std::sqrt(sq / s.count);
  }
  return s;
}

/// Observed order from errors at spacing h and h / 2.
inline double observed_order(double coarse, double fine) {
  if (!(coarse > 0.0) || !(fine > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::log2(coarse / fine);
}

/// Thresholds used to accept certificates.
struct Tolerances {
  /// Algebraic shape invariants, independent of h.
  double shape = 1e-8;
  /// Exact algebraic identities.
  double algebra = 1e-10;
  /// Constant C in the differential bound C h^2.
  double diff_constant = 1.0;
  /// Minimal observed order in refinement studies.
  double min_order = 1.8;
  /// Cells dropped along non-periodic edges for diagnostics.
  int margin = 8;

  double differential(double h) const { return diff_constant * h * h; }

  void validate() const {
    if (!(shape > 0 && algebra > 0 && diff_constant > 0 && min_order > 0) || margin < 0) {
      throw InputError("tolerances must be positive");
    }
  }
};

/// Named pass/fail record of one numerical check.
struct Certificate {
  std::string name;
  FieldStats stats;
  double threshold = 0.0;
  bool pass = false;
  std::optional<double> order;
};

inline Certificate certify(std::string name, const FieldStats& s, double threshold) {
  return {std::move(name), s, threshold, s.max <= threshold, std::nullopt};
}

inline Certificate certify(std::string name, double value, double threshold) {
  FieldStats s{value, value, value, 1};
  return certify(std::move(name), s, threshold);
}

/// Certificate that holds when `value` reaches `threshold` from below
/// (for quantities that must be large).
inline Certificate certify_at_least(std::string name, double value, double threshold) {
  FieldStats s{value, value, value, 1};
  return {std::move(name), s, threshold, value >= threshold, std::nullopt};
}

inline bool all_pass(const std::vector<Certificate>& cs) {
  return std::all_of(cs.begin(), cs.end(), [](const Certificate& c) { return c.pass; });
}

}  // namespace cwsurf
