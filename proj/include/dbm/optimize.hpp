#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace dbm {

/// Result of a one-dimensional search over the unit interval.
struct OptResult {
  double value = 0.0;
  double argument = 0.0;  // always inside [0, 1]
  int iterations = 0;
};

namespace detail {

inline bool better(double candidate, double incumbent) {
  // NaN never wins; -inf loses to anything finite.
  return candidate > incumbent;
}

}  // namespace detail

/// Maximizes `f` over [0, 1].
///
/// A 64-point grid (both endpoints included) locates the best cell, then
/// golden-section search refines the bracket around it until its width is
/// below `width`. Endpoint optima are common here (boundary solutions of the
/// exponent problems), so the endpoints always take part in the final
/// comparison. `f` may return -inf; it must not return NaN.
template <class F>
OptResult maximize_unit_interval(F&& f, double width = 1e-10, int grid = 64) {
  OptResult best;
  best.value = -INFINITY;
  int best_index = 0;
  for (int i = 0; i < grid; ++i) {
    const double x = static_cast<double>(i) / (grid - 1);
    const double v = f(x);
    if (i == 0 || detail::better(v, best.value)) {
      best.value = v;
      best.argument = x;
      best_index = i;
    }
  }
  best.iterations = grid;

  double lo = static_cast<double>(std::max(best_index - 1, 0)) / (grid - 1);
  double hi = static_cast<double>(std::min(best_index + 1, grid - 1)) / (grid - 1);

  constexpr double inv_phi = 0.6180339887498949;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = f(x1);
  double f2 = f(x2);
  int iters = 0;
  while (hi - lo > width && iters < 200) {
    if (f1 >= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = f(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = f(x2);
    }
    ++iters;
  }
  best.iterations += iters + 2;

  const double mid = 0.5 * (lo + hi);
  const double candidates[] = {x1, x2, mid, 0.0, 1.0};
  for (double x : candidates) {
    const double v = (x == x1) ? f1 : (x == x2) ? f2 : f(x);
    if (v > best.value) {
      best.value = v;
      best.argument = x;
    }
  }
  best.argument = std::clamp(best.argument, 0.0, 1.0);
  return best;
}

/// Minimizes `f` over [0, 1]; same search as maximize_unit_interval.
template <class F>
OptResult minimize_unit_interval(F&& f, double width = 1e-10, int grid = 64) {
  OptResult r = maximize_unit_interval([&](double x) { return -f(x); }, width, grid);
  r.value = -r.value;
  return r;
}

}  // namespace dbm
