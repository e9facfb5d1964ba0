#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "dbm/model.hpp"

namespace dbm {

struct TrialOutcome {
  double error = 0.0;  // in [0, 1]
  bool exact = false;  // error == 0
  std::vector<std::size_t> best_permutation;
};

/// 1 - max over label permutations pi of the fraction of i with
/// estimate_i == pi(truth_i). Brute force over k! (k <= 10); ties resolve to
/// the lexicographically smallest permutation.
TrialOutcome flip_invariant_error(std::span<const Label> estimate, std::span<const Label> truth, std::size_t k);

struct Interval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double x) const { return lower <= x && x <= upper; }
};

/// Wilson score interval for `successes` out of `trials` at normal quantile z.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct Summary {
  std::size_t trials = 0;
  double mean_error = 0.0;
  double stderr_error = 0.0;
  double erp = 0.0;
  Interval erp_ci;  // 95% Wilson
};

Summary aggregate(std::span<const TrialOutcome> outcomes);
/// Same aggregate from raw (error, exact) columns.
Summary aggregate(std::span<const double> errors, std::span<const std::uint8_t> exact);

/// Exact-recovery probability of the data-only rule under erased labels:
/// (1 - n^-alpha / 2)^n.
double data_only_erp_closed_form(std::int64_t n, double alpha);

}  // namespace dbm
