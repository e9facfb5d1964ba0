#include "dbm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace dbm {

TrialOutcome flip_invariant_error(std::span<const Label> estimate, std::span<const Label> truth, std::size_t k) {
  if (estimate.size() != truth.size()) throw std::invalid_argument("flip_invariant_error: length mismatch");
  if (k == 0 || k > 10) throw std::invalid_argument("flip_invariant_error: k must lie in [1, 10]");
  const std::size_t n = truth.size();

  // confusion[t * k + e]: vertices with truth t and estimate e.
  std::vector<std::size_t> confusion(k * k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = static_cast<std::size_t>(truth[i]);
    const auto e = static_cast<std::size_t>(estimate[i]);
    if (t >= k || e >= k) throw std::invalid_argument("flip_invariant_error: label out of range");
    ++confusion[t * k + e];
  }

  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best_perm = perm;
  std::size_t best_hits = 0;
  bool first = true;
  do {
    std::size_t hits = 0;
    for (std::size_t t = 0; t < k; ++t) hits += confusion[t * k + perm[t]];
    if (first || hits > best_hits) {
      best_hits = hits;
      best_perm = perm;
      first = false;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  TrialOutcome out;
  out.exact = best_hits == n;
  out.error = n == 0 ? 0.0 : static_cast<double>(n - best_hits) / static_cast<double>(n);
  out.best_permutation = std::move(best_perm);
  return out;
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw std::invalid_argument("wilson_interval: no trials");
  const double m = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / m;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / m;
  const double center = (p + z2 / (2.0 * m)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / m + z2 / (4.0 * m * m)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

Summary aggregate(std::span<const double> errors, std::span<const std::uint8_t> exact) {
  if (errors.empty()) throw std::invalid_argument("aggregate: no outcomes");
  if (errors.size() != exact.size()) throw std::invalid_argument("aggregate: column length mismatch");
  const std::size_t m = errors.size();
  Summary s;
  s.trials = m;
  s.mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(m);
  if (m > 1) {
    double ss = 0.0;
    for (double e : errors) ss += (e - s.mean_error) * (e - s.mean_error);
    s.stderr_error = std::sqrt(ss / static_cast<double>(m - 1)) / std::sqrt(static_cast<double>(m));
  }
  const auto hits = static_cast<std::size_t>(std::count_if(exact.begin(), exact.end(), [](std::uint8_t e) { return e != 0; }));
  s.erp = static_cast<double>(hits) / static_cast<double>(m);
  s.erp_ci = wilson_interval(hits, m);
  return s;
}

Summary aggregate(std::span<const TrialOutcome> outcomes) {
  std::vector<double> errors;
  std::vector<std::uint8_t> exact;
  errors.reserve(outcomes.size());
  exact.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    errors.push_back(o.error);
    exact.push_back(o.exact ? 1 : 0);
  }
  return aggregate(errors, exact);
}

double data_only_erp_closed_form(std::int64_t n, double alpha) {
  if (n < 1) throw std::invalid_argument("data_only_erp_closed_form: n must be >= 1");
  if (!(alpha > 0.0)) throw std::invalid_argument("data_only_erp_closed_form: alpha must be > 0");
  const double nn = static_cast<double>(n);
  return std::exp(nn * std::log1p(-0.5 * std::pow(nn, -alpha)));
}

}  // namespace dbm
