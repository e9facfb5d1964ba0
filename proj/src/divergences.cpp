#include "dbm/divergences.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dbm/model.hpp"

namespace dbm {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": alphabet sizes differ (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

// a^t b^(1-t) with the continuous-extension convention.
double geometric_mix(double a, double b, double t) {
  if (a <= 0.0 || b <= 0.0) return 0.0;
  return std::exp(t * std::log(a) + (1.0 - t) * std::log(b));
}

// t log a + (1-t) log b, -inf when either weight vanishes.
double log_geometric_mix(double a, double b, double t) {
  if (a <= 0.0 || b <= 0.0) return -kInfinity;
  return t * std::log(a) + (1.0 - t) * std::log(b);
}

double log_sum_exp(std::span<const double> xs) {
  double m = -kInfinity;
  for (double x : xs) m = std::max(m, x);
  if (m == -kInfinity) return -kInfinity;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

// sum_r [-t mu_s - (1-t) mu_t + mu_s^t mu_t^(1-t)]: log of the Poisson
// overlap sum, always <= 0.
double log_poisson_overlap(const MeanVector& mu_s, const MeanVector& mu_t, double t) {
  double acc = 0.0;
  for (std::size_t r = 0; r < mu_s.size(); ++r) {
    acc += -t * mu_s[r] - (1.0 - t) * mu_t[r] + geometric_mix(mu_s[r], mu_t[r], t);
  }
  return acc;
}

// log sum_x p1(x)^t p2(x)^(1-t).
double log_bhattacharyya(const Pmf& p, const Pmf& q, double t, std::vector<double>& scratch) {
  scratch.clear();
  for (std::size_t x = 0; x < p.size(); ++x) {
    const double v = log_geometric_mix(p[x], q[x], t);
    if (v != -kInfinity) scratch.push_back(v);
  }
  return log_sum_exp(scratch);
}

}  // namespace

Pmf::Pmf(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.empty()) throw std::invalid_argument("Pmf: empty alphabet");
  double sum = 0.0;
  for (double p : probs_) {
    if (!std::isfinite(p) || p < 0.0) throw std::invalid_argument("Pmf: entries must be finite and >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw std::invalid_argument("Pmf: entries sum to " + std::to_string(sum) + ", expected 1");
  }
}

MeanVector::MeanVector(std::vector<double> means) : means_(std::move(means)) {
  for (double m : means_) {
    if (!std::isfinite(m) || m < 0.0) {
      throw std::invalid_argument("MeanVector: entries must be finite and >= 0");
    }
  }
}

MeanVector MeanVector::scaled(double c) const {
  std::vector<double> out(means_);
  for (double& m : out) m *= c;
  return MeanVector(std::move(out));
}

OptResult ch_divergence_opt(const MeanVector& a, const MeanVector& b) {
  require_same_size(a.size(), b.size(), "ch_divergence");
  auto objective = [&](double t) {
    double acc = 0.0;
    for (std::size_t x = 0; x < a.size(); ++x) {
      if (a[x] == b[x]) continue;
      acc += (1.0 - t) * b[x] + t * a[x] - geometric_mix(a[x], b[x], t);
    }
    return acc;
  };
  OptResult r = maximize_unit_interval(objective);
  r.value = std::max(r.value, 0.0);
  return r;
}

double ch_divergence(const MeanVector& a, const MeanVector& b) {
  return ch_divergence_opt(a, b).value;
}

OptResult chernoff_information_opt(const Pmf& p, const Pmf& q) {
  require_same_size(p.size(), q.size(), "chernoff_information");
  bool overlap = false;
  for (std::size_t x = 0; x < p.size(); ++x) overlap |= (p[x] > 0.0 && q[x] > 0.0);
  if (!overlap) return OptResult{kInfinity, 0.5, 0};

  std::vector<double> scratch;
  scratch.reserve(p.size());
  OptResult r = minimize_unit_interval(
      [&](double t) { return log_bhattacharyya(p, q, t, scratch); });
  r.value = std::max(-r.value, 0.0);
  return r;
}

double chernoff_information(const Pmf& p, const Pmf& q) {
  return chernoff_information_opt(p, q).value;
}

double tv_distance(const Pmf& p, const Pmf& q) {
  require_same_size(p.size(), q.size(), "tv_distance");
  double acc = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) acc += std::abs(p[x] - q[x]);
  return std::min(0.5 * acc, 1.0);
}

double ct_divergence(const Pmf& p1, const Pmf& q1, const Pmf& p2, const Pmf& q2) {
  require_same_size(p1.size(), p2.size(), "ct_divergence (graph alphabet)");
  require_same_size(q1.size(), q2.size(), "ct_divergence (attribute alphabet)");

  std::vector<double> scratch;
  scratch.reserve(p1.size());
  std::vector<double> per_symbol;
  per_symbol.reserve(q1.size());
  for (std::size_t u = 0; u < q1.size(); ++u) {
    if (q1[u] <= 0.0 || q2[u] <= 0.0) continue;  // infimum over lambda is 0
    const OptResult r = minimize_unit_interval([&](double t) {
      return log_geometric_mix(q1[u], q2[u], t) + log_bhattacharyya(p1, p2, t, scratch);
    });
    per_symbol.push_back(r.value);
  }
  const double total = log_sum_exp(per_symbol);
  return std::max(-total, 0.0);
}

double ct_divergence_poisson(const MeanVector& mu_s, const MeanVector& mu_t,
                             const Pmf& q_s, const Pmf& q_t) {
  require_same_size(mu_s.size(), mu_t.size(), "ct_divergence_poisson (means)");
  require_same_size(q_s.size(), q_t.size(), "ct_divergence_poisson (attribute alphabet)");

  std::vector<double> per_symbol;
  per_symbol.reserve(q_s.size());
  for (std::size_t u = 0; u < q_s.size(); ++u) {
    if (q_s[u] <= 0.0 || q_t[u] <= 0.0) continue;
    const OptResult r = minimize_unit_interval([&](double t) {
      return log_geometric_mix(q_s[u], q_t[u], t) + log_poisson_overlap(mu_s, mu_t, t);
    });
    per_symbol.push_back(r.value);
  }
  return std::max(-log_sum_exp(per_symbol), 0.0);
}

ExponentTable::ExponentTable(std::size_t symbols_, std::size_t communities_, double fill)
    : symbols(symbols_), communities(communities_), d(symbols_ * communities_, fill) {}

ExponentTable ExponentTable::erased(std::size_t k, double alpha) {
  ExponentTable t(k + 1, k, kInfinity);
  for (std::size_t x = 0; x < k; ++x) {
    t(x, x) = 0.0;
    t(k, x) = alpha;
  }
  return t;
}

ExponentTable ExponentTable::noisy(std::size_t k, double alpha) {
  ExponentTable t(k, k, alpha);
  for (std::size_t x = 0; x < k; ++x) t(x, x) = 0.0;
  return t;
}

double delta_noisy_erasure(const ExponentTable& d, std::size_t s, std::size_t t,
                           const MeanVector& mu_s, const MeanVector& mu_t) {
  if (s >= d.communities || t >= d.communities) {
    throw std::invalid_argument("delta_noisy_erasure: community index out of range");
  }
  require_same_size(mu_s.size(), mu_t.size(), "delta_noisy_erasure (means)");
  for (std::size_t u = 0; u < d.symbols; ++u) {
    for (std::size_t x = 0; x < d.communities; ++x) {
      const double e = d(u, x);
      if (std::isnan(e) || e < 0.0) throw std::invalid_argument("delta_noisy_erasure: negative exponent");
      if (u == x && e != 0.0) throw std::invalid_argument("delta_noisy_erasure: d[x][x] must be 0");
    }
  }

  double best = kInfinity;
  for (std::size_t u = 0; u < d.symbols; ++u) {
    const double ds = d(u, s);
    const double dt = d(u, t);
    // An infinite exponent makes the inner max infinite: lambda ranges over
    // [0, 1], so its coefficient can always be made positive.
    if (std::isinf(ds) || std::isinf(dt)) continue;
    const OptResult r = maximize_unit_interval([&](double lam) {
      return ds * lam + dt * (1.0 - lam) - log_poisson_overlap(mu_s, mu_t, lam);
    });
    best = std::min(best, r.value);
  }
  return best;
}

double separation_rate(const DbmParams& params, std::size_t s, std::size_t t) {
  if (s == t) throw std::invalid_argument("separation_rate: s and t must differ");
  if (s >= params.k() || t >= params.k()) throw std::invalid_argument("separation_rate: index out of range");
  const double log_n = params.log_n();
  if (!(log_n > 0.0)) throw std::invalid_argument("separation_rate: requires n > 1");
  const double ct = ct_divergence_poisson(params.mean_profile(s), params.mean_profile(t),
                                          params.channel().column(s), params.channel().column(t));
  return ct / log_n;
}

std::vector<double> separation_matrix(const DbmParams& params) {
  const std::size_t k = params.k();
  std::vector<double> m(k * k, 0.0);
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = 0; t < k; ++t) {
      if (s != t) m[s * k + t] = separation_rate(params, s, t);
    }
  }
  return m;
}

bool data_cannot_help(const DbmParams& params, std::size_t s, std::size_t t, double epsilon) {
  if (s == t) throw std::invalid_argument("data_cannot_help: s and t must differ");
  if (!(epsilon > 0.0)) throw std::invalid_argument("data_cannot_help: epsilon must be > 0");
  const double graph = ch_divergence(params.mean_profile_unscaled(s), params.mean_profile_unscaled(t));
  const double tv = tv_distance(params.channel().column(s), params.channel().column(t));
  const double slack = std::pow(static_cast<double>(params.n()), -epsilon);
  return graph < 1.0 - epsilon && tv <= 1.0 - slack;
}

double threshold_erased(double b, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("threshold_erased: alpha must lie in [0, 1]");
  if (!(b >= 0.0)) throw std::invalid_argument("threshold_erased: b must be >= 0");
  const double r = std::sqrt(b) + std::sqrt(2.0 * (1.0 - alpha));
  return r * r;
}

double threshold_sbm(double b) {
  if (!(b >= 0.0)) throw std::invalid_argument("threshold_sbm: b must be >= 0");
  const double r = std::sqrt(b) + std::sqrt(2.0);
  return r * r;
}

}  // namespace dbm
