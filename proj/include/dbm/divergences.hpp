#pragma once

// Divergences between finite distributions and product-Poisson laws, the
// Chernoff-TV separation rate of a data block model, and closed-form
// exact-recovery thresholds for the symmetric two-community case.
//
// Zero conventions: every objective is evaluated as the continuous extension
// of its interior (0 < t < 1) expression, so a term a^t b^(1-t) with a == 0
// or b == 0 is identically zero. Optima over the closed interval are then
// the sup/inf of the pointwise definition, which is what the product-Poisson
// identities require.

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "dbm/optimize.hpp"

namespace dbm {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Probability mass function over a finite alphabet. Entries are
/// nonnegative and sum to one within 1e-12.
class Pmf {
 public:
  explicit Pmf(std::vector<double> probs);

  std::span<const double> probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }

  bool operator==(const Pmf&) const = default;

 private:
  std::vector<double> probs_;
};

/// Nonnegative finite vector of expected counts (a positive measure on a
/// finite set, not necessarily normalized).
class MeanVector {
 public:
  explicit MeanVector(std::vector<double> means);

  std::span<const double> means() const { return means_; }
  std::size_t size() const { return means_.size(); }
  double operator[](std::size_t i) const { return means_[i]; }

  MeanVector scaled(double c) const;

 private:
  std::vector<double> means_;
};

/// Chernoff-Hellinger divergence D_+(a || b) = max_t sum_x f_t(a_x/b_x) b_x,
/// f_t(y) = 1 - t + t y - y^t.
double ch_divergence(const MeanVector& a, const MeanVector& b);
OptResult ch_divergence_opt(const MeanVector& a, const MeanVector& b);

/// Chernoff information -log min_lambda sum_x p^lambda q^(1-lambda).
/// Returns kInfinity for disjoint supports.
double chernoff_information(const Pmf& p, const Pmf& q);
OptResult chernoff_information_opt(const Pmf& p, const Pmf& q);

double tv_distance(const Pmf& p, const Pmf& q);

/// Chernoff-TV divergence between the pairs (p1, q1) and (p2, q2), with an
/// independent exponent per attribute symbol u.
double ct_divergence(const Pmf& p1, const Pmf& q1, const Pmf& p2, const Pmf& q2);

/// Chernoff-TV divergence where the graph marginals are the product Poisson
/// laws with means mu_s and mu_t. Uses the closed form of the inner sum.
double ct_divergence_poisson(const MeanVector& mu_s, const MeanVector& mu_t,
                             const Pmf& q_s, const Pmf& q_t);

/// Table of channel exponents d[u][x]; P(u|x) = n^(-d[u][x]). Rows are
/// attribute symbols (community labels then the erasure symbol), columns are
/// communities. +inf marks a structurally impossible symbol.
struct ExponentTable {
  std::size_t symbols = 0;
  std::size_t communities = 0;
  std::vector<double> d;  // row-major, symbols x communities

  ExponentTable(std::size_t symbols, std::size_t communities, double fill = 0.0);
  double& operator()(std::size_t u, std::size_t x) { return d[u * communities + x]; }
  double operator()(std::size_t u, std::size_t x) const { return d[u * communities + x]; }

  /// Erased labels: d[x][x] = 0, d[y][x] = inf for y != x, d[erasure][x] = alpha.
  static ExponentTable erased(std::size_t k, double alpha);
  /// Noisy labels without erasure row: d[x][x] = 0, d[y][x] = alpha.
  static ExponentTable noisy(std::size_t k, double alpha);
};

/// min_u max_lambda [d_{u,s} lambda + d_{u,t}(1-lambda)
///                   + sum_l (mu_s,l lambda + mu_t,l (1-lambda) - mu_s,l^lambda mu_t,l^(1-lambda))]
double delta_noisy_erasure(const ExponentTable& d, std::size_t s, std::size_t t,
                           const MeanVector& mu_s, const MeanVector& mu_t);

class DbmParams;

/// Finite-n separation rate (1/log n) D_CT(Poisson(mu_s^(n)), P(.|s) || Poisson(mu_t^(n)), P(.|t)).
double separation_rate(const DbmParams& params, std::size_t s, std::size_t t);

/// Pairwise matrix of separation rates; the diagonal is zero.
std::vector<double> separation_matrix(const DbmParams& params);

/// True iff D_+(mu_s || mu_t) < 1 - eps and TV(P(.|s), P(.|t)) <= 1 - n^(-eps):
/// the side information is too weak to rescue a subcritical graph.
bool data_cannot_help(const DbmParams& params, std::size_t s, std::size_t t, double epsilon);

/// DBM threshold (sqrt(b) + sqrt(2(1-alpha)))^2 for erased labels.
double threshold_erased(double b, double alpha);
/// SBM threshold (sqrt(b) + sqrt(2))^2.
double threshold_sbm(double b);

}  // namespace dbm
