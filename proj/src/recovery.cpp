#include "dbm/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "dbm/kernels.hpp"
#include "dbm/rng.hpp"

namespace dbm {

namespace {

constexpr std::size_t kMaxBruteForceK = 10;

using kernels::Block;

// A log-likelihood that may contain -inf terms, ordered by the number of
// impossible terms first and by the finite remainder second. With one
// impossible term every candidate ties at -inf; counting them keeps the
// comparison informative.
struct LogScore {
  long impossible = 0;
  double finite = 0.0;

  void add(double weight, double log_value) {
    if (weight == 0.0) return;
    if (log_value == -kInfinity) {
      impossible += static_cast<long>(weight);
    } else {
      finite += weight * log_value;
    }
  }
  LogScore& operator+=(const LogScore& o) {
    impossible += o.impossible;
    finite += o.finite;
    return *this;
  }
  bool better_than(const LogScore& o) const {
    if (impossible != o.impossible) return impossible < o.impossible;
    return finite > o.finite;
  }
};

void orthonormalize(Block& x) {
  Eigen::HouseholderQR<Block> qr(x);
  Block q = qr.householderQ() * Block::Identity(x.rows(), x.cols());
  x = std::move(q);
}

std::vector<Label> kmeans(const Block& points, std::size_t k, std::uint64_t seed, int restarts) {
  const std::size_t n = static_cast<std::size_t>(points.rows());
  const std::size_t dim = static_cast<std::size_t>(points.cols());
  std::vector<Label> best_labels(n, 0);
  double best_inertia = std::numeric_limits<double>::infinity();

  auto dist2 = [&](std::size_t i, const Block& centers, std::size_t c) {
    return (points.row(static_cast<Eigen::Index>(i)) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
  };

  for (int restart = 0; restart < restarts; ++restart) {
    Rng rng(substream(seed, 100 + static_cast<std::uint64_t>(restart)));
    Block centers(k, dim);
    // k-means++ seeding.
    centers.row(0) = points.row(static_cast<Eigen::Index>(rng.below(n)));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        d2[i] = std::min(d2[i], dist2(i, centers, c - 1));
        total += d2[i];
      }
      std::size_t pick = rng.below(n);
      if (total > 0.0) {
        double target = rng.uniform() * total;
        for (std::size_t i = 0; i < n; ++i) {
          target -= d2[i];
          if (target <= 0.0) {
            pick = i;
            break;
          }
        }
      }
      centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(pick));
    }

    std::vector<Label> labels(n, 0);
    double inertia = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      bool moved = false;
      inertia = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        Label arg = 0;
        double best = dist2(i, centers, 0);
        for (std::size_t c = 1; c < k; ++c) {
          const double d = dist2(i, centers, c);
          if (d < best) {
            best = d;
            arg = static_cast<Label>(c);
          }
        }
        moved |= labels[i] != arg || iter == 0;
        labels[i] = arg;
        inertia += best;
      }
      if (!moved) break;
      Block sums = Block::Zero(k, dim);
      std::vector<std::size_t> counts(k, 0);
      for (std::size_t i = 0; i < n; ++i) {
        sums.row(labels[i]) += points.row(static_cast<Eigen::Index>(i));
        ++counts[labels[i]];
      }
      for (std::size_t c = 0; c < k; ++c) {
        if (counts[c] > 0) {
          centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
        } else {
          // Empty cluster: restart it at the point farthest from its center.
          std::size_t far = 0;
          double far_d = -1.0;
          for (std::size_t i = 0; i < n; ++i) {
            const double d = dist2(i, centers, static_cast<std::size_t>(labels[i]));
            if (d > far_d) {
              far_d = d;
              far = i;
            }
          }
          centers.row(static_cast<Eigen::Index>(c)) = points.row(static_cast<Eigen::Index>(far));
        }
      }
    }
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_labels = labels;
    }
  }
  return best_labels;
}

std::vector<Label> apply_permutation(std::span<const Label> labels, std::span<const std::size_t> perm) {
  std::vector<Label> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = static_cast<Label>(perm[labels[i]]);
  return out;
}

void require_valid_assignment(std::span<const Label> labels, std::size_t k, std::size_t n, const char* who) {
  if (labels.size() != n) throw std::invalid_argument(std::string(who) + ": assignment size mismatch");
  for (Label l : labels) {
    if (l < 0 || static_cast<std::size_t>(l) >= k) throw std::invalid_argument(std::string(who) + ": label out of range");
  }
}

}  // namespace

// ---------------------------------------------------------------- config

void RefineConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("RefineConfig: epsilon must be > 0");
  if (t_max < 1) throw std::invalid_argument("RefineConfig: t_max must be >= 1");
  if (gamma && !(*gamma > 0.0 && *gamma < 1.0)) throw std::invalid_argument("RefineConfig: gamma must lie in (0, 1)");
  if (!(symmetry_delta > 0.0)) throw std::invalid_argument("RefineConfig: symmetry delta must be > 0");
}

bool SymmetrySet::contains(std::size_t s, std::size_t t) const {
  if (s > t) std::swap(s, t);
  return std::find(pairs.begin(), pairs.end(), std::pair{s, t}) != pairs.end();
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::dbm: return "dbm";
    case Method::dbm_iter: return "dbm_iter";
    case Method::sbm: return "sbm";
    case Method::sbm_iter: return "sbm_iter";
    case Method::spectral: return "spectral";
    case Method::data_only: return "data_only";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::dbm, Method::dbm_iter, Method::sbm, Method::sbm_iter, Method::spectral, Method::data_only}) {
    if (method_name(m) == name) return m;
  }
  throw std::invalid_argument("unknown method: " + std::string(name));
}

bool uses_graph(Method m) { return m != Method::data_only; }

// ---------------------------------------------------------------- spectral

Eigenpairs leading_eigenpairs(const Graph& graph, std::size_t k, std::uint64_t seed, double tol, int max_iterations) {
  const std::size_t n = graph.num_vertices();
  if (k == 0 || k > n) throw std::invalid_argument("leading_eigenpairs: need 1 <= k <= n");
  // Guard vectors keep large negative eigenvalues from crowding out the
  // k algebraically largest ones.
  const std::size_t m = std::min(n, k + 4);

  Rng rng(substream(seed, 11));
  Block x(n, m);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform() - 0.5;
  }
  orthonormalize(x);

  Eigenpairs out;
  Block y;
  Eigen::MatrixXd ritz_vectors;
  Eigen::VectorXd ritz_values;
  std::vector<Eigen::Index> order(m);
  for (int it = 1; it <= max_iterations; ++it) {
    kernels::omp::adjacency_multiply(graph, x, y);
    Eigen::MatrixXd h = x.transpose() * y;
    h = 0.5 * (h + h.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
    ritz_values = eig.eigenvalues();
    ritz_vectors = eig.eigenvectors();
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return ritz_values(a) > ritz_values(b); });

    Eigen::MatrixXd w(m, k);
    for (std::size_t j = 0; j < k; ++j) w.col(static_cast<Eigen::Index>(j)) = ritz_vectors.col(order[j]);
    const Block v = x * w;
    const Block av = y * w;
    const double scale = std::max(std::abs(ritz_values(order[0])), std::abs(ritz_values(order[m - 1])));
    double residual = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double r = (av.col(jj) - ritz_values(order[j]) * v.col(jj)).norm();
      residual = std::max(residual, r / std::max(scale, 1.0));
    }

    out.iterations = it;
    out.residual = residual;
    out.vectors = v;
    out.values.assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) out.values[j] = ritz_values(order[j]);
    if (residual <= tol) break;

    x = y;
    orthonormalize(x);
  }
  return out;
}

Assignment spectral_partition(const Graph& graph, std::size_t k, std::uint64_t seed) {
  const std::size_t n = graph.num_vertices();
  if (k < 2) throw std::invalid_argument("spectral_partition: k must be >= 2");
  if (k > n) throw std::invalid_argument("spectral_partition: k exceeds the number of vertices");

  const Eigenpairs eig = leading_eigenpairs(graph, k, seed);
  Assignment out;
  out.labels.resize(n);
  if (k == 2) {
    for (std::size_t v = 0; v < n; ++v) out.labels[v] = eig.vectors(static_cast<Eigen::Index>(v), 1) > 0.0 ? 1 : 0;
    return out;
  }
  out.labels = kmeans(eig.vectors, k, seed, 20);
  return out;
}

// ---------------------------------------------------------------- canonicalization

Assignment canonicalize(const Assignment& assignment, std::span<const Label> attributes, const DbmParams& params,
                        const Graph& graph) {
  const std::size_t k = params.k();
  const std::size_t n = assignment.size();
  if (k > kMaxBruteForceK) throw std::invalid_argument("canonicalize: k > 10 is not supported");
  require_valid_assignment(assignment.labels, k, graph.num_vertices(), "canonicalize");
  if (!attributes.empty() && attributes.size() != n) throw std::invalid_argument("canonicalize: attribute size mismatch");

  const ChannelSpec& channel = params.channel();
  // score[i][t]: value of sending cluster i to community t.
  std::vector<LogScore> cell(k * k);
  bool anchored = false;
  if (!attributes.empty()) {
    for (std::size_t v = 0; v < n; ++v) {
      const auto u = static_cast<std::size_t>(attributes[v]);
      if (!channel.informative(u)) continue;
      anchored = true;
      const auto i = static_cast<std::size_t>(assignment.labels[v]);
      for (std::size_t t = 0; t < k; ++t) cell[i * k + t].add(1.0, channel.log_prob(u, t));
    }
  }

  std::vector<std::size_t> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best_perm = perm;
  LogScore best;
  bool first = true;

  if (anchored) {
    do {
      LogScore s;
      for (std::size_t i = 0; i < k; ++i) s += cell[i * k + perm[i]];
      if (first || s.better_than(best)) {
        best = s;
        best_perm = perm;
        first = false;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    std::vector<double> sizes(k, 0.0);
    for (Label l : assignment.labels) sizes[l] += 1.0;
    std::vector<double> block_edges(k * k, 0.0);  // i <= j
    for (const auto& [u, v] : graph.edges()) {
      auto i = static_cast<std::size_t>(assignment.labels[u]);
      auto j = static_cast<std::size_t>(assignment.labels[v]);
      if (i > j) std::swap(i, j);
      block_edges[i * k + j] += 1.0;
    }
    do {
      LogScore s;
      for (std::size_t i = 0; i < k; ++i) s.add(sizes[i], std::log(params.prior()[perm[i]]));
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = i; j < k; ++j) {
          const double q = params.q(perm[i], perm[j]);
          s.add(block_edges[i * k + j], q > 0.0 ? std::log(q) : -kInfinity);
        }
      }
      if (first || s.better_than(best)) {
        best = s;
        best_perm = perm;
        first = false;
      }
    } while (std::next_permutation(perm.begin(), perm.end()));
  }

  return Assignment{apply_permutation(assignment.labels, best_perm)};
}

// ---------------------------------------------------------------- symmetry / Scheffe

SymmetrySet symmetry_set(const DbmParams& params, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("symmetry_set: delta must be > 0");
  constexpr double tol = 1e-9;
  const std::size_t k = params.k();
  const double tv_limit = 2.0 * delta / params.log_n();
  SymmetrySet out;
  for (std::size_t s = 0; s < k; ++s) {
    for (std::size_t t = s + 1; t < k; ++t) {
      if (std::abs(params.prior()[s] - params.prior()[t]) > tol) continue;
      const MeanVector ms = params.mean_profile_unscaled(s);
      const MeanVector mt = params.mean_profile_unscaled(t);
      bool same = true;
      for (std::size_t r = 0; r < k; ++r) same &= std::abs(ms[r] - mt[r]) <= tol;
      if (!same) continue;
      if (tv_distance(params.channel().column(s), params.channel().column(t)) <= tv_limit) out.pairs.emplace_back(s, t);
    }
  }
  return out;
}

Hypothesis scheffe_test(std::span<const std::size_t> observations, const Pmf& p1, const Pmf& p2) {
  if (observations.empty()) throw std::invalid_argument("scheffe_test: no observations");
  if (p1.size() != p2.size()) throw std::invalid_argument("scheffe_test: alphabet mismatch");
  if (p1 == p2) throw std::invalid_argument("scheffe_test: hypotheses are identical");
  std::vector<char> in_set(p1.size());
  double mass1 = 0.0, mass2 = 0.0;
  for (std::size_t x = 0; x < p1.size(); ++x) {
    in_set[x] = p1[x] > p2[x];
    if (in_set[x]) {
      mass1 += p1[x];
      mass2 += p2[x];
    }
  }
  std::size_t hits = 0;
  for (std::size_t x : observations) {
    if (x >= p1.size()) throw std::invalid_argument("scheffe_test: observation outside the alphabet");
    hits += in_set[x] ? 1 : 0;
  }
  const double empirical = static_cast<double>(hits) / static_cast<double>(observations.size());
  // mass1 > mass2, so "closer to mass1" is "at or above the midpoint".
  return 2.0 * empirical >= mass1 + mass2 ? Hypothesis::h1 : Hypothesis::h2;
}

// ---------------------------------------------------------------- MAP

double map_score(std::size_t s, std::span<const int> profile, Label attribute, const DbmParams& params,
                 bool use_side_info, double effective_log_n) {
  const std::size_t k = params.k();
  if (s >= k) throw std::invalid_argument("map_score: community out of range");
  if (profile.size() != k) throw std::invalid_argument("map_score: profile must have k entries");
  double score = std::log(params.prior()[s]);
  if (use_side_info) score += params.channel().log_prob(static_cast<std::size_t>(attribute), s);
  for (std::size_t r = 0; r < k; ++r) {
    const double mu = params.prior()[r] * params.q(s, r) * effective_log_n;
    const int d = profile[r];
    if (mu <= 0.0) {
      if (d != 0) return -kInfinity;
      continue;
    }
    score += d * std::log(mu) - mu - std::lgamma(d + 1.0);
  }
  return score;
}

RefineResult map_refine(const Graph& graph, std::span<const Label> attributes, const Assignment& init,
                        const DbmParams& params, const RefineConfig& config, double effective_log_n) {
  config.validate();
  const std::size_t n = graph.num_vertices();
  const std::size_t k = params.k();
  require_valid_assignment(init.labels, k, n, "map_refine");
  if (config.use_side_info && attributes.size() != n) {
    throw std::invalid_argument("map_refine: side information requires one attribute per vertex");
  }

  const SymmetrySet sym = config.use_side_info ? symmetry_set(params, config.symmetry_delta) : SymmetrySet{};
  std::size_t max_degree = 0;
  for (std::size_t v = 0; v < n; ++v) max_degree = std::max(max_degree, graph.degree(static_cast<Vertex>(v)));
  const kernels::MapScorer scorer(params, config.use_side_info, effective_log_n, sym.pairs, max_degree);
  const std::span<const Label> side = config.use_side_info ? attributes : std::span<const Label>{};

  std::vector<Label> prev = init.labels;
  std::vector<Label> next(n);
  const int sweeps = config.mode == RefineMode::single_pass ? 1 : config.t_max;
  int iterations = 0;
  for (int t = 1; t <= sweeps; ++t) {
    const std::size_t changed = kernels::omp::map_sweep(graph, prev, side, scorer, next);
    iterations = t;
    prev.swap(next);
    if (n == 0 || static_cast<double>(changed) / static_cast<double>(n) < config.epsilon) break;
  }
  return RefineResult{Assignment{std::move(prev)}, iterations};
}

RefineResult map_refine(const Graph& graph, std::span<const Label> attributes, const Assignment& init,
                        const DbmParams& params, const RefineConfig& config) {
  const double log_n = params.log_n();
  const double effective = config.gamma ? (1.0 - *config.gamma) * log_n : log_n;
  return map_refine(graph, attributes, init, params, config, effective);
}

Assignment data_only_map(std::span<const Label> attributes, const DbmParams& params) {
  const std::size_t k = params.k();
  const ChannelSpec& ch = params.channel();
  Assignment out;
  out.labels.resize(attributes.size());
  for (std::size_t v = 0; v < attributes.size(); ++v) {
    const auto u = static_cast<std::size_t>(attributes[v]);
    if (u >= ch.alphabet_size()) throw std::invalid_argument("data_only_map: attribute outside the alphabet");
    Label best = 0;
    double best_score = -kInfinity;
    for (std::size_t s = 0; s < k; ++s) {
      const double score = std::log(params.prior()[s]) + ch.log_prob(u, s);
      if (s == 0 || score > best_score) {
        best_score = score;
        best = static_cast<Label>(s);
      }
    }
    out.labels[v] = best;
  }
  return out;
}

RecoveryResult recover(const DbmSample& sample, const DbmParams& params, Method method, RefineConfig config,
                       std::uint64_t seed) {
  config.validate();
  if (sample.labels.size() != static_cast<std::size_t>(params.n())) {
    throw std::invalid_argument("recover: sample size does not match params.n");
  }
  if (method == Method::data_only) return RecoveryResult{data_only_map(sample.attributes, params), 0};

  const bool side = method == Method::dbm || method == Method::dbm_iter;
  Graph init_graph_storage, refine_graph_storage;
  const Graph* init_graph = &sample.graph;
  const Graph* refine_graph = &sample.graph;
  if (config.gamma) {
    auto [g1, g2] = split_graph(sample.graph, *config.gamma, substream(seed, 5));
    init_graph_storage = std::move(g1);
    refine_graph_storage = std::move(g2);
    init_graph = &init_graph_storage;
    refine_graph = &refine_graph_storage;
  }

  const Assignment init = spectral_partition(*init_graph, params.k(), substream(seed, 6));
  const std::span<const Label> anchors = side ? std::span<const Label>(sample.attributes) : std::span<const Label>{};
  Assignment canonical = canonicalize(init, anchors, params, *init_graph);
  if (method == Method::spectral) return RecoveryResult{std::move(canonical), 0};

  config.use_side_info = side;
  config.mode = (method == Method::dbm_iter || method == Method::sbm_iter) ? RefineMode::iterative
                                                                            : RefineMode::single_pass;
  RefineResult refined = map_refine(*refine_graph, sample.attributes, canonical, params, config);
  return RecoveryResult{std::move(refined.assignment), refined.iterations};
}

}  // namespace dbm
