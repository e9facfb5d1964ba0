#pragma once

// Community recovery: spectral initialization, permutation canonicalization,
// symmetry identification, Poisson-MAP refinement, and the baselines.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dbm/model.hpp"

namespace dbm {

/// Labeling of every vertex into [k] (0-based).
struct Assignment {
  std::vector<Label> labels;

  std::size_t size() const { return labels.size(); }
  bool operator==(const Assignment&) const = default;
};

enum class RefineMode { single_pass, iterative };

struct RefineConfig {
  std::optional<double> gamma;  // edge-split fraction; nullopt runs the no-split variant
  double epsilon = 1e-3;        // stop when fewer than this fraction of labels change
  int t_max = 5;
  RefineMode mode = RefineMode::iterative;
  bool use_side_info = true;
  double symmetry_delta = 0.01;

  void validate() const;
};

/// Unordered community pairs treated as indistinguishable (s < t).
struct SymmetrySet {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  bool contains(std::size_t s, std::size_t t) const;
  bool empty() const { return pairs.empty(); }
};

enum class Method { dbm, dbm_iter, sbm, sbm_iter, spectral, data_only };

std::string_view method_name(Method m);
/// Parses a method name; throws std::invalid_argument on unknown names.
Method parse_method(std::string_view name);
bool uses_graph(Method m);

enum class Hypothesis { h1, h2 };

/// Spectral partition into k groups from the k leading adjacency
/// eigenvectors (subspace iteration + k-means; sign split when k = 2).
Assignment spectral_partition(const Graph& graph, std::size_t k, std::uint64_t seed);

/// The k leading (algebraically largest) eigenpairs of the adjacency matrix.
struct Eigenpairs {
  std::vector<double> values;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> vectors;  // n x k
  int iterations = 0;
  double residual = 0.0;
};
Eigenpairs leading_eigenpairs(const Graph& graph, std::size_t k, std::uint64_t seed, double tol = 1e-8,
                              int max_iterations = 500);

/// Resolves the label permutation of `assignment`. With side information
/// (non-empty `attributes` and at least one informative anchor) the
/// permutation maximizes the anchors' channel log-likelihood; otherwise it
/// maximizes the block log-likelihood of cluster sizes and edge counts.
/// Ties go to the lexicographically smallest permutation.
Assignment canonicalize(const Assignment& assignment, std::span<const Label> attributes, const DbmParams& params,
                        const Graph& graph);

/// Pairs with equal priors, equal mean profiles and channel columns within
/// total variation 2 delta / log n.
SymmetrySet symmetry_set(const DbmParams& params, double delta);

/// Scheffe test between p1 and p2 on the observed symbols. Ties go to H1.
Hypothesis scheffe_test(std::span<const std::size_t> observations, const Pmf& p1, const Pmf& p2);

/// log p_s + [use_side_info] log P(attribute|s) + sum_r log Poisson(d_r; p_r Q_sr log_n_eff).
double map_score(std::size_t s, std::span<const int> profile, Label attribute, const DbmParams& params,
                 bool use_side_info, double effective_log_n);

struct RefineResult {
  Assignment assignment;
  int iterations = 0;
};

/// Synchronous MAP sweeps starting from `init` (see RefineConfig). Degree
/// profiles are taken against the previous iterate.
RefineResult map_refine(const Graph& graph, std::span<const Label> attributes, const Assignment& init,
                        const DbmParams& params, const RefineConfig& config, double effective_log_n);
RefineResult map_refine(const Graph& graph, std::span<const Label> attributes, const Assignment& init,
                        const DbmParams& params, const RefineConfig& config);

/// Per-vertex argmax of log p_s + log P(U_v|s), ignoring the graph.
Assignment data_only_map(std::span<const Label> attributes, const DbmParams& params);

struct RecoveryResult {
  Assignment assignment;
  int iterations = 0;
};

/// Full pipeline for one method. `config.mode` and `config.use_side_info`
/// are overridden by the method.
RecoveryResult recover(const DbmSample& sample, const DbmParams& params, Method method, RefineConfig config,
                       std::uint64_t seed);

}  // namespace dbm
