#pragma once

// Data block model: parameters, attribute channels, sparse graphs, and
// sampling in the logarithmic-degree regime. Labels and attribute symbols
// are 0-based throughout the library; 1-based values appear only in files.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dbm/divergences.hpp"

namespace dbm {

using Label = std::int32_t;
using Vertex = std::int32_t;

/// Column-stochastic attribute channel P(u | x): one Pmf over the attribute
/// alphabet per community.
class ChannelSpec {
 public:
  ChannelSpec(std::vector<std::vector<double>> columns, std::optional<int> erasure_symbol = std::nullopt);

  /// Reveals the label with probability 1 - n^-alpha, else the erasure
  /// symbol (index k). Cross labels have probability exactly 0.
  static ChannelSpec erased(double alpha, std::int64_t n, std::size_t k = 2);
  /// Keeps the label with probability 1 - n^-alpha; otherwise reports one of
  /// the other k - 1 labels uniformly.
  static ChannelSpec noisy(double alpha, std::int64_t n, std::size_t k = 2);
  /// P(u|x) = n^-d[u][x] off the diagonal, remaining mass on u = x. Rows
  /// beyond the first k are extra symbols (the last one, if present, is the
  /// erasure symbol).
  static ChannelSpec exponent_family(const ExponentTable& d, std::int64_t n);
  /// Single-symbol alphabet: attributes carry no information.
  static ChannelSpec uninformative(std::size_t k);

  std::size_t alphabet_size() const { return alphabet_size_; }
  std::size_t communities() const { return columns_.size(); }
  std::optional<int> erasure_symbol() const { return erasure_symbol_; }

  double prob(std::size_t u, std::size_t x) const { return columns_[x][u]; }
  /// log P(u|x); -inf for impossible symbols.
  double log_prob(std::size_t u, std::size_t x) const;
  Pmf column(std::size_t x) const { return Pmf(columns_[x]); }
  const std::vector<std::vector<double>>& columns() const { return columns_; }

  /// True when P(u|s) differs across communities for this symbol.
  bool informative(std::size_t u) const;

 private:
  std::size_t alphabet_size_ = 0;
  std::vector<std::vector<double>> columns_;
  std::optional<int> erasure_symbol_;
};

/// Parameters of DBM(n, k, P, (log n / n) Q, channel).
class DbmParams {
 public:
  /// `q` is row-major k x k. Throws std::invalid_argument when the prior,
  /// Q, or channel are inconsistent, or when an edge probability exceeds 1
  /// and `clip_edge_probabilities` is false.
  DbmParams(std::int64_t n, std::vector<double> prior, std::vector<double> q, ChannelSpec channel,
            bool clip_edge_probabilities = false);

  /// P = (1/2, 1/2), Q = [[a, b], [b, a]], erased labels with exponent alpha.
  static DbmParams symmetric_erased(std::int64_t n, double a, double b, double alpha,
                                    bool clip_edge_probabilities = false);

  std::int64_t n() const { return n_; }
  std::size_t k() const { return prior_.size(); }
  double log_n() const;
  const std::vector<double>& prior() const { return prior_; }
  double q(std::size_t r, std::size_t s) const { return q_[r * k() + s]; }
  const std::vector<double>& q_matrix() const { return q_; }
  const ChannelSpec& channel() const { return channel_; }
  bool clips_edge_probabilities() const { return clip_; }

  /// (log n / n) Q_rs, clipped to 1 when clipping is enabled.
  double edge_probability(std::size_t r, std::size_t s) const;
  /// mu_s = (diag(P) Q)_s, the column with entries p_r Q_rs.
  MeanVector mean_profile_unscaled(std::size_t s) const;
  /// mu_s^(n) = mu_s log n.
  MeanVector mean_profile(std::size_t s) const;

  DbmParams with_channel(ChannelSpec channel) const;

 private:
  std::int64_t n_;
  std::vector<double> prior_;
  std::vector<double> q_;
  ChannelSpec channel_;
  bool clip_;
};

/// Undirected simple graph in compressed sparse row form. Neighbor lists are
/// sorted; no self-loops or multi-edges.
class Graph {
 public:
  Graph() = default;
  /// Builds from an undirected edge list. Each pair must have u != v;
  /// duplicates (in either orientation) are rejected.
  Graph(std::size_t n, std::span<const std::pair<Vertex, Vertex>> edges);

  std::size_t num_vertices() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
  std::size_t num_edges() const { return neighbors_.size() / 2; }
  std::span<const Vertex> neighbors(Vertex v) const {
    return {neighbors_.data() + offsets_[v], neighbors_.data() + offsets_[v + 1]};
  }
  std::size_t degree(Vertex v) const { return offsets_[v + 1] - offsets_[v]; }
  bool has_edge(Vertex u, Vertex v) const;
  /// Edges as (u, v) with u < v, in lexicographic order.
  std::vector<std::pair<Vertex, Vertex>> edges() const;

  std::span<const std::size_t> offsets() const { return offsets_; }
  std::span<const Vertex> adjacency() const { return neighbors_; }

  bool operator==(const Graph&) const = default;

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Vertex> neighbors_;
};

struct DbmSample {
  std::vector<Label> labels;
  Graph graph;
  std::vector<Label> attributes;
  std::uint64_t seed = 0;

  bool operator==(const DbmSample&) const = default;
};

/// Draws labels from the prior, edges as independent Bernoulli((log n/n) Q)
/// over pairs i < j, and one attribute per vertex from its channel column.
/// Deterministic in (params, seed).
DbmSample sample_dbm(const DbmParams& params, std::uint64_t seed);

/// Places each edge in the first graph with probability gamma, else in the
/// second.
std::pair<Graph, Graph> split_graph(const Graph& graph, double gamma, std::uint64_t seed);

/// d_r(v): number of neighbors of v assigned to community r.
std::vector<int> degree_profile(const Graph& graph, std::span<const Label> assignment, std::size_t k, Vertex v);

/// Edge list "u v" (1-based) one per line.
void write_edge_list(std::ostream& out, const Graph& graph);
/// CSV "vertex,label,attribute" with 1-based values.
void write_node_table(std::ostream& out, const DbmSample& sample);

}  // namespace dbm
