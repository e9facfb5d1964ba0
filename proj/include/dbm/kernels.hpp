#pragma once

// Data-parallel inner loops of the recovery pipeline. Each kernel has a
// serial reference and an OpenMP version; both produce bit-identical output
// (every output row is computed by one thread in a fixed order), and the
// tests hold them to that.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dbm/model.hpp"

namespace dbm::kernels {

/// Dense n x m block stored row-major so one vertex's coordinates are
/// contiguous.
using Block = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Precomputed per-community terms of the MAP score
///   log p_s + [side info] log P(u|s) + sum_r log Poisson(d_r; mu_sr).
struct MapScorer {
  std::size_t k = 0;
  std::vector<double> log_prior;       // k
  std::vector<double> log_channel;     // alphabet x k, empty when side info is off
  std::vector<double> mu;              // k x k, mu[s * k + r]
  std::vector<double> log_mu;          // k x k
  std::vector<unsigned char> tied;     // k x k, 1 when the pair is in the symmetry set
  std::vector<double> log_factorial;   // up to the max degree of the graph being scored

  MapScorer(const DbmParams& params, bool use_side_info, double effective_log_n,
            std::span<const std::pair<std::size_t, std::size_t>> symmetric_pairs, std::size_t max_degree);

  /// log Poisson(d; mu_sr); -inf when mu_sr = 0 < d.
  double log_poisson(int d, std::size_t s, std::size_t r) const;
  /// Graph plus prior part of the score (no attribute term).
  double graph_score(std::size_t s, std::span<const int> profile) const;
  double side_score(std::size_t s, Label attribute) const;
  /// Winner of k - 1 sequential pairwise tests; the attribute term is dropped
  /// for tied pairs. Ties keep the smaller index.
  Label best_label(std::span<const int> profile, Label attribute) const;
};

namespace serial {
void adjacency_multiply(const Graph& graph, const Block& x, Block& y);
/// One synchronous sweep: next[v] = best label against `prev`. Returns the
/// number of vertices whose label changed.
std::size_t map_sweep(const Graph& graph, std::span<const Label> prev, std::span<const Label> attributes,
                      const MapScorer& scorer, std::span<Label> next);
}  // namespace serial

namespace omp {
void adjacency_multiply(const Graph& graph, const Block& x, Block& y);
std::size_t map_sweep(const Graph& graph, std::span<const Label> prev, std::span<const Label> attributes,
                      const MapScorer& scorer, std::span<Label> next);
}  // namespace omp

}  // namespace dbm::kernels
