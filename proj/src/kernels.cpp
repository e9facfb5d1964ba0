#include "dbm/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace dbm::kernels {

MapScorer::MapScorer(const DbmParams& params, bool use_side_info, double effective_log_n,
                     std::span<const std::pair<std::size_t, std::size_t>> symmetric_pairs,
                     std::size_t max_degree)
    : k(params.k()),
      log_prior(k),
      mu(k * k),
      log_mu(k * k),
      tied(k * k, 0),
      log_factorial(max_degree + 1, 0.0) {
  for (std::size_t s = 0; s < k; ++s) {
    log_prior[s] = std::log(params.prior()[s]);
    for (std::size_t r = 0; r < k; ++r) {
      const double m = params.prior()[r] * params.q(s, r) * effective_log_n;
      mu[s * k + r] = m;
      log_mu[s * k + r] = m > 0.0 ? std::log(m) : -kInfinity;
    }
  }
  if (use_side_info) {
    const auto& ch = params.channel();
    log_channel.resize(ch.alphabet_size() * k);
    for (std::size_t u = 0; u < ch.alphabet_size(); ++u) {
      for (std::size_t s = 0; s < k; ++s) log_channel[u * k + s] = ch.log_prob(u, s);
    }
  }
  for (const auto& [s, t] : symmetric_pairs) {
    tied[s * k + t] = 1;
    tied[t * k + s] = 1;
  }
  for (std::size_t d = 1; d <= max_degree; ++d) {
    log_factorial[d] = log_factorial[d - 1] + std::log(static_cast<double>(d));
  }
}

double MapScorer::log_poisson(int d, std::size_t s, std::size_t r) const {
  const double m = mu[s * k + r];
  if (m <= 0.0) return d == 0 ? 0.0 : -kInfinity;
  const double lf = static_cast<std::size_t>(d) < log_factorial.size() ? log_factorial[d] : std::lgamma(d + 1.0);
  return d * log_mu[s * k + r] - m - lf;
}

double MapScorer::graph_score(std::size_t s, std::span<const int> profile) const {
  double acc = log_prior[s];
  for (std::size_t r = 0; r < k; ++r) acc += log_poisson(profile[r], s, r);
  return acc;
}

double MapScorer::side_score(std::size_t s, Label attribute) const {
  if (log_channel.empty()) return 0.0;
  return log_channel[static_cast<std::size_t>(attribute) * k + s];
}

Label MapScorer::best_label(std::span<const int> profile, Label attribute) const {
  // Graph terms per community; at most 16 on the stack, else heap.
  double graph_buf[16];
  std::vector<double> graph_heap;
  double* graph = graph_buf;
  if (k > 16) {
    graph_heap.resize(k);
    graph = graph_heap.data();
  }
  for (std::size_t s = 0; s < k; ++s) graph[s] = graph_score(s, profile);

  std::size_t champion = 0;
  for (std::size_t s = 1; s < k; ++s) {
    double challenger = graph[s];
    double incumbent = graph[champion];
    if (!tied[champion * k + s]) {
      challenger += side_score(s, attribute);
      incumbent += side_score(champion, attribute);
    }
    if (challenger > incumbent) champion = s;
  }
  return static_cast<Label>(champion);
}

namespace {

inline void multiply_row(const Graph& graph, const Block& x, Block& y, Vertex v) {
  const Eigen::Index m = x.cols();
  double* out = y.data() + v * m;
  std::fill(out, out + m, 0.0);
  for (Vertex u : graph.neighbors(v)) {
    const double* in = x.data() + u * m;
    for (Eigen::Index j = 0; j < m; ++j) out[j] += in[j];
  }
}

inline Label sweep_vertex(const Graph& graph, std::span<const Label> prev, std::span<const Label> attributes,
                          const MapScorer& scorer, Vertex v, std::vector<int>& profile) {
  std::fill(profile.begin(), profile.end(), 0);
  for (Vertex u : graph.neighbors(v)) ++profile[prev[u]];
  const Label attribute = attributes.empty() ? 0 : attributes[v];
  return scorer.best_label(profile, attribute);
}

}  // namespace

namespace serial {

void adjacency_multiply(const Graph& graph, const Block& x, Block& y) {
  const auto n = static_cast<Vertex>(graph.num_vertices());
  y.resize(x.rows(), x.cols());
  for (Vertex v = 0; v < n; ++v) multiply_row(graph, x, y, v);
}

std::size_t map_sweep(const Graph& graph, std::span<const Label> prev, std::span<const Label> attributes,
                      const MapScorer& scorer, std::span<Label> next) {
  const auto n = static_cast<Vertex>(graph.num_vertices());
  std::vector<int> profile(scorer.k);
  std::size_t changed = 0;
  for (Vertex v = 0; v < n; ++v) {
    next[v] = sweep_vertex(graph, prev, attributes, scorer, v, profile);
    changed += next[v] != prev[v];
  }
  return changed;
}

}  // namespace serial

namespace omp {

void adjacency_multiply(const Graph& graph, const Block& x, Block& y) {
  const auto n = static_cast<Vertex>(graph.num_vertices());
  y.resize(x.rows(), x.cols());
#pragma omp parallel for schedule(static)
  for (Vertex v = 0; v < n; ++v) multiply_row(graph, x, y, v);
}

std::size_t map_sweep(const Graph& graph, std::span<const Label> prev, std::span<const Label> attributes,
                      const MapScorer& scorer, std::span<Label> next) {
  const auto n = static_cast<Vertex>(graph.num_vertices());
  std::size_t changed = 0;
#pragma omp parallel reduction(+ : changed)
  {
    std::vector<int> profile(scorer.k);
#pragma omp for schedule(static)
    for (Vertex v = 0; v < n; ++v) {
      next[v] = sweep_vertex(graph, prev, attributes, scorer, v, profile);
      changed += next[v] != prev[v];
    }
  }
  return changed;
}

}  // namespace omp

}  // namespace dbm::kernels
