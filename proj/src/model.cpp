#include "dbm/model.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>

#include "dbm/rng.hpp"

namespace dbm {

namespace {

std::size_t sample_categorical(Rng& rng, std::span<const double> probs) {
  const double u = rng.uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  // Round-off: fall back to the last symbol with positive mass.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

}  // namespace

// ---------------------------------------------------------------- channel

ChannelSpec::ChannelSpec(std::vector<std::vector<double>> columns, std::optional<int> erasure_symbol)
    : columns_(std::move(columns)), erasure_symbol_(erasure_symbol) {
  if (columns_.empty()) throw std::invalid_argument("ChannelSpec: needs at least one column");
  alphabet_size_ = columns_.front().size();
  for (const auto& c : columns_) {
    if (c.size() != alphabet_size_) throw std::invalid_argument("ChannelSpec: ragged columns");
    Pmf check(c);  // validates nonnegativity and unit mass
  }
  if (erasure_symbol_ && (*erasure_symbol_ < 0 || static_cast<std::size_t>(*erasure_symbol_) >= alphabet_size_)) {
    throw std::invalid_argument("ChannelSpec: erasure symbol out of range");
  }
}

ChannelSpec ChannelSpec::erased(double alpha, std::int64_t n, std::size_t k) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("erased channel: alpha must be >= 0");
  if (n < 1) throw std::invalid_argument("erased channel: n must be >= 1");
  const double e = std::pow(static_cast<double>(n), -alpha);
  std::vector<std::vector<double>> cols(k, std::vector<double>(k + 1, 0.0));
  for (std::size_t x = 0; x < k; ++x) {
    cols[x][x] = 1.0 - e;
    cols[x][k] = e;
  }
  return ChannelSpec(std::move(cols), static_cast<int>(k));
}

ChannelSpec ChannelSpec::noisy(double alpha, std::int64_t n, std::size_t k) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("noisy channel: alpha must be >= 0");
  if (k < 2) throw std::invalid_argument("noisy channel: needs k >= 2");
  const double e = std::pow(static_cast<double>(n), -alpha);
  if (e > 1.0) throw std::invalid_argument("noisy channel: flip probability exceeds 1");
  std::vector<std::vector<double>> cols(k, std::vector<double>(k, e / static_cast<double>(k - 1)));
  for (std::size_t x = 0; x < k; ++x) cols[x][x] = 1.0 - e;
  return ChannelSpec(std::move(cols));
}

ChannelSpec ChannelSpec::exponent_family(const ExponentTable& d, std::int64_t n) {
  const std::size_t k = d.communities;
  if (d.symbols < k) throw std::invalid_argument("exponent_family: need at least k symbols");
  std::vector<std::vector<double>> cols(k, std::vector<double>(d.symbols, 0.0));
  for (std::size_t x = 0; x < k; ++x) {
    double off = 0.0;
    for (std::size_t u = 0; u < d.symbols; ++u) {
      if (u == x) continue;
      const double e = d(u, x);
      if (std::isnan(e) || e < 0.0) throw std::invalid_argument("exponent_family: negative exponent");
      cols[x][u] = std::pow(static_cast<double>(n), -e);
      off += cols[x][u];
    }
    if (off > 1.0) throw std::invalid_argument("exponent_family: off-diagonal mass exceeds 1");
    cols[x][x] = 1.0 - off;
  }
  std::optional<int> erasure;
  if (d.symbols > k) erasure = static_cast<int>(d.symbols - 1);
  return ChannelSpec(std::move(cols), erasure);
}

ChannelSpec ChannelSpec::uninformative(std::size_t k) {
  return ChannelSpec(std::vector<std::vector<double>>(k, std::vector<double>{1.0}));
}

double ChannelSpec::log_prob(std::size_t u, std::size_t x) const {
  const double p = columns_[x][u];
  return p > 0.0 ? std::log(p) : -kInfinity;
}

bool ChannelSpec::informative(std::size_t u) const {
  for (std::size_t x = 1; x < columns_.size(); ++x) {
    if (columns_[x][u] != columns_[0][u]) return true;
  }
  return false;
}

// ---------------------------------------------------------------- params

DbmParams::DbmParams(std::int64_t n, std::vector<double> prior, std::vector<double> q, ChannelSpec channel,
                     bool clip_edge_probabilities)
    : n_(n), prior_(std::move(prior)), q_(std::move(q)), channel_(std::move(channel)), clip_(clip_edge_probabilities) {
  if (n_ < 1) throw std::invalid_argument("DbmParams: n must be >= 1");
  const std::size_t k = prior_.size();
  if (k < 1) throw std::invalid_argument("DbmParams: k must be >= 1");
  double mass = 0.0;
  for (double p : prior_) {
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("DbmParams: prior entries must be > 0");
    mass += p;
  }
  if (std::abs(mass - 1.0) > 1e-12) throw std::invalid_argument("DbmParams: prior must sum to 1");
  if (q_.size() != k * k) throw std::invalid_argument("DbmParams: Q must be k x k");
  for (std::size_t r = 0; r < k; ++r) {
    for (std::size_t s = 0; s < k; ++s) {
      const double v = q_[r * k + s];
      if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("DbmParams: Q entries must be finite and >= 0");
      if (std::abs(v - q_[s * k + r]) > 1e-12) throw std::invalid_argument("DbmParams: Q must be symmetric");
    }
  }
  if (channel_.communities() != k) throw std::invalid_argument("DbmParams: channel must have k columns");
  if (!clip_) {
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t s = 0; s < k; ++s) {
        if (edge_probability(r, s) > 1.0) {
          throw std::invalid_argument("DbmParams: edge probability (log n / n) Q exceeds 1 (n = " +
                                      std::to_string(n_) + ")");
        }
      }
    }
  }
}

DbmParams DbmParams::symmetric_erased(std::int64_t n, double a, double b, double alpha, bool clip) {
  return DbmParams(n, {0.5, 0.5}, {a, b, b, a}, ChannelSpec::erased(alpha, n, 2), clip);
}

double DbmParams::log_n() const { return std::log(static_cast<double>(n_)); }

double DbmParams::edge_probability(std::size_t r, std::size_t s) const {
  const double p = log_n() / static_cast<double>(n_) * q(r, s);
  return clip_ ? std::min(p, 1.0) : p;
}

MeanVector DbmParams::mean_profile_unscaled(std::size_t s) const {
  std::vector<double> mu(k());
  for (std::size_t r = 0; r < k(); ++r) mu[r] = prior_[r] * q(r, s);
  return MeanVector(std::move(mu));
}

MeanVector DbmParams::mean_profile(std::size_t s) const { return mean_profile_unscaled(s).scaled(log_n()); }

DbmParams DbmParams::with_channel(ChannelSpec channel) const {
  return DbmParams(n_, prior_, q_, std::move(channel), clip_);
}

// ---------------------------------------------------------------- graph

Graph::Graph(std::size_t n, std::span<const std::pair<Vertex, Vertex>> edges) : offsets_(n + 1, 0) {
  for (const auto& [u, v] : edges) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
      throw std::invalid_argument("Graph: vertex out of range");
    }
    if (u == v) throw std::invalid_argument("Graph: self-loops are not allowed");
    ++offsets_[u + 1];
    ++offsets_[v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] += offsets_[i];
  neighbors_.resize(offsets_[n]);
  std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
  for (const auto& [u, v] : edges) {
    neighbors_[cursor[u]++] = v;
    neighbors_[cursor[v]++] = u;
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto first = neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
    auto last = neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
    std::sort(first, last);
    if (std::adjacent_find(first, last) != last) throw std::invalid_argument("Graph: duplicate edge");
  }
}

bool Graph::has_edge(Vertex u, Vertex v) const {
  const auto nb = neighbors(u);
  return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::pair<Vertex, Vertex>> Graph::edges() const {
  std::vector<std::pair<Vertex, Vertex>> out;
  out.reserve(num_edges());
  for (std::size_t u = 0; u < num_vertices(); ++u) {
    for (Vertex v : neighbors(static_cast<Vertex>(u))) {
      if (static_cast<Vertex>(u) < v) out.emplace_back(static_cast<Vertex>(u), v);
    }
  }
  return out;
}

// ---------------------------------------------------------------- sampling

DbmSample sample_dbm(const DbmParams& params, std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(params.n());
  const std::size_t k = params.k();

  DbmSample sample;
  sample.seed = seed;
  sample.labels.resize(n);
  {
    Rng rng(substream(seed, 1));
    for (auto& x : sample.labels) x = static_cast<Label>(sample_categorical(rng, params.prior()));
  }

  std::vector<std::vector<Vertex>> members(k);
  for (std::size_t i = 0; i < n; ++i) members[sample.labels[i]].push_back(static_cast<Vertex>(i));

  // Geometric skipping over the pair stream of each community block.
  std::vector<std::pair<Vertex, Vertex>> edges;
  {
    Rng rng(substream(seed, 2));
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t s = r; s < k; ++s) {
        const double p = params.edge_probability(r, s);
        if (p > 1.0) throw std::invalid_argument("sample_dbm: edge probability exceeds 1");
        if (p <= 0.0) continue;
        const auto& A = members[r];
        const auto& B = members[s];
        if (r != s) {
          const std::uint64_t total = static_cast<std::uint64_t>(A.size()) * B.size();
          std::uint64_t idx = rng.geometric(p);
          while (idx < total) {
            const Vertex u = A[idx / B.size()];
            const Vertex v = B[idx % B.size()];
            edges.emplace_back(std::min(u, v), std::max(u, v));
            const std::uint64_t skip = rng.geometric(p);
            if (skip >= total - idx) break;
            idx += skip + 1;
          }
        } else {
          // Upper triangle walked row by row: position (i, j) with j > i.
          const std::uint64_t m = A.size();
          if (m < 2) continue;
          std::uint64_t i = 0;
          std::uint64_t j = 1 + rng.geometric(p);
          while (true) {
            while (j >= m && i + 1 < m) {
              j = (j - m) + i + 2;
              ++i;
            }
            if (i + 1 >= m) break;
            const Vertex u = A[i];
            const Vertex v = A[j];
            edges.emplace_back(std::min(u, v), std::max(u, v));
            const std::uint64_t skip = rng.geometric(p);
            if (skip >= m * m) break;
            j += skip + 1;
          }
        }
      }
    }
  }
  sample.graph = Graph(n, edges);

  sample.attributes.resize(n);
  {
    Rng rng(substream(seed, 3));
    const auto& cols = params.channel().columns();
    for (std::size_t i = 0; i < n; ++i) {
      sample.attributes[i] = static_cast<Label>(sample_categorical(rng, cols[sample.labels[i]]));
    }
  }
  return sample;
}

std::pair<Graph, Graph> split_graph(const Graph& graph, double gamma, std::uint64_t seed) {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("split_graph: gamma must lie in (0, 1)");
  Rng rng(substream(seed, 4));
  std::vector<std::pair<Vertex, Vertex>> first, second;
  for (const auto& e : graph.edges()) {
    (rng.bernoulli(gamma) ? first : second).push_back(e);
  }
  const std::size_t n = graph.num_vertices();
  return {Graph(n, first), Graph(n, second)};
}

std::vector<int> degree_profile(const Graph& graph, std::span<const Label> assignment, std::size_t k, Vertex v) {
  if (v < 0 || static_cast<std::size_t>(v) >= graph.num_vertices()) {
    throw std::invalid_argument("degree_profile: vertex out of range");
  }
  if (assignment.size() != graph.num_vertices()) {
    throw std::invalid_argument("degree_profile: assignment must cover every vertex");
  }
  std::vector<int> d(k, 0);
  for (Vertex u : graph.neighbors(v)) ++d[assignment[u]];
  return d;
}

void write_edge_list(std::ostream& out, const Graph& graph) {
  for (const auto& [u, v] : graph.edges()) out << (u + 1) << ' ' << (v + 1) << '\n';
}

void write_node_table(std::ostream& out, const DbmSample& sample) {
  out << "vertex,label,attribute\n";
  for (std::size_t i = 0; i < sample.labels.size(); ++i) {
    out << (i + 1) << ',' << (sample.labels[i] + 1) << ',' << (sample.attributes[i] + 1) << '\n';
  }
}

}  // namespace dbm
