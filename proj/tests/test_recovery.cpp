#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dbm/metrics.hpp"
#include "dbm/recovery.hpp"
#include "dbm/rng.hpp"
#include "oracles.hpp"

using namespace dbm;

namespace {

Graph two_cliques(int size) {
  std::vector<std::pair<Vertex, Vertex>> e;
  for (int c = 0; c < 2; ++c) {
    for (int i = 0; i < size; ++i) {
      for (int j = i + 1; j < size; ++j) e.emplace_back(c * size + i, c * size + j);
    }
  }
  return Graph(static_cast<std::size_t>(2 * size), e);
}

double err(const std::vector<Label>& est, const std::vector<Label>& truth, std::size_t k) {
  return flip_invariant_error(est, truth, k).error;
}

std::vector<Label> flipped(std::vector<Label> v) {
  for (auto& x : v) x = 1 - x;
  return v;
}

}  // namespace

TEST_SUITE("spectral") {
  TEST_CASE("two cliques split perfectly") {
    const auto g = two_cliques(5);
    const auto a = spectral_partition(g, 2, 1);
    std::vector<Label> truth{0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
    CHECK(err(a.labels, truth, 2) == 0.0);
  }

  TEST_CASE("three cliques with k-means") {
    std::vector<std::pair<Vertex, Vertex>> e;
    for (int c = 0; c < 3; ++c) {
      for (int i = 0; i < 6; ++i) {
        for (int j = i + 1; j < 6; ++j) e.emplace_back(c * 6 + i, c * 6 + j);
      }
    }
    e.emplace_back(0, 6);
    e.emplace_back(7, 12);
    const Graph g(18, e);
    const auto a = spectral_partition(g, 3, 2);
    std::vector<Label> truth(18);
    for (int v = 0; v < 18; ++v) truth[v] = v / 6;
    CHECK(err(a.labels, truth, 3) == 0.0);
  }

  TEST_CASE("complete graph returns a valid assignment") {
    std::vector<std::pair<Vertex, Vertex>> e;
    for (int i = 0; i < 8; ++i) {
      for (int j = i + 1; j < 8; ++j) e.emplace_back(i, j);
    }
    const auto a = spectral_partition(Graph(8, e), 2, 3);
    CHECK(a.size() == 8);
    for (auto l : a.labels) CHECK((l == 0 || l == 1));
  }

  TEST_CASE("errors") {
    const auto g = two_cliques(2);
    CHECK_THROWS_AS(spectral_partition(g, 1, 0), std::invalid_argument);
    CHECK_THROWS_AS(spectral_partition(g, 5, 0), std::invalid_argument);
  }

  TEST_CASE("eigenpairs converge to the requested residual") {
    const auto p = DbmParams::symmetric_erased(1000, 20, 10, 0.3);
    const auto s = sample_dbm(p, 3);
    const auto e = leading_eigenpairs(s.graph, 2, 3);
    CHECK(e.residual <= 1e-8);
    CHECK(e.values[0] >= e.values[1]);
    // Leading eigenvalue near the mean degree.
    CHECK(e.values[0] == doctest::Approx(15 * std::log(1000.0)).epsilon(0.1));
  }

  TEST_CASE("accuracy well above threshold") {
    const DbmParams p(1000, {0.5, 0.5}, {23, 10, 10, 23}, ChannelSpec::uninformative(2));
    int good = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto s = sample_dbm(p, seed);
      good += err(spectral_partition(s.graph, 2, seed).labels, s.labels, 2) <= 0.05;
    }
    CHECK(good >= 95);
  }
}

TEST_SUITE("canonicalize") {
  TEST_CASE("anchors undo a global flip") {
    const auto p = DbmParams::symmetric_erased(1000, 20, 10, 0.3);
    const auto s = sample_dbm(p, 1);
    const Assignment truth{s.labels};
    CHECK(canonicalize(truth, s.attributes, p, s.graph) == truth);
    CHECK(canonicalize(Assignment{flipped(s.labels)}, s.attributes, p, s.graph) == truth);
  }

  TEST_CASE("imperfect assignment still resolves by likelihood") {
    const auto p = DbmParams::symmetric_erased(1000, 20, 10, 0.3);
    const auto s = sample_dbm(p, 2);
    auto noisy = flipped(s.labels);
    for (int v = 0; v < 40; ++v) noisy[v] = 1 - noisy[v];
    const auto out = canonicalize(Assignment{noisy}, s.attributes, p, s.graph);
    std::size_t agree = 0;
    for (std::size_t v = 0; v < out.size(); ++v) agree += out.labels[v] == s.labels[v];
    CHECK(agree > out.size() / 2);
  }

  TEST_CASE("uninformative channel uses the graph branch deterministically") {
    const DbmParams p(400, {0.5, 0.5}, {20, 10, 10, 20}, ChannelSpec::uninformative(2));
    const auto s = sample_dbm(p, 3);
    const auto a = canonicalize(Assignment{s.labels}, s.attributes, p, s.graph);
    const auto b = canonicalize(Assignment{flipped(s.labels)}, s.attributes, p, s.graph);
    // Symmetric model: both labelings tie and the identity permutation is kept.
    CHECK(a.labels == s.labels);
    CHECK(b.labels == flipped(s.labels));
  }

  TEST_CASE("graph branch breaks asymmetry in Q") {
    const DbmParams p(600, {0.5, 0.5}, {30, 5, 5, 10}, ChannelSpec::uninformative(2));
    const auto s = sample_dbm(p, 4);
    CHECK(canonicalize(Assignment{flipped(s.labels)}, {}, p, s.graph).labels == s.labels);
  }

  TEST_CASE("relabeling the input does not change the output") {
    const DbmParams p(600, {0.3, 0.3, 0.4}, {25, 5, 5, 5, 25, 5, 5, 5, 25}, ChannelSpec::erased(0.2, 600, 3));
    const auto s = sample_dbm(p, 5);
    const Assignment base = canonicalize(Assignment{s.labels}, s.attributes, p, s.graph);
    const std::vector<std::vector<Label>> perms{{1, 2, 0}, {2, 0, 1}, {0, 2, 1}, {1, 0, 2}};
    for (const auto& pi : perms) {
      Assignment r;
      for (auto l : s.labels) r.labels.push_back(pi[static_cast<std::size_t>(l)]);
      CHECK(canonicalize(r, s.attributes, p, s.graph) == base);
    }
  }
}

TEST_SUITE("symmetry set") {
  TEST_CASE("identical channel columns and connectivity profiles") {
    const DbmParams p(1000, {0.5, 0.5}, {15, 15, 15, 15}, ChannelSpec::uninformative(2));
    const auto set = symmetry_set(p, 0.01);
    CHECK(set.contains(0, 1));
    CHECK(set.contains(1, 0));
    // Assortative Q: the mean profiles differ, so the pair is separable.
    const DbmParams q(1000, {0.5, 0.5}, {20, 10, 10, 20}, ChannelSpec::uninformative(2));
    CHECK(symmetry_set(q, 0.01).empty());
  }

  TEST_CASE("nearly equal channels fall inside the tolerance") {
    const double ln = std::log(1000.0);
    const double d = 0.01 / ln;
    const DbmParams p(1000, {0.5, 0.5}, {15, 15, 15, 15}, ChannelSpec({{0.5 + d, 0.5 - d}, {0.5, 0.5}}));
    CHECK(symmetry_set(p, 0.01).contains(0, 1));
    const DbmParams q(1000, {0.5, 0.5}, {15, 15, 15, 15}, ChannelSpec({{0.5 + 3 * d, 0.5 - 3 * d}, {0.5, 0.5}}));
    CHECK(symmetry_set(q, 0.01).empty());
  }

  TEST_CASE("erased channel separates") {
    const auto p = DbmParams::symmetric_erased(1000, 20, 10, 0.3);
    CHECK(symmetry_set(p, 0.01).empty());
  }

  TEST_CASE("asymmetric prior") {
    const DbmParams p(1000, {0.6, 0.4}, {20, 10, 10, 20}, ChannelSpec::uninformative(2));
    CHECK(symmetry_set(p, 0.01).empty());
  }
}

TEST_SUITE("scheffe") {
  TEST_CASE("deterministic cases") {
    const Pmf p1({0.5, 0.5, 0.0}), p2({0.0, 0.5, 0.5});
    std::vector<std::size_t> obs{0, 0, 1};
    CHECK(scheffe_test(obs, p1, p2) == Hypothesis::h1);
    const Pmf a({0.8, 0.2}), b({0.2, 0.8});
    std::vector<std::size_t> exact_b{0, 1, 1, 1, 1};
    CHECK(scheffe_test(exact_b, a, b) == Hypothesis::h2);
    std::vector<std::size_t> middle{0, 1};
    CHECK(scheffe_test(middle, a, b) == Hypothesis::h1);
    CHECK_THROWS_AS(scheffe_test(obs, p1, p1), std::invalid_argument);
    CHECK_THROWS_AS(scheffe_test({}, a, b), std::invalid_argument);
  }
}

TEST_SUITE("map") {
  TEST_CASE("reference score") {
    const DbmParams p(1000, {0.5, 0.5}, {0, 0, 0, 0}, ChannelSpec::uninformative(2));
    const std::vector<int> zero{0, 0};
    CHECK(map_score(0, zero, 0, p, true, p.log_n()) == doctest::Approx(std::log(0.5)));
    const std::vector<int> one{1, 0};
    CHECK(map_score(0, one, 0, p, true, p.log_n()) == -kInfinity);
  }

  TEST_CASE("profile at the mean picks its community") {
    const auto p = DbmParams::symmetric_erased(1000, 20, 10, 0.3);
    for (std::size_t s = 0; s < 2; ++s) {
      const auto mu = p.mean_profile(s);
      const std::vector<int> prof{static_cast<int>(std::lround(mu[0])), static_cast<int>(std::lround(mu[1]))};
      const Label erased = 2;
      const double own = map_score(s, prof, erased, p, true, p.log_n());
      const double other = map_score(1 - s, prof, erased, p, true, p.log_n());
      CHECK(own > other);
    }
  }

  TEST_CASE("side info off equals an uninformative channel") {
    const auto p = DbmParams::symmetric_erased(1000, 20, 10, 0.3);
    const auto q = p.with_channel(ChannelSpec::uninformative(2));
    const std::vector<int> prof{40, 30};
    for (std::size_t s = 0; s < 2; ++s) {
      CHECK(map_score(s, prof, 0, p, false, p.log_n()) == doctest::Approx(map_score(s, prof, 0, q, true, q.log_n())));
    }
  }

  TEST_CASE("truth is a fixed point well above threshold") {
    const auto p = DbmParams::symmetric_erased(1000, 23, 10, 0.8);
    RefineConfig cfg;
    int fixed = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto s = sample_dbm(p, seed);
      const auto r = map_refine(s.graph, s.attributes, Assignment{s.labels}, p, cfg);
      fixed += r.assignment.labels == s.labels;
      CHECK(r.iterations <= cfg.t_max);
      CHECK(r.iterations >= 1);
    }
    CHECK(fixed >= 99);
  }

  TEST_CASE("t_max of one equals single pass") {
    const auto p = DbmParams::symmetric_erased(800, 17, 10, 0.4);
    const auto s = sample_dbm(p, 7);
    const auto init = spectral_partition(s.graph, 2, 7);
    RefineConfig one;
    one.t_max = 1;
    RefineConfig single;
    single.mode = RefineMode::single_pass;
    const auto a = map_refine(s.graph, s.attributes, init, p, one);
    const auto b = map_refine(s.graph, s.attributes, init, p, single);
    CHECK(a.assignment == b.assignment);
    CHECK(a.iterations == 1);
    CHECK(b.iterations == 1);
  }

  TEST_CASE("deterministic") {
    const auto p = DbmParams::symmetric_erased(800, 16, 10, 0.4);
    const auto s = sample_dbm(p, 8);
    const auto init = spectral_partition(s.graph, 2, 8);
    RefineConfig cfg;
    CHECK(map_refine(s.graph, s.attributes, init, p, cfg).assignment ==
          map_refine(s.graph, s.attributes, init, p, cfg).assignment);
  }

  TEST_CASE("config validation") {
    RefineConfig c;
    c.epsilon = 0;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    RefineConfig d;
    d.t_max = 0;
    CHECK_THROWS_AS(d.validate(), std::invalid_argument);
    RefineConfig e;
    e.gamma = 1.0;
    CHECK_THROWS_AS(e.validate(), std::invalid_argument);
  }
}

TEST_SUITE("pipeline") {
  TEST_CASE("method names round trip") {
    for (Method m : {Method::dbm, Method::dbm_iter, Method::sbm, Method::sbm_iter, Method::spectral, Method::data_only}) {
      CHECK(parse_method(method_name(m)) == m);
    }
    CHECK_THROWS_AS(parse_method("louvain"), std::invalid_argument);
    CHECK_FALSE(uses_graph(Method::data_only));
  }

  TEST_CASE("data only follows the channel") {
    const auto p = DbmParams::symmetric_erased(1000, 20, 10, 0.8);
    const auto s = sample_dbm(p, 3);
    const auto r = recover(s, p, Method::data_only, RefineConfig{}, 3);
    CHECK(r.iterations == 0);
    for (std::size_t v = 0; v < s.labels.size(); ++v) {
      if (s.attributes[v] == 2) {
        CHECK(r.assignment.labels[v] == 0);
      } else {
        CHECK(r.assignment.labels[v] == s.attributes[v]);
      }
    }
  }

  TEST_CASE("spectral ignores attributes") {
    const auto p = DbmParams::symmetric_erased(800, 18, 10, 0.3);
    auto s = sample_dbm(p, 4);
    const auto a = recover(s, p, Method::spectral, RefineConfig{}, 4);
    Rng rng(99);
    for (auto& u : s.attributes) u = static_cast<Label>(rng.below(3));
    const auto b = recover(s, p, Method::spectral, RefineConfig{}, 4);
    CHECK(a.assignment == b.assignment);
  }

  TEST_CASE("sbm equals dbm with equal channel columns") {
    const auto p = DbmParams::symmetric_erased(800, 17, 10, 0.3);
    const auto flat = p.with_channel(ChannelSpec({{0.5, 0.5}, {0.5, 0.5}}));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto s = sample_dbm(p, seed);
      auto t = s;
      for (auto& u : t.attributes) u = u == 2 ? 0 : u;
      const auto a = recover(s, p, Method::sbm_iter, RefineConfig{}, seed);
      const auto b = recover(t, flat, Method::dbm_iter, RefineConfig{}, seed);
      CHECK(a.assignment == b.assignment);
    }
  }

  TEST_CASE("split variant runs and keeps lengths") {
    const auto p = DbmParams::symmetric_erased(800, 22, 10, 0.5);
    const auto s = sample_dbm(p, 5);
    RefineConfig cfg;
    cfg.gamma = 0.1;
    const auto r = recover(s, p, Method::dbm_iter, cfg, 5);
    CHECK(r.assignment.size() == 800);
    CHECK(err(r.assignment.labels, s.labels, 2) < 0.05);
  }

  TEST_CASE("dbm_iter well above threshold") {
    const auto p = DbmParams::symmetric_erased(1000, 23, 10, 0.8);
    int exact = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto s = sample_dbm(p, seed);
      exact += flip_invariant_error(recover(s, p, Method::dbm_iter, RefineConfig{}, seed).assignment.labels, s.labels, 2)
                   .exact;
    }
    CHECK(exact >= 19);
  }
}
