#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "dbm/divergences.hpp"
#include "dbm/model.hpp"
#include "oracles.hpp"

using namespace dbm;

namespace {

MeanVector mv(std::vector<double> v) { return MeanVector(std::move(v)); }
Pmf pmf(std::vector<double> v) { return Pmf(std::move(v)); }

}  // namespace

TEST_SUITE("pmf and mean vectors") {
  TEST_CASE("validation") {
    CHECK_THROWS_AS(Pmf({}), std::invalid_argument);
    CHECK_THROWS_AS(Pmf({0.5, 0.6}), std::invalid_argument);
    CHECK_THROWS_AS(Pmf({1.5, -0.5}), std::invalid_argument);
    CHECK_THROWS_AS(MeanVector({1.0, -1.0}), std::invalid_argument);
    CHECK_THROWS_AS(MeanVector({1.0, std::nan("")}), std::invalid_argument);
    CHECK_NOTHROW(Pmf({0.25, 0.75}));
  }
}

TEST_SUITE("ch divergence") {
  TEST_CASE("equal vectors give zero") { CHECK(ch_divergence(mv({1, 2}), mv({1, 2})) == 0.0); }

  TEST_CASE("symmetric two-block case") {
    const double a = 20, b = 10;
    const double expected = oracle::ch_grid({a / 2, b / 2}, {b / 2, a / 2});
    const auto r = ch_divergence_opt(mv({a / 2, b / 2}), mv({b / 2, a / 2}));
    CHECK(r.value == doctest::Approx(expected).epsilon(1e-10));
    CHECK(r.value == doctest::Approx(std::pow(std::sqrt(a) - std::sqrt(b), 2) / 2).epsilon(1e-10));
    CHECK(r.argument == doctest::Approx(0.5).epsilon(1e-6));
  }

  TEST_CASE("disjoint supports") {
    const double expected = oracle::ch_grid({2, 0}, {0, 2});
    CHECK(ch_divergence(mv({2, 0}), mv({0, 2})) == doctest::Approx(expected).epsilon(1e-9));
    CHECK(expected == doctest::Approx(2.0));
  }

  TEST_CASE("matches grid oracle on random vectors") {
    oracle::Gen g(11);
    for (int i = 0; i < 30; ++i) {
      const auto len = static_cast<std::size_t>(g.integer(1, 4));
      const auto a = g.means(len, 0.0, 8.0);
      const auto b = g.means(len, 0.0, 8.0);
      CHECK(ch_divergence(mv(a), mv(b)) == doctest::Approx(oracle::ch_grid(a, b, 1e-5)).epsilon(1e-8));
    }
  }

  TEST_CASE("scaling") {
    oracle::Gen g(12);
    for (int i = 0; i < 20; ++i) {
      const auto a = g.means(3, 0.5, 5.0);
      const auto b = g.means(3, 0.5, 5.0);
      const double c = g.uniform(0.1, 50.0);
      CHECK(std::abs(ch_divergence(mv(a).scaled(c), mv(b).scaled(c)) - c * ch_divergence(mv(a), mv(b))) <= 1e-9 * c);
    }
  }

  TEST_CASE("large means stay finite") {
    CHECK(std::isfinite(ch_divergence(mv({1e4, 3}), mv({2, 1e4}))));
  }

  TEST_CASE("size mismatch") { CHECK_THROWS_AS(ch_divergence(mv({1}), mv({1, 2})), std::invalid_argument); }
}

TEST_SUITE("chernoff information and tv") {
  TEST_CASE("basics") {
    CHECK(chernoff_information(pmf({0.3, 0.7}), pmf({0.3, 0.7})) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(chernoff_information(pmf({1, 0}), pmf({0, 1})) == kInfinity);
    CHECK(tv_distance(pmf({1, 0}), pmf({0, 1})) == 1.0);
    CHECK(tv_distance(pmf({0.7, 0.3}), pmf({0.4, 0.6})) == doctest::Approx(0.3));
  }

  TEST_CASE("golden section agrees with grid") {
    const double c = chernoff_information(pmf({0.9, 0.1}), pmf({0.1, 0.9}));
    CHECK(c == doctest::Approx(oracle::chernoff_grid({0.9, 0.1}, {0.1, 0.9})).epsilon(1e-8));
  }

  TEST_CASE("symmetric and nonnegative") {
    oracle::Gen g(13);
    for (int i = 0; i < 50; ++i) {
      const auto p = g.pmf(4, 0.2);
      const auto q = g.pmf(4, 0.2);
      const double pq = chernoff_information(pmf(p), pmf(q));
      const double qp = chernoff_information(pmf(q), pmf(p));
      CHECK(pq >= 0.0);
      if (std::isfinite(pq)) {
        CHECK(pq == doctest::Approx(qp).epsilon(1e-9));
        CHECK(pq == doctest::Approx(oracle::chernoff_grid(p, q, 1e-5)).epsilon(1e-7));
      } else {
        CHECK(qp == kInfinity);
      }
    }
  }
}

TEST_SUITE("chernoff-tv") {
  TEST_CASE("grid oracle on random 3x3 instances") {
    oracle::Gen g(14);
    for (int i = 0; i < 20; ++i) {
      const auto p1 = g.pmf(3), p2 = g.pmf(3), q1 = g.pmf(3, 0.2), q2 = g.pmf(3, 0.2);
      const double got = ct_divergence(pmf(p1), pmf(q1), pmf(p2), pmf(q2));
      CHECK(got == doctest::Approx(oracle::ct_grid(p1, q1, p2, q2)).epsilon(1e-7));
    }
  }

  TEST_CASE("per-symbol exponents beat a shared exponent") {
    oracle::Gen g(15);
    for (int i = 0; i < 50; ++i) {
      const auto p1 = g.pmf(3), p2 = g.pmf(3), q1 = g.pmf(4), q2 = g.pmf(4);
      const double shared = -std::log(oracle::grid_min(
          [&](double l) {
            double s = 0;
            for (std::size_t u = 0; u < 4; ++u) s += oracle::mix(q1[u], q2[u], l) * oracle::bhattacharyya(p1, p2, l);
            return s;
          },
          1e-4));
      CHECK(ct_divergence(pmf(p1), pmf(q1), pmf(p2), pmf(q2)) >= shared - 1e-9);
    }
  }

  TEST_CASE("poisson form with equal means reduces to tv") {
    oracle::Gen g(16);
    for (int i = 0; i < 20; ++i) {
      const auto mu = g.means(3, 0.5, 5.0);
      const auto q1 = g.pmf(3), q2 = g.pmf(3);
      const double got = ct_divergence_poisson(mv(mu), mv(mu), pmf(q1), pmf(q2));
      CHECK(got == doctest::Approx(-std::log(1.0 - oracle::tv(q1, q2))).epsilon(1e-9));
    }
    CHECK(ct_divergence_poisson(mv({1, 2}), mv({1, 2}), pmf({0.5, 0.5}), pmf({0.5, 0.5})) ==
          doctest::Approx(0.0).epsilon(1e-14));
  }

  TEST_CASE("poisson form with equal channels is the ch divergence") {
    oracle::Gen g(17);
    for (int i = 0; i < 20; ++i) {
      const auto a = g.means(3, 0.5, 5.0), b = g.means(3, 0.5, 5.0);
      const auto q = g.pmf(3);
      CHECK(ct_divergence_poisson(mv(a), mv(b), pmf(q), pmf(q)) ==
            doctest::Approx(oracle::ch_grid(a, b, 1e-5)).epsilon(1e-8));
    }
  }

  TEST_CASE("erased instance converges to the closed form") {
    const double a = 20, b = 10, alpha = 0.3;
    double last_gap = kInfinity;
    for (double n : {1e3, 1e6, 1e9}) {
      const double ln = std::log(n);
      const double e = std::pow(n, -alpha);
      const double got = ct_divergence_poisson(mv({a / 2 * ln, b / 2 * ln}), mv({b / 2 * ln, a / 2 * ln}),
                                               pmf({1 - e, 0, e}), pmf({0, 1 - e, e}));
      const double gap = std::abs(got / ln - oracle::example1(a, b, alpha));
      CHECK(gap <= last_gap + 1e-12);
      last_gap = gap;
    }
    CHECK(last_gap < 1e-3);
  }
}

TEST_SUITE("noisy erasure variational formula") {
  TEST_CASE("erased labels match the closed form") {
    for (double a : {12.0, 18.0, 24.0}) {
      for (double alpha : {0.1, 0.5, 0.9}) {
        const double got =
            delta_noisy_erasure(ExponentTable::erased(2, alpha), 0, 1, mv({a / 2, 5}), mv({5, a / 2}));
        CHECK(got == doctest::Approx(oracle::example1(a, 10, alpha)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("noisy labels match the closed form in both branches") {
    // 1.9 < T(a-b)/2 for (20,10); 8 is past it.
    for (double alpha : {0.4, 1.9, 8.0}) {
      const double got = delta_noisy_erasure(ExponentTable::noisy(2, alpha), 0, 1, mv({10, 5}), mv({5, 10}));
      CHECK(got == doctest::Approx(oracle::example2(20, 10, alpha)).epsilon(1e-9));
    }
  }

  TEST_CASE("zero exponent reduces to ch") {
    const double got = delta_noisy_erasure(ExponentTable::noisy(2, 0.0), 0, 1, mv({7, 2}), mv({2, 7}));
    CHECK(got == doctest::Approx(oracle::ch_grid({7, 2}, {2, 7})).epsilon(1e-9));
  }

  TEST_CASE("bad tables") {
    ExponentTable d = ExponentTable::noisy(2, 0.5);
    d(1, 0) = -1.0;
    CHECK_THROWS_AS(delta_noisy_erasure(d, 0, 1, mv({1, 1}), mv({1, 1})), std::invalid_argument);
    ExponentTable e = ExponentTable::noisy(2, 0.5);
    e(0, 0) = 0.2;
    CHECK_THROWS_AS(delta_noisy_erasure(e, 0, 1, mv({1, 1}), mv({1, 1})), std::invalid_argument);
  }
}

TEST_SUITE("separation rate and thresholds") {
  TEST_CASE("erased symmetric model") {
    const auto params = DbmParams::symmetric_erased(1000000, 20, 10, 0.3);
    CHECK(separation_rate(params, 0, 1) == doctest::Approx(oracle::example1(20, 10, 0.3)).epsilon(0.02));
    CHECK_THROWS_AS(separation_rate(params, 1, 1), std::invalid_argument);
    const auto d = separation_matrix(params);
    CHECK(d[0] == 0.0);
    CHECK(d[1] == doctest::Approx(d[2]));
  }

  TEST_CASE("equal channels give the ch divergence of the unscaled means") {
    const DbmParams params(5000, {0.5, 0.5}, {9, 3, 3, 9}, ChannelSpec::uninformative(2));
    CHECK(separation_rate(params, 0, 1) ==
          doctest::Approx(oracle::ch_grid({4.5, 1.5}, {1.5, 4.5})).epsilon(1e-9));
  }

  TEST_CASE("data cannot help") {
    const DbmParams weak(1000, {0.5, 0.5}, {3, 1, 1, 3}, ChannelSpec::uninformative(2));
    CHECK(separation_rate(weak, 0, 1) < 0.9);
    CHECK(data_cannot_help(weak, 0, 1, 0.1));
    const DbmParams strong(1000, {0.5, 0.5}, {30, 1, 1, 30}, ChannelSpec::uninformative(2));
    CHECK_FALSE(data_cannot_help(strong, 0, 1, 0.1));
    const DbmParams revealing(1000, {0.5, 0.5}, {3, 1, 1, 3}, ChannelSpec({{1, 0}, {0, 1}}));
    CHECK_FALSE(data_cannot_help(revealing, 0, 1, 0.1));
  }

  TEST_CASE("closed-form thresholds") {
    CHECK(threshold_erased(10, 0.3) == doctest::Approx(18.8833).epsilon(1e-5));
    CHECK(threshold_erased(10, 1.0) == doctest::Approx(10.0));
    CHECK(threshold_erased(10, 0.0) == doctest::Approx(threshold_sbm(10)));
    CHECK(threshold_sbm(0) == doctest::Approx(2.0));
    CHECK(threshold_sbm(2) == doctest::Approx(8.0));
    CHECK_THROWS_AS(threshold_erased(10, 1.5), std::invalid_argument);
  }
}
