#include <doctest.h>

#include "support.hpp"
#include "wordalise/stats.hpp"

using namespace wordalise;
namespace st = wordalise::stats;

TEST_CASE("metric stats use the population standard deviation") {
  Eigen::VectorXd v(4);
  v << 2, 4, 4, 6;
  const auto s = st::compute_metric_stats(v, "m");
  CHECK(s.mean == doctest::Approx(4.0));
  CHECK(s.std == doctest::Approx(std::sqrt(2.0)));  // sample std would be sqrt(8/3)
  CHECK(s.n == 4);
  CHECK(st::z_score(6.0, s) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("z-scores of a column have mean 0 and std 1") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> d(50, 12);
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd v(37);
    for (auto& x : v) x = d(rng);
    const auto z = st::z_scores(v, st::compute_metric_stats(v));
    CHECK(std::abs(z.mean()) < 1e-12);
    CHECK(std::abs(std::sqrt(z.square().mean()) - 1.0) < 1e-12);
  }
}

TEST_CASE("zero spread is degenerate and refused") {
  Eigen::VectorXd v = Eigen::VectorXd::Constant(5, 3.0);
  const auto s = st::compute_metric_stats(v, "flat");
  CHECK(s.degenerate());
  try {
    st::z_score(3.0, s);
    FAIL("expected DegenerateMetric");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateMetric);
  }
  CHECK_THROWS_AS(st::compute_metric_stats(Eigen::VectorXd(0)), Error);
}

TEST_CASE("float scalar instantiation") {
  Eigen::VectorXf v(3);
  v << 1.f, 2.f, 3.f;
  const auto s = st::compute_metric_stats(v);
  static_assert(std::is_same_v<decltype(s.mean), float>);
  CHECK(st::z_score(3.f, s) == doctest::Approx(std::sqrt(1.5)).epsilon(1e-5));
}

TEST_CASE("percentile and rank against the pairwise oracle, ties included") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> d(0, 9);  // small range forces ties
  for (int t = 0; t < 50; ++t) {
    std::vector<double> c(1 + t);
    for (auto& x : c) x = d(rng);
    const Eigen::Map<const Eigen::VectorXd> m(c.data(), Eigen::Index(c.size()));
    for (double x : c) {
      const auto got = st::percentile_and_rank(x, m);
      const auto [p, r] = testing::naive_percentile_rank(x, c);
      CHECK(got.percentile == p);
      CHECK(got.rank == r);
    }
  }
  Eigen::VectorXd c(4);
  c << 1, 2, 2, 3;
  CHECK(st::percentile_and_rank(2.0, c).rank == 2);
  CHECK(st::percentile_and_rank(2.0, c).percentile == doctest::Approx(0.75));
  CHECK(st::percentile_and_rank(9.0, c).rank == 1);
  CHECK_THROWS_AS(st::percentile_and_rank(1.0, Eigen::VectorXd(0)), Error);
}

TEST_CASE("weighted category score and contribution checks") {
  Eigen::VectorXi a(4), w(4);
  a << 5, 1, 3, 4;
  w << 1, -1, 1, -1;
  CHECK(st::weighted_category_score(a, w) == 5 - 1 + 3 - 4);

  Eigen::VectorXi bad = a;
  bad(0) = 6;
  CHECK_THROWS_AS(st::weighted_category_score(bad, w), Error);
  Eigen::VectorXi w2 = w;
  w2(1) = 2;
  CHECK_THROWS_AS(st::weighted_category_score(a, w2), Error);
  CHECK_THROWS_AS(st::weighted_category_score(a, Eigen::VectorXi(3)), Error);

  // Loadings are real-valued; contributions() takes them without range checks.
  Eigen::VectorXd mean_answers(2), loadings(2);
  mean_answers << 1.5, 3.2;
  loadings << 0.8, 0.6;
  const auto cv = st::contributions("f", mean_answers, loadings);
  CHECK(cv.contributions(0) == doctest::Approx(1.2));
  CHECK(cv.total() == doctest::Approx(1.2 + 1.92));
}

TEST_CASE("top contributor picks the extreme by sign; ties go to the first") {
  st::ContributionVector<double> cv{"c", Eigen::VectorXd(5)};
  cv.contributions << 3, -5, 5, -5, 1;
  CHECK(st::top_contributor(cv, st::Sign::positive) == 2);
  CHECK(st::top_contributor(cv, st::Sign::negative) == 1);
  st::ContributionVector<double> empty{"e", Eigen::VectorXd(0)};
  CHECK_THROWS_AS(st::top_contributor(empty, st::Sign::positive), Error);
}

TEST_CASE("exhaustive scoring oracle on small questionnaires") {
  // Every answer vector of length 3 on 1..5 under every sign pattern.
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<int> w = {mask & 1 ? -1 : 1, mask & 2 ? -1 : 1, mask & 4 ? -1 : 1};
    for (int i = 0; i < 125; ++i) {
      std::vector<int> a = {1 + i % 5, 1 + (i / 5) % 5, 1 + i / 25};
      Eigen::VectorXi ea = Eigen::Map<Eigen::VectorXi>(a.data(), 3), ew = Eigen::Map<Eigen::VectorXi>(w.data(), 3);
      REQUIRE(st::weighted_category_score(ea, ew) == testing::oracle_score(a, w));
      const auto cv = st::contributions("x", ea, ew);
      REQUIRE(std::size_t(st::top_contributor(cv, st::Sign::positive)) == testing::oracle_top(a, w, true));
      REQUIRE(std::size_t(st::top_contributor(cv, st::Sign::negative)) == testing::oracle_top(a, w, false));
    }
  }
}
