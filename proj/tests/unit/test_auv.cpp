#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "fixtures.hpp"
#include "tide/auv.hpp"
#include "tide/error.hpp"
#include "tide/oracle.hpp"

using namespace tide;
using testing::make_run;

namespace {

const std::vector<std::optional<int>> kFixtureTurns = {1, 1, 3, std::nullopt};

SuccessCurve curve_from_counts(const std::vector<int>& solved_at, int n) {
  std::vector<double> p(solved_at.size() + 1, 0.0);
  int acc = 0;
  for (std::size_t k = 0; k < solved_at.size(); ++k) {
    acc += solved_at[k];
    p[k + 1] = static_cast<double>(acc) / n;
  }
  return SuccessCurve(std::move(p), n);
}

SuccessCurve random_curve(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> horizon(1, 60);
  std::uniform_int_distribution<int> tasks(1, 200);
  const int t_max = horizon(rng);
  const int n = tasks(rng);
  std::vector<int> solved(static_cast<std::size_t>(t_max), 0);
  std::uniform_int_distribution<int> slot(-t_max / 2, t_max - 1);
  for (int i = 0; i < n; ++i) {
    const int k = slot(rng);
    if (k >= 0) ++solved[static_cast<std::size_t>(k)];
  }
  return curve_from_counts(solved, n);
}

}  // namespace

TEST_CASE("build_success_curve counts solved tasks per turn") {
  const SuccessCurve c = build_success_curve(make_run(kFixtureTurns, 4), 4);
  CHECK(c.p() == std::vector<double>{0, 0.5, 0.5, 0.75, 0.75});
  CHECK(c.n_tasks() == 4);

  const SuccessCurve none = build_success_curve(make_run({std::nullopt, std::nullopt}, 4), 4);
  CHECK(none.p() == std::vector<double>(5, 0.0));

  // success after the window is clamped to unsolved
  const SuccessCurve late = build_success_curve(make_run({5}, 4), 4);
  CHECK(late.p() == std::vector<double>(5, 0.0));

  CHECK_THROWS_AS(build_success_curve(RunLog{}, 4), Error);
}

TEST_CASE("AUV hand fixtures agree with the brute-force oracle") {
  const SuccessCurve c = build_success_curve(make_run(kFixtureTurns, 4), 4);
  CHECK(oracle::oracle_auv(kFixtureTurns, 4) == doctest::Approx(0.53125).epsilon(1e-15));
  CHECK(auv_trapezoid(c) == 0.53125);
  CHECK(auv_weighted_increments(c) == 0.53125);

  const std::vector<std::optional<int>> all_first(7, 1);
  CHECK(oracle::oracle_auv(all_first, 20) == doctest::Approx(0.975).epsilon(1e-15));
  CHECK(std::abs(auv_trapezoid(build_success_curve(all_first, 20)) - 0.975) <= 1e-12);
  CHECK(std::abs(auv_weighted_increments(build_success_curve(all_first, 20)) - 0.975) <= 1e-12);

  const SuccessCurve zero = build_success_curve(make_run({std::nullopt}, 3), 3);
  CHECK(auv_trapezoid(zero) == 0.0);
  CHECK(auv_weighted_increments(zero) == 0.0);
}

TEST_CASE("per-trajectory scores") {
  const auto scores = per_trajectory_auv(make_run(kFixtureTurns, 4), 4);
  CHECK(scores == std::vector<double>{0.875, 0.875, 0.375, 0.0});
  CHECK(std::accumulate(scores.begin(), scores.end(), 0.0) / 4 == 0.53125);
  CHECK(per_trajectory_auv(make_run({1}, 20), 20)[0] == doctest::Approx(0.975));
  CHECK(per_trajectory_auv(make_run({std::nullopt}, 20), 20)[0] == 0.0);
}

TEST_CASE("trapezoid and weighted-increment forms agree on random curves") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10000; ++i) {
    const SuccessCurve c = random_curve(rng);
    REQUIRE(std::abs(auv_trapezoid(c) - auv_weighted_increments(c)) <= 1e-12);
  }
}

TEST_CASE("moving a gain earlier raises AUV by eps * shift / t_max and keeps SR") {
  std::mt19937_64 rng(2);
  int checked = 0;
  while (checked < 1000) {
    const int t_max = std::uniform_int_distribution<int>(2, 60)(rng);
    const int n = std::uniform_int_distribution<int>(1, 200)(rng);
    std::vector<int> solved(static_cast<std::size_t>(t_max), 0);
    for (int i = 0; i < n; ++i) {
      const int k = std::uniform_int_distribution<int>(-t_max / 2, t_max - 1)(rng);
      if (k >= 0) ++solved[static_cast<std::size_t>(k)];
    }
    std::vector<int> positive;
    for (int k = 1; k < t_max; ++k) {
      if (solved[static_cast<std::size_t>(k)] > 0) positive.push_back(k);
    }
    if (positive.empty()) continue;
    const int late = positive[std::uniform_int_distribution<std::size_t>(0, positive.size() - 1)(rng)];
    const int early = std::uniform_int_distribution<int>(0, late - 1)(rng);
    const int moved_tasks = std::uniform_int_distribution<int>(1, solved[static_cast<std::size_t>(late)])(rng);
    std::vector<int> shifted = solved;
    shifted[static_cast<std::size_t>(late)] -= moved_tasks;
    shifted[static_cast<std::size_t>(early)] += moved_tasks;

    const SuccessCurve before = curve_from_counts(solved, n);
    const SuccessCurve after = curve_from_counts(shifted, n);
    const double eps = static_cast<double>(moved_tasks) / n;
    CHECK(after.final_rate() == before.final_rate());
    const double delta = auv_trapezoid(after) - auv_trapezoid(before);
    CHECK(delta > 0);
    CHECK(std::abs(delta - eps * (late - early) / t_max) <= 1e-12);
    ++checked;
  }
}

TEST_CASE("aggregate AUV equals the mean of per-trajectory scores") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const int t_max = std::uniform_int_distribution<int>(1, 40)(rng);
    const auto turns = testing::random_turns(rng, std::uniform_int_distribution<int>(1, 60)(rng), t_max + 5);
    const RunLog run = make_run(turns, t_max);
    const auto scores = per_trajectory_auv(run, t_max);
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
    const double auv = auv_trapezoid(build_success_curve(run, t_max));
    CHECK(std::abs(mean - auv) <= 1e-12);
    CHECK(std::abs(oracle::oracle_auv(turns, t_max) - auv) <= 1e-12);
  }
}

TEST_CASE("permuting outcomes changes nothing; changing the multiset changes AUV only") {
  std::vector<std::optional<int>> turns = {2, 5, std::nullopt, 1, 7, 3};
  const int t_max = 8;
  const SuccessCurve base = build_success_curve(turns, t_max);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(turns.begin(), turns.end(), rng);
    const SuccessCurve c = build_success_curve(turns, t_max);
    CHECK(auv_trapezoid(c) == auv_trapezoid(base));
    CHECK(c.final_rate() == base.final_rate());
  }
  std::vector<std::optional<int>> slower = {3, 5, std::nullopt, 1, 7, 3};
  const SuccessCurve c = build_success_curve(slower, t_max);
  CHECK(c.final_rate() == base.final_rate());
  CHECK(auv_trapezoid(c) < auv_trapezoid(base));
}

TEST_CASE("AUV bounds are attained") {
  for (int t_max : {1, 2, 5, 20, 60}) {
    const double top = auv_trapezoid(build_success_curve(std::vector<std::optional<int>>(3, 1), t_max));
    CHECK(std::abs(top - (1.0 - 1.0 / (2.0 * t_max))) <= 1e-12);
    CHECK(auv_trapezoid(build_success_curve(std::vector<std::optional<int>>(3, std::nullopt), t_max)) == 0.0);
  }
}

TEST_CASE("bootstrap_ci") {
  const std::vector<double> same(50, 0.3);
  const auto [lo, hi] = bootstrap_ci(same, {0.95, 500, 7});
  CHECK(lo == doctest::Approx(0.3));
  CHECK(hi == doctest::Approx(0.3));

  std::mt19937_64 rng(5);
  std::vector<double> scores(200);
  for (auto& s : scores) s = std::uniform_real_distribution<double>(0, 1)(rng);
  CHECK(bootstrap_ci(scores, {0.9, 400, 99}) == bootstrap_ci(scores, {0.9, 400, 99}));
  CHECK(bootstrap_ci(scores, {0.9, 400, 99}) != bootstrap_ci(scores, {0.9, 400, 100}));

  CHECK_THROWS_AS(bootstrap_ci(std::vector<double>{}, {0.95, 500, 1}), Error);
  CHECK_THROWS_AS(bootstrap_ci(scores, {0.95, 50, 1}), Error);
}

TEST_CASE("bootstrap interval narrows by about 1/sqrt(2) when n doubles") {
  // Synthetic per-task scores for the distribution {1: .3, 4: .2, 9: .2, unsolved: .3} at t_max 10.
  const auto synth = [](int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::discrete_distribution<int> pick({0.3, 0.2, 0.2, 0.3});
    const std::optional<int> outcomes[] = {1, 4, 9, std::nullopt};
    std::vector<std::optional<int>> turns;
    for (int i = 0; i < n; ++i) turns.push_back(outcomes[pick(rng)]);
    return per_trajectory_auv(make_run(turns, 10), 10);
  };
  const auto small = synth(1000, 21);
  const auto large = synth(2000, 22);
  const auto [l1, h1] = bootstrap_ci(small, {0.95, 2000, 1});
  const auto [l2, h2] = bootstrap_ci(large, {0.95, 2000, 1});
  const double ratio = (h2 - l2) / (h1 - l1);
  CHECK(ratio >= 0.6);
  CHECK(ratio <= 0.8);
}

TEST_CASE("evaluate_auv keeps the point estimate inside the CI") {
  const RunLog run = make_run({1, 2, std::nullopt, 4, 4, 1}, 5);
  const AuvResult r = evaluate_auv(run, 5, BootstrapOptions{0.95, 300, 3});
  REQUIRE(r.ci_low);
  CHECK(*r.ci_low <= r.auv);
  CHECK(r.auv <= *r.ci_high);
  CHECK(r.sr_final == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("suggest_t_max") {
  std::vector<int> flat_after_12(20, 0);
  for (int k = 0; k < 12; ++k) flat_after_12[static_cast<std::size_t>(k)] = 1;  // last gain between 11 and 12
  const SuccessCurve c12 = curve_from_counts(flat_after_12, 12);
  CHECK(suggest_t_max(std::vector<SuccessCurve>{c12}) == 12);

  const SuccessCurve zeros(std::vector<double>(21, 0.0), 4);
  CHECK(suggest_t_max(std::vector<SuccessCurve>{zeros, zeros}) == 0);

  std::vector<int> at5(20, 0), at9(20, 0);
  at5[4] = 3;
  at9[2] = 1;
  at9[8] = 2;
  const std::vector<SuccessCurve> both = {curve_from_counts(at5, 3), curve_from_counts(at9, 3)};
  CHECK(suggest_t_max(both) == 9);

  const std::vector<SuccessCurve> mismatched = {curve_from_counts(at5, 3), SuccessCurve({0, 1}, 1)};
  CHECK_THROWS_AS(suggest_t_max(mismatched), Error);
}

TEST_CASE("SuccessCurve rejects invalid curves") {
  CHECK_THROWS_AS(SuccessCurve({0.1, 0.2}, 10), Error);
  CHECK_THROWS_AS(SuccessCurve({0.0, 0.5, 0.4}, 10), Error);
  CHECK_THROWS_AS(SuccessCurve({0.0}, 10), Error);
}
