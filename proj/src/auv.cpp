#include "tide/auv.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "tide/error.hpp"

namespace tide {

SuccessCurve::SuccessCurve(std::vector<double> p, int n_tasks) : p_(std::move(p)), n_tasks_(n_tasks) {
  if (p_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "success curve needs t_max >= 1");
  if (n_tasks_ < 1) throw Error(ErrorCode::kInvalidArgument, "success curve needs n_tasks >= 1");
  if (p_.front() != 0.0) throw Error(ErrorCode::kInvalidArgument, "success curve must start at P_0 = 0");
  for (std::size_t t = 0; t < p_.size(); ++t) {
    if (!(p_[t] >= 0.0 && p_[t] <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("P_{} = {} outside [0, 1]", t, p_[t]));
    }
    if (t > 0 && p_[t] < p_[t - 1]) {
      throw Error(ErrorCode::kInvalidArgument, fmt::format("success curve decreases at t = {}", t));
    }
  }
}

std::vector<std::optional<int>> success_turns(const RunLog& run) {
  std::vector<std::optional<int>> out;
  out.reserve(run.trajectories.size());
  for (const auto& traj : run.trajectories) {
    out.push_back(traj.success ? traj.success_turn : std::nullopt);
  }
  return out;
}

SuccessCurve build_success_curve(std::span<const std::optional<int>> turns, int t_max) {
  if (turns.empty()) throw Error(ErrorCode::kEmptyRun, "cannot build a success curve from an empty run");
  if (t_max < 1) throw Error(ErrorCode::kInvalidArgument, "t_max must be >= 1");
  // solved_at[k] = number of tasks first solved at turn k (1..t_max).
  std::vector<long> solved_at(static_cast<std::size_t>(t_max) + 1, 0);
  for (const auto& s : turns) {
    if (s && *s >= 1 && *s <= t_max) ++solved_at[static_cast<std::size_t>(*s)];
  }
  const auto n = static_cast<double>(turns.size());
  std::vector<double> p(static_cast<std::size_t>(t_max) + 1, 0.0);
  long cumulative = 0;
  for (int t = 1; t <= t_max; ++t) {
    cumulative += solved_at[static_cast<std::size_t>(t)];
    p[static_cast<std::size_t>(t)] = static_cast<double>(cumulative) / n;
  }
  return SuccessCurve(std::move(p), static_cast<int>(turns.size()));
}

SuccessCurve build_success_curve(const RunLog& run, int t_max) {
  const auto turns = success_turns(run);
  return build_success_curve(std::span<const std::optional<int>>(turns), t_max);
}

double auv_trapezoid(const SuccessCurve& curve) {
  const int t_max = curve.t_max();
  double area = 0.0;
  for (int t = 0; t < t_max; ++t) area += (curve[t] + curve[t + 1]) / 2.0;
  return area / t_max;
}

double auv_weighted_increments(const SuccessCurve& curve) {
  const int t_max = curve.t_max();
  double area = 0.0;
  for (int k = 0; k < t_max; ++k) area += increment_weight(t_max, k) * (curve[k + 1] - curve[k]);
  return area / t_max;
}

std::vector<double> per_trajectory_auv(const RunLog& run, int t_max) {
  if (run.trajectories.empty()) throw Error(ErrorCode::kEmptyRun, "cannot score an empty run");
  if (t_max < 1) throw Error(ErrorCode::kInvalidArgument, "t_max must be >= 1");
  std::vector<double> scores;
  scores.reserve(run.trajectories.size());
  for (const auto& s : success_turns(run)) {
    // A unit gain at k = s - 1.
    scores.push_back(s && *s >= 1 && *s <= t_max ? increment_weight(t_max, *s - 1) / t_max : 0.0);
  }
  return scores;
}

namespace {

// Unbiased draw from [0, bound) on top of a fixed-width engine; the
// distribution objects of <random> are not reproducible across libraries.
std::size_t draw_index(std::mt19937_64& engine, std::size_t bound) {
  const std::uint64_t range = bound;
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x = 0;
  do {
    x = engine();
  } while (x >= limit);
  return static_cast<std::size_t>(x % range);
}

// Linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::pair<double, double> bootstrap_ci(std::span<const double> scores, const BootstrapOptions& options) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyScores, "bootstrap needs at least one score");
  if (!(options.confidence > 0.0 && options.confidence < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "confidence must lie in (0, 1)");
  }
  if (options.resamples < 100) throw Error(ErrorCode::kInvalidArgument, "bootstrap needs at least 100 resamples");

  std::mt19937_64 engine(options.seed);
  const std::size_t n = scores.size();
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(options.resamples));
  for (int r = 0; r < options.resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += scores[draw_index(engine, n)];
    means.push_back(sum / static_cast<double>(n));
  }
  std::sort(means.begin(), means.end());
  const double alpha = 1.0 - options.confidence;
  return {quantile_sorted(means, alpha / 2.0), quantile_sorted(means, 1.0 - alpha / 2.0)};
}

AuvResult evaluate_auv(const RunLog& run, int t_max, const std::optional<BootstrapOptions>& bootstrap) {
  const SuccessCurve curve = build_success_curve(run, t_max);
  AuvResult result;
  result.auv = auv_trapezoid(curve);
  result.sr_final = curve.final_rate();
  result.per_task_scores = per_trajectory_auv(run, t_max);
  result.n_tasks = curve.n_tasks();
  result.t_max = t_max;
  if (bootstrap) {
    auto [low, high] = bootstrap_ci(result.per_task_scores, *bootstrap);
    result.ci_low = std::min(low, result.auv);
    result.ci_high = std::max(high, result.auv);
  }
  return result;
}

int suggest_t_max(std::span<const SuccessCurve> curves, double epsilon) {
  if (curves.empty()) throw Error(ErrorCode::kEmptyInput, "no curves to inspect");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1)");
  const int horizon = curves.front().t_max();
  for (const auto& c : curves) {
    if (c.t_max() != horizon) {
      throw Error(ErrorCode::kMismatchedHorizons,
                  fmt::format("curves have horizons {} and {}", horizon, c.t_max()));
    }
  }
  for (int t = 0; t < horizon; ++t) {
    const bool saturated = std::all_of(curves.begin(), curves.end(), [&](const SuccessCurve& c) {
      return c[t] >= (1.0 - epsilon) * c[horizon];
    });
    if (saturated) return t;
  }
  return horizon;
}

}  // namespace tide
