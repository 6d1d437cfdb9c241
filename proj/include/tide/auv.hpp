#pragma once

// Success curves and the area-under-variation (AUV) score.
//
// P_t is the fraction of tasks solved within the first t turns (P_0 = 0).
// AUV = (1/t_max) * sum_{t=0}^{t_max-1} (P_t + P_{t+1}) / 2, which equals the
// gain-weighted form (1/t_max) * sum_k (t_max - k - 0.5) * (P_{k+1} - P_k).
// Its supremum under P_0 = 0 is 1 - 1/(2 t_max).

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tide/trajectory.hpp"

namespace tide {

class SuccessCurve {
 public:
  /// Validates p[0] == 0, monotonicity, values in [0, 1] and length t_max+1.
  SuccessCurve(std::vector<double> p, int n_tasks);

  int t_max() const { return static_cast<int>(p_.size()) - 1; }
  int n_tasks() const { return n_tasks_; }
  const std::vector<double>& p() const { return p_; }
  double operator[](int t) const { return p_[static_cast<std::size_t>(t)]; }
  double final_rate() const { return p_.back(); }

 private:
  std::vector<double> p_;
  int n_tasks_;
};

struct AuvResult {
  double auv = 0.0;
  double sr_final = 0.0;
  std::vector<double> per_task_scores;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  int n_tasks = 0;
  int t_max = 0;
};

/// p[t] = |{success_turn <= t}| / n for t >= 1. Success turns past t_max
/// count as unsolved inside the window.
SuccessCurve build_success_curve(const RunLog& run, int t_max);
SuccessCurve build_success_curve(std::span<const std::optional<int>> success_turns, int t_max);

double auv_trapezoid(const SuccessCurve& curve);
double auv_weighted_increments(const SuccessCurve& curve);

/// Weight of a gain realised between turns k and k+1.
inline double increment_weight(int t_max, int k) { return t_max - k - 0.5; }

/// Single-task scores Z_i = (t_max - s_i + 0.5) / t_max, 0 when unsolved in
/// the window. Their mean is the run AUV.
std::vector<double> per_trajectory_auv(const RunLog& run, int t_max);

struct BootstrapOptions {
  double confidence = 0.95;
  int resamples = 1000;
  std::uint64_t seed = 0;
};

/// Percentile bootstrap interval of the mean. Deterministic for a given seed.
std::pair<double, double> bootstrap_ci(std::span<const double> scores, const BootstrapOptions& options);

/// AUV, final success rate and per-task scores; with `bootstrap` set, the CI
/// is widened if needed so that it contains the point estimate.
AuvResult evaluate_auv(const RunLog& run, int t_max, const std::optional<BootstrapOptions>& bootstrap = {});

/// Smallest t with p[t] >= (1 - epsilon) * p[horizon] for every curve.
int suggest_t_max(std::span<const SuccessCurve> curves, double epsilon = 0.01);

std::vector<std::optional<int>> success_turns(const RunLog& run);

}  // namespace tide
