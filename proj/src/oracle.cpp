#include "tide/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "tide/error.hpp"

namespace tide::oracle {

double oracle_auv(std::span<const std::optional<int>> success_turns, int t_max) {
  const double n = static_cast<double>(success_turns.size());
  std::vector<double> p;
  for (int t = 0; t <= t_max; ++t) {
    int solved = 0;
    for (const auto& s : success_turns) {
      if (s.has_value() && *s <= t && *s <= t_max) solved += 1;
    }
    p.push_back(solved / n);
  }
  double sum = 0.0;
  for (int t = 0; t < t_max; ++t) sum += 0.5 * (p[t] + p[t + 1]);
  return sum / t_max;
}

namespace {

bool same_state(const StateRepr& a, const StateRepr& b, const StateIdentityConfig& cfg) {
  if (cfg.mode == StateIdentityConfig::Mode::kExact) {
    if (a.is_text() && b.is_text()) return a.as_text() == b.as_text();
    if (a.is_vector() && b.is_vector()) return a.as_vector() == b.as_vector();
    return false;
  }
  const auto& x = a.as_vector();
  const auto& y = b.as_vector();
  if (x == y) return true;
  double xy = 0, xx = 0, yy = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    xy += x[k] * y[k];
    xx += x[k] * x[k];
    yy += y[k] * y[k];
  }
  return xy / (std::sqrt(xx) * std::sqrt(yy)) >= cfg.threshold;
}

// Label of each state. Exact mode: index of the first equal state. Cosine
// mode: compare with the latest member of each earlier label, latest-visited
// label first, and take the first hit.
std::vector<std::size_t> labels(const std::vector<StateRepr>& states, const StateIdentityConfig& cfg) {
  std::vector<std::size_t> label(states.size());
  for (std::size_t t = 0; t < states.size(); ++t) {
    label[t] = t;
    if (cfg.mode == StateIdentityConfig::Mode::kExact) {
      for (std::size_t u = 0; u < t; ++u) {
        if (same_state(states[u], states[t], cfg)) {
          label[t] = label[u];
          break;
        }
      }
      continue;
    }
    std::vector<std::size_t> tried;
    for (std::size_t u = t; u-- > 0;) {
      if (std::find(tried.begin(), tried.end(), label[u]) != tried.end()) continue;
      tried.push_back(label[u]);
      if (same_state(states[u], states[t], cfg)) {
        label[t] = label[u];
        break;
      }
    }
  }
  return label;
}

}  // namespace

LoopOracleResult oracle_loops(const std::vector<StateRepr>& states, const std::vector<std::string>& actions,
                              const StateIdentityConfig& cfg) {
  const auto label = labels(states, cfg);
  const std::size_t n = states.size();

  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      if (label[i] != label[j]) continue;
      bool distinct = true;
      for (std::size_t p = i; p < j; ++p) {
        for (std::size_t q = p + 1; q < j; ++q) {
          if (label[p] == label[q]) distinct = false;
        }
      }
      if (distinct) all.emplace_back(i, j);
    }
  }

  LoopOracleResult out;
  out.mask.assign(actions.size(), false);
  bool have_prev = false;
  std::size_t prev_i = 0, prev_j = 0;
  for (const auto& [i, j] : all) {
    if (have_prev && i < prev_j) continue;
    bool repeat = have_prev && i == prev_j && (j - i) == (prev_j - prev_i);
    if (repeat) {
      for (std::size_t k = 0; k <= j - i; ++k) {
        if (label[i + k] != label[prev_i + k]) repeat = false;
      }
      for (std::size_t k = 0; k < j - i; ++k) {
        if (actions[i + k] != actions[prev_i + k]) repeat = false;
      }
    }
    if (repeat) {
      out.loops.emplace_back(i, j);
      out.loop_action_count += j - i;
      for (std::size_t k = i; k < j; ++k) out.mask[k] = true;
    }
    out.cycles.emplace_back(i, j);
    have_prev = true;
    prev_i = i;
    prev_j = j;
  }
  return out;
}

std::vector<int> oracle_recall_lag(const Trajectory& traj) {
  if (!traj.target_entities) throw Error(ErrorCode::kMissingAnnotation, "target_entities missing");
  for (const auto& step : traj.steps) {
    if (!step.observed_entities || !step.interacted_entities) {
      throw Error(ErrorCode::kMissingAnnotation, "entity annotations missing");
    }
  }
  std::vector<int> lags;
  const int T = static_cast<int>(traj.steps.size());
  for (int t = 0; t < T; ++t) {
    for (const auto& obj : *traj.target_entities) {
      if (traj.steps[t].interacted_entities->count(obj) == 0) continue;
      for (int k = t - 1; k >= 0; --k) {
        if (traj.steps[k].observed_entities->count(obj) != 0) {
          lags.push_back(t - k);
          break;
        }
      }
    }
  }
  std::sort(lags.begin(), lags.end());
  return lags;
}

}  // namespace tide::oracle
