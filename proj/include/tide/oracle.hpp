#pragma once

// Brute-force reference implementations. They share only the domain types
// with the production metrics and are written straight from the definitions,
// favouring obviousness over speed (O(T^2) to O(T^3)).

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tide/state_identity.hpp"
#include "tide/trajectory.hpp"

namespace tide::oracle {

/// Counts solved tasks at each t separately, then sums trapezoids.
double oracle_auv(std::span<const std::optional<int>> success_turns, int t_max);

struct LoopOracleResult {
  std::size_t loop_action_count = 0;
  std::vector<bool> mask;
  std::vector<std::pair<std::size_t, std::size_t>> cycles;  // (start, end)
  std::vector<std::pair<std::size_t, std::size_t>> loops;
};

/// Enumerates every (i, j) with s_i == s_j and pairwise-distinct s_i..s_{j-1},
/// then scans them by end index with an explicit previous-cycle register.
LoopOracleResult oracle_loops(const std::vector<StateRepr>& states, const std::vector<std::string>& actions,
                              const StateIdentityConfig& cfg);

/// Backward scan for the most recent earlier observation of each
/// (turn, target) interaction. Returned sorted ascending.
std::vector<int> oracle_recall_lag(const Trajectory& traj);

}  // namespace tide::oracle
