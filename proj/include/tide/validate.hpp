#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tide/error.hpp"
#include "tide/state_identity.hpp"
#include "tide/trajectory.hpp"

namespace tide {

/// One broken invariant. Header findings have an empty task_id and
/// rollout_idx == -1. `trajectory_index` indexes RunLog::trajectories
/// (-1 for the header); `line` is filled in only when the run came from a file.
struct Finding {
  std::string task_id;
  int rollout_idx = -1;
  std::string field;
  std::string message;
  ErrorCode category = ErrorCode::kInvariantViolation;
  int trajectory_index = -1;
  std::size_t line = 0;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool ok() const { return findings.empty(); }
};

/// Lists every violated type invariant. In cosine identity mode it also
/// reports states that are not vectors of one common dimension.
ValidationReport validate_run(const RunLog& run,
                              const StateIdentityConfig& identity = StateIdentityConfig::exact());

}  // namespace tide
