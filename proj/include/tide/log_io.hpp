#pragma once

// Reading and writing the line-delimited JSON run-log format.
//
//   line 1:  {"type":"run","run_id":..,"model":..,"environment":..,
//             "memory_mode":"full"|"none"|{"windowed":k},"t_max":int,"extra":{..}}
//   line 2+: {"type":"trajectory","task_id":..,"rollout_idx":int,"success":bool,
//             "success_turn":int|null,"target_entities":[..]|null,
//             "final_state":STATE,"steps":[STEP,..]}
//   STATE:   {"kind":"text","value":str} | {"kind":"vector","values":[num,..]}
//
// Unknown top-level keys of the header and trajectory records are preserved.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tide/state_identity.hpp"
#include "tide/trajectory.hpp"
#include "tide/validate.hpp"

namespace tide {

inline constexpr int kLogSchemaVersion = 1;

struct ParseOptions {
  StateIdentityConfig identity = StateIdentityConfig::exact();
};

/// Structurally decoded log that has not yet been checked against the
/// trajectory invariants. `trajectory_lines[i]` is the source line of
/// `run.trajectories[i]`; `header_line` is the line of the run record.
struct LoadedLog {
  RunLog run;
  std::size_t header_line = 1;
  std::vector<std::size_t> trajectory_lines;
};

/// Decodes records without invariant checks. Throws Error with
/// kMalformedRecord (bad JSON) or kSchemaViolation (missing field, wrong type).
LoadedLog load_run_log(std::istream& source);

/// Full parse: decode, validate, then order trajectories by
/// (task_id, rollout_idx). The first invariant finding is raised as
/// kInvariantViolation (kSchemaViolation for state kinds that the identity
/// mode cannot compare), tagged with its source line.
RunLog parse_run_log(std::istream& source, const ParseOptions& options = {});
RunLog read_run_log(const std::filesystem::path& path, const ParseOptions& options = {});

/// Annotates validation findings of a LoadedLog with source line numbers.
ValidationReport validate_loaded(const LoadedLog& loaded,
                                 const StateIdentityConfig& identity = StateIdentityConfig::exact());

void write_run_log(std::ostream& out, const RunLog& run);
std::string serialize_run_log(const RunLog& run);

}  // namespace tide
