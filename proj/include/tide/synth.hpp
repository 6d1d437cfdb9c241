#pragma once

// Seeded synthetic run generator for tests and the `synth` subcommand.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tide/trajectory.hpp"

namespace tide {

struct SuccessTurnOutcome {
  std::optional<int> turn;  // nullopt = unsolved
  double probability = 0.0;
};

struct SynthSpec {
  int n_tasks = 1;
  std::vector<SuccessTurnOutcome> success_turn_distribution;
  int state_alphabet_size = 4;   // [2, 8]
  int action_alphabet_size = 2;  // [1, 4]
  double loop_injection_rate = 0.0;
  std::uint64_t seed = 0;

  // Log header and shape of unsolved rollouts (length t_max).
  int t_max = 20;
  std::string run_id = "synth";
  std::string model = "synthetic";
  std::string environment = "synthetic";
  MemoryMode memory_mode = MemoryMode::full();
  // Emit entity annotations and per-step entropy.
  bool annotate = false;
};

/// Throws kInvalidSpec on out-of-range fields or probabilities that do not
/// sum to 1 within 1e-9.
void validate_synth_spec(const SynthSpec& spec);

/// JSON spec file; see README for the keys. Unsolved outcomes are written as
/// the string "unsolved" in place of a turn.
SynthSpec parse_synth_spec(std::istream& in);

/// Deterministic in `spec`. Task i draws from an engine seeded with
/// (seed, i), so output does not depend on generation order.
RunLog generate_synthetic_run(const SynthSpec& spec);

/// Seed of the i-th per-task stream.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace tide
