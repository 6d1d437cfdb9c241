#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "tide/trajectory.hpp"

namespace tide {

/// How two recorded states are judged "the same". Exact mode compares text
/// byte-for-byte (vectors element-wise); cosine mode treats two vectors as
/// identical when their cosine similarity reaches the threshold.
struct StateIdentityConfig {
  enum class Mode { kExact, kCosine };

  Mode mode = Mode::kExact;
  double threshold = 1.0;

  static StateIdentityConfig exact() { return {Mode::kExact, 1.0}; }
  static StateIdentityConfig cosine(double threshold);

  /// Parses "exact" or "cosine:THETA".
  static StateIdentityConfig parse(const std::string& text);
  std::string to_string() const;
};

double cosine_similarity(std::span<const double> a, std::span<const double> b);

bool states_equal(const StateRepr& a, const StateRepr& b, const StateIdentityConfig& cfg);

/// Maps each state of a sequence to a dense identity id (first-seen order).
///
/// Exact mode: ids coincide iff the states are byte-identical. Cosine mode is
/// not transitive, so states are bucketed: a new state is compared against the
/// most recently seen member of every existing bucket, most recently visited
/// bucket first, and joins the first bucket it matches (else opens a new one).
std::vector<std::size_t> assign_state_ids(std::span<const StateRepr> states,
                                          const StateIdentityConfig& cfg);

}  // namespace tide
