#include "tide/loops.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "tide/error.hpp"

namespace tide {

namespace {

bool slices_equal(const std::vector<std::size_t>& ids, const std::vector<std::string>& actions,
                  const CycleSpan& a, const CycleSpan& b) {
  if (a.length() != b.length()) return false;
  for (std::size_t k = 0; k <= a.length(); ++k) {
    if (ids[a.start + k] != ids[b.start + k]) return false;
  }
  for (std::size_t k = 0; k < a.length(); ++k) {
    if (actions[a.start + k] != actions[b.start + k]) return false;
  }
  return true;
}

bool has_nested(const std::vector<std::size_t>& ids, std::size_t start, std::size_t end) {
  std::unordered_set<std::size_t> seen;
  for (std::size_t p = start; p < end; ++p) {
    if (!seen.insert(ids[p]).second) return true;
  }
  return false;
}

}  // namespace

TrajectoryLoops detect_cycles_and_loops(const std::vector<std::size_t>& ids,
                                        const std::vector<std::string>& actions) {
  if (ids.size() != actions.size() + 1) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("{} states do not bracket {} actions", ids.size(), actions.size()));
  }
  TrajectoryLoops out;
  out.mask.assign(actions.size(), false);

  std::unordered_map<std::size_t, std::size_t> last_seen;
  std::optional<CycleSpan> prev;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    auto it = last_seen.find(ids[t]);
    if (it != last_seen.end()) {
      const CycleSpan span{it->second, t};
      const bool overlaps_prev = prev && span.start < prev->end;
      if (!overlaps_prev && !has_nested(ids, span.start, span.end)) {
        if (prev && span.start == prev->end && slices_equal(ids, actions, span, *prev)) {
          out.loops.push_back({span, *prev});
          out.loop_action_count += span.length();
          std::fill(out.mask.begin() + static_cast<std::ptrdiff_t>(span.start),
                    out.mask.begin() + static_cast<std::ptrdiff_t>(span.end), true);
        }
        out.cycles.push_back(span);
        prev = span;
      }
    }
    last_seen[ids[t]] = t;
  }
  return out;
}

TrajectoryLoops detect_cycles_and_loops(const Trajectory& traj, const StateIdentityConfig& cfg) {
  const auto states = traj.state_sequence();
  return detect_cycles_and_loops(assign_state_ids(states, cfg), traj.action_sequence());
}

LoopReport loop_ratio(const RunLog& run, const StateIdentityConfig& cfg) {
  if (run.trajectories.empty()) throw Error(ErrorCode::kEmptyRun, "cannot compute a loop ratio on an empty run");
  LoopReport report;
  report.loops.reserve(run.trajectories.size());
  report.loop_step_mask.reserve(run.trajectories.size());
  for (const auto& traj : run.trajectories) {
    TrajectoryLoops detected = detect_cycles_and_loops(traj, cfg);
    report.total_actions += traj.num_actions();
    report.loop_action_count += detected.loop_action_count;
    report.loops.push_back(std::move(detected.loops));
    report.loop_step_mask.push_back(std::move(detected.mask));
  }
  if (report.total_actions == 0) throw Error(ErrorCode::kNoActions, "run contains no actions");
  report.loop_ratio = static_cast<double>(report.loop_action_count) / static_cast<double>(report.total_actions);
  return report;
}

void ActionClassifier::add_prefix(std::string class_name, std::string prefix) {
  rules_.push_back({std::move(class_name), std::move(prefix), std::nullopt});
}

void ActionClassifier::add_pattern(std::string class_name, const std::string& anchored_regex) {
  try {
    rules_.push_back({std::move(class_name), std::nullopt, std::regex(anchored_regex)});
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::kInvalidArgument, "bad action pattern '" + anchored_regex + "': " + e.what());
  }
}

ActionClassifier ActionClassifier::from_rules(std::istream& in) {
  ActionClassifier classifier;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto space = line.find_first_of(" \t", first);
    const auto rule_start = space == std::string::npos ? std::string::npos : line.find_first_not_of(" \t", space);
    if (rule_start == std::string::npos) {
      throw Error(ErrorCode::kMalformedRecord, "expected 'NAME prefix:TEXT' or 'NAME regex:PATTERN'", line_no);
    }
    std::string name = line.substr(first, space - first);
    const std::string rule = line.substr(rule_start);
    if (rule.rfind("prefix:", 0) == 0) {
      classifier.add_prefix(std::move(name), rule.substr(7));
    } else if (rule.rfind("regex:", 0) == 0) {
      classifier.add_pattern(std::move(name), rule.substr(6));
    } else {
      throw Error(ErrorCode::kMalformedRecord, "rule must start with 'prefix:' or 'regex:'", line_no);
    }
  }
  return classifier;
}

std::string ActionClassifier::leading_token(const std::string& action) {
  std::string token;
  for (char c : action) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc) || c == '(') {
      if (token.empty()) continue;
      break;
    }
    token.push_back(static_cast<char>(std::tolower(uc)));
  }
  return token;
}

std::string ActionClassifier::classify(const std::string& action) const {
  for (const auto& rule : rules_) {
    if (rule.prefix && action.rfind(*rule.prefix, 0) == 0) return rule.class_name;
    if (rule.pattern && std::regex_search(action, *rule.pattern, std::regex_constants::match_continuous)) {
      return rule.class_name;
    }
  }
  return leading_token(action);
}

ActionClassRatios action_class_loop_ratio(const RunLog& run, const StateIdentityConfig& cfg,
                                          const ActionClassifier& classifier) {
  ActionClassRatios out;
  for (const auto& traj : run.trajectories) {
    const TrajectoryLoops detected = detect_cycles_and_loops(traj, cfg);
    for (std::size_t k = 0; k < detected.mask.size(); ++k) {
      if (!detected.mask[k]) continue;
      ++out.counts[classifier.classify(traj.steps[k].action)];
      ++out.loop_actions;
    }
  }
  out.no_loops = out.loop_actions == 0;
  for (const auto& [name, count] : out.counts) {
    out.ratios[name] = static_cast<double>(count) / static_cast<double>(out.loop_actions);
  }
  return out;
}

EntropySplit entropy_split(const RunLog& run, const StateIdentityConfig& cfg) {
  for (const auto& traj : run.trajectories) {
    for (const auto& step : traj.steps) {
      if (!step.entropy) {
        throw Error(ErrorCode::kMissingAnnotation,
                    fmt::format("entropy missing at task '{}' rollout {} turn {}", traj.task_id,
                                traj.rollout_idx, step.turn));
      }
    }
  }
  double loop_sum = 0.0;
  double other_sum = 0.0;
  EntropySplit split;
  for (const auto& traj : run.trajectories) {
    const TrajectoryLoops detected = detect_cycles_and_loops(traj, cfg);
    for (std::size_t k = 0; k < traj.steps.size(); ++k) {
      if (detected.mask[k]) {
        loop_sum += *traj.steps[k].entropy;
        ++split.n_loop;
      } else {
        other_sum += *traj.steps[k].entropy;
        ++split.n_nonloop;
      }
    }
  }
  if (split.n_loop > 0) split.mean_loop = loop_sum / static_cast<double>(split.n_loop);
  if (split.n_nonloop > 0) split.mean_nonloop = other_sum / static_cast<double>(split.n_nonloop);
  return split;
}

}  // namespace tide
