#include "tide/synth.hpp"

#include <cmath>
#include <istream>
#include <random>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tide/error.hpp"

namespace tide {

namespace {

class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  int below(int n) { return static_cast<int>(uniform() * n); }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::optional<int> draw_turn(Stream& rng, const std::vector<SuccessTurnOutcome>& dist) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& outcome : dist) {
    acc += outcome.probability;
    if (u < acc) return outcome.turn;
  }
  return dist.back().turn;
}

std::string state_name(int k) { return fmt::format("s{}", k); }
std::string action_name(int k) { return fmt::format("a{}", k); }

// Random walk of `length` actions with occasional verbatim repetition of a
// cycle that has just closed.
void fill_walk(Stream& rng, const SynthSpec& spec, std::size_t length, std::vector<int>& states,
               std::vector<int>& actions) {
  states.assign(1, rng.below(spec.state_alphabet_size));
  actions.clear();
  while (actions.size() < length) {
    actions.push_back(rng.below(spec.action_alphabet_size));
    states.push_back(rng.below(spec.state_alphabet_size));
    const std::size_t t = states.size() - 1;
    std::size_t i = t;
    while (i > 0 && states[i - 1] != states[t]) --i;
    if (i == 0) continue;
    const std::size_t start = i - 1;
    const std::size_t len = t - start;
    bool distinct = true;
    for (std::size_t p = start; p < t && distinct; ++p) {
      for (std::size_t q = p + 1; q < t; ++q) {
        if (states[p] == states[q]) {
          distinct = false;
          break;
        }
      }
    }
    if (!distinct || actions.size() + len > length || !rng.chance(spec.loop_injection_rate)) continue;
    for (std::size_t k = 0; k < len; ++k) {
      actions.push_back(actions[start + k]);
      states.push_back(states[start + k + 1]);
    }
  }
}

void annotate(Stream& rng, Trajectory& traj) {
  constexpr int kEntities = 6;
  EntitySet targets;
  targets.insert(fmt::format("obj{}", rng.below(kEntities)));
  if (rng.chance(0.5)) targets.insert(fmt::format("obj{}", rng.below(kEntities)));
  traj.target_entities = targets;
  for (auto& step : traj.steps) {
    EntitySet observed;
    EntitySet interacted;
    for (int e = 0; e < kEntities; ++e) {
      const std::string name = fmt::format("obj{}", e);
      if (rng.chance(0.3)) observed.insert(name);
      const double p_touch = targets.count(name) != 0 ? 0.25 : 0.1;
      if (rng.chance(p_touch)) interacted.insert(name);
    }
    step.observed_entities = std::move(observed);
    step.interacted_entities = std::move(interacted);
    step.entropy = 2.0 * rng.uniform();
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finaliser over the combined words
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void validate_synth_spec(const SynthSpec& spec) {
  const auto bad = [](const std::string& msg) { return Error(ErrorCode::kInvalidSpec, msg); };
  if (spec.n_tasks < 1) throw bad("n_tasks must be >= 1");
  if (spec.state_alphabet_size < 2 || spec.state_alphabet_size > 8) throw bad("state_alphabet_size must lie in [2, 8]");
  if (spec.action_alphabet_size < 1 || spec.action_alphabet_size > 4) throw bad("action_alphabet_size must lie in [1, 4]");
  if (!(spec.loop_injection_rate >= 0.0 && spec.loop_injection_rate <= 1.0)) throw bad("loop_injection_rate must lie in [0, 1]");
  if (spec.t_max < 1) throw bad("t_max must be >= 1");
  if (spec.success_turn_distribution.empty()) throw bad("success_turn_distribution is empty");
  double total = 0.0;
  for (const auto& o : spec.success_turn_distribution) {
    if (!(o.probability >= 0.0)) throw bad("probabilities must be non-negative");
    if (o.turn && *o.turn < 1) throw bad("success turns must be >= 1");
    total += o.probability;
  }
  if (std::abs(total - 1.0) > 1e-9) throw bad(fmt::format("probabilities sum to {}, not 1", total));
  if (spec.run_id.empty()) throw bad("run_id must be nonempty");
}

SynthSpec parse_synth_spec(std::istream& in) {
  using json = nlohmann::json;
  std::stringstream buffer;
  buffer << in.rdbuf();
  json j;
  try {
    j = json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("spec is not valid JSON: ") + e.what());
  }
  SynthSpec spec;
  try {
    spec.n_tasks = j.at("n_tasks").get<int>();
    for (const auto& entry : j.at("success_turn_distribution")) {
      SuccessTurnOutcome o;
      const json& turn = entry.at(0);
      if (turn.is_string() && turn.get<std::string>() == "unsolved") {
        o.turn = std::nullopt;
      } else {
        o.turn = turn.get<int>();
      }
      o.probability = entry.at(1).get<double>();
      spec.success_turn_distribution.push_back(o);
    }
    spec.state_alphabet_size = j.value("state_alphabet_size", spec.state_alphabet_size);
    spec.action_alphabet_size = j.value("action_alphabet_size", spec.action_alphabet_size);
    spec.loop_injection_rate = j.value("loop_injection_rate", spec.loop_injection_rate);
    spec.seed = j.value("seed", spec.seed);
    spec.t_max = j.value("t_max", spec.t_max);
    spec.run_id = j.value("run_id", spec.run_id);
    spec.model = j.value("model", spec.model);
    spec.environment = j.value("environment", spec.environment);
    spec.annotate = j.value("annotate", spec.annotate);
    if (j.contains("memory_mode")) {
      const json& mode = j.at("memory_mode");
      if (mode.is_string() && mode == "full") {
        spec.memory_mode = MemoryMode::full();
      } else if (mode.is_string() && mode == "none") {
        spec.memory_mode = MemoryMode::none();
      } else {
        spec.memory_mode = MemoryMode::windowed(mode.at("windowed").get<int>());
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidSpec, std::string("bad spec field: ") + e.what());
  }
  validate_synth_spec(spec);
  return spec;
}

RunLog generate_synthetic_run(const SynthSpec& spec) {
  validate_synth_spec(spec);
  RunLog run;
  run.metadata.run_id = spec.run_id;
  run.metadata.model_name = spec.model;
  run.metadata.environment_name = spec.environment;
  run.metadata.memory_mode = spec.memory_mode;
  run.metadata.t_max = spec.t_max;
  run.metadata.extra["generator"] = "synth";
  run.metadata.extra["seed"] = std::to_string(spec.seed);

  const int digits = static_cast<int>(std::to_string(spec.n_tasks - 1).size());
  std::vector<int> states;
  std::vector<int> actions;
  run.trajectories.reserve(static_cast<std::size_t>(spec.n_tasks));
  for (int i = 0; i < spec.n_tasks; ++i) {
    Stream rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    Trajectory traj;
    traj.task_id = fmt::format("task-{:0{}}", i, digits);
    traj.rollout_idx = 0;
    const std::optional<int> turn = draw_turn(rng, spec.success_turn_distribution);
    traj.success = turn.has_value();
    traj.success_turn = turn;
    const auto length = static_cast<std::size_t>(turn ? *turn : spec.t_max);
    fill_walk(rng, spec, length, states, actions);
    traj.steps.resize(length);
    for (std::size_t k = 0; k < length; ++k) {
      traj.steps[k].turn = static_cast<int>(k);
      traj.steps[k].state = StateRepr::text(state_name(states[k]));
      traj.steps[k].action = action_name(actions[k]);
    }
    traj.final_state = StateRepr::text(state_name(states[length]));
    if (spec.annotate) annotate(rng, traj);
    run.trajectories.push_back(std::move(traj));
  }
  return run;
}

}  // namespace tide
