#include <doctest.h>

#include <sstream>

#include "tide/error.hpp"
#include "tide/log_io.hpp"
#include "tide/loops.hpp"
#include "tide/oracle.hpp"
#include "tide/synth.hpp"
#include "tide/validate.hpp"

using namespace tide;

namespace {

SynthSpec base_spec() {
  SynthSpec spec;
  spec.n_tasks = 40;
  spec.success_turn_distribution = {{1, 0.2}, {4, 0.3}, {9, 0.2}, {std::nullopt, 0.3}};
  spec.state_alphabet_size = 4;
  spec.action_alphabet_size = 2;
  spec.loop_injection_rate = 0.5;
  spec.t_max = 10;
  spec.seed = 123;
  return spec;
}

}  // namespace

TEST_CASE("generation is deterministic and valid") {
  const RunLog a = generate_synthetic_run(base_spec());
  const RunLog b = generate_synthetic_run(base_spec());
  CHECK(a == b);
  CHECK(validate_run(a).ok());
  SynthSpec other = base_spec();
  other.seed = 124;
  CHECK_FALSE(generate_synthetic_run(other) == a);
}

TEST_CASE("generated logs pass through the public serializer and parser") {
  SynthSpec spec = base_spec();
  spec.annotate = true;
  const RunLog run = generate_synthetic_run(spec);
  std::istringstream in(serialize_run_log(run));
  CHECK(parse_run_log(in) == run);
}

TEST_CASE("point-mass distribution solves every task at turn 1") {
  SynthSpec spec = base_spec();
  spec.success_turn_distribution = {{1, 1.0}};
  for (const auto& t : generate_synthetic_run(spec).trajectories) CHECK(t.success_turn == 1);
}

TEST_CASE("no injection and a large alphabet give no loops on the generated instance") {
  SynthSpec spec = base_spec();
  spec.state_alphabet_size = 8;
  spec.action_alphabet_size = 4;
  spec.loop_injection_rate = 0.0;
  spec.success_turn_distribution = {{2, 0.5}, {3, 0.5}};
  spec.t_max = 3;
  const RunLog run = generate_synthetic_run(spec);
  std::size_t loops = 0;
  for (const auto& t : run.trajectories) {
    loops += oracle::oracle_loops(t.state_sequence(), t.action_sequence(), StateIdentityConfig::exact())
                 .loop_action_count;
  }
  CHECK(loops == 0);
}

TEST_CASE("loop injection produces loops") {
  SynthSpec spec = base_spec();
  spec.loop_injection_rate = 1.0;
  spec.state_alphabet_size = 3;
  const RunLog run = generate_synthetic_run(spec);
  CHECK(loop_ratio(run, StateIdentityConfig::exact()).loop_action_count > 0);
}

TEST_CASE("invalid specs are rejected") {
  SynthSpec spec = base_spec();
  spec.success_turn_distribution = {{1, 0.5}, {2, 0.4}};
  CHECK_THROWS_AS(generate_synthetic_run(spec), Error);
  spec = base_spec();
  spec.state_alphabet_size = 9;
  CHECK_THROWS_AS(generate_synthetic_run(spec), Error);
  spec = base_spec();
  spec.action_alphabet_size = 0;
  CHECK_THROWS_AS(generate_synthetic_run(spec), Error);
}

TEST_CASE("spec files parse") {
  std::istringstream in(R"({"n_tasks":3,"success_turn_distribution":[[1,0.5],["unsolved",0.5]],
    "state_alphabet_size":5,"action_alphabet_size":3,"loop_injection_rate":0.1,"seed":9,
    "t_max":7,"memory_mode":{"windowed":2},"model":"m"})");
  const SynthSpec spec = parse_synth_spec(in);
  CHECK(spec.n_tasks == 3);
  CHECK_FALSE(spec.success_turn_distribution[1].turn.has_value());
  CHECK(spec.memory_mode == MemoryMode::windowed(2));
  CHECK(spec.t_max == 7);
  std::istringstream bad(R"({"n_tasks":3})");
  CHECK_THROWS_AS(parse_synth_spec(bad), Error);
}

TEST_CASE("oracle hand examples") {
  const auto text = [](const std::string& s) {
    std::vector<StateRepr> out;
    for (char c : s) out.push_back(StateRepr::text(std::string(1, c)));
    return out;
  };
  const auto exact = StateIdentityConfig::exact();
  CHECK(oracle::oracle_loops(text("ABABA"), {"r", "l", "r", "l"}, exact).loop_action_count == 2);
  CHECK(oracle::oracle_loops(text("ABCDE"), {"a", "b", "c", "d"}, exact).loop_action_count == 0);
  CHECK(oracle::oracle_loops(text("AAA"), {"x", "x"}, exact).loop_action_count == 1);

  CHECK(oracle::oracle_auv(std::vector<std::optional<int>>{1, 1, 3, std::nullopt}, 4) == 0.53125);
  CHECK(oracle::oracle_auv(std::vector<std::optional<int>>{std::nullopt, std::nullopt}, 4) == 0.0);
  CHECK(oracle::oracle_auv(std::vector<std::optional<int>>(9, 1), 20) == doctest::Approx(0.975).epsilon(1e-14));
}
