#include "tide/log_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "tide/error.hpp"

namespace tide {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Decoding context for one line; every failure carries the line number.
class Record {
 public:
  Record(const json& object, std::size_t line, std::string where)
      : object_(object), line_(line), where_(std::move(where)) {}

  [[noreturn]] void fail(const std::string& message) const {
    throw Error(ErrorCode::kSchemaViolation, where_ + ": " + message, line_);
  }

  const json& require(const char* key) const {
    auto it = object_.find(key);
    if (it == object_.end()) fail(fmt::format("missing field '{}'", key));
    return *it;
  }

  // Absent and null are both "no value".
  const json* optional(const char* key) const {
    auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) return nullptr;
    return &*it;
  }

  std::string string_field(const char* key) const {
    const json& v = require(key);
    if (!v.is_string()) fail(fmt::format("field '{}' must be a string", key));
    return v.get<std::string>();
  }

  int int_value(const json& v, const std::string& key) const {
    if (!v.is_number_integer()) fail(fmt::format("field '{}' must be an integer", key));
    const auto wide = v.get<std::int64_t>();
    if (wide < std::numeric_limits<int>::min() || wide > std::numeric_limits<int>::max()) {
      fail(fmt::format("field '{}' is out of range", key));
    }
    return static_cast<int>(wide);
  }

  int int_field(const char* key) const { return int_value(require(key), key); }

  bool bool_field(const char* key) const {
    const json& v = require(key);
    if (!v.is_boolean()) fail(fmt::format("field '{}' must be a boolean", key));
    return v.get<bool>();
  }

  EntitySet entity_set(const json& v, const std::string& key) const {
    if (!v.is_array()) fail(fmt::format("field '{}' must be an array of strings or null", key));
    EntitySet out;
    for (const auto& e : v) {
      if (!e.is_string()) fail(fmt::format("field '{}' must contain only strings", key));
      out.insert(trim(e.get<std::string>()));
    }
    return out;
  }

  std::optional<EntitySet> optional_entities(const char* key) const {
    const json* v = optional(key);
    if (!v) return std::nullopt;
    return entity_set(*v, key);
  }

  StateRepr state(const json& v, const std::string& key) const {
    if (!v.is_object()) fail(fmt::format("'{}' must be a state object", key));
    Record rec(v, line_, where_ + "." + key);
    const std::string kind = rec.string_field("kind");
    if (kind == "text") return StateRepr::text(rec.string_field("value"));
    if (kind == "vector") {
      const json& values = rec.require("values");
      if (!values.is_array()) rec.fail("field 'values' must be an array of numbers");
      std::vector<double> out;
      out.reserve(values.size());
      for (const auto& x : values) {
        if (!x.is_number()) rec.fail("field 'values' must contain only numbers");
        out.push_back(x.get<double>());
      }
      return StateRepr::vector(std::move(out));
    }
    rec.fail("state kind must be 'text' or 'vector', got '" + kind + "'");
  }

  std::map<std::string, std::string> unknown_fields(std::initializer_list<const char*> known) const {
    std::map<std::string, std::string> out;
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      const bool is_known = std::any_of(known.begin(), known.end(),
                                        [&](const char* k) { return it.key() == k; });
      if (!is_known) out.emplace(it.key(), it->dump());
    }
    return out;
  }

  static std::string trim(const std::string& s) {
    constexpr const char* kSpace = " \t\r\n\f\v";
    const auto first = s.find_first_not_of(kSpace);
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(kSpace);
    return s.substr(first, last - first + 1);
  }

 private:
  const json& object_;
  std::size_t line_;
  std::string where_;
};

MemoryMode decode_memory_mode(const Record& rec, const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "full") return MemoryMode::full();
    if (s == "none") return MemoryMode::none();
    rec.fail("memory_mode must be \"full\", \"none\" or {\"windowed\":k}, got \"" + s + "\"");
  }
  if (v.is_object() && v.size() == 1 && v.contains("windowed")) {
    return MemoryMode::windowed(rec.int_value(v.at("windowed"), "memory_mode.windowed"));
  }
  rec.fail("memory_mode must be \"full\", \"none\" or {\"windowed\":k}");
}

RunMetadata decode_header(const json& object, std::size_t line) {
  Record rec(object, line, "run");
  RunMetadata meta;
  meta.run_id = rec.string_field("run_id");
  meta.model_name = rec.string_field("model");
  meta.environment_name = rec.string_field("environment");
  meta.memory_mode = decode_memory_mode(rec, rec.require("memory_mode"));
  meta.t_max = rec.int_field("t_max");
  if (const json* extra = rec.optional("extra")) {
    if (!extra->is_object()) rec.fail("field 'extra' must be an object");
    for (auto it = extra->begin(); it != extra->end(); ++it) {
      if (!it->is_string()) rec.fail("field 'extra." + it.key() + "' must be a string");
      meta.extra.emplace(it.key(), it->get<std::string>());
    }
  }
  meta.unknown_fields =
      rec.unknown_fields({"type", "run_id", "model", "environment", "memory_mode", "t_max", "extra"});
  return meta;
}

Step decode_step(const json& object, std::size_t line, std::size_t index) {
  const std::string where = fmt::format("steps[{}]", index);
  if (!object.is_object()) throw Error(ErrorCode::kSchemaViolation, where + " must be an object", line);
  Record rec(object, line, where);
  Step step;
  step.turn = rec.int_field("turn");
  step.state = rec.state(rec.require("state"), "state");
  step.action = rec.string_field("action");
  if (const json* v = rec.optional("action_class")) {
    if (!v->is_string()) rec.fail("field 'action_class' must be a string or null");
    step.action_class = v->get<std::string>();
  }
  if (const json* v = rec.optional("entropy")) {
    if (!v->is_number()) rec.fail("field 'entropy' must be a number or null");
    step.entropy = v->get<double>();
  }
  step.observed_entities = rec.optional_entities("observed_entities");
  step.interacted_entities = rec.optional_entities("interacted_entities");
  return step;
}

Trajectory decode_trajectory(const json& object, std::size_t line) {
  Record rec(object, line, "trajectory");
  Trajectory traj;
  traj.task_id = rec.string_field("task_id");
  traj.rollout_idx = rec.int_field("rollout_idx");
  traj.success = rec.bool_field("success");
  if (const json* v = rec.optional("success_turn")) traj.success_turn = rec.int_value(*v, "success_turn");
  traj.target_entities = rec.optional_entities("target_entities");
  traj.final_state = rec.state(rec.require("final_state"), "final_state");
  const json& steps = rec.require("steps");
  if (!steps.is_array()) rec.fail("field 'steps' must be an array");
  traj.steps.reserve(steps.size());
  for (std::size_t k = 0; k < steps.size(); ++k) traj.steps.push_back(decode_step(steps[k], line, k));
  traj.unknown_fields = rec.unknown_fields({"type", "task_id", "rollout_idx", "success", "success_turn",
                                            "target_entities", "final_state", "steps"});
  return traj;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c) != 0; });
}

ordered_json encode_state(const StateRepr& s) {
  ordered_json out;
  if (s.is_text()) {
    out["kind"] = "text";
    out["value"] = s.as_text();
  } else {
    out["kind"] = "vector";
    out["values"] = s.as_vector();
  }
  return out;
}

ordered_json encode_entities(const std::optional<EntitySet>& set) {
  if (!set) return nullptr;
  ordered_json out = ordered_json::array();
  for (const auto& e : *set) out.push_back(e);
  return out;
}

void append_unknown(ordered_json& out, const std::map<std::string, std::string>& unknown) {
  for (const auto& [key, raw] : unknown) out[key] = ordered_json::parse(raw);
}

}  // namespace

LoadedLog load_run_log(std::istream& source) {
  LoadedLog loaded;
  bool have_header = false;
  std::string text;
  std::size_t line = 0;
  while (std::getline(source, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (is_blank(text)) continue;
    json object;
    try {
      object = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kMalformedRecord, fmt::format("invalid JSON ({})", e.what()), line);
    }
    if (!object.is_object()) throw Error(ErrorCode::kMalformedRecord, "record is not a JSON object", line);
    auto type_it = object.find("type");
    if (type_it == object.end() || !type_it->is_string()) {
      throw Error(ErrorCode::kSchemaViolation, "record lacks a string 'type' field", line);
    }
    const auto type = type_it->get<std::string>();
    if (type == "run") {
      if (have_header) throw Error(ErrorCode::kSchemaViolation, "duplicate run header", line);
      loaded.run.metadata = decode_header(object, line);
      loaded.header_line = line;
      have_header = true;
    } else if (type == "trajectory") {
      if (!have_header) throw Error(ErrorCode::kSchemaViolation, "trajectory record before run header", line);
      loaded.run.trajectories.push_back(decode_trajectory(object, line));
      loaded.trajectory_lines.push_back(line);
    } else {
      throw Error(ErrorCode::kSchemaViolation, "unknown record type '" + type + "'", line);
    }
  }
  if (!have_header) throw Error(ErrorCode::kSchemaViolation, "missing run header", std::max<std::size_t>(line, 1));
  return loaded;
}

ValidationReport validate_loaded(const LoadedLog& loaded, const StateIdentityConfig& identity) {
  ValidationReport report = validate_run(loaded.run, identity);
  for (auto& f : report.findings) {
    f.line = f.trajectory_index < 0 ? loaded.header_line
                                    : loaded.trajectory_lines.at(static_cast<std::size_t>(f.trajectory_index));
  }
  return report;
}

RunLog parse_run_log(std::istream& source, const ParseOptions& options) {
  LoadedLog loaded = load_run_log(source);
  const ValidationReport report = validate_loaded(loaded, options.identity);
  if (!report.ok()) {
    // Report the earliest offending line.
    const auto first = std::min_element(report.findings.begin(), report.findings.end(),
                                        [](const Finding& a, const Finding& b) { return a.line < b.line; });
    throw Error(first->category, first->field + ": " + first->message, first->line);
  }
  sort_trajectories(loaded.run);
  return std::move(loaded.run);
}

RunLog read_run_log(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open log file '" + path.string() + "'");
  return parse_run_log(in, options);
}

void write_run_log(std::ostream& out, const RunLog& run) {
  const RunMetadata& meta = run.metadata;
  ordered_json header;
  header["type"] = "run";
  header["run_id"] = meta.run_id;
  header["model"] = meta.model_name;
  header["environment"] = meta.environment_name;
  switch (meta.memory_mode.kind) {
    case MemoryMode::Kind::kFull: header["memory_mode"] = "full"; break;
    case MemoryMode::Kind::kNone: header["memory_mode"] = "none"; break;
    case MemoryMode::Kind::kWindowed: header["memory_mode"] = {{"windowed", meta.memory_mode.window}}; break;
  }
  header["t_max"] = meta.t_max;
  header["extra"] = ordered_json::object();
  for (const auto& [k, v] : meta.extra) header["extra"][k] = v;
  append_unknown(header, meta.unknown_fields);
  out << header.dump() << '\n';

  for (const Trajectory& traj : run.trajectories) {
    ordered_json rec;
    rec["type"] = "trajectory";
    rec["task_id"] = traj.task_id;
    rec["rollout_idx"] = traj.rollout_idx;
    rec["success"] = traj.success;
    rec["success_turn"] = traj.success_turn ? ordered_json(*traj.success_turn) : ordered_json(nullptr);
    rec["target_entities"] = encode_entities(traj.target_entities);
    rec["final_state"] = encode_state(traj.final_state);
    rec["steps"] = ordered_json::array();
    for (const Step& step : traj.steps) {
      ordered_json s;
      s["turn"] = step.turn;
      s["state"] = encode_state(step.state);
      s["action"] = step.action;
      s["action_class"] = step.action_class ? ordered_json(*step.action_class) : ordered_json(nullptr);
      s["entropy"] = step.entropy ? ordered_json(*step.entropy) : ordered_json(nullptr);
      s["observed_entities"] = encode_entities(step.observed_entities);
      s["interacted_entities"] = encode_entities(step.interacted_entities);
      rec["steps"].push_back(std::move(s));
    }
    append_unknown(rec, traj.unknown_fields);
    out << rec.dump() << '\n';
  }
}

std::string serialize_run_log(const RunLog& run) {
  std::ostringstream out;
  write_run_log(out, run);
  return out.str();
}

}  // namespace tide
