#include "tide/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "tide/auv.hpp"
#include "tide/error.hpp"
#include "tide/format.hpp"
#include "tide/log_io.hpp"
#include "tide/loops.hpp"
#include "tide/memory.hpp"
#include "tide/reporting.hpp"
#include "tide/synth.hpp"

namespace tide::cli {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

const std::string kSchemaFooter = fmt::format(
    "Input logs: line-delimited JSON, run-log schema version {}.\n"
    "  line 1: {{\"type\":\"run\",\"run_id\",\"model\",\"environment\",\"memory_mode\",\"t_max\",\"extra\"}}\n"
    "  then:   {{\"type\":\"trajectory\",\"task_id\",\"rollout_idx\",\"success\",\"success_turn\",\n"
    "           \"target_entities\",\"final_state\",\"steps\"}}",
    kLogSchemaVersion);

// Raised for bad input files so they map to exit code 1.
struct InputError {
  std::string message;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err, true);
  sink->set_pattern("tide: %l: %v");
  auto logger = std::make_shared<spdlog::logger>("tide", sink);
  spdlog::level::level_enum level = spdlog::level::warn;
  if (const char* env = std::getenv("TIDE_DIAG_LOG")) {
    const std::string v = env;
    if (v == "error") level = spdlog::level::err;
    else if (v == "warn") level = spdlog::level::warn;
    else if (v == "info") level = spdlog::level::info;
    else if (v == "debug") level = spdlog::level::debug;
  }
  logger->set_level(level);
  return logger;
}

RunLog load_log(const std::string& path, const StateIdentityConfig& identity, spdlog::logger& log) {
  log.debug("reading {}", path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError{"cannot open '" + path + "'"};
  try {
    return parse_run_log(in, ParseOptions{identity});
  } catch (const Error& e) {
    throw InputError{path + ": " + e.what()};
  }
}

StateIdentityConfig identity_flag(const std::string& text) {
  try {
    return StateIdentityConfig::parse(text);
  } catch (const Error& e) {
    throw CLI::ValidationError("--state-identity", e.reason());
  }
}

int resolve_t_max(const std::optional<int>& flag, const RunLog& run) { return flag.value_or(run.metadata.t_max); }

// ---------------------------------------------------------------------------

struct ValidateArgs {
  std::vector<std::string> logs;
  std::string identity = "exact";
};

int cmd_validate(const ValidateArgs& a, std::ostream& out, spdlog::logger& log) {
  const StateIdentityConfig identity = identity_flag(a.identity);
  bool any = false;
  for (const auto& path : a.logs) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      out << path << ": cannot open file\n";
      any = true;
      continue;
    }
    try {
      const LoadedLog loaded = load_run_log(in);
      const ValidationReport report = validate_loaded(loaded, identity);
      for (const auto& f : report.findings) {
        out << fmt::format("{}:{}: {}: {}: {}\n", path, f.line, error_code_name(f.category), f.field, f.message);
      }
      if (report.ok()) {
        out << fmt::format("{}: OK ({} trajectories)\n", path, loaded.run.trajectories.size());
      } else {
        any = true;
      }
    } catch (const Error& e) {
      out << fmt::format("{}:{}: {}: {}\n", path, e.line(), error_code_name(e.code()), e.reason());
      any = true;
    }
  }
  log.info("validated {} file(s)", a.logs.size());
  return any ? kExitBadInput : kExitOk;
}

struct AuvArgs {
  std::string log;
  std::optional<int> t_max;
  std::optional<double> ci;
  int resamples = 1000;
  std::uint64_t seed = 0;
  bool json = false;
};

int cmd_auv(const AuvArgs& a, std::ostream& out, spdlog::logger& log) {
  const RunLog run = load_log(a.log, StateIdentityConfig::exact(), log);
  const int t_max = resolve_t_max(a.t_max, run);
  std::optional<BootstrapOptions> boot;
  if (a.ci) boot = BootstrapOptions{*a.ci, a.resamples, a.seed};
  const AuvResult r = evaluate_auv(run, t_max, boot);
  if (a.json) {
    ordered_json j;
    j["run_id"] = run.metadata.run_id;
    j["t_max"] = t_max;
    j["n_tasks"] = r.n_tasks;
    j["auv"] = r.auv;
    j["sr"] = r.sr_final;
    j["ci_low"] = r.ci_low ? ordered_json(*r.ci_low) : ordered_json(nullptr);
    j["ci_high"] = r.ci_high ? ordered_json(*r.ci_high) : ordered_json(nullptr);
    j["per_task_scores"] = r.per_task_scores;
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << "AUV " << percent_one_decimal(r.auv) << "  SR " << percent_one_decimal(r.sr_final) << "\n";
  if (r.ci_low) {
    out << "CI " << percent_one_decimal(*a.ci) << "% [" << percent_one_decimal(*r.ci_low) << ", "
        << percent_one_decimal(*r.ci_high) << "]\n";
  }
  return kExitOk;
}

struct LoopsArgs {
  std::string log;
  std::string identity = "exact";
  std::string classes;
  bool by_class = false;
  bool entropy = false;
  bool json = false;
};

int cmd_loops(const LoopsArgs& a, std::ostream& out, spdlog::logger& log) {
  const StateIdentityConfig identity = identity_flag(a.identity);
  ActionClassifier classifier;
  if (!a.classes.empty()) {
    std::ifstream in(a.classes);
    if (!in) throw InputError{"cannot open '" + a.classes + "'"};
    try {
      classifier = ActionClassifier::from_rules(in);
    } catch (const Error& e) {
      throw InputError{a.classes + ": " + e.what()};
    }
  }
  const RunLog run = load_log(a.log, identity, log);
  const LoopReport report = loop_ratio(run, identity);
  const bool want_classes = a.by_class || !a.classes.empty();
  std::optional<ActionClassRatios> classes;
  if (want_classes) classes = action_class_loop_ratio(run, identity, classifier);
  std::optional<EntropySplit> split;
  if (a.entropy) split = entropy_split(run, identity);

  if (a.json) {
    ordered_json j;
    j["run_id"] = run.metadata.run_id;
    j["state_identity"] = identity.to_string();
    j["loop_ratio"] = report.loop_ratio;
    j["loop_actions"] = report.loop_action_count;
    j["total_actions"] = report.total_actions;
    if (classes) {
      j["no_loops"] = classes->no_loops;
      j["class_ratios"] = ordered_json::object();
      for (const auto& [name, ratio] : classes->ratios) j["class_ratios"][name] = ratio;
    }
    if (split) {
      j["entropy"] = {{"mean_loop", split->mean_loop ? ordered_json(*split->mean_loop) : ordered_json(nullptr)},
                      {"mean_nonloop", split->mean_nonloop ? ordered_json(*split->mean_nonloop) : ordered_json(nullptr)},
                      {"n_loop", split->n_loop},
                      {"n_nonloop", split->n_nonloop}};
    }
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << fmt::format("LR {}  loop_actions {}  total_actions {}\n", percent_one_decimal(report.loop_ratio),
                     report.loop_action_count, report.total_actions);
  if (classes) {
    if (classes->no_loops) out << "classes: no loop actions\n";
    for (const auto& [name, ratio] : classes->ratios) {
      out << fmt::format("class {} {}\n", name, percent_one_decimal(ratio));
    }
  }
  if (split) {
    const auto show = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("NA"); };
    out << fmt::format("entropy loop {} (n={})  nonloop {} (n={})\n", show(split->mean_loop), split->n_loop,
                       show(split->mean_nonloop), split->n_nonloop);
  }
  return kExitOk;
}

struct MiArgs {
  std::string with_log;
  std::string without_log;
  std::string align = "strict";
  std::optional<int> t_max;
  bool json = false;
};

int cmd_memory_mi(const MiArgs& a, std::ostream& out, spdlog::logger& log) {
  Alignment alignment = Alignment::kStrict;
  try {
    alignment = parse_alignment(a.align);
  } catch (const Error& e) {
    throw CLI::ValidationError("--align", e.reason());
  }
  PairedRuns pair{load_log(a.with_log, StateIdentityConfig::exact(), log),
                  load_log(a.without_log, StateIdentityConfig::exact(), log), alignment};
  int t_max = 0;
  if (a.t_max) {
    t_max = *a.t_max;
  } else {
    t_max = pair.with_memory.metadata.t_max;
    if (pair.without_memory.metadata.t_max != t_max) {
      throw InputError{fmt::format("log headers disagree on t_max ({} vs {}); pass --t-max", t_max,
                                   pair.without_memory.metadata.t_max)};
    }
  }
  const MemoryIndexResult r = memory_index(pair, t_max);
  for (const auto& task : r.excluded_with) log.warn("task '{}' only in the with-memory run; excluded", task);
  for (const auto& task : r.excluded_without) log.warn("task '{}' only in the without-memory run; excluded", task);
  if (a.json) {
    ordered_json j;
    j["mi"] = r.mi;
    j["auv_with"] = r.auv_with;
    j["auv_without"] = r.auv_without;
    j["n_common_tasks"] = r.n_common_tasks;
    j["t_max"] = t_max;
    j["excluded_with"] = r.excluded_with;
    j["excluded_without"] = r.excluded_without;
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  out << "MI " << percent_one_decimal(r.mi) << "\n";
  out << fmt::format("AUV_with {}  AUV_without {}  tasks {}\n", percent_one_decimal(r.auv_with),
                     percent_one_decimal(r.auv_without), r.n_common_tasks);
  return kExitOk;
}

struct LagArgs {
  std::string log;
  bool split = false;
  bool json = false;
};

int cmd_memory_lag(const LagArgs& a, std::ostream& out, spdlog::logger& log) {
  const RunLog run = load_log(a.log, StateIdentityConfig::exact(), log);
  const auto dists = recall_lag(run, a.split);
  if (a.json) {
    ordered_json j = ordered_json::array();
    for (const auto& d : dists) {
      ordered_json dj;
      dj["cohort"] = cohort_name(d.cohort);
      dj["n"] = d.lags.size();
      dj["mean"] = d.lags.empty() ? ordered_json(nullptr) : ordered_json(d.mean);
      dj["lags"] = d.lags;
      j.push_back(std::move(dj));
    }
    out << j.dump(2) << "\n";
    return kExitOk;
  }
  for (const auto& d : dists) {
    out << fmt::format("cohort {} n {} mean {}\n", cohort_name(d.cohort), d.lags.size(),
                       d.lags.empty() ? std::string("NA") : fmt::format("{:.3f}", d.mean));
    // unit-width histogram
    std::map<int, std::size_t> bins;
    for (int lag : d.lags) ++bins[lag];
    for (const auto& [lag, count] : bins) out << fmt::format("  lag {} count {}\n", lag, count);
  }
  return kExitOk;
}

struct CompareArgs {
  std::vector<std::string> logs;
  std::string out_dir;
  double radar_floor = 0.05;
  double radar_cap = 0.95;
  std::optional<int> t_max;
  std::string identity = "exact";
  std::string align = "intersect";
  std::optional<double> ci;
  int resamples = 1000;
  std::uint64_t seed = 0;
  int threads = 1;
};

int cmd_compare(const CompareArgs& a, std::ostream& out, spdlog::logger& log) {
  ComparisonOptions options;
  options.t_max = a.t_max;
  options.identity = identity_flag(a.identity);
  try {
    options.mi_alignment = parse_alignment(a.align);
  } catch (const Error& e) {
    throw CLI::ValidationError("--align", e.reason());
  }
  if (a.ci) options.bootstrap = BootstrapOptions{*a.ci, a.resamples, a.seed};
  options.threads = a.threads;
  if (!(a.radar_floor < a.radar_cap)) throw CLI::ValidationError("--radar-floor", "must be below --radar-cap");

  std::vector<RunLog> runs;
  for (const auto& path : a.logs) runs.push_back(load_log(path, options.identity, log));
  ComparisonTable table;
  try {
    table = build_comparison(runs, options);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kDuplicateRun) throw InputError{e.what()};
    throw;
  }
  const RadarResult radar = radar_normalize(table, a.radar_floor, a.radar_cap);
  for (const auto& w : table.warnings) log.warn("{}", w);
  for (const auto& w : radar.warnings) log.warn("{}", w);

  // Thread count is deliberately absent: outputs must not depend on it.
  ordered_json config;
  config["command"] = "compare";
  config["schema_version"] = kLogSchemaVersion;
  config["inputs"] = a.logs;
  config["t_max"] = a.t_max ? ordered_json(*a.t_max) : ordered_json(nullptr);
  config["state_identity"] = options.identity.to_string();
  config["mi_alignment"] = a.align;
  config["radar_floor"] = a.radar_floor;
  config["radar_cap"] = a.radar_cap;
  if (options.bootstrap) {
    config["bootstrap"] = {{"confidence", options.bootstrap->confidence},
                           {"resamples", options.bootstrap->resamples},
                           {"seed", options.bootstrap->seed}};
  } else {
    config["bootstrap"] = nullptr;
  }
  write_report_bundle(a.out_dir, table, radar, config.dump());

  out << fmt::format("{:<24} {:<16} {:<12} {:>6} {:>6} {:>6} {:>6}\n", "model", "environment", "memory", "SR", "AUV",
                     "LR", "MI");
  for (const auto& row : table.rows) {
    out << fmt::format("{:<24} {:<16} {:<12} {:>6} {:>6} {:>6} {:>6}\n", row.model, row.environment,
                       row.memory_mode.to_string(), percent_one_decimal(row.sr), percent_one_decimal(row.auv),
                       percent_one_decimal(row.lr), row.mi ? percent_one_decimal(*row.mi) : std::string("NA"));
  }
  out << "report written to " << a.out_dir << "\n";
  return kExitOk;
}

struct SynthArgs {
  std::string spec;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, spdlog::logger& log) {
  std::ifstream in(a.spec);
  if (!in) throw InputError{"cannot open '" + a.spec + "'"};
  SynthSpec spec;
  try {
    spec = parse_synth_spec(in);
  } catch (const Error& e) {
    throw InputError{a.spec + ": " + e.what()};
  }
  const RunLog run = generate_synthetic_run(spec);
  std::ofstream file(a.out, std::ios::binary | std::ios::trunc);
  if (!file) throw InputError{"cannot write '" + a.out + "'"};
  write_run_log(file, run);
  log.info("wrote {} trajectories", run.trajectories.size());
  out << fmt::format("wrote {} trajectories to {}\n", run.trajectories.size(), a.out);
  return kExitOk;
}

void add_identity_option(CLI::App* app, std::string& target) {
  app->add_option("--state-identity", target, "State identity: exact | cosine:THETA (THETA in (0,1])")
      ->capture_default_str();
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::istream& /*in*/, std::ostream& out, std::ostream& err) {
  auto logger = make_logger(err);

  CLI::App app{"Trajectory diagnostics for recorded agent runs (AUV, loop ratio, memory index)", "tide"};
  app.require_subcommand(1);
  app.footer(kSchemaFooter);

  ValidateArgs validate_args;
  auto* validate = app.add_subcommand("validate", "Check run logs against the schema and invariants");
  validate->add_option("logs", validate_args.logs, "Run log files")->required();
  add_identity_option(validate, validate_args.identity);
  validate->footer(kSchemaFooter);

  AuvArgs auv_args;
  auto* auv = app.add_subcommand("auv", "Area under the cumulative success curve and final success rate");
  auv->add_option("log", auv_args.log, "Run log file")->required();
  auv->add_option("--t-max", auv_args.t_max, "Evaluation horizon in turns (default: log header t_max)")
      ->check(CLI::PositiveNumber);
  auto* ci = auv->add_option("--ci", auv_args.ci, "Bootstrap confidence level in (0,1)")->check(CLI::Range(0.0, 1.0));
  auv->add_option("--resamples", auv_args.resamples, "Bootstrap resamples (>= 100)")
      ->check(CLI::Range(100, 100000000))
      ->needs(ci)
      ->capture_default_str();
  auv->add_option("--seed", auv_args.seed, "Bootstrap seed")->needs(ci)->capture_default_str();
  auv->add_flag("--json", auv_args.json, "Full-precision JSON output");
  auv->footer(kSchemaFooter);

  LoopsArgs loops_args;
  auto* loops = app.add_subcommand("loops", "Loop ratio, loop action classes and entropy split");
  loops->add_option("log", loops_args.log, "Run log file")->required();
  add_identity_option(loops, loops_args.identity);
  loops->add_option("--classes", loops_args.classes,
                    "Action class rules, one per line: NAME prefix:TEXT | NAME regex:PATTERN")
      ->check(CLI::ExistingFile);
  loops->add_flag("--by-class", loops_args.by_class, "Report loop action classes with the default classifier");
  loops->add_flag("--entropy", loops_args.entropy, "Mean action entropy on loop vs non-loop steps");
  loops->add_flag("--json", loops_args.json, "Full-precision JSON output");
  loops->footer(kSchemaFooter);

  auto* memory = app.add_subcommand("memory", "Memory diagnostics");
  memory->require_subcommand(1);
  MiArgs mi_args;
  auto* mi = memory->add_subcommand("mi", "Memory index: AUV with memory minus AUV without");
  mi->add_option("--with", mi_args.with_log, "Run log with full memory")->required();
  mi->add_option("--without", mi_args.without_log, "Run log without memory")->required();
  mi->add_option("--align", mi_args.align, "Task alignment: strict | intersect")
      ->check(CLI::IsMember({"strict", "intersect"}))
      ->capture_default_str();
  mi->add_option("--t-max", mi_args.t_max, "Evaluation horizon (default: shared log header t_max)")
      ->check(CLI::PositiveNumber);
  mi->add_flag("--json", mi_args.json, "Full-precision JSON output");
  mi->footer(kSchemaFooter);
  LagArgs lag_args;
  auto* lag = memory->add_subcommand("lag", "Recall lag between observing and using a target entity");
  lag->add_option("log", lag_args.log, "Annotated run log file")->required();
  lag->add_flag("--split", lag_args.split, "Also report success and fail cohorts");
  lag->add_flag("--json", lag_args.json, "Full-precision JSON output");
  lag->footer(kSchemaFooter);

  CompareArgs compare_args;
  auto* compare = app.add_subcommand("compare", "Cross-run comparison report bundle");
  compare->add_option("logs", compare_args.logs, "Run log files")->required();
  compare->add_option("--out", compare_args.out_dir, "Output directory")->required();
  compare->add_option("--radar-floor", compare_args.radar_floor, "Radar lower bound")->capture_default_str();
  compare->add_option("--radar-cap", compare_args.radar_cap, "Radar upper bound")->capture_default_str();
  compare->add_option("--t-max", compare_args.t_max, "Horizon for every run (default: each log header)")
      ->check(CLI::PositiveNumber);
  add_identity_option(compare, compare_args.identity);
  compare->add_option("--align", compare_args.align, "MI task alignment: strict | intersect")
      ->check(CLI::IsMember({"strict", "intersect"}))
      ->capture_default_str();
  auto* cci = compare->add_option("--ci", compare_args.ci, "Bootstrap confidence level in (0,1)")
                  ->check(CLI::Range(0.0, 1.0));
  compare->add_option("--resamples", compare_args.resamples, "Bootstrap resamples (>= 100)")
      ->check(CLI::Range(100, 100000000))
      ->needs(cci)
      ->capture_default_str();
  compare->add_option("--seed", compare_args.seed, "Bootstrap seed")->needs(cci)->capture_default_str();
  compare->add_option("--threads", compare_args.threads, "Worker threads")->check(CLI::Range(1, 64))->capture_default_str();
  compare->footer(kSchemaFooter);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic run log from a JSON spec");
  synth->add_option("--spec", synth_args.spec, "Synthetic spec (JSON)")->required()->check(CLI::ExistingFile);
  synth->add_option("--out", synth_args.out, "Output log path")->required();
  synth->footer(kSchemaFooter);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(validate_args, out, *logger);
    if (auv->parsed()) return cmd_auv(auv_args, out, *logger);
    if (loops->parsed()) return cmd_loops(loops_args, out, *logger);
    if (mi->parsed()) return cmd_memory_mi(mi_args, out, *logger);
    if (lag->parsed()) return cmd_memory_lag(lag_args, out, *logger);
    if (compare->parsed()) return cmd_compare(compare_args, out, *logger);
    if (synth->parsed()) return cmd_synth(synth_args, out, *logger);
  } catch (const CLI::ValidationError& e) {
    err << "tide: " << e.what() << "\n";
    return kExitUsage;
  } catch (const InputError& e) {
    err << "tide: " << e.message << "\n";
    return kExitBadInput;
  } catch (const Error& e) {
    err << "tide: " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidArgument ? kExitUsage : kExitInternal;
  } catch (const std::exception& e) {
    err << "tide: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

}  // namespace tide::cli
