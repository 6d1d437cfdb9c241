#pragma once

// Cross-run aggregation: comparison tables, radar normalisation, curve
// exports and the on-disk report bundle.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tide/auv.hpp"
#include "tide/memory.hpp"
#include "tide/state_identity.hpp"
#include "tide/trajectory.hpp"

namespace tide {

struct ComparisonOptions {
  std::optional<int> t_max;  // overrides every run header when set
  StateIdentityConfig identity = StateIdentityConfig::exact();
  std::optional<BootstrapOptions> bootstrap;
  Alignment mi_alignment = Alignment::kIntersect;
  int threads = 1;
};

struct ComparisonRow {
  std::string model;
  std::string environment;
  MemoryMode memory_mode;
  std::string run_id;
  int t_max = 0;
  int n_tasks = 0;
  double sr = 0.0;
  double auv = 0.0;
  double lr = 0.0;
  std::optional<double> mi;
  std::optional<double> ci_low;
  std::optional<double> ci_high;
  std::optional<double> recall_lag_mean;
  // metric name -> run_ids it was computed from
  std::map<std::string, std::vector<std::string>> provenance;
  SuccessCurve curve{{0.0, 0.0}, 1};
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;  // ordered by (model, environment, memory_mode)
  std::vector<std::string> warnings;
};

/// Per-run SR, AUV and LR; MI on every row with memory whose (model,
/// environment) also has a memory_mode "none" run. Throws kDuplicateRun when a
/// (model, environment, memory_mode) combination repeats; metric errors are
/// rethrown with the offending run_id prepended.
ComparisonTable build_comparison(const std::vector<RunLog>& runs, const ComparisonOptions& options = {});

struct RadarProfile {
  std::string model;
  std::string environment;
  double auv_norm = 0.0;
  double inv_lr_norm = 0.0;
  std::optional<double> mi_norm;
};

struct RadarResult {
  double floor = 0.05;
  double cap = 0.95;
  std::map<std::string, std::vector<RadarProfile>> by_environment;
  std::vector<std::string> warnings;
};

/// Min-max scaling per environment and axis across models (LR inverted to
/// 1 - LR first; an axis with max == min maps to 0.5), then an affine map onto
/// [floor, cap]. Each model contributes its primary row: full memory, else
/// the smallest window, else no memory.
RadarResult radar_normalize(const ComparisonTable& table, double floor = 0.05, double cap = 0.95);

/// Min-max then affine mapping of one axis; exposed for testing.
std::vector<double> normalize_axis(const std::vector<double>& values, double floor, double cap);

enum class CurveFormat { kCsv, kSvg };

std::string render_curve(const std::vector<std::pair<std::string, SuccessCurve>>& curves, CurveFormat format);

/// Success curves of every row of one environment, labelled by model
/// (suffixed with "[mode]" for rows without full memory).
std::vector<std::pair<std::string, SuccessCurve>> environment_curves(const ComparisonTable& table,
                                                                     const std::string& environment);

/// Writes report.json, comparison.csv, curves/<env>.{csv,svg} and
/// radar/<env>.json under `dir`. `config_echo` is embedded verbatim (as JSON
/// text) in report.json.
void write_report_bundle(const std::filesystem::path& dir, const ComparisonTable& table, const RadarResult& radar,
                         const std::string& config_echo_json);

std::string sanitize_file_stem(const std::string& name);

}  // namespace tide
