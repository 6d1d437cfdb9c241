#include "tide/reporting.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "tide/error.hpp"
#include "tide/format.hpp"
#include "tide/loops.hpp"

namespace tide {

namespace {

using ordered_json = nlohmann::ordered_json;

// full < windowed(k) by k < none
std::tuple<int, int> mode_rank(const MemoryMode& mode) {
  switch (mode.kind) {
    case MemoryMode::Kind::kFull: return {0, 0};
    case MemoryMode::Kind::kWindowed: return {1, mode.window};
    case MemoryMode::Kind::kNone: return {2, 0};
  }
  return {3, 0};
}

template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(std::clamp<int>(threads, 1, 64));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  // Rethrow the lowest-index failure so errors do not depend on scheduling.
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::optional<double> recall_lag_mean(const RunLog& run) {
  try {
    const auto dists = recall_lag(run, false);
    if (dists.front().lags.empty()) return std::nullopt;
    return dists.front().mean;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMissingAnnotation) return std::nullopt;
    throw;
  }
}

ComparisonRow compute_row(const RunLog& run, const ComparisonOptions& options) {
  const RunMetadata& meta = run.metadata;
  ComparisonRow row;
  row.model = meta.model_name;
  row.environment = meta.environment_name;
  row.memory_mode = meta.memory_mode;
  row.run_id = meta.run_id;
  row.t_max = options.t_max.value_or(meta.t_max);
  const AuvResult auv = evaluate_auv(run, row.t_max, options.bootstrap);
  row.auv = auv.auv;
  row.sr = auv.sr_final;
  row.n_tasks = auv.n_tasks;
  row.ci_low = auv.ci_low;
  row.ci_high = auv.ci_high;
  row.curve = build_success_curve(run, row.t_max);
  row.lr = loop_ratio(run, options.identity).loop_ratio;
  row.recall_lag_mean = recall_lag_mean(run);
  for (const char* metric : {"sr", "auv", "lr"}) row.provenance[metric] = {meta.run_id};
  if (row.ci_low) row.provenance["ci"] = {meta.run_id};
  if (row.recall_lag_mean) row.provenance["recall_lag_mean"] = {meta.run_id};
  return row;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_number(const std::optional<double>& v) { return v ? fmt::format("{}", *v) : "NA"; }

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string render_csv(const std::vector<std::pair<std::string, SuccessCurve>>& curves) {
  std::string out = "t";
  for (const auto& [label, curve] : curves) out += "," + csv_field(label);
  out += "\n";
  const int t_max = curves.front().second.t_max();
  for (int t = 0; t <= t_max; ++t) {
    out += std::to_string(t);
    for (const auto& [label, curve] : curves) out += "," + fixed6(curve[t]);
    out += "\n";
  }
  return out;
}

std::string render_svg(const std::vector<std::pair<std::string, SuccessCurve>>& curves) {
  static constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                             "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  constexpr double kWidth = 640.0;
  constexpr double kHeight = 400.0;
  constexpr double kLeft = 56.0;
  constexpr double kRight = 170.0;
  constexpr double kTop = 20.0;
  constexpr double kBottom = 44.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  const int t_max = curves.front().second.t_max();
  const auto x_of = [&](int t) { return kLeft + plot_w * t / t_max; };
  const auto y_of = [&](double p) { return kTop + plot_h * (1.0 - p); };

  std::string out;
  out += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\">\n",
      kWidth, kHeight, kWidth, kHeight);
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  out += fmt::format("<g stroke=\"#000000\" stroke-width=\"1\">"
                     "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\"/>"
                     "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{3:.2f}\"/></g>\n",
                     kLeft, y_of(0.0), x_of(t_max), y_of(1.0));
  out += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#000000\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double p = i / 4.0;
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{:.2f}</text>\n", kLeft - 6.0,
                       y_of(p) + 4.0, p);
  }
  const int tick_step = std::max(1, t_max / 10);
  for (int t = 0; t <= t_max; t += tick_step) {
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", x_of(t),
                       y_of(0.0) + 16.0, t);
  }
  out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">turn</text>\n", kLeft + plot_w / 2,
                     kHeight - 8.0);
  out += "</g>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& [label, curve] = curves[c];
    const char* colour = kPalette[c % std::size(kPalette)];
    std::string points;
    for (int t = 0; t <= t_max; ++t) {
      if (t > 0) points += ' ';
      points += fmt::format("{:.2f},{:.2f}", x_of(t), y_of(curve[t]));
    }
    out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"2\" points=\"{}\"/>\n", colour, points);
    const double ly = kTop + 14.0 + 16.0 * static_cast<double>(c);
    const double lx = kWidth - kRight + 12.0;
    out += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" stroke-width=\"2\"/>",
                       lx, ly - 4.0, lx + 18.0, ly - 4.0, colour);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
                       lx + 24.0, ly, xml_escape(label));
  }
  out += "</svg>\n";
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write '" + path.string() + "'");
  out << contents;
  if (!out) throw Error(ErrorCode::kInvalidArgument, "failed writing '" + path.string() + "'");
}

ordered_json row_json(const ComparisonRow& row) {
  ordered_json j;
  j["model"] = row.model;
  j["environment"] = row.environment;
  j["memory_mode"] = row.memory_mode.to_string();
  j["run_id"] = row.run_id;
  j["t_max"] = row.t_max;
  j["n_tasks"] = row.n_tasks;
  j["sr"] = row.sr;
  j["auv"] = row.auv;
  j["lr"] = row.lr;
  j["mi"] = optional_json(row.mi);
  j["ci_low"] = optional_json(row.ci_low);
  j["ci_high"] = optional_json(row.ci_high);
  j["recall_lag_mean"] = optional_json(row.recall_lag_mean);
  j["provenance"] = ordered_json::object();
  for (const auto& [metric, ids] : row.provenance) j["provenance"][metric] = ids;
  j["curve"] = row.curve.p();
  return j;
}

ordered_json radar_json(const std::string& environment, const std::vector<RadarProfile>& profiles,
                        const RadarResult& radar) {
  ordered_json j;
  j["environment"] = environment;
  j["floor"] = radar.floor;
  j["cap"] = radar.cap;
  j["profiles"] = ordered_json::array();
  for (const auto& p : profiles) {
    ordered_json pj;
    pj["model"] = p.model;
    pj["auv_norm"] = p.auv_norm;
    pj["inv_lr_norm"] = p.inv_lr_norm;
    pj["mi_norm"] = optional_json(p.mi_norm);
    j["profiles"].push_back(std::move(pj));
  }
  return j;
}

}  // namespace

ComparisonTable build_comparison(const std::vector<RunLog>& runs, const ComparisonOptions& options) {
  if (runs.empty()) throw Error(ErrorCode::kEmptyInput, "no runs to compare");

  using Key = std::tuple<std::string, std::string, std::tuple<int, int>>;
  std::map<Key, std::size_t> index_of;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& meta = runs[i].metadata;
    Key key{meta.model_name, meta.environment_name, mode_rank(meta.memory_mode)};
    auto [it, inserted] = index_of.emplace(key, i);
    if (!inserted) {
      throw Error(ErrorCode::kDuplicateRun,
                  fmt::format("runs '{}' and '{}' share model '{}', environment '{}', memory mode {}",
                              runs[it->second].metadata.run_id, meta.run_id, meta.model_name,
                              meta.environment_name, meta.memory_mode.to_string()));
    }
  }

  std::vector<ComparisonRow> rows(runs.size());
  parallel_for(runs.size(), options.threads, [&](std::size_t i) {
    try {
      rows[i] = compute_row(runs[i], options);
    } catch (const Error& e) {
      throw Error(e.code(), "run '" + runs[i].metadata.run_id + "': " + e.reason(), e.line());
    }
  });

  ComparisonTable table;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& meta = runs[i].metadata;
    if (meta.memory_mode.kind == MemoryMode::Kind::kNone) continue;
    auto it = index_of.find(Key{meta.model_name, meta.environment_name, mode_rank(MemoryMode::none())});
    if (it == index_of.end()) continue;
    const RunLog& without = runs[it->second];
    PairedRuns pair{runs[i], without, options.mi_alignment};
    MemoryIndexResult mi;
    try {
      mi = memory_index(pair, rows[i].t_max);
    } catch (const Error& e) {
      throw Error(e.code(), "runs '" + meta.run_id + "'/'" + without.metadata.run_id + "': " + e.reason());
    }
    rows[i].mi = mi.mi;
    rows[i].provenance["mi"] = {meta.run_id, without.metadata.run_id};
    if (!mi.excluded_with.empty() || !mi.excluded_without.empty()) {
      table.warnings.push_back(fmt::format("MI for '{}' vs '{}' excludes {} task(s) with memory and {} without",
                                           meta.run_id, without.metadata.run_id, mi.excluded_with.size(),
                                           mi.excluded_without.size()));
    }
  }

  std::sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    return std::make_tuple(a.model, a.environment, mode_rank(a.memory_mode)) <
           std::make_tuple(b.model, b.environment, mode_rank(b.memory_mode));
  });
  table.rows = std::move(rows);
  return table;
}

std::vector<double> normalize_axis(const std::vector<double>& values, double floor, double cap) {
  std::vector<double> out;
  out.reserve(values.size());
  if (values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  const double min = *lo;
  const double max = *hi;
  for (double v : values) {
    if (max == min) {
      out.push_back((floor + cap) / 2.0);
    } else {
      out.push_back(floor + (v - min) / (max - min) * (cap - floor));
    }
  }
  return out;
}

RadarResult radar_normalize(const ComparisonTable& table, double floor, double cap) {
  if (!(floor < cap)) throw Error(ErrorCode::kInvalidArgument, fmt::format("radar floor {} must be below cap {}", floor, cap));
  RadarResult result;
  result.floor = floor;
  result.cap = cap;

  // environment -> model -> primary row
  std::map<std::string, std::map<std::string, const ComparisonRow*>> primary;
  for (const auto& row : table.rows) {
    const ComparisonRow*& slot = primary[row.environment][row.model];
    if (slot == nullptr || mode_rank(row.memory_mode) < mode_rank(slot->memory_mode)) slot = &row;
  }

  for (const auto& [environment, models] : primary) {
    if (models.size() < 2) {
      result.warnings.push_back(
          fmt::format("SingleModel: environment '{}' has one model; radar axes are centred", environment));
    }
    std::vector<const ComparisonRow*> rows;
    std::vector<double> auv;
    std::vector<double> inv_lr;
    std::vector<double> mi;
    for (const auto& [model, row] : models) {
      rows.push_back(row);
      auv.push_back(row->auv);
      inv_lr.push_back(1.0 - row->lr);
      if (row->mi) mi.push_back(*row->mi);
    }
    const auto auv_norm = normalize_axis(auv, floor, cap);
    const auto lr_norm = normalize_axis(inv_lr, floor, cap);
    const auto mi_norm = normalize_axis(mi, floor, cap);
    auto& profiles = result.by_environment[environment];
    std::size_t mi_pos = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      RadarProfile p;
      p.model = rows[i]->model;
      p.environment = environment;
      p.auv_norm = auv_norm[i];
      p.inv_lr_norm = lr_norm[i];
      if (rows[i]->mi) p.mi_norm = mi_norm[mi_pos++];
      profiles.push_back(std::move(p));
    }
  }
  return result;
}

std::string render_curve(const std::vector<std::pair<std::string, SuccessCurve>>& curves, CurveFormat format) {
  if (curves.empty()) throw Error(ErrorCode::kEmptyInput, "no curves to render");
  const int t_max = curves.front().second.t_max();
  for (const auto& [label, curve] : curves) {
    if (curve.t_max() != t_max) {
      throw Error(ErrorCode::kMismatchedHorizons,
                  fmt::format("curve '{}' has t_max {}, expected {}", label, curve.t_max(), t_max));
    }
  }
  return format == CurveFormat::kCsv ? render_csv(curves) : render_svg(curves);
}

std::vector<std::pair<std::string, SuccessCurve>> environment_curves(const ComparisonTable& table,
                                                                     const std::string& environment) {
  std::vector<std::pair<std::string, SuccessCurve>> out;
  for (const auto& row : table.rows) {
    if (row.environment != environment) continue;
    std::string label = row.model;
    if (row.memory_mode.kind != MemoryMode::Kind::kFull) label += "[" + row.memory_mode.to_string() + "]";
    out.emplace_back(std::move(label), row.curve);
  }
  return out;
}

std::string sanitize_file_stem(const std::string& name) {
  std::string out;
  for (char c : name) {
    const auto uc = static_cast<unsigned char>(c);
    out += (std::isalnum(uc) || c == '-' || c == '_' || c == '.') ? c : '_';
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

void write_report_bundle(const std::filesystem::path& dir, const ComparisonTable& table, const RadarResult& radar,
                         const std::string& config_echo_json) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "curves");
  fs::create_directories(dir / "radar");

  std::set<std::string> environments;
  for (const auto& row : table.rows) environments.insert(row.environment);
  std::set<std::string> stems;
  for (const auto& env : environments) {
    if (!stems.insert(sanitize_file_stem(env)).second) {
      throw Error(ErrorCode::kInvalidArgument, "environment names collide after sanitising: '" + env + "'");
    }
  }

  ordered_json report;
  report["schema_version"] = 1;
  report["config"] = ordered_json::parse(config_echo_json);
  report["rows"] = ordered_json::array();
  for (const auto& row : table.rows) report["rows"].push_back(row_json(row));
  report["radar"] = ordered_json::object();
  for (const auto& [env, profiles] : radar.by_environment) report["radar"][env] = radar_json(env, profiles, radar);
  report["warnings"] = table.warnings;
  for (const auto& w : radar.warnings) report["warnings"].push_back(w);
  write_file(dir / "report.json", report.dump(2) + "\n");

  std::string csv = "model,environment,memory_mode,run_id,t_max,n_tasks,sr,auv,ci_low,ci_high,lr,mi,recall_lag_mean\n";
  for (const auto& row : table.rows) {
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(row.model), csv_field(row.environment),
                       row.memory_mode.to_string(), csv_field(row.run_id), row.t_max, row.n_tasks, row.sr, row.auv,
                       csv_number(row.ci_low), csv_number(row.ci_high), row.lr, csv_number(row.mi),
                       csv_number(row.recall_lag_mean));
  }
  write_file(dir / "comparison.csv", csv);

  for (const auto& env : environments) {
    const auto curves = environment_curves(table, env);
    const std::string stem = sanitize_file_stem(env);
    write_file(dir / "curves" / (stem + ".csv"), render_curve(curves, CurveFormat::kCsv));
    write_file(dir / "curves" / (stem + ".svg"), render_curve(curves, CurveFormat::kSvg));
  }
  for (const auto& [env, profiles] : radar.by_environment) {
    write_file(dir / "radar" / (sanitize_file_stem(env) + ".json"), radar_json(env, profiles, radar).dump(2) + "\n");
  }
}

}  // namespace tide
