#include "deepclaw/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "deepclaw/image_io.hpp"

namespace deepclaw {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double iou(const PixelMask& a, const PixelMask& b) {
  if (a.width != b.width || a.height != b.height) {
    raise(ErrorCode::InvalidArgument, "iou: mask dimensions differ");
  }
  if (a.pixels.empty() && b.pixels.empty()) return 1.0;
  size_t inter = 0;
  size_t i = 0, j = 0;
  while (i < a.pixels.size() && j < b.pixels.size()) {
    if (a.pixels[i] == b.pixels[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (a.pixels[i] < b.pixels[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const size_t uni = a.pixels.size() + b.pixels.size() - inter;
  return double(inter) / double(uni);
}

double average_precision(std::vector<Detection> detections, int truths, double iou_threshold) {
  if (truths <= 0) {
    return detections.empty() ? 1.0 : 0.0;
  }
  std::stable_sort(detections.begin(), detections.end(),
                   [](const Detection& a, const Detection& b) {
                     return a.confidence > b.confidence;
                   });

  std::vector<bool> truth_used(size_t(truths) + detections.size(), false);
  std::vector<double> precision, recall;
  int tp = 0;
  int seen = 0;
  for (const auto& det : detections) {
    ++seen;
    const bool valid_truth = det.truth_id >= 0 && det.truth_id < int(truth_used.size());
    if (det.label_correct && det.iou >= iou_threshold && valid_truth &&
        !truth_used[size_t(det.truth_id)]) {
      truth_used[size_t(det.truth_id)] = true;
      ++tp;
    }
    precision.push_back(double(tp) / double(seen));
    recall.push_back(double(tp) / double(truths));
  }

  // all-points interpolation: integrate max-precision-at-recall>=r over
  // recall steps
  double ap = 0.0;
  double prev_recall = 0.0;
  for (size_t i = 0; i < recall.size(); ++i) {
    if (recall[i] > prev_recall) {
      double p_max = 0.0;
      for (size_t k = i; k < precision.size(); ++k) {
        p_max = std::max(p_max, precision[k]);
      }
      ap += (recall[i] - prev_recall) * p_max;
      prev_recall = recall[i];
    }
  }
  return ap;
}

std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> points) {
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  points.erase(std::unique(points.begin(), points.end(),
                           [](const auto& a, const auto& b) {
                             return a.x() == b.x() && a.y() == b.y();
                           }),
               points.end());
  const size_t n = points.size();
  if (n < 3) return points;

  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };

  std::vector<Eigen::Vector2d> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {  // lower
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  for (size_t i = n - 1, t = k + 1; i-- > 0;) {  // upper
    while (k >= t && cross(hull[k - 2], hull[k - 1], points[i]) <= 0.0) --k;
    hull[k++] = points[i];
  }
  hull.resize(k - 1);
  return hull;
}

double min_area_rect_area(const std::vector<Eigen::Vector2d>& points) {
  const auto hull = convex_hull(points);
  if (hull.size() < 3) return 0.0;

  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < hull.size(); ++i) {
    const Eigen::Vector2d edge = hull[(i + 1) % hull.size()] - hull[i];
    const double len = edge.norm();
    if (len < 1e-15) continue;
    const Eigen::Vector2d dir = edge / len;
    const Eigen::Vector2d normal{-dir.y(), dir.x()};
    double lo_d = std::numeric_limits<double>::infinity(), hi_d = -lo_d;
    double lo_n = lo_d, hi_n = -lo_d;
    for (const auto& p : hull) {
      const double d = p.dot(dir);
      const double nn = p.dot(normal);
      lo_d = std::min(lo_d, d);
      hi_d = std::max(hi_d, d);
      lo_n = std::min(lo_n, nn);
      hi_n = std::max(hi_n, nn);
    }
    best = std::min(best, (hi_d - lo_d) * (hi_n - lo_n));
  }
  return best;
}

JigsawScore jigsaw_score(const std::vector<std::vector<Eigen::Vector2d>>& placed_pieces,
                         double standard_area) {
  if (placed_pieces.empty()) {
    raise(ErrorCode::InvalidArgument, "jigsaw_score: no placed pieces");
  }
  std::vector<Eigen::Vector2d> all;
  for (const auto& piece : placed_pieces) {
    all.insert(all.end(), piece.begin(), piece.end());
  }
  JigsawScore out;
  out.standard_area = standard_area;
  out.actual_area = min_area_rect_area(all);
  if (out.actual_area <= 0.0) {
    raise(ErrorCode::InvalidArgument, "jigsaw_score: degenerate piece geometry");
  }
  out.score = standard_area / out.actual_area;
  out.degenerate_overlap = out.actual_area < standard_area;
  return out;
}

double path_length(std::span<const Eigen::Vector3d> waypoints) {
  if (waypoints.size() < 2) {
    raise(ErrorCode::InvalidArgument, "path_length: need at least 2 waypoints");
  }
  double total = 0.0;
  for (size_t i = 1; i < waypoints.size(); ++i) {
    total += (waypoints[i] - waypoints[i - 1]).norm();
  }
  return total;
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

json subtask_to_json(const SubTaskRecord& r) {
  json stages = json::array();
  for (const auto& s : r.stages) {
    stages.push_back({{"name", s.name}, {"duration_s", s.duration_s}});
  }
  json j;
  j["repetition"] = r.repetition;
  j["index"] = r.index;
  j["stages"] = stages;
  j["outcome"] = r.outcome;
  j["grasp_attempts"] = r.grasp_attempts;
  j["grasp_failures"] = r.grasp_failures;
  j["t_sub"] = r.t_sub;
  j["path_length_m"] = r.path_length_m;
  j["extra"] = r.extra;
  j["frames"] = r.frame_refs;
  return j;
}

SubTaskRecord subtask_from_json(const json& j) {
  SubTaskRecord r;
  r.repetition = j.at("repetition").get<int>();
  r.index = j.at("index").get<int>();
  for (const auto& s : j.at("stages")) {
    r.stages.push_back({s.at("name").get<std::string>(), s.at("duration_s").get<double>()});
  }
  r.outcome = j.at("outcome").get<std::string>();
  r.grasp_attempts = j.at("grasp_attempts").get<int>();
  r.grasp_failures = j.at("grasp_failures").get<int>();
  r.t_sub = j.at("t_sub").get<double>();
  r.path_length_m = j.at("path_length_m").get<double>();
  r.extra = j.at("extra");
  for (const auto& f : j.at("frames")) {
    r.frame_refs.push_back(f.get<std::string>());
  }
  return r;
}

namespace {

struct Stats {
  double mean = 0.0;
  double std_dev = 0.0;
  int n = 0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  s.n = int(xs.size());
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / double(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.std_dev = std::sqrt(ss / double(xs.size() - 1));
  }
  return s;
}

}  // namespace

RepetitionSummary summarize_repetition(TaskKind task, int repetition,
                                       std::span<const SubTaskRecord> records) {
  RepetitionSummary rep;
  rep.repetition = repetition;

  std::vector<double> t_subs;
  double motion_total = 0.0;
  int failures = 0;
  for (const auto& r : records) {
    t_subs.push_back(r.t_sub);
    motion_total += r.t_sub;
    failures += r.grasp_failures;
  }
  const Stats t = stats_of(t_subs);
  rep.metrics["subtasks"] = double(records.size());
  rep.metrics["t_sub_mean"] = t.mean;
  rep.metrics["motion_total_s"] = motion_total;
  rep.metrics["grasp_failures"] = double(failures);

  switch (task) {
    case TaskKind::TicTacToe: {
      rep.outcome = "incomplete";
      for (const auto& r : records) {
        if (r.extra.contains("game_result")) {
          rep.outcome = r.extra["game_result"].get<std::string>();
          rep.completed = true;
        }
        if (r.outcome == "consistency-error") {
          rep.outcome = "consistency-error";
          rep.completed = false;
          break;
        }
      }
      break;
    }
    case TaskKind::ClawMachine: {
      int cleared = 0;
      int remaining = -1;
      for (const auto& r : records) {
        if (r.extra.value("success", false)) ++cleared;
        remaining = r.extra.value("remaining_in_source", remaining);
      }
      const int attempts = int(records.size());
      rep.metrics["attempts"] = double(attempts);
      rep.metrics["cleared"] = double(cleared);
      rep.metrics["r_success"] = attempts > 0 ? double(cleared) / double(attempts) : 0.0;
      rep.completed = remaining == 0;
      rep.outcome = rep.completed ? "cleared" : "incomplete";
      break;
    }
    case TaskKind::Jigsaw: {
      std::vector<std::vector<Eigen::Vector2d>> polygons;
      std::vector<Detection> detections;
      std::vector<double> ious;
      double standard_area = 0.0;
      int truths = 0;
      int skipped = 0;
      for (const auto& r : records) {
        if (r.extra.contains("truths")) truths = r.extra["truths"].get<int>();
        if (r.extra.contains("standard_area")) {
          standard_area = r.extra["standard_area"].get<double>();
        }
        if (r.extra.contains("detection")) {
          const json& d = r.extra["detection"];
          detections.push_back({d.at("label_correct").get<bool>(),
                                d.at("confidence").get<double>(), d.at("iou").get<double>(),
                                d.at("truth_id").get<int>()});
          ious.push_back(d.at("iou").get<double>());
        }
        if (r.outcome == "skipped") ++skipped;
        if (r.extra.contains("placed_polygon")) {
          std::vector<Eigen::Vector2d> poly;
          for (const auto& v : r.extra["placed_polygon"]) {
            poly.emplace_back(v[0].get<double>(), v[1].get<double>());
          }
          polygons.push_back(std::move(poly));
        }
      }
      rep.metrics["placed"] = double(polygons.size());
      rep.metrics["skipped"] = double(skipped);
      if (!ious.empty()) {
        rep.metrics["iou_mean"] = stats_of(ious).mean;
      }
      rep.metrics["ap"] = average_precision(detections, truths);
      if (!polygons.empty() && standard_area > 0.0) {
        const JigsawScore s = jigsaw_score(polygons, standard_area);
        rep.metrics["score"] = s.score;
        if (s.degenerate_overlap) rep.metrics["degenerate_overlap"] = 1.0;
      }
      rep.completed = truths > 0 && int(polygons.size()) == truths;
      rep.outcome = rep.completed ? "assembled" : "incomplete";
      break;
    }
  }
  return rep;
}

nlohmann::json aggregate_summary(TaskKind task, std::span<const SubTaskRecord> records,
                                 std::span<const RepetitionSummary> reps) {
  std::vector<double> t_subs, paths;
  for (const auto& r : records) {
    t_subs.push_back(r.t_sub);
    paths.push_back(r.path_length_m);
  }
  const Stats t = stats_of(t_subs);
  const Stats p = stats_of(paths);

  json agg;
  agg["subtask_count"] = int(records.size());
  agg["t_sub_mean"] = t.mean;
  agg["t_sub_std"] = t.std_dev;
  agg["path_length_mean"] = p.mean;

  int completed = 0;
  int consistency_errors = 0;
  auto mean_of_metric = [&](const char* key) {
    std::vector<double> xs;
    for (const auto& rep : reps) {
      auto it = rep.metrics.find(key);
      if (it != rep.metrics.end()) xs.push_back(it->second);
    }
    return stats_of(xs);
  };
  for (const auto& rep : reps) {
    if (rep.completed) ++completed;
    if (rep.outcome == "consistency-error") ++consistency_errors;
  }
  agg["completed_repetitions"] = completed;
  agg["consistency_errors"] = consistency_errors;

  switch (task) {
    case TaskKind::TicTacToe:
      break;
    case TaskKind::ClawMachine: {
      agg["r_success_mean"] = mean_of_metric("r_success").mean;
      agg["t_pick_mean"] = t.mean;
      agg["t_pick_std"] = t.std_dev;
      break;
    }
    case TaskKind::Jigsaw: {
      agg["score_mean"] = mean_of_metric("score").mean;
      agg["iou_mean"] = mean_of_metric("iou_mean").mean;
      agg["ap_mean"] = mean_of_metric("ap").mean;
      break;
    }
  }
  return agg;
}

// ---------------------------------------------------------------------------
// Run directory IO
// ---------------------------------------------------------------------------

namespace {

const char* headline_metric(TaskKind task) {
  switch (task) {
    case TaskKind::TicTacToe: return "t_sub_mean";
    case TaskKind::ClawMachine: return "r_success";
    case TaskKind::Jigsaw: return "score";
  }
  return "t_sub_mean";
}

json repetition_to_json(const RepetitionSummary& rep) {
  return {{"repetition", rep.repetition},
          {"outcome", rep.outcome},
          {"completed", rep.completed},
          {"metrics", rep.metrics}};
}

RepetitionSummary repetition_from_json(const json& j) {
  RepetitionSummary rep;
  rep.repetition = j.at("repetition").get<int>();
  rep.outcome = j.at("outcome").get<std::string>();
  rep.completed = j.at("completed").get<bool>();
  for (const auto& [key, value] : j.at("metrics").items()) {
    rep.metrics[key] = value.get<double>();
  }
  return rep;
}

}  // namespace

RunWriter::RunWriter(std::string out_dir, std::string run_id)
    : out_dir_(std::move(out_dir)), run_id_(std::move(run_id)) {
  fs::create_directories(out_dir_);
  staging_ = (fs::path(out_dir_) / ("." + run_id_ + ".partial")).string();
  std::error_code ec;
  fs::remove_all(staging_, ec);  // stale leftover from a crashed run
  fs::create_directories(fs::path(staging_) / "frames");
}

RunWriter::~RunWriter() {
  if (!finalized_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

FrameSink RunWriter::frame_sink(int repetition) {
  auto counter = std::make_shared<int>(0);
  const std::string frames_dir = (fs::path(staging_) / "frames").string();
  return [counter, frames_dir, repetition](const Frame& frame) {
    const int number = repetition * 1000 + (*counter)++;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d", number);
    const std::string color_ref = std::string("frames/") + buf + "_color.ppm";
    const std::string depth_ref = std::string("frames/") + buf + "_depth.pfm";
    write_ppm(frames_dir + "/" + buf + "_color.ppm", frame);
    write_pfm(frames_dir + "/" + buf + "_depth.pfm", frame);
    return std::vector<std::string>{color_ref, depth_ref};
  };
}

FrameSink RunWriter::null_sink() {
  return [](const Frame&) { return std::vector<std::string>{}; };
}

std::string RunWriter::finalize(const RunRecord& record) {
  const fs::path tmp_dir(staging_);
  try {
    {
      std::ofstream out(tmp_dir / "config.json");
      if (!out) raise(ErrorCode::Io, "cannot write config.json");
      out << json{{"cell", record.cell_config}, {"protocol", record.protocol_config}}.dump(2)
          << "\n";
    }
    {
      std::ofstream out(tmp_dir / "subtasks.jsonl");
      if (!out) raise(ErrorCode::Io, "cannot write subtasks.jsonl");
      for (const auto& r : record.records) {
        out << subtask_to_json(r).dump() << "\n";
      }
    }
    {
      json reps = json::array();
      for (const auto& rep : record.repetition_summaries) {
        reps.push_back(repetition_to_json(rep));
      }
      json s;
      s["run_id"] = record.run_id;
      s["timestamp"] = record.timestamp;
      s["task"] = record.task;
      s["cell"] = record.cell_name;
      s["repetitions"] = record.repetitions;
      s["seed"] = record.seed;
      s["aggregate"] = record.summary;
      s["per_repetition"] = reps;
      std::ofstream out(tmp_dir / "summary.json");
      if (!out) raise(ErrorCode::Io, "cannot write summary.json");
      out << s.dump(2) << "\n";
    }
    {
      std::ofstream out(tmp_dir / "summary.csv");
      if (!out) raise(ErrorCode::Io, "cannot write summary.csv");
      out << "run_id,task,cell,repetition,subtask_index,stage,duration_s,outcome,"
             "metric_name,metric_value\n";
      const TaskKind kind = task_kind_from_name(record.task);
      const char* metric = headline_metric(kind);
      for (const auto& rep : record.repetition_summaries) {
        double total = 0.0;
        int count = 0;
        for (const auto& r : record.records) {
          if (r.repetition == rep.repetition) {
            total += r.t_sub;
            ++count;
          }
        }
        const auto it = rep.metrics.find(metric);
        const double value = it != rep.metrics.end() ? it->second : 0.0;
        out << record.run_id << "," << record.task << "," << record.cell_name << ","
            << rep.repetition << "," << count << ",task," << total << "," << rep.outcome << ","
            << metric << "," << value << "\n";
      }
    }

    fs::path final_dir = fs::path(out_dir_) / record.run_id;
    for (int suffix = 2; fs::exists(final_dir); ++suffix) {
      final_dir = fs::path(out_dir_) / (record.run_id + "-" + std::to_string(suffix));
    }
    fs::rename(tmp_dir, final_dir);
    finalized_ = true;
    return final_dir.string();
  } catch (...) {
    std::error_code ec;
    fs::remove_all(tmp_dir, ec);
    finalized_ = true;  // nothing left to clean
    throw;
  }
}

std::string write_run(const RunRecord& record, const std::string& out_dir) {
  RunWriter writer(out_dir, record.run_id);
  return writer.finalize(record);
}

RunRecord read_run(const std::string& run_dir) {
  const fs::path dir(run_dir);
  auto parse_file = [&](const char* name) {
    std::ifstream in(dir / name);
    if (!in) raise(ErrorCode::Io, "cannot open " + (dir / name).string());
    json j;
    try {
      in >> j;
    } catch (const json::parse_error& e) {
      raise(ErrorCode::Io, (dir / name).string() + ": " + e.what());
    }
    return j;
  };

  RunRecord record;
  const json config = parse_file("config.json");
  record.cell_config = config.at("cell");
  record.protocol_config = config.at("protocol");

  const json summary = parse_file("summary.json");
  record.run_id = summary.at("run_id").get<std::string>();
  record.timestamp = summary.at("timestamp").get<std::string>();
  record.task = summary.at("task").get<std::string>();
  record.cell_name = summary.at("cell").get<std::string>();
  record.repetitions = summary.at("repetitions").get<int>();
  record.seed = summary.at("seed").get<uint64_t>();
  record.summary = summary.at("aggregate");
  for (const auto& rep : summary.at("per_repetition")) {
    record.repetition_summaries.push_back(repetition_from_json(rep));
  }

  std::ifstream lines(dir / "subtasks.jsonl");
  if (!lines) raise(ErrorCode::Io, "cannot open " + (dir / "subtasks.jsonl").string());
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    record.records.push_back(subtask_from_json(json::parse(line)));
  }
  return record;
}

}  // namespace deepclaw
