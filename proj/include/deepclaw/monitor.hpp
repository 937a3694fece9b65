#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepclaw/config.hpp"
#include "deepclaw/pipeline.hpp"

namespace deepclaw {

// ---------------------------------------------------------------------------
// Function-wise and task-wise metrics
// ---------------------------------------------------------------------------

/// Intersection-over-union of two same-sized masks; 1.0 when both are empty.
double iou(const PixelMask& a, const PixelMask& b);

struct Detection {
  bool label_correct = false;
  double confidence = 0.0;
  double iou = 0.0;
  int truth_id = -1;  // which ground-truth instance this detection targets
};

/// Area under the all-points-interpolated precision/recall curve. Detections
/// are ranked by confidence; one true positive per ground-truth instance
/// requires a correct label and IoU >= iou_threshold. With zero truths the
/// AP is 0 if any detections exist, else 1 by convention.
double average_precision(std::vector<Detection> detections, int truths,
                         double iou_threshold = 0.5);

struct JigsawScore {
  double score = 0.0;
  double actual_area = 0.0;
  double standard_area = 0.0;
  bool degenerate_overlap = false;  // actual < standard, i.e. pieces overlap
};

/// Assembly quality: standard_area over the area of the minimum-area rotated
/// bounding rectangle of all placed piece vertices. Scores above 1 are
/// reported raw with the degenerate_overlap flag set.
JigsawScore jigsaw_score(const std::vector<std::vector<Eigen::Vector2d>>& placed_pieces,
                         double standard_area);

double path_length(std::span<const Eigen::Vector3d> waypoints);

/// Monotone-chain convex hull (ccw, no duplicate endpoint).
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> points);

/// Rotating-calipers minimum-area rectangle over the convex hull.
double min_area_rect_area(const std::vector<Eigen::Vector2d>& points);

// ---------------------------------------------------------------------------
// Run recording
// ---------------------------------------------------------------------------

struct StageDuration {
  std::string name;
  double duration_s = 0.0;
};

/// One pick-and-place cycle. All durations are simulated robot time; t_sub
/// excludes the gripper closing time.
struct SubTaskRecord {
  int repetition = 0;
  int index = 0;
  std::vector<StageDuration> stages;
  std::string outcome;  // "success", "failed", "miss", "skipped", ...
  int grasp_attempts = 0;
  int grasp_failures = 0;
  double t_sub = 0.0;          // seconds of motion execution, gripper excluded
  double path_length_m = 0.0;  // of the last executed motion plan
  nlohmann::json extra;        // task-specific payload
  std::vector<std::string> frame_refs;
};

struct RepetitionSummary {
  int repetition = 0;
  std::string outcome;
  bool completed = false;
  std::map<std::string, double> metrics;
};

struct RunRecord {
  std::string run_id;
  std::string timestamp;  // ISO 8601 UTC
  std::string task;
  std::string cell_name;
  int repetitions = 0;
  uint64_t seed = 0;
  nlohmann::json cell_config;      // verbatim snapshot
  nlohmann::json protocol_config;  // verbatim snapshot
  std::vector<SubTaskRecord> records;
  std::vector<RepetitionSummary> repetition_summaries;
  nlohmann::json summary;  // aggregate metrics; recomputable from the records
};

nlohmann::json subtask_to_json(const SubTaskRecord& r);
SubTaskRecord subtask_from_json(const nlohmann::json& j);

/// Per-repetition outcome and metrics, derived purely from that repetition's
/// sub-task records. The tasks build their summaries through this function,
/// so on-disk summaries are recomputable from subtasks.jsonl by construction.
RepetitionSummary summarize_repetition(TaskKind task, int repetition,
                                       std::span<const SubTaskRecord> records);

/// Aggregate summary across repetitions (means/stds of t_sub, task metrics).
nlohmann::json aggregate_summary(TaskKind task, std::span<const SubTaskRecord> records,
                                 std::span<const RepetitionSummary> reps);

/// Receives a rendered frame, persists it (when recording is on) and returns
/// the stored references (color, depth), empty when dropped.
using FrameSink = std::function<std::vector<std::string>(const Frame&)>;

/// Owns one run directory while it is being produced:
///   <out_dir>/<run-id>/{config.json, subtasks.jsonl, frames/, summary.json,
///   summary.csv}
/// Everything lands in a hidden staging directory that is renamed into place
/// by finalize(); an abandoned writer cleans the staging area up, so a failed
/// run leaves nothing behind. Frame sinks write color as binary PPM and depth
/// as 32-bit PFM, numbered repetition*1000 + sequence.
class RunWriter {
 public:
  RunWriter(std::string out_dir, std::string run_id);
  ~RunWriter();

  RunWriter(const RunWriter&) = delete;
  RunWriter& operator=(const RunWriter&) = delete;

  /// Sink for one repetition; sinks of distinct repetitions are safe to use
  /// from distinct threads.
  FrameSink frame_sink(int repetition);

  /// Null sink that drops frames (recording off).
  static FrameSink null_sink();

  /// Writes the metadata files and renames the directory into place.
  /// Returns the final run directory.
  std::string finalize(const RunRecord& record);

 private:
  std::string out_dir_;
  std::string run_id_;
  std::string staging_;
  bool finalized_ = false;
};

/// One-shot convenience for runs without frames.
std::string write_run(const RunRecord& record, const std::string& out_dir);

RunRecord read_run(const std::string& run_dir);

}  // namespace deepclaw
