#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "deepclaw/pipeline.hpp"
#include "deepclaw/simcell.hpp"

namespace deepclaw {

enum class TaskKind { TicTacToe, ClawMachine, Jigsaw };

const char* task_kind_name(TaskKind kind);
TaskKind task_kind_from_name(const std::string& name);

struct CalibrationSettings {
  int poses = 10;
  double noise_mm = 0.0;
};

struct RegionSpec {
  double cx = 0.0;
  double cy = 0.0;
  double size_x = 0.0;
  double size_y = 0.0;

  NamedRegion to_region(const std::string& name) const {
    return {name, cx, cy, size_x / 2.0, size_y / 2.0};
  }
};

struct TicTacToeParams {
  int depth = 3;
  double board_cx = 0.55;
  double board_cy = 0.0;
  double cell_size = 0.062;
  double piece_side = 0.025;
  double piece_height = 0.025;
  int pieces_per_player = 5;
  int max_retries = 3;
  std::vector<Eigen::Vector2d> distractors;  // stray cubes, for robustness runs
};

struct ClawMachineParams {
  int toys = 8;
  RegionSpec source_bin{0.4, 0.0, 0.6, 0.7};
  RegionSpec target_bin{0.875, 0.0, 0.3, 0.4};
  double toy_semi_major_min = 0.045;
  double toy_semi_major_max = 0.065;
  double toy_semi_minor_min = 0.025;
  double toy_semi_minor_max = 0.030;
  double toy_height = 0.05;
  int attempt_cap = 50;
};

struct JigsawParams {
  double piece_side = 0.051;
  double piece_height = 0.005;
  RegionSpec scatter_region{0.55, -0.22, 0.7, 0.3};
  double target_cx = 0.55;
  double target_cy = 0.2;
  double yaw_step_deg = 5.0;  // 0 = continuous yaws
  int max_retries = 3;
};

/// One benchmark protocol: which task, on which cell, how many repetitions,
/// which pipeline stages, and the task-specific geometry.
struct TaskProtocol {
  TaskKind task = TaskKind::TicTacToe;
  std::string cell_path;
  int repeat = 1;
  uint64_t seed = 0;
  std::string reasoning;  // "spatial" or "temporal" classification
  StageNames stages;
  bool record_frames = false;
  CalibrationSettings calibration;

  TicTacToeParams tictactoe;
  ClawMachineParams clawmachine;
  JigsawParams jigsaw;

  void validate() const;  // throws ErrorCode::Config
};

CellConfig cell_from_json(const nlohmann::json& j);
nlohmann::json cell_to_json(const CellConfig& cell);
CellConfig load_cell_file(const std::string& path);

TaskProtocol protocol_from_json(const nlohmann::json& j);
nlohmann::json protocol_to_json(const TaskProtocol& p);
TaskProtocol load_protocol_file(const std::string& path);

/// Schema/invariant violations as human-readable strings naming the field;
/// empty means the file is valid. Auto-detects cell vs task configs. Cross
/// checks (e.g. jigsaw requires a suction gripper) run when the referenced
/// cell file resolves.
std::vector<std::string> validate_config_file(const std::string& path);

struct BuiltinConfig {
  const char* name;
  const char* json;
};

std::vector<BuiltinConfig> builtin_cells();
std::vector<BuiltinConfig> builtin_protocols();

/// Loads a cell from a file path, falling back to a builtin preset name
/// ("cell-franka", "franka", ...) when no such file exists.
CellConfig resolve_cell(const std::string& path_or_name, const std::string& base_dir = "");

/// The raw JSON the cell was loaded from (used for config snapshots).
nlohmann::json resolve_cell_json(const std::string& path_or_name, const std::string& base_dir = "");

}  // namespace deepclaw
