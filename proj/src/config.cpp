#include "deepclaw/config.hpp"

#include <filesystem>
#include <fstream>

namespace deepclaw {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    raise(ErrorCode::Io, "cannot open " + path);
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    raise(ErrorCode::Config, path + ": " + e.what());
  }
  return j;
}

const json& require(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) {
    raise(ErrorCode::Config, where + "." + key + ": missing required field");
  }
  return *it;
}

RigidTransform transform_from_json(const json& j, const std::string& where) {
  const json& rot = require(j, "rotation", where);
  const json& tr = require(j, "translation", where);
  if (!rot.is_array() || rot.size() != 9) {
    raise(ErrorCode::Config, where + ".rotation: expected 9 numbers (row-major)");
  }
  if (!tr.is_array() || tr.size() != 3) {
    raise(ErrorCode::Config, where + ".translation: expected 3 numbers");
  }
  RigidTransform t;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      t.rotation(r, c) = rot[size_t(r) * 3 + c].get<double>();
    }
    t.translation(r) = tr[size_t(r)].get<double>();
  }
  return t;
}

json transform_to_json(const RigidTransform& t) {
  json rot = json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      rot.push_back(t.rotation(r, c));
    }
  }
  return {{"rotation", rot},
          {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

Rgb rgb_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3) {
    raise(ErrorCode::Config, where + ": expected [r, g, b]");
  }
  return {uint8_t(j[0].get<int>()), uint8_t(j[1].get<int>()), uint8_t(j[2].get<int>())};
}

RegionSpec region_from_json(const json& j, const std::string& where) {
  const json& center = require(j, "center", where);
  const json& size = require(j, "size", where);
  if (!center.is_array() || center.size() != 2 || !size.is_array() || size.size() != 2) {
    raise(ErrorCode::Config, where + ": expected center [x, y] and size [sx, sy]");
  }
  return {center[0].get<double>(), center[1].get<double>(), size[0].get<double>(),
          size[1].get<double>()};
}

}  // namespace

const char* task_kind_name(TaskKind kind) {
  switch (kind) {
    case TaskKind::TicTacToe: return "tictactoe";
    case TaskKind::ClawMachine: return "clawmachine";
    case TaskKind::Jigsaw: return "jigsaw";
  }
  return "unknown";
}

TaskKind task_kind_from_name(const std::string& name) {
  if (name == "tictactoe") return TaskKind::TicTacToe;
  if (name == "clawmachine") return TaskKind::ClawMachine;
  if (name == "jigsaw") return TaskKind::Jigsaw;
  raise(ErrorCode::Config, "task: unknown task '" + name + "'");
}

CellConfig cell_from_json(const json& j) {
  CellConfig cell;
  cell.name = require(j, "name", "cell").get<std::string>();

  const json& arm = require(j, "arm", "cell");
  cell.arm.dof = require(arm, "dof", "arm").get<int>();
  cell.arm.joint_speed_limit = require(arm, "joint_speed_limit", "arm").get<double>();
  cell.arm.joint_accel_limit = require(arm, "joint_accel_limit", "arm").get<double>();
  cell.arm.agility = arm.value("agility", 1.0);
  cell.arm.home_pose = transform_from_json(require(arm, "home_pose", "arm"), "arm.home_pose");

  const json& gripper = require(j, "gripper", "cell");
  const std::string kind = require(gripper, "kind", "gripper").get<std::string>();
  if (kind == "parallel") {
    cell.gripper.kind = GripperKind::Parallel;
    cell.gripper.max_opening = require(gripper, "max_opening", "gripper").get<double>();
  } else if (kind == "suction") {
    cell.gripper.kind = GripperKind::Suction;
    cell.gripper.max_opening = gripper.value("max_opening", 0.0);
  } else {
    raise(ErrorCode::Config, "gripper.kind: must be 'parallel' or 'suction'");
  }
  cell.gripper.closing_time = require(gripper, "closing_time", "gripper").get<double>();
  cell.gripper.base_success = require(gripper, "base_success", "gripper").get<double>();

  const json& camera = require(j, "camera", "cell");
  const json& intr = require(camera, "intrinsics", "camera");
  cell.camera.intrinsics.fx = require(intr, "fx", "camera.intrinsics").get<double>();
  cell.camera.intrinsics.fy = require(intr, "fy", "camera.intrinsics").get<double>();
  cell.camera.intrinsics.cx = require(intr, "cx", "camera.intrinsics").get<double>();
  cell.camera.intrinsics.cy = require(intr, "cy", "camera.intrinsics").get<double>();
  cell.camera.intrinsics.width = require(intr, "width", "camera.intrinsics").get<int>();
  cell.camera.intrinsics.height = require(intr, "height", "camera.intrinsics").get<int>();
  cell.camera.pose = transform_from_json(require(camera, "pose", "camera"), "camera.pose");
  cell.camera.mount_height = require(camera, "mount_height", "camera").get<double>();

  const json& table = require(j, "table", "cell");
  const json& xe = require(table, "x_extent", "table");
  const json& ye = require(table, "y_extent", "table");
  if (!xe.is_array() || xe.size() != 2 || !ye.is_array() || ye.size() != 2) {
    raise(ErrorCode::Config, "table.x_extent/y_extent: expected [min, max]");
  }
  cell.table.x_min = xe[0].get<double>();
  cell.table.x_max = xe[1].get<double>();
  cell.table.y_min = ye[0].get<double>();
  cell.table.y_max = ye[1].get<double>();
  cell.table.surface_z = require(table, "surface_z", "table").get<double>();
  if (table.contains("color")) {
    cell.table.color = rgb_from_json(table["color"], "table.color");
  }

  cell.seed = j.value("seed", uint64_t(0));
  cell.grasp_depth_offset = j.value("grasp_depth_offset", 0.005);

  cell.validate();
  return cell;
}

json cell_to_json(const CellConfig& cell) {
  json j;
  j["name"] = cell.name;
  j["arm"] = {{"dof", cell.arm.dof},
              {"joint_speed_limit", cell.arm.joint_speed_limit},
              {"joint_accel_limit", cell.arm.joint_accel_limit},
              {"agility", cell.arm.agility},
              {"home_pose", transform_to_json(cell.arm.home_pose)}};
  j["gripper"] = {{"kind", cell.gripper.kind == GripperKind::Parallel ? "parallel" : "suction"},
                  {"max_opening", cell.gripper.max_opening},
                  {"closing_time", cell.gripper.closing_time},
                  {"base_success", cell.gripper.base_success}};
  j["camera"] = {{"intrinsics",
                  {{"fx", cell.camera.intrinsics.fx},
                   {"fy", cell.camera.intrinsics.fy},
                   {"cx", cell.camera.intrinsics.cx},
                   {"cy", cell.camera.intrinsics.cy},
                   {"width", cell.camera.intrinsics.width},
                   {"height", cell.camera.intrinsics.height}}},
                 {"pose", transform_to_json(cell.camera.pose)},
                 {"mount_height", cell.camera.mount_height}};
  j["table"] = {{"x_extent", {cell.table.x_min, cell.table.x_max}},
                {"y_extent", {cell.table.y_min, cell.table.y_max}},
                {"surface_z", cell.table.surface_z},
                {"color", {cell.table.color.r, cell.table.color.g, cell.table.color.b}}};
  j["seed"] = cell.seed;
  j["grasp_depth_offset"] = cell.grasp_depth_offset;
  return j;
}

CellConfig load_cell_file(const std::string& path) {
  try {
    return cell_from_json(load_json_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) {
      raise(ErrorCode::Config, path + ": " + e.what());
    }
    throw;
  }
}

void TaskProtocol::validate() const {
  if (repeat < 1) {
    raise(ErrorCode::Config, "repeat: must be >= 1");
  }
  if (reasoning != "spatial" && reasoning != "temporal") {
    raise(ErrorCode::Config, "reasoning: must be 'spatial' or 'temporal'");
  }
  validate_stage_names(stages);
  if (calibration.poses < 1) {
    raise(ErrorCode::Config, "calibration.poses: must be >= 1");
  }
  if (calibration.noise_mm < 0.0) {
    raise(ErrorCode::Config, "calibration.noise_mm: must be >= 0");
  }
  switch (task) {
    case TaskKind::TicTacToe:
      if (tictactoe.depth < 1) raise(ErrorCode::Config, "params.depth: must be >= 1");
      if (tictactoe.pieces_per_player < 1) {
        raise(ErrorCode::Config, "params.pieces_per_player: must be >= 1");
      }
      if (tictactoe.cell_size <= tictactoe.piece_side) {
        raise(ErrorCode::Config, "params.cell_size: must exceed params.piece_side");
      }
      break;
    case TaskKind::ClawMachine:
      if (clawmachine.toys < 1) raise(ErrorCode::Config, "params.toys: must be >= 1");
      if (clawmachine.attempt_cap < clawmachine.toys) {
        raise(ErrorCode::Config, "params.attempt_cap: must be >= params.toys");
      }
      break;
    case TaskKind::Jigsaw:
      if (jigsaw.piece_side <= 0.0) raise(ErrorCode::Config, "params.piece_side: must be > 0");
      break;
  }
}

TaskProtocol protocol_from_json(const json& j) {
  TaskProtocol p;
  p.task = task_kind_from_name(require(j, "task", "protocol").get<std::string>());
  p.cell_path = require(j, "cell", "protocol").get<std::string>();
  p.repeat = j.value("repeat", 1);
  p.seed = j.value("seed", uint64_t(0));
  p.reasoning = j.value("reasoning", p.task == TaskKind::TicTacToe ? "temporal" : "spatial");
  if (j.contains("stages")) {
    const json& s = j["stages"];
    p.stages.segmentation = s.value("segmentation", "contour");
    p.stages.recognition = s.value("recognition", "color");
    p.stages.grasp = s.value("grasp", "analytic");
    p.stages.motion = s.value("motion", "waypoint");
  }
  p.record_frames = j.value("record_frames", false);
  if (j.contains("calibration")) {
    p.calibration.poses = j["calibration"].value("poses", 10);
    p.calibration.noise_mm = j["calibration"].value("noise_mm", 0.0);
  }

  const json params = j.value("params", json::object());
  switch (p.task) {
    case TaskKind::TicTacToe: {
      auto& t = p.tictactoe;
      t.depth = params.value("depth", 3);
      if (params.contains("board_center")) {
        t.board_cx = params["board_center"][0].get<double>();
        t.board_cy = params["board_center"][1].get<double>();
      }
      t.cell_size = params.value("cell_size", t.cell_size);
      t.piece_side = params.value("piece_side", t.piece_side);
      t.piece_height = params.value("piece_height", t.piece_height);
      t.pieces_per_player = params.value("pieces_per_player", t.pieces_per_player);
      t.max_retries = params.value("max_retries", t.max_retries);
      if (params.contains("distractors")) {
        for (const auto& d : params["distractors"]) {
          t.distractors.emplace_back(d[0].get<double>(), d[1].get<double>());
        }
      }
      break;
    }
    case TaskKind::ClawMachine: {
      auto& c = p.clawmachine;
      c.toys = params.value("toys", c.toys);
      if (params.contains("source_bin")) {
        c.source_bin = region_from_json(params["source_bin"], "params.source_bin");
      }
      if (params.contains("target_bin")) {
        c.target_bin = region_from_json(params["target_bin"], "params.target_bin");
      }
      if (params.contains("toy_semi_major")) {
        c.toy_semi_major_min = params["toy_semi_major"][0].get<double>();
        c.toy_semi_major_max = params["toy_semi_major"][1].get<double>();
      }
      if (params.contains("toy_semi_minor")) {
        c.toy_semi_minor_min = params["toy_semi_minor"][0].get<double>();
        c.toy_semi_minor_max = params["toy_semi_minor"][1].get<double>();
      }
      c.toy_height = params.value("toy_height", c.toy_height);
      c.attempt_cap = params.value("attempt_cap", c.attempt_cap);
      break;
    }
    case TaskKind::Jigsaw: {
      auto& g = p.jigsaw;
      g.piece_side = params.value("piece_side", g.piece_side);
      g.piece_height = params.value("piece_height", g.piece_height);
      if (params.contains("scatter_region")) {
        g.scatter_region = region_from_json(params["scatter_region"], "params.scatter_region");
      }
      if (params.contains("target_center")) {
        g.target_cx = params["target_center"][0].get<double>();
        g.target_cy = params["target_center"][1].get<double>();
      }
      g.yaw_step_deg = params.value("yaw_step_deg", g.yaw_step_deg);
      g.max_retries = params.value("max_retries", g.max_retries);
      break;
    }
  }

  p.validate();
  return p;
}

json protocol_to_json(const TaskProtocol& p) {
  json j;
  j["task"] = task_kind_name(p.task);
  j["cell"] = p.cell_path;
  j["repeat"] = p.repeat;
  j["seed"] = p.seed;
  j["reasoning"] = p.reasoning;
  j["stages"] = {{"segmentation", p.stages.segmentation},
                 {"recognition", p.stages.recognition},
                 {"grasp", p.stages.grasp},
                 {"motion", p.stages.motion}};
  j["record_frames"] = p.record_frames;
  j["calibration"] = {{"poses", p.calibration.poses}, {"noise_mm", p.calibration.noise_mm}};
  json params;
  switch (p.task) {
    case TaskKind::TicTacToe: {
      const auto& t = p.tictactoe;
      params = {{"depth", t.depth},
                {"board_center", {t.board_cx, t.board_cy}},
                {"cell_size", t.cell_size},
                {"piece_side", t.piece_side},
                {"piece_height", t.piece_height},
                {"pieces_per_player", t.pieces_per_player},
                {"max_retries", t.max_retries}};
      json d = json::array();
      for (const auto& v : t.distractors) d.push_back({v.x(), v.y()});
      params["distractors"] = d;
      break;
    }
    case TaskKind::ClawMachine: {
      const auto& c = p.clawmachine;
      params = {{"toys", c.toys},
                {"source_bin",
                 {{"center", {c.source_bin.cx, c.source_bin.cy}},
                  {"size", {c.source_bin.size_x, c.source_bin.size_y}}}},
                {"target_bin",
                 {{"center", {c.target_bin.cx, c.target_bin.cy}},
                  {"size", {c.target_bin.size_x, c.target_bin.size_y}}}},
                {"toy_semi_major", {c.toy_semi_major_min, c.toy_semi_major_max}},
                {"toy_semi_minor", {c.toy_semi_minor_min, c.toy_semi_minor_max}},
                {"toy_height", c.toy_height},
                {"attempt_cap", c.attempt_cap}};
      break;
    }
    case TaskKind::Jigsaw: {
      const auto& g = p.jigsaw;
      params = {{"piece_side", g.piece_side},
                {"piece_height", g.piece_height},
                {"scatter_region",
                 {{"center", {g.scatter_region.cx, g.scatter_region.cy}},
                  {"size", {g.scatter_region.size_x, g.scatter_region.size_y}}}},
                {"target_center", {g.target_cx, g.target_cy}},
                {"yaw_step_deg", g.yaw_step_deg},
                {"max_retries", g.max_retries}};
      break;
    }
  }
  j["params"] = params;
  return j;
}

TaskProtocol load_protocol_file(const std::string& path) {
  try {
    return protocol_from_json(load_json_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) {
      raise(ErrorCode::Config, path + ": " + e.what());
    }
    throw;
  }
}

CellConfig resolve_cell(const std::string& path_or_name, const std::string& base_dir) {
  return cell_from_json(resolve_cell_json(path_or_name, base_dir));
}

json resolve_cell_json(const std::string& path_or_name, const std::string& base_dir) {
  fs::path p(path_or_name);
  if (fs::exists(p)) {
    return load_json_file(p.string());
  }
  if (p.is_relative() && !base_dir.empty()) {
    const fs::path joined = fs::path(base_dir) / p;
    if (fs::exists(joined)) {
      return load_json_file(joined.string());
    }
  }
  for (const auto& preset : builtin_cells()) {
    const std::string name = preset.name;  // accept "cell-franka" and "franka"
    if (path_or_name == name || "cell-" + path_or_name == name ||
        path_or_name == name + ".json") {
      return json::parse(preset.json);
    }
  }
  raise(ErrorCode::Io, "cell config not found: " + path_or_name);
}

std::vector<std::string> validate_config_file(const std::string& path) {
  std::vector<std::string> violations;
  json j;
  try {
    j = load_json_file(path);
  } catch (const Error& e) {
    violations.push_back(e.what());
    return violations;
  }

  const bool is_task = j.contains("task");
  if (is_task) {
    TaskProtocol protocol;
    try {
      protocol = protocol_from_json(j);
    } catch (const Error& e) {
      violations.push_back(e.what());
      return violations;
    }
    // cross-check against the referenced cell when it resolves
    try {
      const CellConfig cell =
          resolve_cell(protocol.cell_path, fs::path(path).parent_path().string());
      if (protocol.task == TaskKind::Jigsaw && cell.gripper.kind != GripperKind::Suction) {
        violations.push_back(
            "gripper.kind: jigsaw requires a suction gripper (thin pieces cannot be "
            "grasped by parallel jaws); cell '" + cell.name + "' has a parallel gripper");
      }
    } catch (const Error& e) {
      violations.push_back(std::string("cell: ") + e.what());
    }
  } else {
    try {
      cell_from_json(j);
    } catch (const Error& e) {
      violations.push_back(e.what());
    }
  }
  return violations;
}

}  // namespace deepclaw
