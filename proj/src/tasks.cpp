#include "deepclaw/tasks.hpp"

#include <algorithm>
#include <cmath>

namespace deepclaw {

namespace {

constexpr int kLines[8][3] = {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}, {0, 3, 6},
                              {1, 4, 7}, {2, 5, 8}, {0, 4, 8}, {2, 4, 6}};

}  // namespace

Mark Board::winner() const {
  for (const auto& line : kLines) {
    const Mark m = cells[size_t(line[0])];
    if (m != Mark::Empty && cells[size_t(line[1])] == m && cells[size_t(line[2])] == m) {
      return m;
    }
  }
  return Mark::Empty;
}

bool Board::full() const {
  return std::none_of(cells.begin(), cells.end(), [](Mark m) { return m == Mark::Empty; });
}

Board Board::swapped() const {
  Board out;
  for (size_t i = 0; i < 9; ++i) {
    out.cells[i] = cells[i] == Mark::Empty ? Mark::Empty : opponent(cells[i]);
  }
  return out;
}

std::string Board::to_string() const {
  std::string s(9, '.');
  for (size_t i = 0; i < 9; ++i) {
    if (cells[i] == Mark::P1) s[i] = 'X';
    if (cells[i] == Mark::P2) s[i] = 'O';
  }
  return s;
}

Board Board::from_string(const std::string& s) {
  if (s.size() != 9) {
    raise(ErrorCode::InvalidArgument, "Board::from_string: expected 9 characters");
  }
  Board b;
  for (size_t i = 0; i < 9; ++i) {
    if (s[i] == 'X') {
      b.cells[i] = Mark::P1;
    } else if (s[i] == 'O') {
      b.cells[i] = Mark::P2;
    } else {
      b.cells[i] = Mark::Empty;
    }
  }
  return b;
}

double open_lines_heuristic(const Board& board, Mark player) {
  const Mark opp = opponent(player);
  int mine = 0, theirs = 0;
  for (const auto& line : kLines) {
    bool open_mine = true, open_theirs = true;
    for (int idx : line) {
      if (board.at(idx) == opp) open_mine = false;
      if (board.at(idx) == player) open_theirs = false;
    }
    mine += open_mine ? 1 : 0;
    theirs += open_theirs ? 1 : 0;
  }
  return (mine - theirs) / 8.0;
}

namespace {

/// Value of `board` from `root`'s perspective with `to_move` next, searching
/// `depth` further plies. Alpha-beta keeps the root value exact.
double minimax_value(const Board& board, Mark root, Mark to_move, int depth, double alpha,
                     double beta, const Heuristic& heuristic) {
  const Mark won = board.winner();
  if (won != Mark::Empty) {
    return won == root ? 1.0 : -1.0;
  }
  if (board.full()) {
    return 0.0;
  }
  if (depth == 0) {
    return heuristic(board, root);
  }

  const bool maximizing = to_move == root;
  double best = maximizing ? -2.0 : 2.0;
  for (int i = 0; i < 9; ++i) {
    if (board.at(i) != Mark::Empty) continue;
    Board child = board;
    child.cells[size_t(i)] = to_move;
    const double v =
        minimax_value(child, root, opponent(to_move), depth - 1, alpha, beta, heuristic);
    if (maximizing) {
      best = std::max(best, v);
      alpha = std::max(alpha, best);
    } else {
      best = std::min(best, v);
      beta = std::min(beta, best);
    }
    if (beta <= alpha) break;
  }
  return best;
}

}  // namespace

MinimaxResult minimax(const Board& board, Mark player, int depth, const Heuristic& heuristic) {
  if (board.terminal()) {
    raise(ErrorCode::InvalidArgument, "minimax: board is terminal, no move to make");
  }
  if (depth < 1) {
    raise(ErrorCode::InvalidArgument, "minimax: depth must be >= 1");
  }
  MinimaxResult best{-1, -2.0};
  double alpha = -2.0;
  for (int i = 0; i < 9; ++i) {
    if (board.at(i) != Mark::Empty) continue;
    Board child = board;
    child.cells[size_t(i)] = player;
    const double v =
        minimax_value(child, player, opponent(player), depth - 1, alpha, 2.0, heuristic);
    if (v > best.value) {  // strict: ties keep the lowest cell index
      best = {i, v};
      alpha = std::max(alpha, v);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Shared task helpers
// ---------------------------------------------------------------------------

MotionCharge charge_motion(const CellConfig& cell, const Eigen::Vector3d& pick,
                           const Eigen::Vector3d& drop, bool grasp_succeeded) {
  const std::vector<Eigen::Vector3d> plan = plan_motion(pick, drop, cell);
  MotionCharge charge;
  if (grasp_succeeded) {
    charge.time_s = move_time(plan, cell);
    charge.path_m = path_length(plan);
  } else {
    // home -> pre-pick -> pick -> pre-pick -> home, empty-handed
    const std::vector<Eigen::Vector3d> abort_path{plan[0], plan[1], plan[2], plan[3], plan[0]};
    charge.time_s = move_time(abort_path, cell);
    charge.path_m = path_length(abort_path);
  }
  return charge;
}

Eigen::Vector3d centroid_to_base(const PixelCoord& centroid, const Frame& frame,
                                 const RigidTransform& hand_eye, const CellConfig& cell) {
  const int u = std::clamp(int(std::lround(centroid.u)), 0, frame.width - 1);
  const int v = std::clamp(int(std::lround(centroid.v)), 0, frame.height - 1);
  const double depth = frame.depth_at(u, v);
  Eigen::Vector3d p = hand_eye.apply(deproject(centroid, depth, cell.camera.intrinsics));
  p.z() = cell.table.surface_z + cell.grasp_depth_offset;
  return p;
}

PixelRect region_pixel_rect(const NamedRegion& region, double height, const CellConfig& cell) {
  const RigidTransform cam_from_base = cell.camera.pose.inverse();
  PixelRect rect{cell.camera.intrinsics.width, cell.camera.intrinsics.height, -1, -1};
  for (double z : {cell.table.surface_z, cell.table.surface_z + height}) {
    for (int sx = -1; sx <= 1; sx += 2) {
      for (int sy = -1; sy <= 1; sy += 2) {
        const Eigen::Vector3d corner{region.cx + sx * region.half_x,
                                     region.cy + sy * region.half_y, z};
        const Eigen::Vector3d in_cam = cam_from_base.apply(corner);
        if (in_cam.z() <= 0.0) continue;
        const Projection proj = project(in_cam, cell.camera.intrinsics);
        rect.u0 = std::min(rect.u0, int(std::floor(proj.pixel.u)));
        rect.u1 = std::max(rect.u1, int(std::ceil(proj.pixel.u)));
        rect.v0 = std::min(rect.v0, int(std::floor(proj.pixel.v)));
        rect.v1 = std::max(rect.v1, int(std::ceil(proj.pixel.v)));
      }
    }
  }
  constexpr int kPad = 5;
  rect.u0 = std::max(rect.u0 - kPad, 0);
  rect.v0 = std::max(rect.v0 - kPad, 0);
  rect.u1 = std::min(rect.u1 + kPad, cell.camera.intrinsics.width - 1);
  rect.v1 = std::min(rect.v1 + kPad, cell.camera.intrinsics.height - 1);
  return rect;
}

PixelMask rasterize_footprint(const SceneObject& obj, const CellConfig& cell) {
  const CameraIntrinsics& k = cell.camera.intrinsics;
  const RigidTransform& cam = cell.camera.pose;
  const double top_z = obj.pose.translation.z() + obj.height;

  PixelMask mask;
  mask.width = k.width;
  mask.height = k.height;
  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const Eigen::Vector3d dir = cam.rotate({(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0});
      if (std::abs(dir.z()) < 1e-12) continue;
      const double t = (top_z - cam.translation.z()) / dir.z();
      if (t <= 0.0) continue;
      const Eigen::Vector3d world = cam.translation + t * dir;
      if (obj.footprint_contains(world.x(), world.y())) {
        mask.pixels.push_back(int32_t(v) * k.width + u);
      }
    }
  }
  return mask;
}

RepetitionResult run_repetition(TaskContext& ctx) {
  switch (ctx.protocol.task) {
    case TaskKind::TicTacToe: return run_tictactoe(ctx);
    case TaskKind::ClawMachine: return run_clawmachine(ctx);
    case TaskKind::Jigsaw:
      if (ctx.cell.gripper.kind != GripperKind::Suction) {
        raise(ErrorCode::Config,
              "gripper.kind: jigsaw requires a suction gripper; cell '" + ctx.cell.name +
                  "' has a parallel gripper");
      }
      return run_jigsaw(ctx);
  }
  raise(ErrorCode::Internal, "run_repetition: unknown task kind");
}

}  // namespace deepclaw
