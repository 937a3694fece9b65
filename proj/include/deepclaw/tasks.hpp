#pragma once

#include <array>
#include <functional>

#include "deepclaw/calibration.hpp"
#include "deepclaw/config.hpp"
#include "deepclaw/monitor.hpp"

namespace deepclaw {

// ---------------------------------------------------------------------------
// Tic-Tac-Toe game logic
// ---------------------------------------------------------------------------

enum class Mark : uint8_t { Empty = 0, P1 = 1, P2 = 2 };

inline Mark opponent(Mark m) { return m == Mark::P1 ? Mark::P2 : Mark::P1; }

struct Board {
  std::array<Mark, 9> cells{};

  Mark at(int i) const { return cells[size_t(i)]; }
  Mark winner() const;  // Mark::Empty when nobody has three in a row
  bool full() const;
  bool terminal() const { return winner() != Mark::Empty || full(); }

  /// Exchanges the two players' pieces.
  Board swapped() const;

  std::string to_string() const;  // '.', 'X' (P1), 'O' (P2)
  static Board from_string(const std::string& s);
};

using Heuristic = std::function<double(const Board&, Mark)>;

/// (open lines for player - open lines for opponent) / 8, where an open line
/// is one containing no opponent piece. Bounded in (-1, 1) so terminal
/// values dominate.
double open_lines_heuristic(const Board& board, Mark player);

struct MinimaxResult {
  int move = -1;
  double value = 0.0;
};

/// Depth-limited minimax from the mover's perspective: terminal values are
/// +1 (player wins), -1 (player loses), 0 (tie); the heuristic scores
/// depth-cutoff leaves. Ties between equal moves break to the lowest cell
/// index. Alpha-beta pruning preserves both the root value and that
/// tie-break. Throws ErrorCode::InvalidArgument on terminal boards.
MinimaxResult minimax(const Board& board, Mark player, int depth,
                      const Heuristic& heuristic = open_lines_heuristic);

// ---------------------------------------------------------------------------
// Task protocols
// ---------------------------------------------------------------------------

struct RepetitionResult {
  std::vector<SubTaskRecord> records;
  RepetitionSummary summary;
  bool consistency_error = false;
};

struct TaskContext {
  const CellConfig& cell;
  const TaskProtocol& protocol;
  int repetition = 0;
  uint64_t seed = 0;  // protocol seed + repetition index
  CalibrationResult calibration;
  FrameSink sink;
};

RepetitionResult run_tictactoe(TaskContext& ctx);
RepetitionResult run_clawmachine(TaskContext& ctx);
RepetitionResult run_jigsaw(TaskContext& ctx);

/// Dispatches on the protocol's task kind. Checks task/cell compatibility
/// first (jigsaw requires a suction gripper).
RepetitionResult run_repetition(TaskContext& ctx);

// shared between the task implementations -------------------------------

/// Simulated execution of one pick-and-place motion cycle. On a failed grasp
/// only the approach-and-return portion of the plan is charged.
struct MotionCharge {
  double time_s = 0.0;
  double path_m = 0.0;
};

MotionCharge charge_motion(const CellConfig& cell, const Eigen::Vector3d& pick,
                           const Eigen::Vector3d& drop, bool grasp_succeeded);

/// Maps a mask centroid to a base-frame grasp point (depth looked up at the
/// nearest pixel, z forced to table surface + grasp offset).
Eigen::Vector3d centroid_to_base(const PixelCoord& centroid, const Frame& frame,
                                 const RigidTransform& hand_eye, const CellConfig& cell);

/// Projects a table-plane region into an image-space pixel rect covering the
/// region at both table level and lifted by `height` (parallax cover).
PixelRect region_pixel_rect(const NamedRegion& region, double height, const CellConfig& cell);

/// Analytic ground-truth raster of an object's footprint as seen by the cell
/// camera (independent of the rendering + segmentation path).
PixelMask rasterize_footprint(const SceneObject& obj, const CellConfig& cell);

}  // namespace deepclaw
