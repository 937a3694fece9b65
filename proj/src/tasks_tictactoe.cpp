#include <cmath>

#include "deepclaw/tasks.hpp"

namespace deepclaw {

namespace {

constexpr Rgb kGreenPiece{40, 170, 60};   // P1
constexpr Rgb kBluePiece{45, 80, 210};    // P2
constexpr Rgb kDistractor{200, 40, 40};

constexpr int kMaxSubtasksPerGame = 200;

Eigen::Vector2d board_cell_center(const TicTacToeParams& p, int cell_index) {
  const int row = cell_index / 3;
  const int col = cell_index % 3;
  return {p.board_cx + (row - 1) * p.cell_size, p.board_cy + (col - 1) * p.cell_size};
}

Scene build_scene(const TicTacToeParams& p, const CellConfig& cell) {
  Scene scene;
  const double staging_dy = 1.5 * p.cell_size + 0.12;
  const double spacing = std::max(2.2 * p.piece_side, 0.06);

  NamedRegion board{"board", p.board_cx, p.board_cy, 1.5 * p.cell_size, 1.5 * p.cell_size};
  scene.regions.push_back(board);

  int id = 0;
  for (int player = 0; player < 2; ++player) {
    const double y = p.board_cy + (player == 0 ? -staging_dy : staging_dy);
    for (int i = 0; i < p.pieces_per_player; ++i) {
      SceneObject piece;
      piece.id = id++;
      piece.shape = CubeShape{p.piece_side};
      piece.color = player == 0 ? kGreenPiece : kBluePiece;
      piece.height = p.piece_height;
      const double x = p.board_cx + (i - (p.pieces_per_player - 1) / 2.0) * spacing;
      piece.pose = RigidTransform::from_translation({x, y, cell.table.surface_z});
      scene.objects.push_back(piece);
    }
  }
  for (const auto& d : p.distractors) {
    SceneObject stray;
    stray.id = 100 + int(&d - p.distractors.data());
    stray.shape = CubeShape{p.piece_side};
    stray.color = kDistractor;
    stray.height = p.piece_height;
    stray.pose = RigidTransform::from_translation({d.x(), d.y(), cell.table.surface_z});
    scene.objects.push_back(stray);
  }
  return scene;
}

}  // namespace

RepetitionResult run_tictactoe(TaskContext& ctx) {
  const TicTacToeParams& params = ctx.protocol.tictactoe;
  const CellConfig& cell = ctx.cell;
  const RigidTransform& hand_eye = ctx.calibration.hand_eye;
  const std::vector<Rgb> palette{kGreenPiece, kBluePiece};

  Rng rng(ctx.seed);
  Scene scene = build_scene(params, cell);
  const NamedRegion& board_region = scene.regions.front();

  const SegmentationStage segment = make_segmentation_stage(ctx.protocol.stages.segmentation);
  const SegmentationParams seg_params{cell.table.color};

  RepetitionResult result;
  Board board;
  Mark mover = Mark::P1;

  auto abort_with_consistency_error = [&](int index, const std::string& message) {
    SubTaskRecord rec;
    rec.repetition = ctx.repetition;
    rec.index = index;
    rec.outcome = "consistency-error";
    rec.extra["error"] = message;
    rec.extra["board_after"] = board.to_string();
    result.records.push_back(std::move(rec));
    result.consistency_error = true;
  };

  int subtask_index = 0;
  while (!board.terminal()) {
    if (subtask_index >= kMaxSubtasksPerGame) {
      abort_with_consistency_error(subtask_index, "sub-task cap reached without game end");
      break;
    }

    const int mover_label = mover == Mark::P1 ? 0 : 1;
    const MinimaxResult decision = minimax(board, mover, params.depth);
    const Eigen::Vector2d target_xy = board_cell_center(params, decision.move);

    // the board cell the policy chose must be physically free
    bool occupied = false;
    for (const auto& obj : scene.objects) {
      if (std::abs(obj.pose.translation.x() - target_xy.x()) <= params.cell_size / 2.0 &&
          std::abs(obj.pose.translation.y() - target_xy.y()) <= params.cell_size / 2.0) {
        occupied = true;
        break;
      }
    }
    if (occupied) {
      abort_with_consistency_error(
          subtask_index, "board cell " + std::to_string(decision.move) +
                             " is occupied in the scene but empty in the game state");
      break;
    }

    SubTaskRecord rec;
    rec.repetition = ctx.repetition;
    rec.index = subtask_index;
    rec.extra["player"] = mover == Mark::P1 ? 1 : 2;
    rec.extra["board_cell"] = decision.move;
    rec.extra["move_value"] = decision.value;

    const Eigen::Vector3d target{target_xy.x(), target_xy.y(),
                                 cell.table.surface_z + cell.grasp_depth_offset};

    bool placed = false;
    bool vision_failed = false;
    for (int pass = 0; pass < 1 + params.max_retries && !placed; ++pass) {
      const Frame frame = render(scene, cell);
      for (auto& ref : ctx.sink(frame)) rec.frame_refs.push_back(std::move(ref));

      const SegmentationResult seg = segment(frame, seg_params);
      const RecognitionResult recog = recognize_color(seg, frame, palette);

      std::vector<size_t> candidates;
      std::vector<Eigen::Vector3d> candidate_points;
      for (size_t i = 0; i < seg.masks.size(); ++i) {
        if (recog.labels[i] != mover_label) continue;
        const Eigen::Vector3d base = centroid_to_base(seg.centroids[i], frame, hand_eye, cell);
        if (board_region.contains(base.x(), base.y())) continue;  // already played
        candidates.push_back(i);
        candidate_points.push_back(base);
      }
      if (candidates.empty()) {
        abort_with_consistency_error(subtask_index,
                                     "no staged piece of the mover's color is visible");
        vision_failed = true;
        break;
      }

      const size_t chosen = size_t(rng.uniform_int(int(candidates.size())));
      const size_t mask_idx = candidates[chosen];
      const Eigen::Vector3d pick = candidate_points[chosen];
      const double grasp_angle =
          rotate_plane_angle(seg.principal_angles[mask_idx], hand_eye);

      GraspOutcome outcome = execute_grasp(scene, cell, {pick, grasp_angle}, rng);
      ++rec.grasp_attempts;
      const MotionCharge charge = charge_motion(cell, pick, target, outcome.success);
      rec.t_sub += charge.time_s;
      rec.path_length_m += charge.path_m;

      if (outcome.success) {
        rec.extra["piece_object_id"] = outcome.object->id;
        place(scene, *outcome.object, target, 0.0, cell);
        placed = true;
      } else {
        ++rec.grasp_failures;
      }
    }
    if (vision_failed) break;

    if (placed) {
      board.cells[size_t(decision.move)] = mover;
      rec.outcome = "success";
    } else {
      rec.outcome = "failed";
    }
    rec.extra["board_after"] = board.to_string();

    if (board.terminal()) {
      const Mark won = board.winner();
      rec.extra["game_result"] =
          won == Mark::Empty ? "tie" : (won == Mark::P1 ? "p1_win" : "p2_win");
    }

    rec.stages = {{"segmentation", 0.0},
                  {"recognition", 0.0},
                  {"grasp_planning", 0.0},
                  {"motion_planning", 0.0},
                  {"motion_execution", rec.t_sub},
                  {"gripper", rec.grasp_attempts * cell.gripper.closing_time}};
    result.records.push_back(std::move(rec));
    ++subtask_index;

    if (placed) {
      mover = opponent(mover);
    }
  }

  result.summary = summarize_repetition(TaskKind::TicTacToe, ctx.repetition, result.records);
  return result;
}

}  // namespace deepclaw
