#pragma once

#include <vector>

#include "deepclaw/geometry.hpp"

namespace deepclaw {

struct CellConfig;

/// Paired 3D observations of the same physical points: once through the
/// robot's forward kinematics (base frame) and once through the camera
/// (camera frame). Indices correspond.
struct PointCorrespondences {
  std::vector<Eigen::Vector3d> robot_points;
  std::vector<Eigen::Vector3d> camera_points;
  int skipped_poses = 0;  // poses rejected because the board left the frustum
};

struct CalibrationResult {
  RigidTransform hand_eye;  // camera -> base
  double rms_residual = 0.0;
  std::vector<double> per_point_residuals;
};

/// Least-squares rigid registration (Kabsch/Umeyama with scale fixed to 1).
/// Finds R, t minimizing sum |robot_i - (R * camera_i + t)|^2 via SVD of the
/// cross-covariance, with the det-guard so the result is always a proper
/// rotation even for planar point sets.
///
/// Throws ErrorCode::DegenerateInput for fewer than 3 points or a collinear
/// configuration (two smallest singular values below 1e-12 of the largest).
CalibrationResult register_rigid(const PointCorrespondences& c);

/// Simulates the calibration data collection: for each sampled TCP pose the
/// known TCP->board transform yields the board corner positions in the base
/// frame, and the cell's ground-truth camera pose yields them in the camera
/// frame (plus optional isotropic Gaussian noise, sigma in meters). Poses
/// whose corners leave the camera frustum are skipped; if every pose is
/// skipped, ErrorCode::NoObservations is thrown.
PointCorrespondences collect_checkerboard_correspondences(const CellConfig& cell,
                                                          int n_poses,
                                                          double noise_sigma,
                                                          uint64_t seed);

struct VerificationReport {
  double max_error = 0.0;   // meters
  double mean_error = 0.0;  // meters
  int n_probe = 0;
};

/// Pushes fresh probe points through the ground-truth camera pose and through
/// the calibrated hand-eye estimate; reports worst-case and mean positional
/// disagreement in the base frame.
VerificationReport verify_calibration(const CellConfig& cell, const CalibrationResult& result,
                                      int n_probe, uint64_t seed);

/// Side length of the calibration board carried on the tool flange.
inline constexpr double kCalibrationBoardSide = 0.06;

/// Known TCP -> board-center offset along the tool z axis.
inline constexpr double kBoardTcpOffset = 0.05;

}  // namespace deepclaw
