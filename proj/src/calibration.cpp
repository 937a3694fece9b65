#include "deepclaw/calibration.hpp"

#include <cmath>

#include "deepclaw/simcell.hpp"

namespace deepclaw {

namespace {

/// Local corner coordinates of the calibration board (board frame, z = 0).
std::array<Eigen::Vector3d, 4> board_corners() {
  const double h = kCalibrationBoardSide / 2.0;
  return {Eigen::Vector3d{-h, -h, 0.0}, {h, -h, 0.0}, {h, h, 0.0}, {-h, h, 0.0}};
}

bool in_frustum(const Eigen::Vector3d& p_cam, const CameraIntrinsics& k) {
  if (p_cam.z() <= 0.0) return false;
  const Projection proj = project(p_cam, k);
  return proj.pixel.u >= 0.0 && proj.pixel.u < k.width && proj.pixel.v >= 0.0 &&
         proj.pixel.v < k.height;
}

}  // namespace

CalibrationResult register_rigid(const PointCorrespondences& c) {
  const size_t n = c.camera_points.size();
  if (n != c.robot_points.size()) {
    raise(ErrorCode::InvalidArgument, "register_rigid: point lists differ in length");
  }
  if (n < 3) {
    raise(ErrorCode::DegenerateInput, "register_rigid: need at least 3 correspondences");
  }

  Eigen::Vector3d cam_centroid = Eigen::Vector3d::Zero();
  Eigen::Vector3d rob_centroid = Eigen::Vector3d::Zero();
  for (size_t i = 0; i < n; ++i) {
    cam_centroid += c.camera_points[i];
    rob_centroid += c.robot_points[i];
  }
  cam_centroid /= double(n);
  rob_centroid /= double(n);

  Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < n; ++i) {
    h += (c.camera_points[i] - cam_centroid) * (c.robot_points[i] - rob_centroid).transpose();
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sigma = svd.singularValues();
  if (sigma(1) < 1e-12 * sigma(0)) {
    raise(ErrorCode::DegenerateInput,
          "register_rigid: collinear or degenerate point configuration");
  }

  // det guard keeps the solution a proper rotation even when the best
  // unconstrained fit would be a reflection (planar point sets).
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;

  CalibrationResult result;
  result.hand_eye.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  result.hand_eye.translation = rob_centroid - result.hand_eye.rotation * cam_centroid;

  result.per_point_residuals.reserve(n);
  double sum_sq = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double r = (c.robot_points[i] - result.hand_eye.apply(c.camera_points[i])).norm();
    result.per_point_residuals.push_back(r);
    sum_sq += r * r;
  }
  result.rms_residual = std::sqrt(sum_sq / double(n));
  return result;
}

PointCorrespondences collect_checkerboard_correspondences(const CellConfig& cell, int n_poses,
                                                          double noise_sigma, uint64_t seed) {
  Rng rng(seed);
  const RigidTransform base_from_cam = cell.camera.pose;
  const RigidTransform cam_from_base = base_from_cam.inverse();
  const RigidTransform board_from_tcp =
      RigidTransform::from_translation({0.0, 0.0, kBoardTcpOffset});

  PointCorrespondences out;
  const TableConfig& table = cell.table;
  const double margin = 0.1 * std::min(table.x_max - table.x_min, table.y_max - table.y_min);

  for (int i = 0; i < n_poses; ++i) {
    // TCP pose sampled over the table inside the arm's comfortable band
    const double x = rng.uniform(table.x_min + margin, table.x_max - margin);
    const double y = rng.uniform(table.y_min + margin, table.y_max - margin);
    const double z = rng.uniform(table.surface_z + 0.15, table.surface_z + 0.45);
    const double yaw = rng.uniform(0.0, 2.0 * M_PI);
    const RigidTransform tcp = RigidTransform::rot_z(yaw, {x, y, z});
    const RigidTransform board = tcp * board_from_tcp;

    std::array<Eigen::Vector3d, 4> base_pts;
    std::array<Eigen::Vector3d, 4> cam_pts;
    bool visible = true;
    int corner = 0;
    for (const auto& local : board_corners()) {
      const Eigen::Vector3d in_base = board.apply(local);
      const Eigen::Vector3d in_cam = cam_from_base.apply(in_base);
      if (!in_frustum(in_cam, cell.camera.intrinsics)) {
        visible = false;
        break;
      }
      base_pts[corner] = in_base;
      cam_pts[corner] = in_cam;
      ++corner;
    }
    if (!visible) {
      ++out.skipped_poses;
      continue;
    }
    for (int j = 0; j < 4; ++j) {
      Eigen::Vector3d noisy = cam_pts[j];
      if (noise_sigma > 0.0) {
        noisy += Eigen::Vector3d{rng.gaussian(0.0, noise_sigma), rng.gaussian(0.0, noise_sigma),
                                 rng.gaussian(0.0, noise_sigma)};
      }
      out.robot_points.push_back(base_pts[j]);
      out.camera_points.push_back(noisy);
    }
  }

  if (out.robot_points.empty()) {
    raise(ErrorCode::NoObservations,
          "collect_checkerboard_correspondences: no usable board observations");
  }
  return out;
}

VerificationReport verify_calibration(const CellConfig& cell, const CalibrationResult& result,
                                      int n_probe, uint64_t seed) {
  Rng rng(seed);
  const RigidTransform cam_from_base = cell.camera.pose.inverse();
  VerificationReport report;
  report.n_probe = n_probe;
  double sum = 0.0;
  for (int i = 0; i < n_probe; ++i) {
    const Eigen::Vector3d truth{rng.uniform(cell.table.x_min, cell.table.x_max),
                                rng.uniform(cell.table.y_min, cell.table.y_max),
                                rng.uniform(cell.table.surface_z, cell.table.surface_z + 0.3)};
    const Eigen::Vector3d through_estimate = result.hand_eye.apply(cam_from_base.apply(truth));
    const double err = (through_estimate - truth).norm();
    report.max_error = std::max(report.max_error, err);
    sum += err;
  }
  report.mean_error = n_probe > 0 ? sum / n_probe : 0.0;
  return report;
}

}  // namespace deepclaw
