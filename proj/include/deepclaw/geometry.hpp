#pragma once

#include <Eigen/Dense>

#include "deepclaw/error.hpp"

namespace deepclaw {

/// Proper rigid transform in SE(3). Maps points from the source frame into
/// the destination frame: p_dst = rotation * p_src + translation.
/// Rotation is kept orthonormal with det +1; compose() re-orthonormalizes
/// when accumulated drift exceeds 1e-12.
struct RigidTransform {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Eigen::Vector3d& t);
  static RigidTransform rot_z(double yaw);
  static RigidTransform rot_z(double yaw, const Eigen::Vector3d& t);

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  /// Rotates a direction vector (no translation).
  Eigen::Vector3d rotate(const Eigen::Vector3d& d) const { return rotation * d; }

  RigidTransform inverse() const;

  /// Orthonormality / det drift from a proper rotation.
  double rotation_drift() const;

  bool is_valid(double tol = 1e-9) const { return rotation_drift() <= tol; }

  /// Projects the rotation block back onto SO(3) (nearest proper rotation).
  void orthonormalize();
};

/// result = a after b (applies b first, then a).
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);

inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return compose(a, b);
}

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  /// Throws ErrorCode::InvalidArgument on violated invariants.
  void validate() const;
};

/// Image-plane coordinates. Fractional values are meaningful (centroids,
/// projections); u grows rightward, v downward, origin at the top-left.
struct PixelCoord {
  double u = 0.0;
  double v = 0.0;
};

struct Projection {
  PixelCoord pixel;
  double depth = 0.0;
};

/// Pinhole back-projection: pixel plus depth (camera-frame z, meters) to a
/// camera-frame point. depth must be > 0.
Eigen::Vector3d deproject(const PixelCoord& p, double depth, const CameraIntrinsics& k);

/// Pinhole projection of a camera-frame point with z > 0.
Projection project(const Eigen::Vector3d& p, const CameraIntrinsics& k);

/// Yaw (about +z) of a transformed in-plane direction. Used to carry grasp
/// angles between the image plane and the robot base frame.
double rotate_plane_angle(double angle, const RigidTransform& t);

}  // namespace deepclaw
