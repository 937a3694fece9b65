#include "deepclaw/geometry.hpp"

#include <cmath>

namespace deepclaw {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::Config: return "config";
    case ErrorCode::Io: return "io";
    case ErrorCode::DegenerateInput: return "degenerate-input";
    case ErrorCode::NoObservations: return "no-observations";
    case ErrorCode::OutOfWorkspace: return "out-of-workspace";
    case ErrorCode::Consistency: return "consistency";
    case ErrorCode::NoGrasp: return "no-grasp";
    case ErrorCode::Internal: return "internal";
  }
  return "unknown";
}

RigidTransform RigidTransform::from_translation(const Eigen::Vector3d& t) {
  RigidTransform out;
  out.translation = t;
  return out;
}

RigidTransform RigidTransform::rot_z(double yaw) {
  RigidTransform out;
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  out.rotation << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return out;
}

RigidTransform RigidTransform::rot_z(double yaw, const Eigen::Vector3d& t) {
  RigidTransform out = rot_z(yaw);
  out.translation = t;
  return out;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform out;
  out.rotation = rotation.transpose();
  out.translation = -(out.rotation * translation);
  return out;
}

double RigidTransform::rotation_drift() const {
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  const double det = std::abs(rotation.determinant() - 1.0);
  return std::max(ortho, det);
}

void RigidTransform::orthonormalize() {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    Eigen::Matrix3d u = svd.matrixU();
    u.col(2) *= -1.0;
    r = u * svd.matrixV().transpose();
  }
  rotation = r;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform out;
  out.rotation = a.rotation * b.rotation;
  out.translation = a.rotation * b.translation + a.translation;
  if (out.rotation_drift() > 1e-12) {
    out.orthonormalize();
  }
  return out;
}

void CameraIntrinsics::validate() const {
  if (fx <= 0.0 || fy <= 0.0) {
    raise(ErrorCode::InvalidArgument, "camera intrinsics: fx and fy must be > 0");
  }
  if (width <= 0 || height <= 0) {
    raise(ErrorCode::InvalidArgument, "camera intrinsics: width and height must be > 0");
  }
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    raise(ErrorCode::InvalidArgument,
          "camera intrinsics: principal point must lie inside the image");
  }
}

Eigen::Vector3d deproject(const PixelCoord& p, double depth, const CameraIntrinsics& k) {
  if (!(depth > 0.0)) {
    raise(ErrorCode::InvalidArgument, "deproject: depth must be > 0");
  }
  return {depth * (p.u - k.cx) / k.fx, depth * (p.v - k.cy) / k.fy, depth};
}

Projection project(const Eigen::Vector3d& p, const CameraIntrinsics& k) {
  if (!(p.z() > 0.0)) {
    raise(ErrorCode::InvalidArgument, "project: point is behind the camera (z <= 0)");
  }
  Projection out;
  out.pixel.u = k.fx * p.x() / p.z() + k.cx;
  out.pixel.v = k.fy * p.y() / p.z() + k.cy;
  out.depth = p.z();
  return out;
}

double rotate_plane_angle(double angle, const RigidTransform& t) {
  const Eigen::Vector3d d = t.rotate({std::cos(angle), std::sin(angle), 0.0});
  return std::atan2(d.y(), d.x());
}

}  // namespace deepclaw
