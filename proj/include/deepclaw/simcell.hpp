#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "deepclaw/geometry.hpp"
#include "deepclaw/rng.hpp"

namespace deepclaw {

struct Rgb {
  uint8_t r = 0;
  uint8_t g = 0;
  uint8_t b = 0;

  bool operator==(const Rgb&) const = default;
};

inline double color_distance(const Rgb& a, const Rgb& b) {
  const double dr = double(a.r) - double(b.r);
  const double dg = double(a.g) - double(b.g);
  const double db = double(a.b) - double(b.b);
  return std::sqrt(dr * dr + dg * dg + db * db);
}

enum class GripperKind { Parallel, Suction };

struct ArmConfig {
  int dof = 6;
  double joint_speed_limit = 0.7;   // m/s
  double joint_accel_limit = 1.6;   // m/s^2
  double agility = 1.0;             // multiplies total move time
  RigidTransform home_pose;
};

struct GripperConfig {
  GripperKind kind = GripperKind::Parallel;
  double max_opening = 0.0;   // meters; parallel only
  double closing_time = 0.0;  // seconds
  double base_success = 1.0;  // probability
};

struct CameraConfig {
  CameraIntrinsics intrinsics;
  RigidTransform pose;  // camera -> base, ground truth
  double mount_height = 1.0;
};

struct TableConfig {
  double x_min = 0.0;
  double x_max = 1.0;
  double y_min = -0.5;
  double y_max = 0.5;
  double surface_z = 0.0;
  Rgb color{120, 120, 120};

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

/// One simulated robot cell: arm, gripper, camera and table. Loaded from a
/// JSON file; three presets mirroring common hardware combinations ship with
/// the library.
struct CellConfig {
  std::string name;
  ArmConfig arm;
  GripperConfig gripper;
  CameraConfig camera;
  TableConfig table;
  uint64_t seed = 0;
  double grasp_depth_offset = 0.005;  // grasp z above the table top, meters

  void validate() const;  // throws ErrorCode::Config on violations
};

struct CubeShape {
  double side = 0.0;
};

struct BlobShape {
  double semi_major = 0.0;  // along local x
  double semi_minor = 0.0;  // along local y
};

struct JigsawShape {
  double side = 0.0;
  int texture_id = 0;
};

using Shape = std::variant<CubeShape, BlobShape, JigsawShape>;

/// Procedural piece texture: an eight-sector pinwheel in two id-specific
/// colors with a brightness ramp along local +x, so pieces are separable by
/// color and their orientation is recoverable by correlation.
Rgb jigsaw_texture(int texture_id, double lx, double ly, double side);

struct SceneObject {
  int id = 0;
  Shape shape;
  RigidTransform pose;  // object -> base; translation z is the resting base
  Rgb color;
  double height = 0.0;

  double yaw() const { return std::atan2(pose.rotation(1, 0), pose.rotation(0, 0)); }

  /// Width across the narrow footprint direction (what a gripper must span).
  double graspable_width() const;

  /// World-frame angle of the footprint minor axis; NaN when the footprint is
  /// rotationally symmetric (squares, circles) and no such axis exists.
  double minor_axis_world_angle() const;

  bool footprint_contains(double x, double y) const;

  /// Bounding-circle radius of the footprint, for overlap rejection.
  double footprint_radius() const;

  /// Footprint outline in world coordinates (ccw; ellipses polygonized).
  std::vector<Eigen::Vector2d> footprint_polygon() const;

  Rgb color_at(double x, double y) const;  // world point on the footprint
};

struct NamedRegion {
  std::string name;
  double cx = 0.0;
  double cy = 0.0;
  double half_x = 0.0;
  double half_y = 0.0;

  bool contains(double x, double y) const {
    return std::abs(x - cx) <= half_x && std::abs(y - cy) <= half_y;
  }
};

/// Ground-truth world state: what the camera renders and the gripper mutates.
struct Scene {
  std::vector<SceneObject> objects;
  std::vector<NamedRegion> regions;

  const NamedRegion* find_region(const std::string& name) const;

  /// Topmost object whose footprint contains (x, y), or nullptr.
  const SceneObject* object_at(double x, double y) const;

  int count_in_region(const NamedRegion& region) const;
};

struct Frame {
  int width = 0;
  int height = 0;
  std::vector<Rgb> color;
  std::vector<double> depth;  // camera-frame z, meters

  const Rgb& at(int u, int v) const { return color[size_t(v) * width + u]; }
  double depth_at(int u, int v) const { return depth[size_t(v) * width + u]; }
};

/// Flat-shaded top-view rasterization: each object's footprint painted in
/// object order of ascending top height over a uniform table background.
/// Depth is the camera-frame z of the first surface hit per pixel.
Frame render(const Scene& scene, const CellConfig& cell);

/// Trapezoidal-profile execution time over straight waypoint segments with
/// the cell's speed and acceleration limits, scaled by arm agility.
/// Needs at least 2 waypoints.
double move_time(std::span<const Eigen::Vector3d> waypoints, const CellConfig& cell);

struct GraspRequest {
  Eigen::Vector3d point;  // base frame
  double angle = 0.0;     // yaw about base z
};

struct GraspOutcome {
  bool success = false;
  std::optional<SceneObject> object;  // removed from the scene on success
};

/// Success model: parallel grippers succeed with
///   base_success * width_margin * alignment,
/// width_margin = clamp((max_opening - graspable_width) / max_opening, 0, 1),
/// alignment = cos^2(angle - minor_axis_angle) (1 for symmetric footprints);
/// suction succeeds with base_success anywhere on the footprint.
/// A grasp over empty table is a miss, not an error.
GraspOutcome execute_grasp(Scene& scene, const CellConfig& cell, const GraspRequest& grasp,
                           Rng& rng);

/// Closed-form per-attempt success probability of a grasp on `obj` (the model
/// execute_grasp draws against).
double grasp_success_probability(const SceneObject& obj, const CellConfig& cell, double angle);

/// Re-enters a held object at (target.x, target.y) on the table surface with
/// the given yaw. Throws ErrorCode::OutOfWorkspace outside the table extents.
void place(Scene& scene, SceneObject held, const Eigen::Vector3d& target, double angle,
           const CellConfig& cell);

/// Rejection-samples a non-overlapping pose for `obj` inside the region
/// (bounding-circle test against existing objects) and adds it to the scene.
/// yaw_step > 0 restricts yaws to multiples of that step. Throws after
/// max_attempts failures.
void place_nonoverlapping(Scene& scene, SceneObject obj, const NamedRegion& region,
                          double surface_z, Rng& rng, double yaw_step = 0.0,
                          int max_attempts = 10000);

}  // namespace deepclaw
