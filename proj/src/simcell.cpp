#include "deepclaw/simcell.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace deepclaw {

namespace {

constexpr int kEllipseSegments = 32;

double wrap_half_pi(double a) {
  // wraps into [-pi/2, pi/2)
  while (a >= M_PI / 2.0) a -= M_PI;
  while (a < -M_PI / 2.0) a += M_PI;
  return a;
}

}  // namespace

void CellConfig::validate() const {
  if (arm.joint_speed_limit <= 0.0) {
    raise(ErrorCode::Config, "arm.joint_speed_limit: must be > 0");
  }
  if (arm.joint_accel_limit <= 0.0) {
    raise(ErrorCode::Config, "arm.joint_accel_limit: must be > 0");
  }
  if (arm.agility <= 0.0) {
    raise(ErrorCode::Config, "arm.agility: must be > 0");
  }
  if (gripper.closing_time < 0.0) {
    raise(ErrorCode::Config, "gripper.closing_time: must be >= 0");
  }
  if (!(gripper.base_success > 0.0) || gripper.base_success > 1.0) {
    raise(ErrorCode::Config, "gripper.base_success: must be in (0, 1]");
  }
  if (gripper.kind == GripperKind::Parallel && gripper.max_opening <= 0.0) {
    raise(ErrorCode::Config, "gripper.max_opening: must be > 0 for parallel grippers");
  }
  if (camera.mount_height <= 0.0) {
    raise(ErrorCode::Config, "camera.mount_height: must be > 0");
  }
  camera.intrinsics.validate();
  if (camera.pose.rotation_drift() > 1e-6) {
    raise(ErrorCode::Config, "camera.pose.rotation: not a proper rotation matrix");
  }
  if (table.x_min >= table.x_max || table.y_min >= table.y_max) {
    raise(ErrorCode::Config, "table: empty extent");
  }
  if (grasp_depth_offset < 0.0) {
    raise(ErrorCode::Config, "grasp_depth_offset: must be >= 0");
  }
}

Rgb jigsaw_texture(int texture_id, double lx, double ly, double side) {
  static const Rgb base_a[4] = {{205, 60, 40}, {40, 165, 60}, {50, 90, 205}, {190, 160, 40}};
  static const Rgb base_b[4] = {{90, 25, 60}, {15, 70, 110}, {20, 40, 85}, {80, 65, 15}};
  const int id = ((texture_id % 4) + 4) % 4;

  const double ang = std::atan2(ly, lx);  // [-pi, pi]
  const int sector = int(std::floor((ang + M_PI) / (M_PI / 4.0))) & 7;
  const Rgb base = (sector % 2 == 0) ? base_a[id] : base_b[id];

  // brightness ramp along local +x breaks the pinwheel's pi symmetry
  const double ramp = 0.55 + 0.45 * std::clamp(lx / side + 0.5, 0.0, 1.0);
  auto scaled = [&](uint8_t c) { return uint8_t(std::clamp(ramp * c, 0.0, 255.0)); };
  Rgb out{scaled(base.r), scaled(base.g), scaled(base.b)};

  // bright center dot in the (+x, +y) quadrant as an absolute orientation mark
  const double r = std::hypot(lx - side * 0.2, ly - side * 0.2);
  if (r < side * 0.12) {
    out = Rgb{250, 250, 250};
  }
  return out;
}

double SceneObject::graspable_width() const {
  if (const auto* cube = std::get_if<CubeShape>(&shape)) return cube->side;
  if (const auto* blob = std::get_if<BlobShape>(&shape)) {
    return 2.0 * std::min(blob->semi_major, blob->semi_minor);
  }
  return std::get<JigsawShape>(shape).side;
}

double SceneObject::minor_axis_world_angle() const {
  const auto* blob = std::get_if<BlobShape>(&shape);
  if (blob == nullptr || blob->semi_major == blob->semi_minor) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  // semi-major along local x: minor axis is local y, rotated by the yaw
  const double local_minor = blob->semi_major > blob->semi_minor ? M_PI / 2.0 : 0.0;
  return wrap_half_pi(yaw() + local_minor);
}

bool SceneObject::footprint_contains(double x, double y) const {
  const double c = std::cos(-yaw());
  const double s = std::sin(-yaw());
  const double dx = x - pose.translation.x();
  const double dy = y - pose.translation.y();
  const double lx = c * dx - s * dy;
  const double ly = s * dx + c * dy;
  if (const auto* cube = std::get_if<CubeShape>(&shape)) {
    return std::abs(lx) <= cube->side / 2.0 && std::abs(ly) <= cube->side / 2.0;
  }
  if (const auto* blob = std::get_if<BlobShape>(&shape)) {
    const double nx = lx / blob->semi_major;
    const double ny = ly / blob->semi_minor;
    return nx * nx + ny * ny <= 1.0;
  }
  const double half = std::get<JigsawShape>(shape).side / 2.0;
  return std::abs(lx) <= half && std::abs(ly) <= half;
}

double SceneObject::footprint_radius() const {
  if (const auto* cube = std::get_if<CubeShape>(&shape)) return cube->side * M_SQRT1_2;
  if (const auto* blob = std::get_if<BlobShape>(&shape)) {
    return std::max(blob->semi_major, blob->semi_minor);
  }
  return std::get<JigsawShape>(shape).side * M_SQRT1_2;
}

std::vector<Eigen::Vector2d> SceneObject::footprint_polygon() const {
  std::vector<Eigen::Vector2d> local;
  if (const auto* blob = std::get_if<BlobShape>(&shape)) {
    local.reserve(kEllipseSegments);
    for (int i = 0; i < kEllipseSegments; ++i) {
      const double a = 2.0 * M_PI * i / kEllipseSegments;
      local.emplace_back(blob->semi_major * std::cos(a), blob->semi_minor * std::sin(a));
    }
  } else {
    const double half = graspable_width() / 2.0;
    local = {{-half, -half}, {half, -half}, {half, half}, {-half, half}};
  }
  const double c = std::cos(yaw());
  const double s = std::sin(yaw());
  std::vector<Eigen::Vector2d> world;
  world.reserve(local.size());
  for (const auto& p : local) {
    world.emplace_back(c * p.x() - s * p.y() + pose.translation.x(),
                       s * p.x() + c * p.y() + pose.translation.y());
  }
  return world;
}

Rgb SceneObject::color_at(double x, double y) const {
  const auto* piece = std::get_if<JigsawShape>(&shape);
  if (piece == nullptr) return color;
  const double c = std::cos(-yaw());
  const double s = std::sin(-yaw());
  const double dx = x - pose.translation.x();
  const double dy = y - pose.translation.y();
  return jigsaw_texture(piece->texture_id, c * dx - s * dy, s * dx + c * dy, piece->side);
}

const NamedRegion* Scene::find_region(const std::string& name) const {
  for (const auto& r : regions) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const SceneObject* Scene::object_at(double x, double y) const {
  const SceneObject* best = nullptr;
  for (const auto& obj : objects) {
    if (!obj.footprint_contains(x, y)) continue;
    const double top = obj.pose.translation.z() + obj.height;
    if (best == nullptr || top > best->pose.translation.z() + best->height) {
      best = &obj;
    }
  }
  return best;
}

int Scene::count_in_region(const NamedRegion& region) const {
  return int(std::count_if(objects.begin(), objects.end(), [&](const SceneObject& o) {
    return region.contains(o.pose.translation.x(), o.pose.translation.y());
  }));
}

Frame render(const Scene& scene, const CellConfig& cell) {
  const CameraIntrinsics& k = cell.camera.intrinsics;
  Frame frame;
  frame.width = k.width;
  frame.height = k.height;
  frame.color.assign(size_t(k.width) * k.height, cell.table.color);
  frame.depth.assign(size_t(k.width) * k.height, 0.0);

  const RigidTransform& cam = cell.camera.pose;
  const Eigen::Vector3d origin = cam.translation;

  // Background: ray-plane intersection with the table surface. For a ray
  // direction d_cam = ((u-cx)/fx, (v-cy)/fy, 1) the parameter t equals the
  // camera-frame z of the hit point, which is exactly the depth convention.
  auto plane_hit = [&](int u, int v, double plane_z, Eigen::Vector3d* world) -> double {
    const Eigen::Vector3d dir =
        cam.rotate({(u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0});
    if (std::abs(dir.z()) < 1e-12) return -1.0;
    const double t = (plane_z - origin.z()) / dir.z();
    if (t <= 0.0) return -1.0;
    if (world != nullptr) *world = origin + t * dir;
    return t;
  };

  for (int v = 0; v < k.height; ++v) {
    for (int u = 0; u < k.width; ++u) {
      const double t = plane_hit(u, v, cell.table.surface_z, nullptr);
      frame.depth[size_t(v) * k.width + u] = t > 0.0 ? t : 0.0;
    }
  }

  // Painter's order by top height: higher objects drawn later, so they win.
  std::vector<int> order(scene.objects.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& oa = scene.objects[a];
    const auto& ob = scene.objects[b];
    return oa.pose.translation.z() + oa.height < ob.pose.translation.z() + ob.height;
  });

  for (int idx : order) {
    const SceneObject& obj = scene.objects[idx];
    const double top_z = obj.pose.translation.z() + obj.height;
    const double radius = obj.footprint_radius();

    // image-space bounding box from the footprint's bounding square
    int u0 = k.width, u1 = -1, v0 = k.height, v1 = -1;
    for (int sx = -1; sx <= 1; sx += 2) {
      for (int sy = -1; sy <= 1; sy += 2) {
        const Eigen::Vector3d corner{obj.pose.translation.x() + sx * radius,
                                     obj.pose.translation.y() + sy * radius, top_z};
        const Eigen::Vector3d in_cam = cam.inverse().apply(corner);
        if (in_cam.z() <= 0.0) continue;
        const Projection proj = project(in_cam, k);
        u0 = std::min(u0, int(std::floor(proj.pixel.u)));
        u1 = std::max(u1, int(std::ceil(proj.pixel.u)));
        v0 = std::min(v0, int(std::floor(proj.pixel.v)));
        v1 = std::max(v1, int(std::ceil(proj.pixel.v)));
      }
    }
    u0 = std::max(u0, 0);
    v0 = std::max(v0, 0);
    u1 = std::min(u1, k.width - 1);
    v1 = std::min(v1, k.height - 1);

    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        Eigen::Vector3d world;
        const double t = plane_hit(u, v, top_z, &world);
        if (t <= 0.0) continue;
        if (!obj.footprint_contains(world.x(), world.y())) continue;
        frame.color[size_t(v) * k.width + u] = obj.color_at(world.x(), world.y());
        frame.depth[size_t(v) * k.width + u] = t;
      }
    }
  }
  return frame;
}

double move_time(std::span<const Eigen::Vector3d> waypoints, const CellConfig& cell) {
  if (waypoints.size() < 2) {
    raise(ErrorCode::InvalidArgument, "move_time: a path needs at least 2 waypoints");
  }
  const double v = cell.arm.joint_speed_limit;
  const double a = cell.arm.joint_accel_limit;
  double total = 0.0;
  for (size_t i = 1; i < waypoints.size(); ++i) {
    const double d = (waypoints[i] - waypoints[i - 1]).norm();
    if (d >= v * v / a) {
      total += d / v + v / a;  // trapezoidal profile reaches cruise speed
    } else {
      total += 2.0 * std::sqrt(d / a);  // triangular profile
    }
  }
  return total * cell.arm.agility;
}

double grasp_success_probability(const SceneObject& obj, const CellConfig& cell, double angle) {
  const GripperConfig& g = cell.gripper;
  if (g.kind == GripperKind::Suction) {
    return g.base_success;
  }
  const double width_margin =
      std::clamp((g.max_opening - obj.graspable_width()) / g.max_opening, 0.0, 1.0);
  const double minor = obj.minor_axis_world_angle();
  double alignment = 1.0;
  if (!std::isnan(minor)) {
    alignment = std::pow(std::cos(angle - minor), 2);
  }
  return g.base_success * width_margin * alignment;
}

GraspOutcome execute_grasp(Scene& scene, const CellConfig& cell, const GraspRequest& grasp,
                           Rng& rng) {
  if (!cell.table.contains(grasp.point.x(), grasp.point.y()) ||
      grasp.point.z() < cell.table.surface_z) {
    raise(ErrorCode::OutOfWorkspace, "execute_grasp: grasp point outside the workspace");
  }
  const SceneObject* hit = scene.object_at(grasp.point.x(), grasp.point.y());
  const double draw = rng.uniform();
  GraspOutcome outcome;
  if (hit == nullptr) {
    return outcome;  // a miss, not an error
  }
  const double p = grasp_success_probability(*hit, cell, grasp.angle);
  if (draw < p) {
    outcome.success = true;
    const size_t index = size_t(hit - scene.objects.data());
    outcome.object = scene.objects[index];
    scene.objects.erase(scene.objects.begin() + long(index));
  }
  return outcome;
}

void place(Scene& scene, SceneObject held, const Eigen::Vector3d& target, double angle,
           const CellConfig& cell) {
  if (!cell.table.contains(target.x(), target.y())) {
    raise(ErrorCode::OutOfWorkspace, "place: target outside the table extents");
  }
  held.pose = RigidTransform::rot_z(
      angle, {target.x(), target.y(), cell.table.surface_z});
  scene.objects.push_back(std::move(held));
}

void place_nonoverlapping(Scene& scene, SceneObject obj, const NamedRegion& region,
                          double surface_z, Rng& rng, double yaw_step, int max_attempts) {
  const double r = obj.footprint_radius();
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    const double x = rng.uniform(region.cx - region.half_x + r, region.cx + region.half_x - r);
    const double y = rng.uniform(region.cy - region.half_y + r, region.cy + region.half_y - r);
    double yaw = rng.uniform(0.0, 2.0 * M_PI);
    if (yaw_step > 0.0) {
      yaw = yaw_step * double(rng.uniform_u64(uint64_t(std::round(2.0 * M_PI / yaw_step))));
    }
    bool clear = true;
    for (const auto& other : scene.objects) {
      const double dx = other.pose.translation.x() - x;
      const double dy = other.pose.translation.y() - y;
      if (std::hypot(dx, dy) < r + other.footprint_radius()) {
        clear = false;
        break;
      }
    }
    if (!clear) continue;
    obj.pose = RigidTransform::rot_z(yaw, {x, y, surface_z});
    scene.objects.push_back(std::move(obj));
    return;
  }
  raise(ErrorCode::InvalidArgument,
        "place_nonoverlapping: no free pose found in " + region.name);
}

}  // namespace deepclaw
