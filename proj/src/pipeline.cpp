#include "deepclaw/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace deepclaw {

bool PixelMask::contains(int u, int v) const {
  if (u < 0 || u >= width || v < 0 || v >= height) return false;
  return std::binary_search(pixels.begin(), pixels.end(), int32_t(v) * width + u);
}

SegmentationResult segment_contour(const Frame& frame, const SegmentationParams& params) {
  const int w = frame.width;
  const int h = frame.height;
  std::vector<int32_t> label(size_t(w) * h, -1);

  auto is_foreground = [&](int idx) {
    return color_distance(frame.color[idx], params.background) > params.threshold;
  };

  SegmentationResult result;
  std::vector<int32_t> component;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const int32_t start = int32_t(v) * w + u;
      if (label[start] != -1 || !is_foreground(start)) continue;

      component.clear();
      std::queue<int32_t> frontier;
      frontier.push(start);
      label[start] = int32_t(result.masks.size());
      while (!frontier.empty()) {
        const int32_t idx = frontier.front();
        frontier.pop();
        component.push_back(idx);
        const int cu = idx % w;
        const int cv = idx / w;
        const int neighbors[4][2] = {{cu - 1, cv}, {cu + 1, cv}, {cu, cv - 1}, {cu, cv + 1}};
        for (const auto& n : neighbors) {
          if (n[0] < 0 || n[0] >= w || n[1] < 0 || n[1] >= h) continue;
          const int32_t nidx = int32_t(n[1]) * w + n[0];
          if (label[nidx] != -1 || !is_foreground(nidx)) continue;
          label[nidx] = label[start];
          frontier.push(nidx);
        }
      }
      if (int(component.size()) < params.min_area) {
        continue;  // stays labeled so we do not revisit it
      }

      std::sort(component.begin(), component.end());
      PixelMask mask;
      mask.width = w;
      mask.height = h;
      mask.pixels = component;

      PixelRect box{w, h, -1, -1};
      double su = 0.0, sv = 0.0;
      for (int32_t idx : component) {
        const int cu = idx % w;
        const int cv = idx / w;
        box.u0 = std::min(box.u0, cu);
        box.u1 = std::max(box.u1, cu);
        box.v0 = std::min(box.v0, cv);
        box.v1 = std::max(box.v1, cv);
        su += cu;
        sv += cv;
      }
      const double n = double(component.size());
      const PixelCoord centroid{su / n, sv / n};

      // second central moments -> principal axes; the minor axis is the
      // major direction rotated a quarter turn
      double mu20 = 0.0, mu02 = 0.0, mu11 = 0.0;
      for (int32_t idx : component) {
        const double du = (idx % w) - centroid.u;
        const double dv = (idx / w) - centroid.v;
        mu20 += du * du;
        mu02 += dv * dv;
        mu11 += du * dv;
      }
      const double major = 0.5 * std::atan2(2.0 * mu11, mu20 - mu02);
      double minor = major + M_PI / 2.0;
      while (minor >= M_PI) minor -= M_PI;
      while (minor < 0.0) minor += M_PI;

      result.masks.push_back(std::move(mask));
      result.boxes.push_back(box);
      result.centroids.push_back(centroid);
      result.principal_angles.push_back(minor);
    }
  }
  return result;
}

RecognitionResult recognize_color(const SegmentationResult& seg, const Frame& frame,
                                  const std::vector<Rgb>& palette) {
  if (palette.empty()) {
    raise(ErrorCode::InvalidArgument, "recognize_color: palette must not be empty");
  }
  RecognitionResult result;
  for (const auto& mask : seg.masks) {
    double sr = 0.0, sg = 0.0, sb = 0.0;
    for (int32_t idx : mask.pixels) {
      sr += frame.color[idx].r;
      sg += frame.color[idx].g;
      sb += frame.color[idx].b;
    }
    const double n = double(mask.pixels.size());
    const Rgb mean{uint8_t(std::lround(sr / n)), uint8_t(std::lround(sg / n)),
                   uint8_t(std::lround(sb / n))};

    int best = 0;
    double inv_sum = 0.0;
    double best_dist = std::numeric_limits<double>::infinity();
    std::vector<double> inv(palette.size());
    for (size_t i = 0; i < palette.size(); ++i) {
      const double d = color_distance(mean, palette[i]);
      inv[i] = 1.0 / std::max(d, 1e-9);
      inv_sum += inv[i];
      if (d < best_dist - 1e-12) {
        best_dist = d;
        best = int(i);
      }
    }
    result.labels.push_back(best);
    result.confidences.push_back(inv[best] / inv_sum);
  }
  return result;
}

Template render_object_template(const SceneObject& obj, const CellConfig& cell, int label) {
  Scene lone;
  SceneObject canonical = obj;
  canonical.pose = RigidTransform::from_translation(
      {obj.pose.translation.x(), obj.pose.translation.y(), cell.table.surface_z});
  lone.objects.push_back(canonical);

  const Frame frame = render(lone, cell);
  const SegmentationResult seg =
      segment_contour(frame, SegmentationParams{cell.table.color});
  if (seg.masks.size() != 1) {
    raise(ErrorCode::Internal, "render_object_template: expected exactly one component");
  }

  Template tpl;
  tpl.label = label;
  const PixelCoord c = seg.centroids[0];
  for (int32_t idx : seg.masks[0].pixels) {
    tpl.offsets.emplace_back((idx % frame.width) - c.u, (idx / frame.width) - c.v);
    tpl.colors.push_back(frame.color[idx]);
  }
  return tpl;
}

namespace {

double correlate(const Template& tpl, const Frame& frame, const PixelCoord& center,
                 double rotation) {
  const double cs = std::cos(rotation);
  const double sn = std::sin(rotation);
  double sum_a = 0.0, sum_b = 0.0, sum_aa = 0.0, sum_bb = 0.0, sum_ab = 0.0;
  size_t n = 0;
  for (size_t i = 0; i < tpl.offsets.size(); ++i) {
    const Eigen::Vector2d& off = tpl.offsets[i];
    const int su = int(std::lround(center.u + cs * off.x() - sn * off.y()));
    const int sv = int(std::lround(center.v + sn * off.x() + cs * off.y()));
    if (su < 0 || su >= frame.width || sv < 0 || sv >= frame.height) continue;
    const Rgb& fc = frame.at(su, sv);
    const Rgb& tc = tpl.colors[i];
    // grayscale-per-channel correlation over the 3N sample vector
    const double a[3] = {double(tc.r), double(tc.g), double(tc.b)};
    const double b[3] = {double(fc.r), double(fc.g), double(fc.b)};
    for (int ch = 0; ch < 3; ++ch) {
      sum_a += a[ch];
      sum_b += b[ch];
      sum_aa += a[ch] * a[ch];
      sum_bb += b[ch] * b[ch];
      sum_ab += a[ch] * b[ch];
    }
    n += 3;
  }
  if (n < 12) return -1.0;
  const double dn = double(n);
  const double cov = sum_ab - sum_a * sum_b / dn;
  const double var_a = sum_aa - sum_a * sum_a / dn;
  const double var_b = sum_bb - sum_b * sum_b / dn;
  if (var_a <= 0.0 || var_b <= 0.0) return -1.0;
  return cov / std::sqrt(var_a * var_b);
}

}  // namespace

TemplateMatchResult recognize_template(const SegmentationResult& seg, const Frame& frame,
                                       const std::vector<Template>& templates) {
  constexpr double kStepDeg = 5.0;
  constexpr double kMinCorrelation = 0.2;

  TemplateMatchResult result;
  for (size_t m = 0; m < seg.masks.size(); ++m) {
    int best_label = -1;
    double best_corr = -1.0;
    double best_rot = 0.0;
    for (const auto& tpl : templates) {
      for (int step = 0; step < int(360.0 / kStepDeg); ++step) {
        const double rot = step * kStepDeg * M_PI / 180.0;
        const double corr = correlate(tpl, frame, seg.centroids[m], rot);
        if (corr > best_corr) {
          best_corr = corr;
          best_label = tpl.label;
          best_rot = rot;
        }
      }
    }
    if (best_corr < kMinCorrelation) {
      result.labels.push_back(-1);
      result.confidences.push_back(std::max(best_corr, 0.0));
      result.rotations.push_back(0.0);
    } else {
      result.labels.push_back(best_label);
      result.confidences.push_back(std::clamp(best_corr, 0.0, 1.0));
      result.rotations.push_back(best_rot);
    }
  }
  return result;
}

GraspMap plan_grasp(const SegmentationResult& seg, const Frame& frame) {
  GraspMap map;
  map.width = frame.width;
  map.height = frame.height;
  map.probabilities.assign(size_t(frame.width) * frame.height * GraspMap::kBins, 0.01f);

  for (size_t m = 0; m < seg.masks.size(); ++m) {
    const PixelMask& mask = seg.masks[m];
    const PixelCoord& centroid = seg.centroids[m];
    const double minor = seg.principal_angles[m];

    double max_dist = 0.0;
    for (int32_t idx : mask.pixels) {
      const double du = (idx % mask.width) - centroid.u;
      const double dv = (idx / mask.width) - centroid.v;
      max_dist = std::max(max_dist, std::hypot(du, dv));
    }
    if (max_dist <= 0.0) max_dist = 1.0;

    float bin_weight[GraspMap::kBins];
    for (int b = 0; b < GraspMap::kBins; ++b) {
      const double c = std::cos(GraspMap::bin_angle(b) - minor);
      bin_weight[b] = float(0.9 * c * c);
    }

    for (int32_t idx : mask.pixels) {
      const double du = (idx % mask.width) - centroid.u;
      const double dv = (idx / mask.width) - centroid.v;
      const float falloff = float(1.0 - std::hypot(du, dv) / max_dist);
      float* cell = &map.probabilities[size_t(idx) * GraspMap::kBins];
      for (int b = 0; b < GraspMap::kBins; ++b) {
        cell[b] = bin_weight[b] * falloff;
      }
    }
  }
  return map;
}

void restrict_to_region(GraspMap& map, const PixelRect& roi) {
  for (int v = 0; v < map.height; ++v) {
    for (int u = 0; u < map.width; ++u) {
      if (u >= roi.u0 && u <= roi.u1 && v >= roi.v0 && v <= roi.v1) continue;
      float* cell = &map.probabilities[(size_t(v) * map.width + u) * GraspMap::kBins];
      std::fill(cell, cell + GraspMap::kBins, 0.0f);
    }
  }
}

GraspDecision select_grasp(const GraspMap& map, const Frame& frame,
                           const RigidTransform& hand_eye, const CellConfig& cell) {
  if (map.width != frame.width || map.height != frame.height) {
    raise(ErrorCode::InvalidArgument, "select_grasp: map and frame dimensions differ");
  }
  bool found = false;
  float best = -1.0f;
  int best_u = 0, best_v = 0, best_bin = 0;
  for (int v = 0; v < map.height; ++v) {
    for (int u = 0; u < map.width; ++u) {
      const double depth = frame.depth_at(u, v);
      if (!(depth > 0.0) || !std::isfinite(depth)) continue;
      const float* cell_probs = &map.probabilities[(size_t(v) * map.width + u) * GraspMap::kBins];
      for (int b = 0; b < GraspMap::kBins; ++b) {
        if (cell_probs[b] > best) {
          best = cell_probs[b];
          best_u = u;
          best_v = v;
          best_bin = b;
          found = true;
        }
      }
    }
  }
  if (!found) {
    raise(ErrorCode::NoGrasp, "select_grasp: no pixel with valid depth");
  }

  GraspDecision decision;
  decision.pixel = {double(best_u), double(best_v)};
  decision.bin = best_bin;
  decision.angle = GraspMap::bin_angle(best_bin);
  decision.probability = best;
  const Eigen::Vector3d in_cam =
      deproject(decision.pixel, frame.depth_at(best_u, best_v), cell.camera.intrinsics);
  decision.base_point = hand_eye.apply(in_cam);
  decision.base_point.z() = cell.table.surface_z + cell.grasp_depth_offset;
  return decision;
}

std::vector<Eigen::Vector3d> plan_motion(const Eigen::Vector3d& pick,
                                         const Eigen::Vector3d& place_at,
                                         const CellConfig& cell) {
  constexpr double kApproach = 0.10;
  for (const auto& p : {pick, place_at}) {
    if (!cell.table.contains(p.x(), p.y()) || p.z() < cell.table.surface_z) {
      raise(ErrorCode::OutOfWorkspace, "plan_motion: endpoint outside the workspace");
    }
  }
  const Eigen::Vector3d home = cell.arm.home_pose.translation;
  const Eigen::Vector3d lift{0.0, 0.0, kApproach};
  const Eigen::Vector3d pre_pick = pick + lift;
  const Eigen::Vector3d pre_place = place_at + lift;
  return {home, pre_pick, pick, pre_pick, pre_place, place_at, pre_place, home};
}

void validate_stage_names(const StageNames& stages) {
  if (stages.segmentation != "contour") {
    raise(ErrorCode::Config, "stages.segmentation: unknown stage '" + stages.segmentation + "'");
  }
  if (stages.recognition != "color" && stages.recognition != "template") {
    raise(ErrorCode::Config, "stages.recognition: unknown stage '" + stages.recognition + "'");
  }
  if (stages.grasp != "analytic") {
    raise(ErrorCode::Config, "stages.grasp: unknown stage '" + stages.grasp + "'");
  }
  if (stages.motion != "waypoint") {
    raise(ErrorCode::Config, "stages.motion: unknown stage '" + stages.motion + "'");
  }
}

SegmentationStage make_segmentation_stage(const std::string& name) {
  if (name == "contour") return segment_contour;
  raise(ErrorCode::Config, "stages.segmentation: unknown stage '" + name + "'");
}

GraspStage make_grasp_stage(const std::string& name) {
  if (name == "analytic") return plan_grasp;
  raise(ErrorCode::Config, "stages.grasp: unknown stage '" + name + "'");
}

MotionStage make_motion_stage(const std::string& name) {
  if (name == "waypoint") return plan_motion;
  raise(ErrorCode::Config, "stages.motion: unknown stage '" + name + "'");
}

}  // namespace deepclaw
