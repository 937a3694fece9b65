#pragma once

#include <functional>
#include <string>
#include <vector>

#include "deepclaw/geometry.hpp"
#include "deepclaw/simcell.hpp"

namespace deepclaw {

struct PixelMask {
  int width = 0;
  int height = 0;
  std::vector<int32_t> pixels;  // sorted linear indices v * width + u

  bool contains(int u, int v) const;
  size_t area() const { return pixels.size(); }
};

struct PixelRect {
  int u0 = 0;
  int v0 = 0;
  int u1 = -1;  // inclusive
  int v1 = -1;
};

struct SegmentationResult {
  std::vector<PixelMask> masks;
  std::vector<PixelRect> boxes;
  std::vector<PixelCoord> centroids;
  std::vector<double> principal_angles;  // minor-axis orientation, [0, pi)
};

struct SegmentationParams {
  Rgb background;
  double threshold = 60.0;  // Euclidean RGB distance
  int min_area = 25;        // components below this are discarded
};

/// 4-connected component labeling of pixels that differ from the background
/// color by more than the threshold. Centroid and minor-axis angle come from
/// first and second image moments.
SegmentationResult segment_contour(const Frame& frame, const SegmentationParams& params);

struct RecognitionResult {
  std::vector<int> labels;  // index into the palette; -1 = unknown
  std::vector<double> confidences;
};

/// Labels each mask by the palette color nearest to its mean RGB; confidence
/// is the normalized inverse distance. Equidistant ties go to the lowest
/// label id.
RecognitionResult recognize_color(const SegmentationResult& seg, const Frame& frame,
                                  const std::vector<Rgb>& palette);

/// Reference raster of one object category at rotation zero, in frame pixel
/// scale. `offsets` are support-pixel positions relative to the centroid.
struct Template {
  int label = 0;
  std::vector<Eigen::Vector2d> offsets;
  std::vector<Rgb> colors;
};

struct TemplateMatchResult {
  std::vector<int> labels;          // -1 when no template correlates above 0.2
  std::vector<double> confidences;  // best normalized cross-correlation, clamped to [0,1]
  std::vector<double> rotations;    // radians, image plane, [0, 2*pi)
};

/// Renders `obj` alone (pose reset to yaw 0 at its current position) through
/// the cell camera and crops the segmented support into a Template.
Template render_object_template(const SceneObject& obj, const CellConfig& cell, int label);

/// For each mask, maximizes normalized cross-correlation over all templates
/// and rotations 0..355 degrees in 5-degree steps.
TemplateMatchResult recognize_template(const SegmentationResult& seg, const Frame& frame,
                                       const std::vector<Template>& templates);

/// Per-pixel, per-angular-bin grasp success probabilities. Bin k covers the
/// image-plane angle k * 10 degrees; the 18 bins span [0, 180) since
/// antipodal grasps are symmetric.
struct GraspMap {
  static constexpr int kBins = 18;

  int width = 0;
  int height = 0;
  std::vector<float> probabilities;  // (v * width + u) * kBins + bin

  float at(int u, int v, int bin) const {
    return probabilities[(size_t(v) * width + u) * kBins + bin];
  }

  static double bin_angle(int bin) { return bin * (M_PI / kBins); }
};

/// Analytic stand-in for a learned grasp-quality model: inside each mask the
/// probability is 0.9 * cos^2(bin angle - minor axis angle) scaled linearly
/// from 1 at the centroid to 0 at the mask's farthest pixel; elsewhere a
/// 0.01 floor.
GraspMap plan_grasp(const SegmentationResult& seg, const Frame& frame);

/// Zeroes probabilities outside the given pixel rect (task-level region of
/// interest, e.g. only grasp inside the source bin).
void restrict_to_region(GraspMap& map, const PixelRect& roi);

struct GraspDecision {
  PixelCoord pixel;
  int bin = 0;
  double angle = 0.0;  // image plane, = bin * pi / 18
  Eigen::Vector3d base_point = Eigen::Vector3d::Zero();
  double probability = 0.0;
};

/// Global argmax over pixels and bins (ties: lowest v, then u, then bin).
/// The winning pixel is deprojected with the frame depth and mapped through
/// the hand-eye transform; z is overridden to table surface + grasp depth
/// offset. Pixels without valid depth are skipped; if none remain, throws
/// ErrorCode::NoGrasp.
GraspDecision select_grasp(const GraspMap& map, const Frame& frame,
                           const RigidTransform& hand_eye, const CellConfig& cell);

/// Waypoint path home -> pre-pick -> pick -> pre-pick -> pre-place -> place
/// -> pre-place -> home, with pre-poses 0.10 m above. Throws
/// ErrorCode::OutOfWorkspace when pick or place leave the table extents.
std::vector<Eigen::Vector3d> plan_motion(const Eigen::Vector3d& pick,
                                         const Eigen::Vector3d& place_at,
                                         const CellConfig& cell);

/// Pipeline stage selection by name, as referenced from task configs.
struct StageNames {
  std::string segmentation = "contour";
  std::string recognition = "color";
  std::string grasp = "analytic";
  std::string motion = "waypoint";
};

/// Throws ErrorCode::Config naming the offending stage when a name is not a
/// known implementation.
void validate_stage_names(const StageNames& stages);

using SegmentationStage = std::function<SegmentationResult(const Frame&, const SegmentationParams&)>;
using GraspStage = std::function<GraspMap(const SegmentationResult&, const Frame&)>;
using MotionStage = std::function<std::vector<Eigen::Vector3d>(
    const Eigen::Vector3d&, const Eigen::Vector3d&, const CellConfig&)>;

SegmentationStage make_segmentation_stage(const std::string& name);
GraspStage make_grasp_stage(const std::string& name);
MotionStage make_motion_stage(const std::string& name);

}  // namespace deepclaw
