#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "paris/common/geometry.hpp"
#include "paris/common/json_reader.hpp"
#include "paris/sensors/camera.hpp"
#include "paris/world/scene.hpp"

namespace paris::perception {

struct ThermalPoint {
  Vec3 position;
  double temperature = 0.0;
  Vec2 source_pixel = Vec2::Zero();
};

/// Projects stereo-frame points into the thermal camera (pose of the thermal
/// camera in the stereo frame is `stereo_T_thermal`) and attaches the
/// bilinearly interpolated temperature. Points behind the camera or outside
/// the pixel-centre lattice are dropped. Output positions stay in the stereo frame.
std::vector<ThermalPoint> fuse_thermal(const std::vector<Vec3>& stereo_points, const sensors::ThermalImage& thermal,
                                       const Iso3& stereo_T_thermal, const sensors::CameraIntrinsics& thermal_k);

struct CircleRoi {
  Vec3 center;
  double radius;
  Vec3 normal;
};
struct SegmentRoi {
  Vec3 p0;
  Vec3 p1;
  Vec3 normal;
};
struct PatchRoi {
  Vec3 centroid;
  Vec3 axis;    ///< in-plane principal direction
  Vec2 extent;  ///< half-lengths along axis and normal x axis
  Vec3 normal;
};
using RoiGeometry = std::variant<CircleRoi, SegmentRoi, PatchRoi>;

struct Roi {
  std::string id;
  RoiGeometry geometry;
  double peak_gradient = 0.0;  ///< K/m
  double mean_delta_t = 0.0;   ///< K, over the fitted core points, relative to ambient
  int point_count = 0;         ///< cluster size
  Iso3 map_frame_pose = Iso3::Identity();
};

struct RoiParams {
  double ambient = 290.0;
  double gradient_threshold = 50.0;  ///< K/m
  double cluster_radius = 0.05;      ///< m
  int min_points = 10;
  /// Fitted normals are flipped to face this point; without one they face +z.
  std::optional<Vec3> viewpoint;
};

/// Per-point gradient magnitude from a local plane regression over
/// neighbours within `radius` (0 when fewer than six neighbours).
std::vector<double> gradient_magnitudes(const std::vector<ThermalPoint>& points, double radius);

std::vector<Roi> detect_rois(const std::vector<ThermalPoint>& points, const RoiParams& params);

const char* roi_type(const Roi& roi);
/// Circle centre, segment midpoint or patch centroid.
Vec3 roi_reference_point(const Roi& roi);
Vec3 roi_normal(const Roi& roi);

inline constexpr const char* kRoiSchema = "paris.roi/1";
Json roi_to_json(const Roi& roi);
Json rois_to_json(const std::vector<Roi>& rois);
Roi roi_from_json(const Json& j);

struct MatchResult {
  double precision = 1.0;
  double recall = 1.0;
  std::vector<std::pair<int, int>> pairs;  ///< (roi index, leak index)
};

/// Maximum one-to-one matching of ROI reference points to leak reference
/// points within `radius`. Precision is 1 when there are no ROIs, recall 1
/// when there are no leaks.
MatchResult match_rois(const std::vector<Roi>& rois, const std::vector<world::LeakSource>& leaks,
                       double radius = 0.05);

}  // namespace paris::perception
