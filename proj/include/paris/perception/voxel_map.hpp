#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <ostream>
#include <vector>

#include "paris/common/geometry.hpp"
#include "paris/sensors/camera.hpp"

namespace paris::perception {

using VoxelIndex = std::array<std::int64_t, 3>;

struct VoxelCell {
  std::array<double, 3> color_sum{0.0, 0.0, 0.0};
  std::uint64_t hits = 0;
  double temp_sum = 0.0;
  std::uint64_t temp_count = 0;

  sensors::Rgb color() const;
  /// Mean fused temperature; 0 when no thermal sample landed in the cell.
  double temperature() const { return temp_count ? temp_sum / static_cast<double>(temp_count) : 0.0; }
};

/// Sparse colourised voxel grid keyed by floor(p / voxel_size).
class VoxelMap {
 public:
  explicit VoxelMap(double voxel_size = 0.02);

  double voxel_size() const { return voxel_size_; }
  VoxelIndex index_of(const Vec3& p) const;
  Vec3 center_of(const VoxelIndex& i) const;

  void add_point(const Vec3& world, const sensors::Rgb& color);
  void add_temperature(const Vec3& world, double kelvin);

  const std::map<VoxelIndex, VoxelCell>& cells() const { return cells_; }
  std::size_t size() const { return cells_.size(); }
  std::uint64_t total_hits() const;

  /// FNV-1a over the cells in index order.
  std::uint64_t digest() const;
  /// Voxel centres, mean colour and mean temperature as ASCII PLY.
  void write_ply(std::ostream& os) const;

 private:
  double voxel_size_;
  std::map<VoxelIndex, VoxelCell> cells_;
};

/// Bins a cloud expressed in the robot's level frame after moving it by the
/// estimated planar pose.
void integrate_map(VoxelMap& map, const std::vector<sensors::CloudPoint>& cloud, const Pose2& estimated_pose);

}  // namespace paris::perception
