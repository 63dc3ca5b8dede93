#include "paris/perception/voxel_map.hpp"

#include <cmath>

#include "paris/common/error.hpp"
#include "paris/common/hash.hpp"
#include "paris/sensors/image_io.hpp"

namespace paris::perception {

sensors::Rgb VoxelCell::color() const {
  sensors::Rgb c{0, 0, 0};
  if (!hits) return c;
  for (int k = 0; k < 3; ++k)
    c[static_cast<std::size_t>(k)] =
        static_cast<std::uint8_t>(std::lround(color_sum[static_cast<std::size_t>(k)] / static_cast<double>(hits)));
  return c;
}

VoxelMap::VoxelMap(double voxel_size) : voxel_size_(voxel_size) {
  if (!(voxel_size > 0.0)) throw ValidationError("voxel_size must be positive");
}

VoxelIndex VoxelMap::index_of(const Vec3& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / voxel_size_)),
          static_cast<std::int64_t>(std::floor(p.y() / voxel_size_)),
          static_cast<std::int64_t>(std::floor(p.z() / voxel_size_))};
}

Vec3 VoxelMap::center_of(const VoxelIndex& i) const {
  return {(static_cast<double>(i[0]) + 0.5) * voxel_size_, (static_cast<double>(i[1]) + 0.5) * voxel_size_,
          (static_cast<double>(i[2]) + 0.5) * voxel_size_};
}

void VoxelMap::add_point(const Vec3& world, const sensors::Rgb& color) {
  auto& c = cells_[index_of(world)];
  for (int k = 0; k < 3; ++k) c.color_sum[static_cast<std::size_t>(k)] += color[static_cast<std::size_t>(k)];
  ++c.hits;
}

void VoxelMap::add_temperature(const Vec3& world, double kelvin) {
  auto it = cells_.find(index_of(world));
  if (it == cells_.end()) return;
  it->second.temp_sum += kelvin;
  ++it->second.temp_count;
}

std::uint64_t VoxelMap::total_hits() const {
  std::uint64_t n = 0;
  for (const auto& [k, c] : cells_) n += c.hits;
  return n;
}

std::uint64_t VoxelMap::digest() const {
  Fnv1a h;
  h.f64(voxel_size_);
  for (const auto& [k, c] : cells_) {
    for (auto v : k) h.i64(v);
    for (auto v : c.color_sum) h.f64(v);
    h.u64(c.hits);
    h.f64(c.temp_sum);
    h.u64(c.temp_count);
  }
  return h.value();
}

void VoxelMap::write_ply(std::ostream& os) const {
  std::vector<sensors::PlyVertex> v;
  v.reserve(cells_.size());
  for (const auto& [k, c] : cells_) v.push_back({center_of(k), c.color(), c.temperature()});
  sensors::write_ply(os, v);
}

void integrate_map(VoxelMap& map, const std::vector<sensors::CloudPoint>& cloud, const Pose2& estimated_pose) {
  const Iso3 t = estimated_pose.to_iso3(0.0);
  for (const auto& p : cloud) map.add_point(t * p.position, p.color);
}

}  // namespace paris::perception
