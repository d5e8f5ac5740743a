#include "surfr/point_cloud.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace surfr {

void PointCloud::validate() const {
  if (!normals.empty()) {
    if (normals.size() != points.size()) {
      throw std::invalid_argument("point cloud: normal count != point count");
    }
    for (const Vec3& n : normals) {
      if (std::abs(n.norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("point cloud: normal is not unit length");
      }
    }
  }
}

void QuerySet::validate() const {
  if (!gt_signed_distance.empty() &&
      gt_signed_distance.size() != points.size()) {
    throw std::invalid_argument("query set: gt count != point count");
  }
}

NormalizedCloud normalize_to_unit_cube(const std::vector<Vec3>& raw_points,
                                       double margin) {
  if (raw_points.empty()) {
    throw std::invalid_argument("normalize_to_unit_cube: empty input");
  }
  Vec3 lo = raw_points.front();
  Vec3 hi = raw_points.front();
  for (const Vec3& p : raw_points) {
    for (int a = 0; a < 3; ++a) {
      if (!std::isfinite(p[a])) {
        throw std::invalid_argument(
            "normalize_to_unit_cube: non-finite coordinate");
      }
      lo[a] = std::min(lo[a], p[a]);
      hi[a] = std::max(hi[a], p[a]);
    }
  }
  const Vec3 center = (lo + hi) * 0.5;
  const double extent =
      std::max({hi.x - lo.x, hi.y - lo.y, hi.z - lo.z});

  SimilarityTransform t;
  t.scale = extent > 0.0 ? 2.0 * margin / extent : 1.0;
  t.offset = -center * t.scale;

  NormalizedCloud out;
  out.transform = t;
  out.cloud.points.reserve(raw_points.size());
  for (const Vec3& p : raw_points) out.cloud.points.push_back(t.apply(p));
  return out;
}

}  // namespace surfr
