#pragma once

#include <optional>
#include <vector>

#include "surfr/vec3.hpp"

namespace surfr {

/// Point set with optional per-point unit normals. Positions are raw world
/// units until normalize_to_unit_cube maps them into [-1,1]^3.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty, or one unit vector per point

  std::size_t size() const { return points.size(); }
  bool has_normals() const { return !normals.empty(); }

  // Throws if normals are present but mismatched in count or not unit length.
  void validate() const;
};

/// Evaluation positions in [-1,1]^3, optionally paired with ground-truth
/// signed distances during training.
struct QuerySet {
  std::vector<Vec3> points;
  std::vector<double> gt_signed_distance;  // empty or one scalar per point

  std::size_t size() const { return points.size(); }
  bool has_gt() const { return !gt_signed_distance.empty(); }
  void validate() const;
};

struct NormalizedCloud {
  PointCloud cloud;
  SimilarityTransform transform;  // world -> normalized
};

// Centers the cloud and uniformly scales so the bounding box fits inside
// [-margin, margin]^3. A degenerate bounding box (single point or all points
// identical) keeps scale 1 and only translates. The default margin keeps
// boundary points off the outer cell faces.
NormalizedCloud normalize_to_unit_cube(const std::vector<Vec3>& raw_points,
                                       double margin = 0.95);

}  // namespace surfr
