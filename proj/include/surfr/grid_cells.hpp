#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surfr/point_cloud.hpp"
#include "surfr/vec3.hpp"

namespace surfr {

enum class Weighting { kInterpNN, kEqualWeight, kLearnedWeight };

Weighting weighting_from_string(const std::string& name);
std::string to_string(Weighting w);

/// Grid scales (cells per axis) plus neighbor-sampling settings shared by the
/// encoder and the query sampler.
struct ScaleConfig {
  std::vector<int> scales{1, 4, 16};
  int knn_k = 8;
  Weighting weighting = Weighting::kInterpNN;

  std::size_t num_scales() const { return scales.size(); }
  void validate() const;  // scales strictly increasing and >= 1, knn_k >= 1
};

struct CellIndex {
  int scale = 1;
  int i = 0, j = 0, k = 0;

  int linear() const { return (i * scale + j) * scale + k; }
  bool operator==(const CellIndex&) const = default;
};

// Cells are half-open [lo, hi) per axis; the last cell is closed at +1 so
// every in-cube point belongs to exactly one cell. Throws on out-of-cube
// input.
CellIndex cell_of(const Vec3& p, int scale);

// Local frame of the containing cell: T_s(x) = scale * (x - cell_center),
// which lands in [-1,1]^3. T_1 is the identity.
Vec3 to_cell_coordinates(const Vec3& p, int scale);

Vec3 cell_center(const CellIndex& c);

/// Per-cell point-index buckets over the s^3 grid. Buckets partition the
/// input index set and preserve input order, so all downstream per-cell
/// iteration is deterministic.
class SpatialHashGrid {
 public:
  SpatialHashGrid() = default;
  SpatialHashGrid(int scale, std::size_t num_points);

  int scale() const { return scale_; }
  std::size_t num_points() const { return num_points_; }
  std::size_t num_cells() const { return buckets_.size(); }
  const std::vector<int>& bucket(int linear_cell) const {
    return buckets_[static_cast<std::size_t>(linear_cell)];
  }
  std::size_t num_nonempty() const { return nonempty_; }

  void insert(int linear_cell, int point_index) {
    buckets_[static_cast<std::size_t>(linear_cell)].push_back(point_index);
  }
  void count_nonempty();

 private:
  int scale_ = 0;
  std::size_t num_points_ = 0;
  std::size_t nonempty_ = 0;
  std::vector<std::vector<int>> buckets_;
};

SpatialHashGrid build_spatial_hash(const PointCloud& cloud, int scale);

// Indices of up to k cell-resident points ordered by ascending distance to
// the query; equal distances break toward the smaller point index. Returns
// fewer than k (possibly none) when the cell holds fewer points.
std::vector<int> knn_in_cell(const Vec3& query, const CellIndex& cell, int k,
                             const SpatialHashGrid& grid,
                             const PointCloud& cloud);

}  // namespace surfr
