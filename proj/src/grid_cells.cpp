#include "surfr/grid_cells.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace surfr {

Weighting weighting_from_string(const std::string& name) {
  if (name == "interpnn") return Weighting::kInterpNN;
  if (name == "ew") return Weighting::kEqualWeight;
  if (name == "lw") return Weighting::kLearnedWeight;
  throw std::invalid_argument("unknown weighting '" + name +
                              "' (expected interpnn|ew|lw)");
}

std::string to_string(Weighting w) {
  switch (w) {
    case Weighting::kInterpNN: return "interpnn";
    case Weighting::kEqualWeight: return "ew";
    case Weighting::kLearnedWeight: return "lw";
  }
  return "?";
}

void ScaleConfig::validate() const {
  if (scales.empty()) throw std::invalid_argument("scales: empty");
  int prev = 0;
  for (int s : scales) {
    if (s < 1 || s <= prev) {
      throw std::invalid_argument("scales must be strictly increasing and >= 1");
    }
    prev = s;
  }
  if (knn_k < 1) throw std::invalid_argument("knn_k must be >= 1");
}

namespace {

inline void check_in_cube(const Vec3& p) {
  if (std::abs(p.x) > 1.0 || std::abs(p.y) > 1.0 || std::abs(p.z) > 1.0) {
    throw std::out_of_range("point outside [-1,1]^3");
  }
}

inline int axis_cell(double x, int scale) {
  int c = static_cast<int>(std::floor((x + 1.0) * 0.5 * scale));
  // +1 boundary folds into the last cell.
  return std::clamp(c, 0, scale - 1);
}

}  // namespace

CellIndex cell_of(const Vec3& p, int scale) {
  check_in_cube(p);
  return CellIndex{scale, axis_cell(p.x, scale), axis_cell(p.y, scale),
                   axis_cell(p.z, scale)};
}

Vec3 cell_center(const CellIndex& c) {
  const double w = 2.0 / c.scale;
  return {-1.0 + (c.i + 0.5) * w, -1.0 + (c.j + 0.5) * w,
          -1.0 + (c.k + 0.5) * w};
}

Vec3 to_cell_coordinates(const Vec3& p, int scale) {
  const CellIndex c = cell_of(p, scale);
  return (p - cell_center(c)) * static_cast<double>(scale);
}

SpatialHashGrid::SpatialHashGrid(int scale, std::size_t num_points)
    : scale_(scale), num_points_(num_points) {
  const std::size_t n = static_cast<std::size_t>(scale) * scale * scale;
  buckets_.resize(n);
}

void SpatialHashGrid::count_nonempty() {
  nonempty_ = 0;
  for (const auto& b : buckets_) {
    if (!b.empty()) ++nonempty_;
  }
}

SpatialHashGrid build_spatial_hash(const PointCloud& cloud, int scale) {
  SpatialHashGrid grid(scale, cloud.size());
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    grid.insert(cell_of(cloud.points[i], scale).linear(),
                static_cast<int>(i));
  }
  grid.count_nonempty();
  return grid;
}

std::vector<int> knn_in_cell(const Vec3& query, const CellIndex& cell, int k,
                             const SpatialHashGrid& grid,
                             const PointCloud& cloud) {
  const std::vector<int>& bucket = grid.bucket(cell.linear());
  std::vector<std::pair<double, int>> cand;
  cand.reserve(bucket.size());
  for (int idx : bucket) {
    cand.emplace_back((cloud.points[static_cast<std::size_t>(idx)] - query)
                          .squared_norm(),
                      idx);
  }
  const std::size_t kk = std::min<std::size_t>(static_cast<std::size_t>(k),
                                               cand.size());
  std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
  std::vector<int> out;
  out.reserve(kk);
  for (std::size_t i = 0; i < kk; ++i) out.push_back(cand[i].second);
  return out;
}

}  // namespace surfr
