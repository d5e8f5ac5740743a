#pragma once

#include <array>
#include <string>
#include <vector>

#include "surfr/point_cloud.hpp"
#include "surfr/vec3.hpp"

namespace surfr {

/// Indexed triangle mesh. Vertices are world-unit positions once a
/// reconstruction has been mapped back through the recorded transform.
struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<Vec3> vertex_normals;  // optional

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  bool empty() const { return triangles.empty(); }

  Vec3 face_normal(std::size_t t) const;
  double face_area(std::size_t t) const;
  double surface_area() const;
};

// Point clouds. XYZ is one "x y z [nx ny nz]" per line; PLY supports ascii
// and binary_little_endian with float or double properties.
PointCloud read_point_cloud(const std::string& path);  // dispatch by extension
PointCloud read_xyz(const std::string& path);
PointCloud read_ply_points(const std::string& path);
void write_xyz(const std::string& path, const PointCloud& cloud);
void write_ply_points(const std::string& path, const PointCloud& cloud,
                      bool binary = false);

// Meshes.
TriangleMesh read_mesh(const std::string& path);  // dispatch by extension
TriangleMesh read_obj(const std::string& path);
TriangleMesh read_ply_mesh(const std::string& path);
void write_obj(const std::string& path, const TriangleMesh& mesh);
void write_ply_mesh(const std::string& path, const TriangleMesh& mesh,
                    bool binary = false);
void write_mesh(const std::string& path, const TriangleMesh& mesh);

}  // namespace surfr
