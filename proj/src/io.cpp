#include "surfr/io.hpp"

#include <array>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace surfr {

namespace {

std::string lower_ext(const std::string& path) {
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot + 1);
  for (char& c : ext) c = static_cast<char>(std::tolower(c));
  return ext;
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

struct PlyProperty {
  std::string name;
  std::string type;  // float, double, uchar, int, ...
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
  bool has_list = false;
  std::string list_count_type, list_value_type;
};

struct PlyHeader {
  bool binary = false;
  std::vector<PlyElement> elements;
};

std::size_t scalar_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" ||
      t == "float" || t == "float32")
    return 4;
  if (t == "double" || t == "float64") return 8;
  throw std::runtime_error("ply: unsupported property type " + t);
}

double read_binary_scalar(std::istream& in, const std::string& t) {
  unsigned char buf[8];
  const std::size_t n = scalar_size(t);
  in.read(reinterpret_cast<char*>(buf), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("ply: truncated binary payload");
  if (t == "float" || t == "float32") {
    float f;
    std::memcpy(&f, buf, 4);
    return f;
  }
  if (t == "double" || t == "float64") {
    double d;
    std::memcpy(&d, buf, 8);
    return d;
  }
  std::int64_t v = 0;
  // little-endian, sign handled for the common signed types
  for (std::size_t i = 0; i < n; ++i) v |= std::int64_t(buf[i]) << (8 * i);
  if ((t == "char" || t == "int8") && (v & 0x80)) v -= 0x100;
  if ((t == "short" || t == "int16") && (v & 0x8000)) v -= 0x10000;
  if ((t == "int" || t == "int32") && (v & 0x80000000LL)) v -= 0x100000000LL;
  return static_cast<double>(v);
}

PlyHeader read_ply_header(std::istream& in, const std::string& path) {
  std::string line;
  if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
    fail(path, "not a PLY file");
  }
  PlyHeader h;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "ascii") {
        h.binary = false;
      } else if (fmt == "binary_little_endian") {
        h.binary = true;
      } else {
        fail(path, "unsupported PLY format " + fmt);
      }
    } else if (tok == "element") {
      PlyElement e;
      ss >> e.name >> e.count;
      h.elements.push_back(e);
    } else if (tok == "property") {
      if (h.elements.empty()) fail(path, "property before element");
      std::string type;
      ss >> type;
      if (type == "list") {
        auto& e = h.elements.back();
        e.has_list = true;
        ss >> e.list_count_type >> e.list_value_type;
        std::string name;
        ss >> name;
      } else {
        std::string name;
        ss >> name;
        h.elements.back().props.push_back({name, type});
      }
    } else if (tok == "end_header") {
      return h;
    }
  }
  fail(path, "missing end_header");
}

}  // namespace

Vec3 TriangleMesh::face_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
  const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
  return e1.cross(e2).normalized();
}

double TriangleMesh::face_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3 e1 = vertices[tri[1]] - vertices[tri[0]];
  const Vec3 e2 = vertices[tri[2]] - vertices[tri[0]];
  return 0.5 * e1.cross(e2).norm();
}

double TriangleMesh::surface_area() const {
  double a = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) a += face_area(t);
  return a;
}

PointCloud read_point_cloud(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "xyz" || ext == "txt") return read_xyz(path);
  if (ext == "ply") return read_ply_points(path);
  fail(path, "unsupported point-cloud extension ." + ext);
}

PointCloud read_xyz(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  PointCloud cloud;
  std::string line;
  std::size_t lineno = 0;
  bool any_normals = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    Vec3 p, n;
    if (!(ss >> p.x >> p.y >> p.z)) {
      fail(path, "malformed line " + std::to_string(lineno));
    }
    const bool has_n = static_cast<bool>(ss >> n.x >> n.y >> n.z);
    if (cloud.points.empty()) {
      any_normals = has_n;
    } else if (has_n != any_normals) {
      fail(path, "inconsistent normals at line " + std::to_string(lineno));
    }
    cloud.points.push_back(p);
    if (has_n) cloud.normals.push_back(n);
  }
  if (cloud.points.empty()) fail(path, "no points");
  cloud.validate();
  return cloud;
}

void write_xyz(const std::string& path, const PointCloud& cloud) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  char buf[256];
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (cloud.has_normals()) {
      const Vec3& n = cloud.normals[i];
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g\n",
                    p.x, p.y, p.z, n.x, n.y, n.z);
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x, p.y, p.z);
    }
    out << buf;
  }
}

PointCloud read_ply_points(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  const PlyHeader h = read_ply_header(in, path);

  PointCloud cloud;
  for (const PlyElement& e : h.elements) {
    if (e.name != "vertex") {
      // Skip non-vertex elements; only possible safely after the vertex data
      // in ascii mode, and in binary mode by computing the stride.
      if (h.binary) {
        std::size_t stride = 0;
        for (const auto& p : e.props) stride += scalar_size(p.type);
        if (e.has_list) fail(path, "cannot skip binary list element");
        in.seekg(static_cast<std::streamoff>(stride * e.count), std::ios::cur);
      } else {
        std::string line;
        for (std::size_t i = 0; i < e.count; ++i) std::getline(in, line);
      }
      continue;
    }
    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
    for (std::size_t k = 0; k < e.props.size(); ++k) {
      const std::string& n = e.props[k].name;
      if (n == "x") ix = static_cast<int>(k);
      if (n == "y") iy = static_cast<int>(k);
      if (n == "z") iz = static_cast<int>(k);
      if (n == "nx") inx = static_cast<int>(k);
      if (n == "ny") iny = static_cast<int>(k);
      if (n == "nz") inz = static_cast<int>(k);
    }
    if (ix < 0 || iy < 0 || iz < 0) fail(path, "vertex element lacks x/y/z");
    const bool with_normals = inx >= 0 && iny >= 0 && inz >= 0;
    std::vector<double> row(e.props.size());
    for (std::size_t i = 0; i < e.count; ++i) {
      if (h.binary) {
        for (std::size_t k = 0; k < e.props.size(); ++k) {
          row[k] = read_binary_scalar(in, e.props[k].type);
        }
      } else {
        for (std::size_t k = 0; k < e.props.size(); ++k) {
          if (!(in >> row[k])) fail(path, "truncated vertex data");
        }
      }
      cloud.points.push_back({row[ix], row[iy], row[iz]});
      if (with_normals) cloud.normals.push_back({row[inx], row[iny], row[inz]});
    }
  }
  if (cloud.points.empty()) fail(path, "no vertex element");
  cloud.validate();
  return cloud;
}

void write_ply_points(const std::string& path, const PointCloud& cloud,
                      bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii")
      << " 1.0\nelement vertex " << cloud.points.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_normals()) {
    out << "property double nx\nproperty double ny\nproperty double nz\n";
  }
  out << "end_header\n";
  char buf[256];
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (binary) {
      out.write(reinterpret_cast<const char*>(&p.x), 24);
      if (cloud.has_normals()) {
        out.write(reinterpret_cast<const char*>(&cloud.normals[i].x), 24);
      }
    } else if (cloud.has_normals()) {
      const Vec3& n = cloud.normals[i];
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g %.17g %.17g\n",
                    p.x, p.y, p.z, n.x, n.y, n.z);
      out << buf;
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x, p.y, p.z);
      out << buf;
    }
  }
}

TriangleMesh read_mesh(const std::string& path) {
  const std::string ext = lower_ext(path);
  if (ext == "obj") return read_obj(path);
  if (ext == "ply") return read_ply_mesh(path);
  fail(path, "unsupported mesh extension ." + ext);
}

TriangleMesh read_obj(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open");
  TriangleMesh mesh;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "v") {
      Vec3 p;
      if (!(ss >> p.x >> p.y >> p.z)) {
        fail(path, "malformed vertex at line " + std::to_string(lineno));
      }
      mesh.vertices.push_back(p);
    } else if (tok == "f") {
      std::vector<int> idx;
      std::string ref;
      while (ss >> ref) {
        // accept v, v/vt, v//vn, v/vt/vn
        idx.push_back(std::stoi(ref.substr(0, ref.find('/'))));
      }
      if (idx.size() < 3) {
        fail(path, "face with <3 vertices at line " + std::to_string(lineno));
      }
      for (std::size_t k = 2; k < idx.size(); ++k) {  // fan-triangulate
        mesh.triangles.push_back(
            {idx[0] - 1, idx[k - 1] - 1, static_cast<int>(idx[k]) - 1});
      }
    }
  }
  return mesh;
}

TriangleMesh read_ply_mesh(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "cannot open");
  const PlyHeader h = read_ply_header(in, path);
  TriangleMesh mesh;
  for (const PlyElement& e : h.elements) {
    if (e.name == "vertex") {
      int ix = -1, iy = -1, iz = -1;
      for (std::size_t k = 0; k < e.props.size(); ++k) {
        if (e.props[k].name == "x") ix = static_cast<int>(k);
        if (e.props[k].name == "y") iy = static_cast<int>(k);
        if (e.props[k].name == "z") iz = static_cast<int>(k);
      }
      if (ix < 0 || iy < 0 || iz < 0) fail(path, "vertex element lacks x/y/z");
      std::vector<double> row(e.props.size());
      for (std::size_t i = 0; i < e.count; ++i) {
        for (std::size_t k = 0; k < e.props.size(); ++k) {
          if (h.binary) {
            row[k] = read_binary_scalar(in, e.props[k].type);
          } else if (!(in >> row[k])) {
            fail(path, "truncated vertex data");
          }
        }
        mesh.vertices.push_back({row[ix], row[iy], row[iz]});
      }
    } else if (e.name == "face") {
      for (std::size_t i = 0; i < e.count; ++i) {
        std::size_t n = 0;
        std::vector<int> idx;
        if (h.binary) {
          n = static_cast<std::size_t>(
              read_binary_scalar(in, e.list_count_type));
          for (std::size_t k = 0; k < n; ++k) {
            idx.push_back(static_cast<int>(
                read_binary_scalar(in, e.list_value_type)));
          }
        } else {
          if (!(in >> n)) fail(path, "truncated face data");
          idx.resize(n);
          for (auto& v : idx) {
            if (!(in >> v)) fail(path, "truncated face data");
          }
        }
        for (std::size_t k = 2; k < idx.size(); ++k) {
          mesh.triangles.push_back({idx[0], idx[k - 1], idx[k]});
        }
      }
    }
  }
  return mesh;
}

void write_obj(const std::string& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  char buf[256];
  for (const Vec3& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "v %.17g %.17g %.17g\n", v.x, v.y, v.z);
    out << buf;
  }
  for (const auto& t : mesh.triangles) {
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  }
}

void write_ply_mesh(const std::string& path, const TriangleMesh& mesh,
                    bool binary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(path, "cannot open for writing");
  out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii")
      << " 1.0\nelement vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n"
      << "element face " << mesh.triangles.size() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  char buf[256];
  for (const Vec3& v : mesh.vertices) {
    if (binary) {
      out.write(reinterpret_cast<const char*>(&v.x), 24);
    } else {
      std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", v.x, v.y, v.z);
      out << buf;
    }
  }
  for (const auto& t : mesh.triangles) {
    if (binary) {
      const unsigned char n = 3;
      out.write(reinterpret_cast<const char*>(&n), 1);
      std::int32_t ti[3] = {t[0], t[1], t[2]};
      out.write(reinterpret_cast<const char*>(ti), 12);
    } else {
      out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
  }
}

void write_mesh(const std::string& path, const TriangleMesh& mesh) {
  const std::string ext = lower_ext(path);
  if (ext == "obj") {
    write_obj(path, mesh);
  } else if (ext == "ply") {
    write_ply_mesh(path, mesh);
  } else {
    fail(path, "unsupported mesh extension ." + ext);
  }
}

}  // namespace surfr
