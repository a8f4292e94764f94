// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef ENZRES_MESH_HPP
#define ENZRES_MESH_HPP

#include <array>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace enzres
{

// Region tags carried by triangles.
inline constexpr int kCoreRegion = 0;   // dielectric inclusion D
inline constexpr int kShellRegion = 1;  // ENZ shell
inline constexpr int kSlackRegion = 2;  // design slack between the shell and B

// Boundary edge tags.
inline constexpr int kInterfaceTag = 0;  // boundary of the core
inline constexpr int kOuterTag = 1;      // outer boundary of the mesh

struct Point
{
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point &) const = default;
};

struct Triangle
{
  std::array<int, 3> v{};
  int region = kCoreRegion;
  bool operator==(const Triangle &) const = default;
};

struct BoundaryEdge
{
  std::array<int, 2> v{};
  int tag = kInterfaceTag;
  bool operator==(const BoundaryEdge &) const = default;
};

//
// Conforming P1 triangulation with region and boundary tags. A Mesh is
// validated on construction and immutable afterwards, so it can be shared
// read-only between threads.
//
// Invariants checked by the constructor:
//   - node indices in range, every triangle has positive signed area (CCW);
//   - region 0 is connected and simply connected, region 1 is connected;
//   - each tag-0 edge has a region-0 triangle on one side and either a
//     region-1 triangle or nothing on the other;
//   - each tag-1 edge lies on the outer boundary (belongs to one triangle).
//
class Mesh
{
public:
  Mesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
       std::vector<BoundaryEdge> boundary_edges);

  const std::vector<Point> &Nodes() const { return nodes_; }
  const std::vector<Triangle> &Triangles() const { return triangles_; }
  const std::vector<BoundaryEdge> &BoundaryEdges() const { return boundary_edges_; }

  std::size_t NumNodes() const { return nodes_.size(); }
  std::size_t NumTriangles() const { return triangles_.size(); }

  double TriangleArea(std::size_t t) const;
  bool HasRegion(int region) const;

  // Sorted, unique node indices lying on boundary edges with the given tag.
  std::vector<int> NodesOnTag(int tag) const;

  // Copy with all coordinates multiplied by t (t > 0).
  Mesh Scaled(double t) const;

  bool operator==(const Mesh &) const = default;

private:
  std::vector<Point> nodes_;
  std::vector<Triangle> triangles_;
  std::vector<BoundaryEdge> boundary_edges_;
};

double SignedArea(const Point &a, const Point &b, const Point &c);

struct ConcentricSpec
{
  double r_core = 1.0;              // radius of D
  double r_outer = 2.0;             // outer radius of the shell
  std::optional<double> r_box;      // outer radius of the design slack
  double h = 0.1;                   // target edge length
};

struct MeshFileSpec
{
  std::filesystem::path path;
};

using DomainSpec = std::variant<ConcentricSpec, MeshFileSpec>;

// Radially structured mesh: disk r < r_core tagged 0, annulus (r_core,
// r_outer) tagged 1 and, when r_box is set, annulus (r_outer, r_box) tagged 2.
// Nodes on every ring lie exactly on the circle.
Mesh BuildConcentricMesh(const ConcentricSpec &spec);

Mesh MakeMesh(const DomainSpec &spec);

// `enzmesh v1` text format.
Mesh LoadMesh(std::istream &in);
Mesh LoadMeshFile(const std::filesystem::path &path);
void SaveMesh(const Mesh &mesh, std::ostream &out);
void SaveMeshFile(const Mesh &mesh, const std::filesystem::path &path);

struct MeshMetrics
{
  std::map<int, double> area_by_region;
  double h_max = 0.0;
  std::size_t n_nodes = 0;
  std::size_t n_triangles = 0;
};

MeshMetrics ComputeMeshMetrics(const Mesh &mesh);

}  // namespace enzres

#endif  // ENZRES_MESH_HPP
