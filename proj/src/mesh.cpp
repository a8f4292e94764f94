// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include "enzres/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>

#include "enzres/error.hpp"

namespace enzres
{

namespace
{

std::uint64_t EdgeKey(int a, int b)
{
  if (a > b)
  {
    std::swap(a, b);
  }
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

class UnionFind
{
public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t Find(std::size_t i)
  {
    while (parent_[i] != i)
    {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void Unite(std::size_t a, std::size_t b) { parent_[Find(a)] = Find(b); }

private:
  std::vector<std::size_t> parent_;
};

// Triangles adjacent to each (undirected) edge.
using EdgeTriangles = std::unordered_map<std::uint64_t, std::vector<std::size_t>>;

EdgeTriangles BuildEdgeMap(const std::vector<Triangle> &triangles)
{
  EdgeTriangles edges;
  edges.reserve(triangles.size() * 2);
  for (std::size_t t = 0; t < triangles.size(); t++)
  {
    const auto &v = triangles[t].v;
    for (int k = 0; k < 3; k++)
    {
      edges[EdgeKey(v[k], v[(k + 1) % 3])].push_back(t);
    }
  }
  return edges;
}

std::size_t CountComponents(const std::vector<Triangle> &triangles, const EdgeTriangles &edges,
                            int region)
{
  UnionFind uf(triangles.size());
  for (const auto &[key, tris] : edges)
  {
    for (std::size_t i = 1; i < tris.size(); i++)
    {
      if (triangles[tris[0]].region == region && triangles[tris[i]].region == region)
      {
        uf.Unite(tris[0], tris[i]);
      }
    }
  }
  std::set<std::size_t> roots;
  for (std::size_t t = 0; t < triangles.size(); t++)
  {
    if (triangles[t].region == region)
    {
      roots.insert(uf.Find(t));
    }
  }
  return roots.size();
}

// Euler characteristic V - E + F of the subcomplex formed by one region.
long EulerCharacteristic(const std::vector<Triangle> &triangles, int region)
{
  std::set<int> verts;
  std::set<std::uint64_t> edges;
  long faces = 0;
  for (const auto &tri : triangles)
  {
    if (tri.region != region)
    {
      continue;
    }
    faces++;
    for (int k = 0; k < 3; k++)
    {
      verts.insert(tri.v[k]);
      edges.insert(EdgeKey(tri.v[k], tri.v[(k + 1) % 3]));
    }
  }
  return static_cast<long>(verts.size()) - static_cast<long>(edges.size()) + faces;
}

}  // namespace

double SignedArea(const Point &a, const Point &b, const Point &c)
{
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

Mesh::Mesh(std::vector<Point> nodes, std::vector<Triangle> triangles,
           std::vector<BoundaryEdge> boundary_edges)
  : nodes_(std::move(nodes)), triangles_(std::move(triangles)),
    boundary_edges_(std::move(boundary_edges))
{
  const int n = static_cast<int>(nodes_.size());
  auto in_range = [n](int i) { return i >= 0 && i < n; };
  for (const auto &p : nodes_)
  {
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
    {
      throw ValidationError("mesh: non-finite node coordinate");
    }
  }
  if (triangles_.empty())
  {
    throw ValidationError("mesh: no triangles");
  }
  for (std::size_t t = 0; t < triangles_.size(); t++)
  {
    const auto &tri = triangles_[t];
    if (!std::all_of(tri.v.begin(), tri.v.end(), in_range))
    {
      throw ValidationError("mesh: triangle " + std::to_string(t) +
                            " references a node out of range");
    }
    if (tri.region < kCoreRegion || tri.region > kSlackRegion)
    {
      throw ValidationError("mesh: triangle " + std::to_string(t) + " has unknown region " +
                            std::to_string(tri.region));
    }
    if (!(TriangleArea(t) > 0.0))
    {
      throw ValidationError("mesh: triangle " + std::to_string(t) +
                            " has non-positive signed area");
    }
  }

  const EdgeTriangles edges = BuildEdgeMap(triangles_);
  for (const auto &[key, tris] : edges)
  {
    if (tris.size() > 2)
    {
      throw ValidationError("mesh: edge shared by more than two triangles");
    }
  }

  for (std::size_t e = 0; e < boundary_edges_.size(); e++)
  {
    const auto &edge = boundary_edges_[e];
    const std::string where = "mesh: boundary edge " + std::to_string(e);
    if (!in_range(edge.v[0]) || !in_range(edge.v[1]) || edge.v[0] == edge.v[1])
    {
      throw ValidationError(where + " references an invalid node");
    }
    auto it = edges.find(EdgeKey(edge.v[0], edge.v[1]));
    if (it == edges.end())
    {
      throw ValidationError(where + " is not an edge of any triangle");
    }
    const auto &tris = it->second;
    if (edge.tag == kInterfaceTag)
    {
      int core = 0, shell = 0;
      for (auto t : tris)
      {
        core += triangles_[t].region == kCoreRegion;
        shell += triangles_[t].region == kShellRegion;
      }
      if (core != 1 || core + shell != static_cast<int>(tris.size()))
      {
        throw ValidationError(where + " (tag 0) does not separate region 0 from region 1");
      }
    }
    else if (edge.tag == kOuterTag)
    {
      if (tris.size() != 1)
      {
        throw ValidationError(where + " (tag 1) is not on the outer boundary");
      }
    }
    else
    {
      throw ValidationError(where + " has unknown tag " + std::to_string(edge.tag));
    }
  }

  if (HasRegion(kCoreRegion))
  {
    if (CountComponents(triangles_, edges, kCoreRegion) != 1)
    {
      throw ValidationError("mesh: region 0 is not connected");
    }
    if (EulerCharacteristic(triangles_, kCoreRegion) != 1)
    {
      throw ValidationError("mesh: region 0 is not simply connected");
    }
  }
  if (HasRegion(kShellRegion) && CountComponents(triangles_, edges, kShellRegion) != 1)
  {
    throw ValidationError("mesh: region 1 is not connected");
  }
}

double Mesh::TriangleArea(std::size_t t) const
{
  const auto &v = triangles_[t].v;
  return SignedArea(nodes_[v[0]], nodes_[v[1]], nodes_[v[2]]);
}

bool Mesh::HasRegion(int region) const
{
  return std::any_of(triangles_.begin(), triangles_.end(),
                     [region](const Triangle &t) { return t.region == region; });
}

std::vector<int> Mesh::NodesOnTag(int tag) const
{
  std::vector<int> out;
  for (const auto &e : boundary_edges_)
  {
    if (e.tag == tag)
    {
      out.push_back(e.v[0]);
      out.push_back(e.v[1]);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Mesh Mesh::Scaled(double t) const
{
  if (!(t > 0.0))
  {
    throw ValidationError("mesh: scale factor must be positive");
  }
  auto nodes = nodes_;
  for (auto &p : nodes)
  {
    p.x *= t;
    p.y *= t;
  }
  return Mesh(std::move(nodes), triangles_, boundary_edges_);
}

Mesh BuildConcentricMesh(const ConcentricSpec &spec)
{
  if (!(spec.h > 0.0) || !std::isfinite(spec.h))
  {
    throw ValidationError("concentric mesh: resolution h must be positive");
  }
  if (!(spec.r_core > 0.0) || !(spec.r_outer > spec.r_core) ||
      (spec.r_box && !(*spec.r_box > spec.r_outer)))
  {
    throw ValidationError("concentric mesh: radii not increasing");
  }
  constexpr int kMinSegments = 8;
  const double two_pi = 2.0 * std::numbers::pi;
  if (two_pi * spec.r_core / spec.h < kMinSegments)
  {
    throw ValidationError("concentric mesh: h too coarse (fewer than 8 angular segments on the "
                          "core boundary)");
  }

  // Ring radii (excluding the center) and the region of the band inside each.
  std::vector<double> radii;
  std::vector<int> band_region;
  std::size_t interface_ring = 0;
  auto add_band = [&](double r0, double r1, int region) {
    const int n = std::max(1, static_cast<int>(std::ceil((r1 - r0) / spec.h - 1e-9)));
    for (int k = 1; k <= n; k++)
    {
      radii.push_back(k == n ? r1 : r0 + (r1 - r0) * k / n);
      band_region.push_back(region);
    }
  };
  add_band(0.0, spec.r_core, kCoreRegion);
  interface_ring = radii.size() - 1;
  add_band(spec.r_core, spec.r_outer, kShellRegion);
  if (spec.r_box)
  {
    add_band(spec.r_outer, *spec.r_box, kSlackRegion);
  }

  std::vector<Point> nodes;
  std::vector<Triangle> triangles;
  std::vector<BoundaryEdge> edges;
  nodes.push_back({0.0, 0.0});

  std::vector<int> ring_start, ring_count;
  for (double r : radii)
  {
    const int n = std::max(kMinSegments, static_cast<int>(std::ceil(two_pi * r / spec.h - 1e-9)));
    ring_start.push_back(static_cast<int>(nodes.size()));
    ring_count.push_back(n);
    for (int i = 0; i < n; i++)
    {
      const double a = two_pi * i / n;
      nodes.push_back({r * std::cos(a), r * std::sin(a)});
    }
  }

  // Center fan.
  {
    const int s = ring_start[0], n = ring_count[0];
    for (int i = 0; i < n; i++)
    {
      triangles.push_back({{0, s + i, s + (i + 1) % n}, band_region[0]});
    }
  }
  // Merge consecutive rings by advancing along whichever ring has the
  // smaller next angle.
  for (std::size_t k = 0; k + 1 < radii.size(); k++)
  {
    const int sa = ring_start[k], na = ring_count[k];
    const int sb = ring_start[k + 1], nb = ring_count[k + 1];
    const int region = band_region[k + 1];
    int i = 0, j = 0;
    while (i < na || j < nb)
    {
      const bool advance_inner =
        j == nb || (i < na && static_cast<long>(i + 1) * nb < static_cast<long>(j + 1) * na);
      const int a = sa + i % na, b = sb + j % nb;
      if (advance_inner)
      {
        triangles.push_back({{a, b, sa + (i + 1) % na}, region});
        i++;
      }
      else
      {
        triangles.push_back({{a, b, sb + (j + 1) % nb}, region});
        j++;
      }
    }
  }

  auto ring_edges = [&](std::size_t k, int tag) {
    const int s = ring_start[k], n = ring_count[k];
    for (int i = 0; i < n; i++)
    {
      edges.push_back({{s + i, s + (i + 1) % n}, tag});
    }
  };
  ring_edges(interface_ring, kInterfaceTag);
  ring_edges(radii.size() - 1, kOuterTag);

  return Mesh(std::move(nodes), std::move(triangles), std::move(edges));
}

Mesh MakeMesh(const DomainSpec &spec)
{
  return std::visit(
    [](const auto &s) -> Mesh {
      using T = std::decay_t<decltype(s)>;
      if constexpr (std::is_same_v<T, ConcentricSpec>)
      {
        return BuildConcentricMesh(s);
      }
      else
      {
        return LoadMeshFile(s.path);
      }
    },
    spec);
}

MeshMetrics ComputeMeshMetrics(const Mesh &mesh)
{
  MeshMetrics m;
  m.n_nodes = mesh.NumNodes();
  m.n_triangles = mesh.NumTriangles();
  const auto &nodes = mesh.Nodes();
  for (std::size_t t = 0; t < mesh.NumTriangles(); t++)
  {
    const auto &tri = mesh.Triangles()[t];
    m.area_by_region[tri.region] += mesh.TriangleArea(t);
    for (int k = 0; k < 3; k++)
    {
      const auto &p = nodes[tri.v[k]], &q = nodes[tri.v[(k + 1) % 3]];
      m.h_max = std::max(m.h_max, std::hypot(p.x - q.x, p.y - q.y));
    }
  }
  return m;
}

}  // namespace enzres
