// Copyright The enzres Authors.
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "enzres/error.hpp"
#include "enzres/mesh.hpp"

namespace enzres
{

namespace
{

class LineReader
{
public:
  explicit LineReader(std::istream &in) : in_(in) {}

  // Next non-blank line split into tokens, comments stripped. Empty at EOF.
  std::vector<std::string_view> Next()
  {
    while (std::getline(in_, line_))
    {
      line_no_++;
      if (auto pos = line_.find('#'); pos != std::string::npos)
      {
        line_.erase(pos);
      }
      std::vector<std::string_view> tokens;
      std::string_view rest(line_);
      while (true)
      {
        auto start = rest.find_first_not_of(" \t\r");
        if (start == std::string_view::npos)
        {
          break;
        }
        rest.remove_prefix(start);
        auto end = rest.find_first_of(" \t\r");
        tokens.push_back(rest.substr(0, end));
        if (end == std::string_view::npos)
        {
          break;
        }
        rest.remove_prefix(end);
      }
      if (!tokens.empty())
      {
        return tokens;
      }
    }
    return {};
  }

  [[noreturn]] void Fail(const std::string &msg) const
  {
    throw ValidationError("enzmesh line " + std::to_string(line_no_) + ": " + msg);
  }

  template <typename T>
  T Parse(std::string_view token) const
  {
    T value{};
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc() || ptr != token.data() + token.size())
    {
      Fail("cannot parse '" + std::string(token) + "'");
    }
    return value;
  }

private:
  std::istream &in_;
  std::string line_;
  int line_no_ = 0;
};

std::size_t ReadSection(LineReader &reader, std::string_view name)
{
  auto tokens = reader.Next();
  if (tokens.size() != 2 || tokens[0] != name)
  {
    reader.Fail("expected '" + std::string(name) + " <count>'");
  }
  const long count = reader.Parse<long>(tokens[1]);
  if (count < 0)
  {
    reader.Fail("negative count");
  }
  return static_cast<std::size_t>(count);
}

void ExpectTokens(const LineReader &reader, const std::vector<std::string_view> &tokens,
                  std::size_t n)
{
  if (tokens.size() != n)
  {
    reader.Fail("expected " + std::to_string(n) + " fields, found " +
                std::to_string(tokens.size()));
  }
}

void WriteDouble(std::ostream &out, double v)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

}  // namespace

Mesh LoadMesh(std::istream &in)
{
  LineReader reader(in);
  auto header = reader.Next();
  if (header.size() != 2 || header[0] != "enzmesh" || header[1] != "v1")
  {
    reader.Fail("malformed header, expected 'enzmesh v1'");
  }

  const std::size_t n_nodes = ReadSection(reader, "nodes");
  std::vector<Point> nodes(n_nodes);
  for (auto &p : nodes)
  {
    auto t = reader.Next();
    ExpectTokens(reader, t, 2);
    p = {reader.Parse<double>(t[0]), reader.Parse<double>(t[1])};
  }

  auto check_index = [&](int i) {
    if (i < 0 || static_cast<std::size_t>(i) >= n_nodes)
    {
      reader.Fail("node index " + std::to_string(i) + " out of range (" +
                  std::to_string(n_nodes) + " nodes)");
    }
  };

  const std::size_t n_tri = ReadSection(reader, "triangles");
  std::vector<Triangle> triangles(n_tri);
  for (auto &tri : triangles)
  {
    auto t = reader.Next();
    ExpectTokens(reader, t, 4);
    for (int k = 0; k < 3; k++)
    {
      tri.v[k] = reader.Parse<int>(t[k]);
      check_index(tri.v[k]);
    }
    tri.region = reader.Parse<int>(t[3]);
    if (!(SignedArea(nodes[tri.v[0]], nodes[tri.v[1]], nodes[tri.v[2]]) > 0.0))
    {
      reader.Fail("triangle has non-positive signed area");
    }
  }

  const std::size_t n_edges = ReadSection(reader, "boundary_edges");
  std::vector<BoundaryEdge> edges(n_edges);
  for (auto &e : edges)
  {
    auto t = reader.Next();
    ExpectTokens(reader, t, 3);
    for (int k = 0; k < 2; k++)
    {
      e.v[k] = reader.Parse<int>(t[k]);
      check_index(e.v[k]);
    }
    e.tag = reader.Parse<int>(t[2]);
  }

  if (!reader.Next().empty())
  {
    reader.Fail("unexpected content after boundary_edges");
  }
  return Mesh(std::move(nodes), std::move(triangles), std::move(edges));
}

Mesh LoadMeshFile(const std::filesystem::path &path)
{
  std::ifstream in(path);
  if (!in)
  {
    throw ValidationError("cannot open mesh file " + path.string());
  }
  return LoadMesh(in);
}

void SaveMesh(const Mesh &mesh, std::ostream &out)
{
  out << "enzmesh v1\nnodes " << mesh.NumNodes() << '\n';
  for (const auto &p : mesh.Nodes())
  {
    WriteDouble(out, p.x);
    out << ' ';
    WriteDouble(out, p.y);
    out << '\n';
  }
  out << "triangles " << mesh.NumTriangles() << '\n';
  for (const auto &t : mesh.Triangles())
  {
    out << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << t.region << '\n';
  }
  out << "boundary_edges " << mesh.BoundaryEdges().size() << '\n';
  for (const auto &e : mesh.BoundaryEdges())
  {
    out << e.v[0] << ' ' << e.v[1] << ' ' << e.tag << '\n';
  }
}

void SaveMeshFile(const Mesh &mesh, const std::filesystem::path &path)
{
  std::ofstream out(path);
  if (!out)
  {
    throw ValidationError("cannot write mesh file " + path.string());
  }
  SaveMesh(mesh, out);
}

}  // namespace enzres
