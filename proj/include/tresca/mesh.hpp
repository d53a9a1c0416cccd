#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "tresca/geometry.hpp"

namespace tresca {

enum class BoundaryTag { Dirichlet, Neumann, Contact };

struct BoundaryFacet {
  int a = -1, b = -1;
  BoundaryTag tag = BoundaryTag::Neumann;
};

// Oriented interior edge; the unit normal points from `left` into `right`.
struct InteriorEdge {
  int a = -1, b = -1;
  int left = -1, right = -1;
  Vec2 normal = Vec2::Zero();
};

enum class Side { Left, Right, Bottom, Top };

namespace detail {
inline std::pair<int, int> edge_key(int a, int b) {
  return a < b ? std::pair{a, b} : std::pair{b, a};
}
}  // namespace detail

// Conforming triangulation of a polygon with tagged boundary facets.
// Immutable after construction; refine() returns a new mesh.
class Mesh {
 public:
  Mesh(std::vector<Vec2> vertices, std::vector<std::array<int, 3>> triangles,
       std::vector<BoundaryFacet> facets,
       std::vector<std::uint8_t> refinement_edges = {})
      : vertices_(std::move(vertices)),
        triangles_(std::move(triangles)),
        facets_(std::move(facets)),
        ref_edge_(std::move(refinement_edges)) {
    if (ref_edge_.empty()) assign_longest_refinement_edges();
    if (ref_edge_.size() != triangles_.size())
      throw std::invalid_argument("Mesh: refinement edge list size mismatch");
    validate();
  }

  int num_vertices() const { return static_cast<int>(vertices_.size()); }
  int num_triangles() const { return static_cast<int>(triangles_.size()); }
  const Vec2& vertex(int v) const { return vertices_[v]; }
  const std::vector<Vec2>& vertices() const { return vertices_; }
  const std::array<int, 3>& triangle(int t) const { return triangles_[t]; }
  const std::vector<std::array<int, 3>>& triangles() const {
    return triangles_;
  }
  const std::vector<BoundaryFacet>& boundary_facets() const { return facets_; }
  // Local index of the edge bisected first (newest-vertex rule), edge k is
  // (v_k, v_{k+1 mod 3}).
  int refinement_edge(int t) const { return ref_edge_[t]; }

  double triangle_area(int t) const {
    const auto& tri = triangles_[t];
    return 0.5 * cross2(vertices_[tri[1]] - vertices_[tri[0]],
                        vertices_[tri[2]] - vertices_[tri[0]]);
  }

  double total_area() const {
    double s = 0.0;
    for (int t = 0; t < num_triangles(); ++t) s += triangle_area(t);
    return s;
  }

  // The unique triangle containing boundary edge (a, b).
  int facet_owner(int facet) const {
    const auto& f = facets_[facet];
    for (int t = 0; t < num_triangles(); ++t) {
      const auto& tri = triangles_[t];
      int hit = 0;
      for (int k = 0; k < 3; ++k)
        if (tri[k] == f.a || tri[k] == f.b) ++hit;
      if (hit == 2) return t;
    }
    throw std::logic_error("Mesh::facet_owner: facet not attached");
  }

  // Outward unit normal of a boundary facet.
  Vec2 facet_normal(int facet) const {
    const auto& f = facets_[facet];
    const int t = facet_owner(facet);
    const auto& tri = triangles_[t];
    int opposite = -1;
    for (int k = 0; k < 3; ++k)
      if (tri[k] != f.a && tri[k] != f.b) opposite = tri[k];
    Vec2 d = vertices_[f.b] - vertices_[f.a];
    Vec2 n(d.y(), -d.x());
    n.normalize();
    if (n.dot(vertices_[opposite] - vertices_[f.a]) > 0.0) n = -n;
    return n;
  }

  bool same_as(const Mesh& other) const {
    if (vertices_.size() != other.vertices_.size()) return false;
    for (std::size_t i = 0; i < vertices_.size(); ++i)
      if (vertices_[i].x() != other.vertices_[i].x() ||
          vertices_[i].y() != other.vertices_[i].y())
        return false;
    return triangles_ == other.triangles_ && facets_same(other);
  }

 private:
  bool facets_same(const Mesh& other) const {
    if (facets_.size() != other.facets_.size()) return false;
    for (std::size_t i = 0; i < facets_.size(); ++i)
      if (facets_[i].a != other.facets_[i].a ||
          facets_[i].b != other.facets_[i].b ||
          facets_[i].tag != other.facets_[i].tag)
        return false;
    return true;
  }

  void assign_longest_refinement_edges() {
    ref_edge_.resize(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
      const auto& tri = triangles_[t];
      int best = 0;
      double best_len = -1.0;
      for (int k = 0; k < 3; ++k) {
        const double len =
            (vertices_[tri[(k + 1) % 3]] - vertices_[tri[k]]).norm();
        if (len > best_len) {
          best_len = len;
          best = k;
        }
      }
      ref_edge_[t] = static_cast<std::uint8_t>(best);
    }
  }

  void validate() const {
    const int nv = num_vertices();
    for (const auto& tri : triangles_)
      for (int v : tri)
        if (v < 0 || v >= nv)
          throw std::invalid_argument("Mesh: triangle vertex out of range");
    for (const auto& f : facets_)
      if (f.a < 0 || f.a >= nv || f.b < 0 || f.b >= nv)
        throw std::invalid_argument("Mesh: facet vertex out of range");
    for (int t = 0; t < num_triangles(); ++t)
      if (triangle_area(t) <= 0.0)
        throw std::invalid_argument(
            "Mesh: triangle " + std::to_string(t) +
            " is degenerate or not counterclockwise");

    // Edge incidence: boundary edges carry exactly one tag, interior none.
    std::map<std::pair<int, int>, int> incidence;
    for (const auto& tri : triangles_)
      for (int k = 0; k < 3; ++k)
        ++incidence[detail::edge_key(tri[k], tri[(k + 1) % 3])];
    for (const auto& [key, count] : incidence)
      if (count > 2)
        throw std::invalid_argument("Mesh: edge shared by more than two triangles");
    std::map<std::pair<int, int>, int> tag_count;
    for (const auto& f : facets_) ++tag_count[detail::edge_key(f.a, f.b)];
    for (const auto& [key, count] : tag_count) {
      if (count != 1)
        throw std::invalid_argument("Mesh: facet tagged more than once");
      auto it = incidence.find(key);
      if (it == incidence.end())
        throw std::invalid_argument("Mesh: tagged facet is not a mesh edge");
      if (it->second != 1)
        throw std::invalid_argument("Mesh: interior edge carries a boundary tag");
    }
    for (const auto& [key, count] : incidence)
      if (count == 1 && tag_count.find(key) == tag_count.end())
        throw std::invalid_argument("Mesh: boundary edge without a tag");

    // Dirichlet and contact boundaries must not touch.
    std::vector<char> on_dirichlet(nv, 0), on_contact(nv, 0);
    for (const auto& f : facets_) {
      if (f.tag == BoundaryTag::Dirichlet)
        on_dirichlet[f.a] = on_dirichlet[f.b] = 1;
      if (f.tag == BoundaryTag::Contact) on_contact[f.a] = on_contact[f.b] = 1;
    }
    for (int v = 0; v < nv; ++v)
      if (on_dirichlet[v] && on_contact[v])
        throw std::invalid_argument(
            "Mesh: vertex shared by Dirichlet and contact facets");

    // The contact boundary must lie on a single straight line.
    const BoundaryFacet* first = nullptr;
    for (const auto& f : facets_)
      if (f.tag == BoundaryTag::Contact) {
        first = &f;
        break;
      }
    if (first != nullptr) {
      const Vec2 p = vertices_[first->a];
      Vec2 d = vertices_[first->b] - p;
      const double scale = d.norm();
      d /= scale;
      for (const auto& f : facets_) {
        if (f.tag != BoundaryTag::Contact) continue;
        for (int v : {f.a, f.b}) {
          const double dist = std::abs(cross2(d, vertices_[v] - p));
          if (dist > 1e-12 * std::max(scale, (vertices_[v] - p).norm()))
            throw std::invalid_argument(
                "Mesh: contact facets are not collinear");
        }
      }
    }
  }

  std::vector<Vec2> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<BoundaryFacet> facets_;
  std::vector<std::uint8_t> ref_edge_;
};

inline double facet_length(const Mesh& mesh, const BoundaryFacet& f) {
  return (mesh.vertex(f.b) - mesh.vertex(f.a)).norm();
}

inline double facet_length(const Mesh& mesh, int facet) {
  return facet_length(mesh, mesh.boundary_facets()[facet]);
}

// Longest edge length.
inline double triangle_diameter(const Mesh& mesh, int t) {
  const auto& tri = mesh.triangle(t);
  double d = 0.0;
  for (int k = 0; k < 3; ++k)
    d = std::max(d, (mesh.vertex(tri[(k + 1) % 3]) - mesh.vertex(tri[k])).norm());
  return d;
}

inline double mesh_size(const Mesh& mesh) {
  double h = 0.0;
  for (int t = 0; t < mesh.num_triangles(); ++t)
    h = std::max(h, triangle_diameter(mesh, t));
  return h;
}

// Structured criss-cross grid on (-0.5, 0.5)^2; every square is split by its
// bottom-left to top-right diagonal.
inline Mesh build_unit_square_mesh(int cells_per_side,
                                   const std::map<Side, BoundaryTag>& tagging) {
  if (cells_per_side < 1)
    throw std::invalid_argument("build_unit_square_mesh: cells_per_side < 1");
  for (Side s : {Side::Left, Side::Right, Side::Bottom, Side::Top})
    if (tagging.find(s) == tagging.end())
      throw std::invalid_argument("build_unit_square_mesh: missing side tag");

  const int n = cells_per_side;
  std::vector<Vec2> vertices;
  vertices.reserve((n + 1) * (n + 1));
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      vertices.emplace_back(static_cast<double>(j) / n - 0.5,
                            static_cast<double>(i) / n - 0.5);

  auto vid = [n](int i, int j) { return i * (n + 1) + j; };
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(2 * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int v00 = vid(i, j), v10 = vid(i, j + 1), v01 = vid(i + 1, j),
                v11 = vid(i + 1, j + 1);
      triangles.push_back({v00, v10, v11});
      triangles.push_back({v00, v11, v01});
    }

  std::vector<BoundaryFacet> facets;
  facets.reserve(4 * n);
  const BoundaryTag bottom = tagging.at(Side::Bottom),
                    top = tagging.at(Side::Top),
                    left = tagging.at(Side::Left),
                    right = tagging.at(Side::Right);
  for (int j = 0; j < n; ++j) facets.push_back({vid(0, j), vid(0, j + 1), bottom});
  for (int i = 0; i < n; ++i) facets.push_back({vid(i, n), vid(i + 1, n), right});
  for (int j = 0; j < n; ++j) facets.push_back({vid(n, j), vid(n, j + 1), top});
  for (int i = 0; i < n; ++i) facets.push_back({vid(i, 0), vid(i + 1, 0), left});

  return Mesh(std::move(vertices), std::move(triangles), std::move(facets));
}

// Owner triangle of every boundary facet in one sweep.
inline std::vector<int> facet_owners(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> owner;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k)
      owner.emplace(detail::edge_key(tri[k], tri[(k + 1) % 3]), t);
  }
  std::vector<int> result;
  result.reserve(mesh.boundary_facets().size());
  for (const auto& f : mesh.boundary_facets())
    result.push_back(owner.at(detail::edge_key(f.a, f.b)));
  return result;
}

// Each interior edge listed once, oriented as it appears in its left triangle.
inline std::vector<InteriorEdge> interior_edges(const Mesh& mesh) {
  std::vector<InteriorEdge> edges;
  std::map<std::pair<int, int>, int> index;
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k) {
      const int a = tri[k], b = tri[(k + 1) % 3];
      auto [it, inserted] = index.try_emplace(detail::edge_key(a, b),
                                              static_cast<int>(edges.size()));
      if (inserted) {
        InteriorEdge e;
        e.a = a;
        e.b = b;
        e.left = t;
        Vec2 d = mesh.vertex(b) - mesh.vertex(a);
        e.normal = Vec2(d.y(), -d.x()).normalized();
        edges.push_back(e);
      } else {
        edges[it->second].right = t;
      }
    }
  }
  std::vector<InteriorEdge> result;
  result.reserve(edges.size());
  for (const auto& e : edges)
    if (e.right >= 0) result.push_back(e);
  return result;
}

// Newest-vertex bisection. Every marked triangle has all three edges bisected;
// closure marks refinement edges until the split is conforming.
inline Mesh refine(const Mesh& mesh, const std::vector<int>& marked) {
  const int nt = mesh.num_triangles();
  for (int t : marked)
    if (t < 0 || t >= nt)
      throw std::invalid_argument("refine: marked triangle out of range");
  if (marked.empty())
    return mesh;

  using Key = std::pair<int, int>;
  std::map<Key, int> midpoint;  // marked edge -> new vertex id (-1 until assigned)
  auto mark_edge = [&midpoint](int a, int b) {
    return midpoint.try_emplace(detail::edge_key(a, b), -1).second;
  };

  for (int t : marked) {
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k) mark_edge(tri[k], tri[(k + 1) % 3]);
  }

  // Closure: a triangle with any marked edge must have its refinement edge marked.
  bool changed = true;
  while (changed) {
    changed = false;
    for (int t = 0; t < nt; ++t) {
      const auto& tri = mesh.triangle(t);
      bool any = false;
      for (int k = 0; k < 3; ++k)
        if (midpoint.count(detail::edge_key(tri[k], tri[(k + 1) % 3]))) any = true;
      if (!any) continue;
      const int r = mesh.refinement_edge(t);
      if (mark_edge(tri[r], tri[(r + 1) % 3])) changed = true;
    }
  }

  // Assign midpoint vertices in deterministic scan order.
  std::vector<Vec2> vertices = mesh.vertices();
  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangle(t);
    for (int k = 0; k < 3; ++k) {
      auto it = midpoint.find(detail::edge_key(tri[k], tri[(k + 1) % 3]));
      if (it != midpoint.end() && it->second < 0) {
        it->second = static_cast<int>(vertices.size());
        vertices.push_back(0.5 * (mesh.vertex(tri[k]) + mesh.vertex(tri[(k + 1) % 3])));
      }
    }
  }

  auto edge_midpoint = [&midpoint](int a, int b) {
    auto it = midpoint.find(detail::edge_key(a, b));
    return it == midpoint.end() ? -1 : it->second;
  };

  std::vector<std::array<int, 3>> triangles;
  std::vector<std::uint8_t> ref_edges;
  triangles.reserve(2 * nt);
  // Children are stored (peak, base-vertex, midpoint) so their refinement
  // edge is always local edge 0 (the old edge), per the newest-vertex rule.
  auto bisect = [&](auto&& self, int va, int vb, int vc) -> void {
    const int m = edge_midpoint(va, vb);
    if (m < 0) {
      triangles.push_back({va, vb, vc});
      ref_edges.push_back(0);
      return;
    }
    self(self, vc, va, m);
    self(self, vb, vc, m);
  };

  for (int t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangle(t);
    const int r = mesh.refinement_edge(t);
    const int a = tri[r], b = tri[(r + 1) % 3], c = tri[(r + 2) % 3];
    if (edge_midpoint(a, b) < 0) {
      triangles.push_back(tri);
      ref_edges.push_back(static_cast<std::uint8_t>(r));
    } else {
      bisect(bisect, a, b, c);
    }
  }

  std::vector<BoundaryFacet> facets;
  facets.reserve(mesh.boundary_facets().size());
  for (const auto& f : mesh.boundary_facets()) {
    const int m = edge_midpoint(f.a, f.b);
    if (m < 0) {
      facets.push_back(f);
    } else {
      facets.push_back({f.a, m, f.tag});
      facets.push_back({m, f.b, f.tag});
    }
  }

  return Mesh(std::move(vertices), std::move(triangles), std::move(facets),
              std::move(ref_edges));
}

inline Mesh refine_all(const Mesh& mesh) {
  std::vector<int> all(mesh.num_triangles());
  for (int t = 0; t < mesh.num_triangles(); ++t) all[t] = t;
  return refine(mesh, all);
}

// --- plain-text mesh format ------------------------------------------------
//
//   tresca-mesh v1
//   vertices <n>     followed by n lines "x y"
//   triangles <m>    followed by m lines "i j k"
//   facets <b>       followed by b lines "i j TAG"

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline const char* tag_name(BoundaryTag tag) {
  switch (tag) {
    case BoundaryTag::Dirichlet: return "dirichlet";
    case BoundaryTag::Neumann: return "neumann";
    case BoundaryTag::Contact: return "contact";
  }
  return "neumann";
}

}  // namespace detail

inline void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << "tresca-mesh v1\n";
  os << "vertices " << mesh.num_vertices() << "\n";
  for (const auto& v : mesh.vertices())
    os << detail::format_double(v.x()) << " " << detail::format_double(v.y())
       << "\n";
  os << "triangles " << mesh.num_triangles() << "\n";
  for (const auto& t : mesh.triangles())
    os << t[0] << " " << t[1] << " " << t[2] << "\n";
  os << "facets " << mesh.boundary_facets().size() << "\n";
  for (const auto& f : mesh.boundary_facets())
    os << f.a << " " << f.b << " " << detail::tag_name(f.tag) << "\n";
}

inline Mesh read_mesh(std::istream& is) {
  int line_no = 0;
  auto fail = [&line_no](const std::string& what) -> std::invalid_argument {
    return std::invalid_argument("mesh parse error at line " +
                                 std::to_string(line_no) + ": " + what);
  };
  auto next_line = [&](std::string& line) {
    if (!std::getline(is, line)) throw fail("unexpected end of file");
    ++line_no;
  };

  std::string line;
  next_line(line);
  if (line != "tresca-mesh v1") throw fail("bad header, expected 'tresca-mesh v1'");

  auto read_count = [&](const std::string& keyword) {
    next_line(line);
    std::istringstream ss(line);
    std::string word;
    long count = -1;
    if (!(ss >> word >> count) || word != keyword || count < 0)
      throw fail("expected '" + keyword + " <count>'");
    return count;
  };

  const long nv = read_count("vertices");
  std::vector<Vec2> vertices;
  vertices.reserve(nv);
  for (long i = 0; i < nv; ++i) {
    next_line(line);
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x >> y)) throw fail("expected 'x y'");
    vertices.emplace_back(x, y);
  }

  const long ntri = read_count("triangles");
  std::vector<std::array<int, 3>> triangles;
  triangles.reserve(ntri);
  for (long i = 0; i < ntri; ++i) {
    next_line(line);
    std::istringstream ss(line);
    int a, b, c;
    if (!(ss >> a >> b >> c)) throw fail("expected 'i j k'");
    triangles.push_back({a, b, c});
  }

  const long nf = read_count("facets");
  std::vector<BoundaryFacet> facets;
  facets.reserve(nf);
  for (long i = 0; i < nf; ++i) {
    next_line(line);
    std::istringstream ss(line);
    int a, b;
    std::string tag;
    if (!(ss >> a >> b >> tag)) throw fail("expected 'i j TAG'");
    BoundaryFacet f;
    f.a = a;
    f.b = b;
    if (tag == "dirichlet")
      f.tag = BoundaryTag::Dirichlet;
    else if (tag == "neumann")
      f.tag = BoundaryTag::Neumann;
    else if (tag == "contact")
      f.tag = BoundaryTag::Contact;
    else
      throw fail("unknown tag '" + tag + "'");
    facets.push_back(f);
  }

  try {
    return Mesh(std::move(vertices), std::move(triangles), std::move(facets));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument("mesh parse error at line " +
                                std::to_string(line_no) + ": " + e.what());
  }
}

}  // namespace tresca
