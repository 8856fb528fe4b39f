#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <ostream>
#include <variant>
#include <vector>

#include "lakelab/errors.hpp"
#include "lakelab/geometry.hpp"
#include "lakelab/vec2.hpp"

namespace lakelab {

using CellField = std::vector<double>;
using FaceField = std::vector<double>;
using VectorField = std::vector<Vec2>;

enum class FaceTag { Interior, Outer, Island, Pole };
enum class VertexTag { Interior, Outer, Island, Pole };

struct Cell {
  Vec2 center;
  double area = 0.0;
  int i = 0;  // radial ring (polar) or column (Cartesian)
  int j = 0;  // angular sector (polar) or row (Cartesian)
};

/// A face between `owner` and `nbr` (-1 on the boundary).  `normal` points
/// out of the owner; walking v0 -> v1 follows perp(normal), which is
/// counterclockwise around the owner.
struct Face {
  int owner = -1;
  int nbr = -1;
  FaceTag tag = FaceTag::Interior;
  double length = 0.0;
  double dist = 0.0;  // centre to centre, or centre to face on the boundary
  Vec2 mid;
  Vec2 normal;
  int v0 = -1;
  int v1 = -1;
};

struct Vertex {
  Vec2 pos;
  VertexTag tag = VertexTag::Interior;
};

struct Grid {
  enum class Kind { Polar, Cartesian };
  Kind kind = Kind::Polar;

  // polar layout
  int nr = 0;
  int nth = 0;
  double r_in = 0.0;
  double r_out = 1.0;
  std::vector<double> radii;  // nr + 1 ring radii

  // Cartesian layout
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double h = 0.0;
  std::vector<int> cell_at;  // (j * nx + i) -> cell id or -1

  std::vector<Cell> cells;
  std::vector<Face> faces;
  std::vector<Vertex> vertices;

  // CSR adjacency
  std::vector<int> cell_face_start;
  std::vector<int> cell_face_ids;
  std::vector<int> vertex_cell_start;
  std::vector<int> vertex_cell_ids;

  bool has_island = false;
  bool has_pole = false;

  std::size_t size() const { return cells.size(); }

  double dtheta() const { return 2.0 * std::numbers::pi / nth; }
  double dr() const { return (r_out - r_in) / nr; }

  /// Typical cell width, used by CFL estimates and collars.
  double spacing() const { return kind == Kind::Polar ? dr() : h; }

  template <class F>
  void for_cell_faces(int c, F&& fn) const {
    for (int k = cell_face_start[c]; k < cell_face_start[c + 1]; ++k) fn(cell_face_ids[k]);
  }

  /// +1 if cell c owns face f, -1 if it is the neighbour.
  double orientation(int c, int f) const { return faces[f].owner == c ? 1.0 : -1.0; }

  void finalize_adjacency() {
    const int nc = static_cast<int>(cells.size());
    cell_face_start.assign(nc + 1, 0);
    for (const Face& f : faces) {
      ++cell_face_start[f.owner + 1];
      if (f.nbr >= 0) ++cell_face_start[f.nbr + 1];
    }
    for (int c = 0; c < nc; ++c) cell_face_start[c + 1] += cell_face_start[c];
    cell_face_ids.assign(cell_face_start[nc], 0);
    std::vector<int> fill(cell_face_start.begin(), cell_face_start.end() - 1);
    for (int fi = 0; fi < static_cast<int>(faces.size()); ++fi) {
      cell_face_ids[fill[faces[fi].owner]++] = fi;
      if (faces[fi].nbr >= 0) cell_face_ids[fill[faces[fi].nbr]++] = fi;
    }
  }

  void set_vertex_cells(const std::vector<std::vector<int>>& lists) {
    vertex_cell_start.assign(lists.size() + 1, 0);
    vertex_cell_ids.clear();
    for (std::size_t v = 0; v < lists.size(); ++v) {
      vertex_cell_ids.insert(vertex_cell_ids.end(), lists[v].begin(), lists[v].end());
      vertex_cell_start[v + 1] = static_cast<int>(vertex_cell_ids.size());
    }
  }
};

/// Polar tensor grid on the annulus r_in < r < r_out; r_in = 0 gives a disk
/// whose innermost faces collapse onto the pole with zero length.
inline Grid make_polar_grid(double r_in, double r_out, int nr, int nth) {
  if (nr < 1 || nth < 3) fail(ErrorKind::InvalidGeometry, "polar grid needs nr >= 1 and ntheta >= 3");
  if (!(r_in >= 0.0) || !(r_out > r_in)) fail(ErrorKind::InvalidGeometry, "polar grid needs 0 <= r_in < r_out");
  Grid g;
  g.kind = Grid::Kind::Polar;
  g.nr = nr;
  g.nth = nth;
  g.r_in = r_in;
  g.r_out = r_out;
  g.has_pole = r_in == 0.0;
  g.has_island = !g.has_pole;
  const double dr = (r_out - r_in) / nr;
  const double dth = 2.0 * std::numbers::pi / nth;
  g.radii.resize(nr + 1);
  for (int k = 0; k <= nr; ++k) g.radii[k] = k == nr ? r_out : r_in + k * dr;
  auto rc = [&](int i) { return 0.5 * (g.radii[i] + g.radii[i + 1]); };
  auto cid = [&](int i, int j) { return i * nth + ((j % nth) + nth) % nth; };
  auto vid = [&](int k, int j) { return k * nth + ((j % nth) + nth) % nth; };
  auto dir = [](double th) { return Vec2{std::cos(th), std::sin(th)}; };

  g.cells.reserve(static_cast<std::size_t>(nr) * nth);
  for (int i = 0; i < nr; ++i) {
    const double area = 0.5 * (g.radii[i + 1] * g.radii[i + 1] - g.radii[i] * g.radii[i]) * dth;
    for (int j = 0; j < nth; ++j) g.cells.push_back({rc(i) * dir((j + 0.5) * dth), area, i, j});
  }
  for (int k = 0; k <= nr; ++k) {
    VertexTag tag = VertexTag::Interior;
    if (k == nr) tag = VertexTag::Outer;
    else if (k == 0) tag = g.has_pole ? VertexTag::Pole : VertexTag::Island;
    for (int j = 0; j < nth; ++j) g.vertices.push_back({g.radii[k] * dir(j * dth), tag});
  }

  for (int k = 0; k <= nr; ++k) {
    for (int j = 0; j < nth; ++j) {
      const Vec2 rhat = dir((j + 0.5) * dth);
      Face f;
      f.length = g.radii[k] * dth;
      f.mid = g.radii[k] * rhat;
      if (k == 0) {
        f.owner = cid(0, j);
        f.tag = g.has_pole ? FaceTag::Pole : FaceTag::Island;
        f.normal = -rhat;
        f.dist = rc(0) - g.radii[0];
        f.v0 = vid(0, j + 1);
        f.v1 = vid(0, j);
      } else if (k == nr) {
        f.owner = cid(nr - 1, j);
        f.tag = FaceTag::Outer;
        f.normal = rhat;
        f.dist = g.radii[nr] - rc(nr - 1);
        f.v0 = vid(nr, j);
        f.v1 = vid(nr, j + 1);
      } else {
        f.owner = cid(k - 1, j);
        f.nbr = cid(k, j);
        f.normal = rhat;
        f.dist = rc(k) - rc(k - 1);
        f.v0 = vid(k, j);
        f.v1 = vid(k, j + 1);
      }
      g.faces.push_back(f);
    }
  }
  for (int i = 0; i < nr; ++i) {
    for (int j = 0; j < nth; ++j) {
      const double th = (j + 1) * dth;
      Face f;
      f.owner = cid(i, j);
      f.nbr = cid(i, j + 1);
      f.length = g.radii[i + 1] - g.radii[i];
      f.dist = rc(i) * dth;
      f.mid = rc(i) * dir(th);
      f.normal = {-std::sin(th), std::cos(th)};
      f.v0 = vid(i + 1, j + 1);
      f.v1 = vid(i, j + 1);
      g.faces.push_back(f);
    }
  }
  g.finalize_adjacency();

  std::vector<std::vector<int>> vc(g.vertices.size());
  for (int k = 0; k <= nr; ++k) {
    for (int j = 0; j < nth; ++j) {
      auto& list = vc[vid(k, j)];
      if (k == 0 && g.has_pole) {
        for (int jj = 0; jj < nth; ++jj) list.push_back(cid(0, jj));
        continue;
      }
      for (int i : {k - 1, k}) {
        if (i < 0 || i >= nr) continue;
        list.push_back(cid(i, j - 1));
        list.push_back(cid(i, j));
      }
    }
  }
  g.set_vertex_cells(vc);
  return g;
}

/// Staircase grid over the wet cells of a mask.
inline Grid make_cartesian_grid(const MaskedJordan& m) {
  const DryComponents dc = label_dry(m);
  if (dc.islands() > 1) fail(ErrorKind::InvalidGeometry, "at most one island is supported");
  Grid g;
  g.kind = Grid::Kind::Cartesian;
  g.nx = m.nx;
  g.ny = m.ny;
  g.x0 = m.x0;
  g.y0 = m.y0;
  g.h = m.h;
  g.has_island = dc.islands() == 1;
  g.cell_at.assign(static_cast<std::size_t>(m.nx) * m.ny, -1);
  for (int j = 0; j < m.ny; ++j) {
    for (int i = 0; i < m.nx; ++i) {
      if (!m.is_wet(i, j)) continue;
      g.cell_at[j * m.nx + i] = static_cast<int>(g.cells.size());
      g.cells.push_back({{m.x0 + (i + 0.5) * m.h, m.y0 + (j + 0.5) * m.h}, m.h * m.h, i, j});
    }
  }
  if (g.cells.empty()) fail(ErrorKind::InvalidGeometry, "mask has no wet cells");

  // Tag of the land on the far side of a boundary face.
  auto land = [&](int i, int j) {
    if (i < 0 || j < 0 || i >= m.nx || j >= m.ny) return FaceTag::Outer;
    const int c = dc.label[j * m.nx + i];
    return dc.touches_edge[c] ? FaceTag::Outer : FaceTag::Island;
  };
  const int nvx = m.nx + 1;
  auto vid = [&](int i, int j) { return j * nvx + i; };

  g.vertices.resize(static_cast<std::size_t>(nvx) * (m.ny + 1));
  std::vector<std::vector<int>> vc(g.vertices.size());
  for (int j = 0; j <= m.ny; ++j) {
    for (int i = 0; i <= m.nx; ++i) {
      Vertex& v = g.vertices[vid(i, j)];
      v.pos = {m.x0 + i * m.h, m.y0 + j * m.h};
      bool outer = false, island = false;
      for (int dj = -1; dj <= 0; ++dj) {
        for (int di = -1; di <= 0; ++di) {
          const int ci = i + di, cj = j + dj;
          if (m.is_wet(ci, cj)) {
            vc[vid(i, j)].push_back(g.cell_at[cj * m.nx + ci]);
          } else if (land(ci, cj) == FaceTag::Outer) {
            outer = true;
          } else {
            island = true;
          }
        }
      }
      if (vc[vid(i, j)].empty()) continue;
      if (outer && island) {
        fail(ErrorKind::InvalidGeometry, "island and outer shore meet at a vertex");
      }
      v.tag = outer ? VertexTag::Outer : island ? VertexTag::Island : VertexTag::Interior;
    }
  }

  for (const Cell& c : std::vector<Cell>(g.cells)) {
    const int i = c.i, j = c.j;
    const int own = g.cell_at[j * m.nx + i];
    struct Side {
      int di, dj;
      Vec2 n;
      int v0i, v0j, v1i, v1j;
    };
    const Side sides[4] = {
        {1, 0, {1, 0}, i + 1, j, i + 1, j + 1},
        {0, 1, {0, 1}, i + 1, j + 1, i, j + 1},
        {-1, 0, {-1, 0}, i, j + 1, i, j},
        {0, -1, {0, -1}, i, j, i + 1, j},
    };
    for (int s = 0; s < 4; ++s) {
      const Side& sd = sides[s];
      const int ni = i + sd.di, nj = j + sd.dj;
      const bool wet = m.is_wet(ni, nj);
      if (wet && s >= 2) continue;  // interior faces are created from the west/south cell
      Face f;
      f.owner = own;
      f.normal = sd.n;
      f.length = m.h;
      f.mid = c.center + (0.5 * m.h) * sd.n;
      f.v0 = vid(sd.v0i, sd.v0j);
      f.v1 = vid(sd.v1i, sd.v1j);
      if (wet) {
        f.nbr = g.cell_at[nj * m.nx + ni];
        f.dist = m.h;
      } else {
        f.tag = land(ni, nj);
        f.dist = 0.5 * m.h;
      }
      g.faces.push_back(f);
    }
  }
  g.finalize_adjacency();
  g.set_vertex_cells(vc);
  return g;
}

/// Cell-centre mask of a disk or annulus on an n x n box.
inline MaskedJordan rasterize(const LakeSpec& spec, int n) {
  MaskedJordan m;
  const double R = spec.outer_radius();
  m.nx = m.ny = n;
  m.h = 2.0 * R / n;
  m.x0 = m.y0 = -R;
  m.wet.assign(static_cast<std::size_t>(n) * n, 0);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double r = norm({m.x0 + (i + 0.5) * m.h, m.y0 + (j + 0.5) * m.h});
      m.wet[static_cast<std::size_t>(j) * n + i] = (r < R && r > spec.island_radius()) ? 1 : 0;
    }
  }
  return m;
}

struct GridOptions {
  Grid::Kind kind = Grid::Kind::Polar;
  int nr = 128;
  int ntheta = 128;
  int ncart = 128;  // cells across the box for rasterized disks and annuli
};

inline Grid build_grid(const LakeSpec& spec, const GridOptions& opt) {
  // masks carry their own resolution whatever kind was requested
  if (const auto* m = std::get_if<MaskedJordan>(&spec.domain)) return make_cartesian_grid(*m);
  if (opt.kind == Grid::Kind::Cartesian) return make_cartesian_grid(rasterize(spec, opt.ncart));
  if (const auto* d = std::get_if<Disk>(&spec.domain)) return make_polar_grid(0.0, d->R, opt.nr, opt.ntheta);
  const auto& a = std::get<Annulus>(spec.domain);
  return make_polar_grid(a.r_in, a.R, opt.nr, opt.ntheta);
}

/// Depth at cells and faces.  Interior faces take the harmonic mean of the
/// two cells; boundary faces sample the law halfway between centre and face.
struct DepthSample {
  CellField cell;
  FaceField face;
};

inline DepthSample sample_depth(const LakeSpec& spec, const Grid& g) {
  const DepthLaw& b = *spec.depth;
  DepthSample s;
  s.cell.resize(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    s.cell[c] = b(g.cells[c].center);
    if (!(s.cell[c] > 0.0)) {
      char buf[128];
      std::snprintf(buf, sizeof buf, "depth %g at wet cell (%d,%d)", s.cell[c], g.cells[c].i, g.cells[c].j);
      fail(ErrorKind::InvalidDepth, buf);
    }
  }
  s.face.resize(g.faces.size());
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    const double bo = s.cell[f.owner];
    if (f.nbr >= 0) {
      const double bn = s.cell[f.nbr];
      s.face[fi] = 2.0 * bo * bn / (bo + bn);
    } else {
      const double bm = b(0.5 * (g.cells[f.owner].center + f.mid));
      s.face[fi] = bm > 0.0 ? bm : bo;
    }
  }
  return s;
}

enum class Weight { InvB, B, One };

namespace detail {
inline double weight_of(Weight w, double b) {
  switch (w) {
    case Weight::InvB:
      if (!(b > 0.0)) fail(ErrorKind::DegenerateWeight, "1/b weight on a dry cell");
      return 1.0 / b;
    case Weight::B: return b;
    case Weight::One: return 1.0;
  }
  return 1.0;
}
inline double sq(double x) { return x * x; }
inline double sq(Vec2 x) { return dot(x, x); }
}  // namespace detail

/// (sum_i w_i |f_i|^2 A_i)^{1/2} over the cells accepted by `keep`.
template <class T>
double weighted_norm(const std::vector<T>& f, Weight w, const Grid& g, const CellField& b,
                     const std::function<bool(int)>& keep = {}) {
  double s = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (keep && !keep(static_cast<int>(c))) continue;
    s += detail::weight_of(w, b[c]) * detail::sq(f[c]) * g.cells[c].area;
  }
  return std::sqrt(s);
}

inline double integrate(const CellField& f, const Grid& g) {
  double s = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) s += f[c] * g.cells[c].area;
  return s;
}

/// Interpolates a cell field at an arbitrary point: bilinear in (r, theta)
/// index space on polar grids, bilinear over wet neighbours on Cartesian ones.
template <class T>
T sample_at(const Grid& g, const std::vector<T>& f, Vec2 x) {
  if (g.kind == Grid::Kind::Polar) {
    const double r = norm(x);
    double th = std::atan2(x.y, x.x);
    if (th < 0) th += 2.0 * std::numbers::pi;
    double s = (r - g.r_in) / g.dr() - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(g.nr - 1));
    const int i0 = std::min(static_cast<int>(s), std::max(g.nr - 2, 0));
    const int i1 = std::min(i0 + 1, g.nr - 1);
    const double fs = s - i0;
    const double t = th / g.dtheta() - 0.5;
    const int jf = static_cast<int>(std::floor(t));
    const double ft = t - jf;
    auto at = [&](int i, int j) { return f[i * g.nth + ((j % g.nth) + g.nth) % g.nth]; };
    return (1 - fs) * ((1 - ft) * at(i0, jf) + ft * at(i0, jf + 1)) +
           fs * ((1 - ft) * at(i1, jf) + ft * at(i1, jf + 1));
  }
  const double s = (x.x - g.x0) / g.h - 0.5;
  const double t = (x.y - g.y0) / g.h - 0.5;
  const int i0 = static_cast<int>(std::floor(s)), j0 = static_cast<int>(std::floor(t));
  T acc{};
  double wsum = 0.0;
  for (int dj = 0; dj <= 1; ++dj) {
    for (int di = 0; di <= 1; ++di) {
      const int i = i0 + di, j = j0 + dj;
      if (i < 0 || j < 0 || i >= g.nx || j >= g.ny) continue;
      const int c = g.cell_at[j * g.nx + i];
      if (c < 0) continue;
      const double w = (di ? s - i0 : 1 - (s - i0)) * (dj ? t - j0 : 1 - (t - j0));
      acc += w * f[c];
      wsum += w;
    }
  }
  if (wsum > 0.0) acc *= 1.0 / wsum;
  return acc;
}

/// CSV with columns i, j, x, y, value.
inline void write_field_csv(std::ostream& os, const Grid& g, const CellField& f) {
  os << "i,j,x,y,value\n";
  char buf[160];
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Cell& cell = g.cells[c];
    std::snprintf(buf, sizeof buf, "%d,%d,%.12g,%.12g,%.12g\n", cell.i, cell.j, cell.center.x,
                  cell.center.y, f[c]);
    os << buf;
  }
}

}  // namespace lakelab
