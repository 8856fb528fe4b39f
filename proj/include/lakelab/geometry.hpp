#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "lakelab/depth.hpp"
#include "lakelab/errors.hpp"
#include "lakelab/vec2.hpp"

namespace lakelab {

struct Disk {
  double R = 1.0;
};

struct Annulus {
  double r_in = 0.5;
  double R = 1.0;
};

/// Cell-centred wet mask on a uniform box; cell (i,j) covers
/// [x0 + i h, x0 + (i+1) h] x [y0 + j h, y0 + (j+1) h].
struct MaskedJordan {
  double x0 = -1.0;
  double y0 = -1.0;
  double h = 0.1;
  int nx = 0;
  int ny = 0;
  std::vector<std::uint8_t> wet;  // wet[j * nx + i]

  bool is_wet(int i, int j) const {
    if (i < 0 || j < 0 || i >= nx || j >= ny) return false;
    return wet[static_cast<std::size_t>(j) * nx + i] != 0;
  }
};

using Domain = std::variant<Disk, Annulus, MaskedJordan>;

/// Connected components of the dry cells of a mask (4-connectivity).  The
/// component touching the box edge, if any, is the outer land.
struct DryComponents {
  std::vector<int> label;  // -1 for wet cells
  int count = 0;
  std::vector<bool> touches_edge;

  int islands() const {
    int n = 0;
    for (bool t : touches_edge) n += t ? 0 : 1;
    return n;
  }
};

inline DryComponents label_dry(const MaskedJordan& m) {
  DryComponents out;
  out.label.assign(static_cast<std::size_t>(m.nx) * m.ny, -1);
  std::vector<int> stack;
  for (int j = 0; j < m.ny; ++j) {
    for (int i = 0; i < m.nx; ++i) {
      const int id = j * m.nx + i;
      if (m.is_wet(i, j) || out.label[id] >= 0) continue;
      const int c = out.count++;
      bool edge = false;
      stack.push_back(id);
      out.label[id] = c;
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int ci = cur % m.nx, cj = cur / m.nx;
        if (ci == 0 || cj == 0 || ci == m.nx - 1 || cj == m.ny - 1) edge = true;
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int ni = ci + di[k], nj = cj + dj[k];
          if (ni < 0 || nj < 0 || ni >= m.nx || nj >= m.ny) continue;
          const int nid = nj * m.nx + ni;
          if (m.is_wet(ni, nj) || out.label[nid] >= 0) continue;
          out.label[nid] = c;
          stack.push_back(nid);
        }
      }
      out.touches_edge.push_back(edge);
    }
  }
  return out;
}

struct LakeSpec {
  Domain domain = Disk{};
  DepthPtr depth = DepthLaw::flat(1.0);
  double a0 = 0.0;       // outer shore exponent
  double a1 = 1.0;       // exponent at the centre or island shore
  double c_floor = 1.0;  // lower bound of the shore coefficient c(x)

  double outer_radius() const {
    if (const auto* d = std::get_if<Disk>(&domain)) return d->R;
    if (const auto* a = std::get_if<Annulus>(&domain)) return a->R;
    const auto& m = std::get<MaskedJordan>(domain);
    const double hx = 0.5 * m.nx * m.h, hy = 0.5 * m.ny * m.h;
    return std::max(hx, hy);
  }

  /// Radius of the island for annuli, 0 otherwise.
  double island_radius() const {
    if (const auto* a = std::get_if<Annulus>(&domain)) return a->r_in;
    return 0.0;
  }

  bool has_island() const {
    if (std::holds_alternative<Annulus>(domain)) return true;
    if (const auto* m = std::get_if<MaskedJordan>(&domain)) return label_dry(*m).islands() > 0;
    return false;
  }

  /// Depth vanishes at the origin of a simply connected lake.
  bool punctured() const {
    return std::holds_alternative<Disk>(domain) && (*depth)(Vec2{}) <= 0.0;
  }

  void validate() const {
    if (!depth) fail(ErrorKind::InvalidDepth, "lake has no depth law");
    if (const auto* d = std::get_if<Disk>(&domain)) {
      if (!(d->R > 0.0)) fail(ErrorKind::InvalidGeometry, "disk radius must be positive");
    } else if (const auto* a = std::get_if<Annulus>(&domain)) {
      if (!(a->r_in > 0.0) || !(a->R > a->r_in)) {
        fail(ErrorKind::InvalidGeometry, "annulus needs 0 < r_in < R");
      }
    } else {
      const auto& m = std::get<MaskedJordan>(domain);
      if (m.nx < 1 || m.ny < 1 || !(m.h > 0.0) ||
          m.wet.size() != static_cast<std::size_t>(m.nx) * m.ny) {
        fail(ErrorKind::InvalidGeometry, "mask needs nx*ny entries and h > 0");
      }
      if (label_dry(m).islands() > 1) fail(ErrorKind::InvalidGeometry, "at most one island is supported");
    }
    if (!(a0 >= 0.0)) fail(ErrorKind::InvalidDepth, "outer shore exponent a0 must be >= 0");
    if (!(c_floor > 0.0)) fail(ErrorKind::InvalidDepth, "c_floor must be positive");
    if (punctured() && !(a1 > 0.0 && a1 < 2.0)) {
      fail(ErrorKind::InvalidDepth, "punctured lake needs a1 in (0,2)");
    }
  }
};

enum class SequenceMode { Evanescent, Emergent };

/// How each member of an eps-sequence is built from the base lake.
enum class SequenceKind {
  Flooded,  // evanescent: b - eps on {b > eps}
  Shrink,   // evanescent: base depth on Annulus(eps, R)
  Shelf,    // evanescent: the piecewise shelf law on Annulus(eps, R)
  Raised,   // emergent: b + eps
  Volcano,  // emergent: smoothed cone blended into b
};

struct SequenceOptions {
  SequenceKind kind = SequenceKind::Flooded;
  double eta_radius = 0.3;
  int mask_cells = 128;  // resolution of masks built for non-radial floods
};

/// eps0, eps0/2, eps0/4, ...
inline std::vector<double> halving(double eps0, int count) {
  std::vector<double> out;
  for (int k = 0; k < count; ++k) out.push_back(eps0 * std::ldexp(1.0, -k));
  return out;
}

namespace detail {

/// Smallest r in (0, R) with profile(r) > eps, for increasing profiles.
inline double flood_radius(const DepthLaw& b, double eps, double R) {
  double lo = 0.0, hi = R;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (b.profile(mid) > eps) hi = mid;
    else lo = mid;
  }
  return hi;
}

inline MaskedJordan flood_mask(const LakeSpec& spec, double eps, int cells) {
  MaskedJordan m;
  if (const auto* src = std::get_if<MaskedJordan>(&spec.domain)) {
    m = *src;
  } else {
    const double R = spec.outer_radius();
    m.nx = m.ny = cells;
    m.h = 2.0 * R / cells;
    m.x0 = m.y0 = -R;
    m.wet.assign(static_cast<std::size_t>(cells) * cells, 0);
    for (int j = 0; j < cells; ++j) {
      for (int i = 0; i < cells; ++i) {
        const Vec2 c{m.x0 + (i + 0.5) * m.h, m.y0 + (j + 0.5) * m.h};
        const double r = norm(c);
        const bool inside = r < R && r > spec.island_radius();
        m.wet[static_cast<std::size_t>(j) * cells + i] = inside ? 1 : 0;
      }
    }
  }
  for (int j = 0; j < m.ny; ++j) {
    for (int i = 0; i < m.nx; ++i) {
      const Vec2 c{m.x0 + (i + 0.5) * m.h, m.y0 + (j + 0.5) * m.h};
      auto& w = m.wet[static_cast<std::size_t>(j) * m.nx + i];
      if (w && !((*spec.depth)(c) - eps > 0.0)) w = 0;
    }
  }
  return m;
}

}  // namespace detail

inline std::vector<LakeSpec> make_eps_sequence(const LakeSpec& spec, SequenceMode mode,
                                               const std::vector<double>& eps_list,
                                               const SequenceOptions& opt = {}) {
  for (std::size_t k = 0; k < eps_list.size(); ++k) {
    if (!(eps_list[k] > 0.0)) fail(ErrorKind::InvalidSequence, "eps values must be positive");
    if (k > 0 && !(eps_list[k] < eps_list[k - 1])) {
      fail(ErrorKind::InvalidSequence, "eps list must be strictly decreasing");
    }
  }
  std::vector<LakeSpec> out;
  if (eps_list.empty()) return out;
  spec.validate();
  const double R = spec.outer_radius();

  if (mode == SequenceMode::Evanescent) {
    if (opt.kind == SequenceKind::Raised || opt.kind == SequenceKind::Volcano) {
      fail(ErrorKind::InvalidSequence, "raised and volcano members are emergent");
    }
    for (double eps : eps_list) {
      LakeSpec m = spec;
      if (opt.kind == SequenceKind::Shrink || opt.kind == SequenceKind::Shelf) {
        if (!std::holds_alternative<Disk>(spec.domain)) {
          fail(ErrorKind::InvalidSequence, "shrinking islands are cut out of a disk");
        }
        if (!(eps < R)) fail(ErrorKind::InvalidSequence, "island touches the outer shore");
        m.domain = Annulus{eps, R};
        if (opt.kind == SequenceKind::Shelf) m.depth = DepthLaw::shelf(spec.a1, eps);
        const double b_in = m.depth->profile(eps * (1.0 + 1e-12));
        m.a1 = b_in > 0.0 ? 0.0 : spec.a1;
        out.push_back(std::move(m));
        continue;
      }
      m.depth = DepthLaw::flooded(spec.depth, eps);
      m.a1 = 1.0;
      if (std::holds_alternative<Disk>(spec.domain) && spec.depth->radial()) {
        if (!(spec.depth->profile(R) > eps)) {
          fail(ErrorKind::InvalidSequence, "flooded island touches the outer shore");
        }
        const double r = detail::flood_radius(*spec.depth, eps, R);
        m.domain = Annulus{r, R};
      } else {
        MaskedJordan mask = detail::flood_mask(spec, eps, opt.mask_cells);
        const DryComponents dc = label_dry(mask);
        if (dc.islands() != 1) {
          fail(ErrorKind::InvalidSequence, "flooded lake must have exactly one interior island");
        }
        m.domain = std::move(mask);
      }
      out.push_back(std::move(m));
    }
    return out;
  }

  if (spec.has_island()) fail(ErrorKind::InvalidSequence, "emergent members must be island-free");
  for (double eps : eps_list) {
    LakeSpec m = spec;
    switch (opt.kind) {
      case SequenceKind::Raised: m.depth = DepthLaw::raised(spec.depth, eps); break;
      case SequenceKind::Volcano:
        if (!(2.0 * opt.eta_radius < R)) fail(ErrorKind::InvalidSequence, "volcano cutoff leaves the lake");
        m.depth = DepthLaw::volcano(spec.a1, eps, opt.eta_radius, spec.depth);
        break;
      default: fail(ErrorKind::InvalidSequence, "emergent members are raised or volcano");
    }
    m.a1 = 0.0;
    out.push_back(std::move(m));
  }
  return out;
}

inline double domain_area(const LakeSpec& spec) {
  if (const auto* d = std::get_if<Disk>(&spec.domain)) return std::numbers::pi * d->R * d->R;
  if (const auto* a = std::get_if<Annulus>(&spec.domain)) {
    return std::numbers::pi * (a->R * a->R - a->r_in * a->r_in);
  }
  const auto& m = std::get<MaskedJordan>(spec.domain);
  double n = 0;
  for (auto w : m.wet) n += w ? 1 : 0;
  return n * m.h * m.h;
}

}  // namespace lakelab
