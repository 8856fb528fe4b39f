#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <vector>

#include "lakelab/cutoff.hpp"
#include "lakelab/elliptic.hpp"
#include "lakelab/errors.hpp"
#include "lakelab/geometry.hpp"
#include "lakelab/grid.hpp"

namespace lakelab {

struct HodgeBasis {
  CellField phi1;  // 1 on the island, 0 on the outer shore
  double energy_phi = 0.0;
  double a_scal = 0.0;  // psi1 = a_scal * phi1
  CellField psi1;
  double capacity = 0.0;
  SolveReport report;
};

/// A lake sampled on a grid, with the zero-data operator and (if the lake
/// has an island) its harmonic basis.  Cheap to copy: the heavy parts are
/// shared and immutable.
struct DiscreteLake {
  LakeSpec spec;
  std::shared_ptr<const Grid> grid;
  DepthSample depth;
  std::shared_ptr<const EllipticOperator> op0;
  std::shared_ptr<const HodgeBasis> basis;
  double tol = 1e-10;

  const Grid& g() const { return *grid; }
  const CellField& b() const { return depth.cell; }
};

inline HodgeBasis harmonic_basis(const DepthSample& depth, const Grid& g, double tol = 1e-10) {
  if (!g.has_island) fail(ErrorKind::NoIsland, "simply connected lakes have no harmonic basis");
  const EllipticOperator op = assemble(depth.face, g, {0.0, 1.0});
  HodgeBasis hb;
  SolveOptions opt;
  opt.tol = tol;
  hb.phi1 = solve(op, CellField(g.size(), 0.0), hb.report, opt);
  hb.energy_phi = hb.report.energy;
  hb.a_scal = -1.0 / hb.energy_phi;
  hb.psi1 = hb.phi1;
  for (double& v : hb.psi1) v *= hb.a_scal;
  hb.capacity = hb.energy_phi;
  return hb;
}

inline HodgeBasis harmonic_basis(const LakeSpec& spec, const Grid& g, double tol = 1e-10) {
  return harmonic_basis(sample_depth(spec, g), g, tol);
}

inline DiscreteLake discretize(const LakeSpec& spec, const GridOptions& opt, double tol = 1e-10) {
  spec.validate();
  DiscreteLake lake;
  lake.spec = spec;
  lake.tol = tol;
  lake.grid = std::make_shared<const Grid>(build_grid(spec, opt));
  lake.depth = sample_depth(spec, *lake.grid);
  lake.op0 = std::make_shared<const EllipticOperator>(assemble(lake.depth.face, *lake.grid, {0.0, 0.0}));
  if (lake.grid->has_island) {
    lake.basis = std::make_shared<const HodgeBasis>(harmonic_basis(lake.depth, *lake.grid, tol));
  }
  return lake;
}

/// Discrete minimiser energy of the island capacity problem.
inline double capacity(const LakeSpec& spec, const GridOptions& opt, double tol = 1e-10) {
  spec.validate();
  const Grid g = build_grid(spec, opt);
  return harmonic_basis(spec, g, tol).capacity;
}

/// Quadrature form of the capacity floor 4 pi^2 / int b/|y|^2.
inline double capacity_floor(const Grid& g, const CellField& b) {
  double s = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const Vec2 x = g.cells[c].center;
    s += b[c] / dot(x, x) * g.cells[c].area;
  }
  return 4.0 * std::numbers::pi * std::numbers::pi / s;
}

/// Floor with explicit constants: C bounds b/|x|^a1 on B(0,delta), and the
/// far part is bounded by max b * |Omega| / delta^2.
inline double capacity_floor_explicit(const Grid& g, const CellField& b, double a1, double delta) {
  double C = 0.0, bmax = 0.0, area = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double r = norm(g.cells[c].center);
    if (r < delta) C = std::max(C, b[c] / std::pow(r, a1));
    bmax = std::max(bmax, b[c]);
    area += g.cells[c].area;
  }
  const double near = C * 2.0 * std::numbers::pi * std::pow(delta, a1) / a1;
  return 4.0 * std::numbers::pi * std::numbers::pi / (near + bmax * area / (delta * delta));
}

struct VelocityField {
  CellField psi0;
  double alpha = 0.0;
  double island_stream = 0.0;  // stream value on the island boundary
  CellField stream;            // psi0 + alpha psi1
  CellField vertex_stream;
  FaceField face_circ;  // integral of v . perp(n) over the face
  FaceField face_flux;  // integral of b v . n over the face
  VectorField v;
  SolveReport report;
};

/// Least-squares cell velocity from tangential face components.
inline VectorField cell_velocity(const Grid& g, const FaceField& circ) {
  VectorField out(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    g.for_cell_faces(static_cast<int>(c), [&](int fi) {
      const Face& f = g.faces[fi];
      if (f.length <= 0.0) return;
      const double sgn = g.orientation(static_cast<int>(c), fi);
      const Vec2 t = sgn * perp(f.normal);
      const double d = sgn * circ[fi] / f.length;
      a11 += t.x * t.x;
      a12 += t.x * t.y;
      a22 += t.y * t.y;
      b1 += t.x * d;
      b2 += t.y * d;
    });
    const double det = a11 * a22 - a12 * a12;
    out[c] = {(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
  }
  return out;
}

/// Builds every derived quantity of a velocity from its stream function.
/// Face fluxes are differences of vertex values, so the discrete divergence
/// of b v vanishes identically and boundary fluxes are zero.
inline void finish_velocity(const DiscreteLake& lake, VelocityField& vf) {
  const Grid& g = lake.g();
  const EllipticOperator& op = *lake.op0;
  const FaceField& T = op.transmissibility();
  auto ghost = [&](const Face& f) { return f.tag == FaceTag::Island ? vf.island_stream : 0.0; };

  vf.face_circ.assign(g.faces.size(), 0.0);
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    const double far = f.nbr >= 0 ? vf.stream[f.nbr] : ghost(f);
    vf.face_circ[fi] = T[fi] * (far - vf.stream[f.owner]);
  }

  vf.vertex_stream.assign(g.vertices.size(), 0.0);
  for (std::size_t k = 0; k < g.vertices.size(); ++k) {
    const VertexTag tag = g.vertices[k].tag;
    if (tag == VertexTag::Outer) continue;
    if (tag == VertexTag::Island) {
      vf.vertex_stream[k] = vf.island_stream;
      continue;
    }
    const int a = g.vertex_cell_start[k], e = g.vertex_cell_start[k + 1];
    if (a == e) continue;
    double s = 0.0;
    for (int m = a; m < e; ++m) s += vf.stream[g.vertex_cell_ids[m]];
    vf.vertex_stream[k] = s / (e - a);
  }

  vf.face_flux.assign(g.faces.size(), 0.0);
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    vf.face_flux[fi] = -(vf.vertex_stream[f.v1] - vf.vertex_stream[f.v0]);
  }
  vf.v = cell_velocity(g, vf.face_circ);
}

/// Hodge reconstruction v = (1/b) perp grad psi0 + alpha (1/b) perp grad psi1
/// from the cell-integrated curl F_i = (b omega)_i A_i and the circulation.
inline VelocityField reconstruct_velocity(const DiscreteLake& lake, const CellField& F, double gamma,
                                          const CellField* warm = nullptr) {
  VelocityField vf;
  SolveOptions opt;
  opt.tol = lake.tol;
  opt.warm_start = warm;
  vf.psi0 = solve(*lake.op0, F, vf.report, opt);
  vf.stream = vf.psi0;
  if (lake.basis) {
    const HodgeBasis& hb = *lake.basis;
    double s = 0.0;
    for (std::size_t i = 0; i < F.size(); ++i) s += F[i] * hb.phi1[i];
    vf.alpha = gamma + s;
    for (std::size_t i = 0; i < F.size(); ++i) vf.stream[i] += vf.alpha * hb.psi1[i];
    vf.island_stream = vf.alpha * hb.a_scal;
  }
  finish_velocity(lake, vf);
  return vf;
}

/// Cell-integrated b omega.
inline CellField curl_source(const DiscreteLake& lake, const CellField& omega) {
  CellField F(omega.size());
  for (std::size_t i = 0; i < F.size(); ++i) F[i] = lake.b()[i] * omega[i] * lake.g().cells[i].area;
  return F;
}

/// Samples an analytic velocity on the grid (faces and cells).  There is no
/// stream function behind it, so only circulation and flux are meaningful.
inline VelocityField velocity_from_function(const DiscreteLake& lake, const std::function<Vec2(Vec2)>& fn) {
  const Grid& g = lake.g();
  VelocityField vf;
  vf.face_circ.assign(g.faces.size(), 0.0);
  vf.face_flux.assign(g.faces.size(), 0.0);
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    if (f.length <= 0.0) continue;
    const Vec2 u = fn(f.mid);
    vf.face_circ[fi] = dot(u, perp(f.normal)) * f.length;
    vf.face_flux[fi] = lake.depth.face[fi] * dot(u, f.normal) * f.length;
  }
  vf.v.resize(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) vf.v[c] = fn(g.cells[c].center);
  return vf;
}

/// Discrete curl of a velocity: counterclockwise circulation around each cell.
inline CellField discrete_curl(const Grid& g, const FaceField& circ) {
  CellField curl(g.size(), 0.0);
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    curl[f.owner] += circ[fi];
    if (f.nbr >= 0) curl[f.nbr] -= circ[fi];
  }
  return curl;
}

namespace detail {
inline void check_cutoff(const Grid& g, const CutoffChi& chi) {
  for (const Face& f : g.faces) {
    if (f.nbr >= 0 || f.length <= 0.0) continue;
    const double c = chi(f.mid);
    if (f.tag == FaceTag::Island && c != 1.0) {
      fail(ErrorKind::BadCutoff, "cutoff is not identically 1 on the island");
    }
    if (f.tag == FaceTag::Outer && c != 0.0) {
      fail(ErrorKind::BadCutoff, "cutoff does not vanish on the outer shore");
    }
  }
}
}  // namespace detail

/// Line part -sum_f (chi_far - chi_own) circ_f: the discrete counterpart of
/// -int perp(grad chi) . v.
inline double cutoff_line_part(const Grid& g, const FaceField& circ, const CutoffChi& chi) {
  double s = 0.0;
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    const double far = f.nbr >= 0 ? chi(g.cells[f.nbr].center) : chi(f.mid);
    const double dchi = far - chi(g.cells[f.owner].center);
    if (dchi != 0.0) s -= dchi * circ[fi];
  }
  return s;
}

/// gamma(v) = -int chi curl v - int perp(grad chi) . v, with `curl` given as
/// cell integrals.
inline double generalized_circulation(const Grid& g, const FaceField& circ, const CellField& curl,
                                      const CutoffChi& chi) {
  detail::check_cutoff(g, chi);
  double s = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) s -= chi(g.cells[c].center) * curl[c];
  return s + cutoff_line_part(g, circ, chi);
}

inline double generalized_circulation(const VelocityField& v, const CellField& curl, const CutoffChi& chi,
                                      const Grid& g) {
  return generalized_circulation(g, v.face_circ, curl, chi);
}

/// Default cutoff: delta = 3 x island radius capped at R/3; for lakes
/// without island a tenth of R.
inline CutoffChi default_cutoff(const Grid& g) {
  const double R = g.kind == Grid::Kind::Polar ? g.r_out : 0.5 * std::min(g.nx, g.ny) * g.h;
  double island = 0.0;
  for (const Face& f : g.faces) {
    if (f.tag == FaceTag::Island) island = std::max(island, norm(f.mid) + (g.kind == Grid::Kind::Cartesian ? g.h : 0.0));
  }
  double delta = island > 0.0 ? 3.0 * island : 0.1 * R;
  delta = std::min(delta, R / 3.0);
  if (!(delta > island)) delta = 0.5 * (island + R / 2.0);
  return CutoffChi::standard(delta);
}

/// Narrow cutoff around the circle |x| = rho, clipped to stay wet.
inline CutoffChi probe_cutoff(const Grid& g, double rho) {
  const double r_in = g.kind == Grid::Kind::Polar ? g.r_in : 0.0;
  const double R = g.kind == Grid::Kind::Polar ? g.r_out : 0.5 * std::min(g.nx, g.ny) * g.h;
  const double w = std::min({0.1 * rho, 0.5 * (rho - r_in), 0.5 * (R - rho)});
  if (!(w > 0.0)) fail(ErrorKind::BadCutoff, "probe circle is not inside the wet region");
  return CutoffChi::probe(rho, w);
}

/// Oracle: midpoint rule for the counterclockwise line integral of v . tau
/// on the circle of radius rho, with v interpolated from cells.
inline double line_circulation(const Grid& g, const VectorField& v, double rho, int n = 720) {
  double s = 0.0;
  const double dth = 2.0 * std::numbers::pi / n;
  for (int k = 0; k < n; ++k) {
    const double th = (k + 0.5) * dth;
    const Vec2 x{rho * std::cos(th), rho * std::sin(th)};
    const Vec2 tau{-std::sin(th), std::cos(th)};
    s += dot(sample_at(g, v, x), tau) * rho * dth;
  }
  return s;
}

inline double weighted_velocity_norm(const DiscreteLake& lake, const VectorField& v,
                                     const std::function<bool(int)>& keep = {}) {
  return weighted_norm(v, Weight::B, lake.g(), lake.b(), keep);
}

}  // namespace lakelab
