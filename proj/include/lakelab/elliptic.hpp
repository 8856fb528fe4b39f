#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lakelab/errors.hpp"
#include "lakelab/geometry.hpp"
#include "lakelab/grid.hpp"
#include "lakelab/polar_precond.hpp"

namespace lakelab {

struct BoundaryValues {
  double outer = 0.0;
  std::optional<double> island;
};

/// Discrete div((1/b) grad .) in integrated form:
///   (A psi)_i = sum_f T_f (psi_nbr - psi_i),   T_f = |f| / (b_f d_f),
/// with Dirichlet data entering through ghost values on boundary faces.
/// A psi = L psi + s where L is the symmetric homogeneous part and s the
/// source induced by the boundary values.
class EllipticOperator {
 public:
  EllipticOperator(const Grid& g, FaceField trans, BoundaryValues bc)
      : grid_(&g), T_(std::move(trans)), bc_(bc) {
    const std::size_t n = g.size();
    bdiag_.assign(n, 0.0);
    diag_.assign(n, 0.0);
    source_.assign(n, 0.0);
    for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
      const Face& f = g.faces[fi];
      if (f.nbr >= 0) {
        in_owner_.push_back(f.owner);
        in_nbr_.push_back(f.nbr);
        in_T_.push_back(T_[fi]);
        diag_[f.owner] += T_[fi];
        diag_[f.nbr] += T_[fi];
      } else {
        bdiag_[f.owner] += T_[fi];
        diag_[f.owner] += T_[fi];
        source_[f.owner] += T_[fi] * ghost(f);
      }
    }
    if (g.kind == Grid::Kind::Polar) precond_ = std::make_shared<const PolarPreconditioner>(g, T_);
  }

  const Grid& grid() const { return *grid_; }
  const FaceField& transmissibility() const { return T_; }
  const BoundaryValues& bc() const { return bc_; }
  std::size_t size() const { return diag_.size(); }

  /// Boundary value seen through a boundary face.
  double ghost(const Face& f) const {
    switch (f.tag) {
      case FaceTag::Outer: return bc_.outer;
      case FaceTag::Island: return bc_.island.value_or(0.0);
      default: return 0.0;
    }
  }

  double vertex_value(VertexTag t) const {
    return t == VertexTag::Outer ? bc_.outer : t == VertexTag::Island ? bc_.island.value_or(0.0) : 0.0;
  }

  /// Value on the far side of face f as seen from its owner.
  double far_value(const CellField& psi, const Face& f) const {
    return f.nbr >= 0 ? psi[f.nbr] : ghost(f);
  }

  /// y = L x (no boundary source).
  void apply_linear(const CellField& x, CellField& y) const {
    const std::size_t n = size();
    y.resize(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = -bdiag_[i] * x[i];
    for (std::size_t k = 0; k < in_T_.size(); ++k) {
      const int o = in_owner_[k], nb = in_nbr_[k];
      const double flux = in_T_[k] * (x[nb] - x[o]);
      y[o] += flux;
      y[nb] -= flux;
    }
  }

  /// y = A x including the boundary source.
  CellField apply(const CellField& x) const {
    CellField y;
    apply_linear(x, y);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += source_[i];
    return y;
  }

  const CellField& diagonal() const { return diag_; }
  const PolarPreconditioner* ring_preconditioner() const { return precond_.get(); }
  const CellField& boundary_source() const { return source_; }

  /// Weighted Dirichlet energy sum_f T_f (psi_far - psi_own)^2, the discrete
  /// integral of (1/b)|grad psi|^2.
  double energy(const CellField& psi) const {
    double e = 0.0;
    const Grid& g = *grid_;
    for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
      const Face& f = g.faces[fi];
      const double d = far_value(psi, f) - psi[f.owner];
      e += T_[fi] * d * d;
    }
    return e;
  }

 private:
  const Grid* grid_;
  FaceField T_;
  BoundaryValues bc_;
  CellField bdiag_, diag_, source_;
  std::vector<int> in_owner_, in_nbr_;
  std::vector<double> in_T_;
  std::shared_ptr<const PolarPreconditioner> precond_;
};

inline EllipticOperator assemble(const FaceField& b_faces, const Grid& g, BoundaryValues bc) {
  FaceField T(g.faces.size(), 0.0);
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    if (f.length <= 0.0) continue;  // pole faces carry no flux
    if (!(b_faces[fi] > 0.0)) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "face %zu has depth %g", fi, b_faces[fi]);
      fail(ErrorKind::DegenerateCoefficient, buf);
    }
    T[fi] = f.length / (b_faces[fi] * f.dist);
  }
  if (g.has_island && !bc.island) bc.island = 0.0;
  return EllipticOperator(g, std::move(T), bc);
}

struct SolveReport {
  int iterations = 0;
  double residual = 0.0;
  double energy = 0.0;
};

enum class Preconditioner { Auto, Jacobi };

struct SolveOptions {
  double tol = 1e-10;
  Preconditioner precond = Preconditioner::Auto;  // Auto: ring-averaged on polar grids
  int max_iter = -1;  // -1 means 50 N
  const CellField* warm_start = nullptr;
};

namespace detail {
inline double dotv(const CellField& a, const CellField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}
}  // namespace detail

/// Solves A psi = F, with F the cell-integrated source f_i A_i, by
/// preconditioned conjugate gradients on -L psi = s - F.
inline CellField solve(const EllipticOperator& op, const CellField& F, SolveReport& rep,
                       const SolveOptions& opt = {}) {
  const std::size_t n = op.size();
  const CellField& s = op.boundary_source();
  CellField rhs(n);
  for (std::size_t i = 0; i < n; ++i) rhs[i] = s[i] - F[i];
  const double fnorm = std::sqrt(detail::dotv(F, F));
  const double ref = fnorm > 0.0 ? fnorm : std::sqrt(detail::dotv(s, s));

  CellField x = opt.warm_start ? *opt.warm_start : CellField(n, 0.0);
  rep = {};
  if (ref == 0.0) {
    x.assign(n, 0.0);
    return x;
  }
  const CellField& D = op.diagonal();
  const PolarPreconditioner* pc =
      opt.precond == Preconditioner::Auto ? op.ring_preconditioner() : nullptr;
  auto precondition = [&](const CellField& r, CellField& z) {
    if (pc) {
      pc->apply(r, z);
    } else {
      for (std::size_t i = 0; i < n; ++i) z[i] = r[i] / D[i];
    }
  };
  CellField r(n), z(n), p(n), q(n);
  op.apply_linear(x, q);
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] + q[i];  // rhs - (-L x)
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : static_cast<int>(50 * n);
  double rnorm = std::sqrt(detail::dotv(r, r));
  int it = 0;
  if (rnorm > opt.tol * ref) {
    precondition(r, z);
    p = z;
    double rz = detail::dotv(r, z);
    while (it < max_iter) {
      ++it;
      op.apply_linear(p, q);
      for (auto& v : q) v = -v;
      const double alpha = rz / detail::dotv(p, q);
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      rnorm = std::sqrt(detail::dotv(r, r));
      if (rnorm <= opt.tol * ref) break;
      precondition(r, z);
      const double rz_new = detail::dotv(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
  }
  // true residual, not the recursively updated one
  const CellField Ax = op.apply(x);
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) res += (Ax[i] - F[i]) * (Ax[i] - F[i]);
  rep.iterations = it;
  rep.residual = std::sqrt(res) / ref;
  rep.energy = op.energy(x);
  if (rnorm > opt.tol * ref) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "CG stopped after %d iterations at relative residual %.3e", it,
                  rep.residual);
    fail(ErrorKind::IterationLimit, buf);
  }
  return x;
}

inline CellField solve(const EllipticOperator& op, const CellField& F, const SolveOptions& opt = {}) {
  SolveReport rep;
  return solve(op, F, rep, opt);
}

/// Cell-integrated source F_i = f(x_i) A_i.
inline CellField integrated_source(const Grid& g, const std::function<double(Vec2)>& f) {
  CellField F(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) F[c] = f(g.cells[c].center) * g.cells[c].area;
  return F;
}

struct Gradient {
  FaceField normal;  // (psi_far - psi_own) / d_f
  VectorField cell;  // least-squares reconstruction
};

/// Least-squares cell vector g minimising sum_f (g . n_f - D_f)^2 over the
/// faces of each cell with positive length.
inline VectorField cell_vectors_from_normal(const Grid& g, const FaceField& D) {
  VectorField out(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) {
    double a11 = 0, a12 = 0, a22 = 0, b1 = 0, b2 = 0;
    g.for_cell_faces(static_cast<int>(c), [&](int fi) {
      const Face& f = g.faces[fi];
      if (f.length <= 0.0) return;
      const double sgn = g.orientation(static_cast<int>(c), fi);
      const Vec2 n = sgn * f.normal;
      const double d = sgn * D[fi];
      a11 += n.x * n.x;
      a12 += n.x * n.y;
      a22 += n.y * n.y;
      b1 += n.x * d;
      b2 += n.y * d;
    });
    const double det = a11 * a22 - a12 * a12;
    out[c] = {(a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det};
  }
  return out;
}

inline Gradient gradient(const CellField& psi, const Grid& g, const BoundaryValues& bc = {}) {
  Gradient out;
  out.normal.assign(g.faces.size(), 0.0);
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    double far = 0.0;
    if (f.nbr >= 0) far = psi[f.nbr];
    else if (f.tag == FaceTag::Outer) far = bc.outer;
    else if (f.tag == FaceTag::Island) far = bc.island.value_or(0.0);
    else continue;
    out.normal[fi] = (far - psi[f.owner]) / f.dist;
  }
  out.cell = cell_vectors_from_normal(g, out.normal);
  return out;
}

/// Distance to the degenerate shores of the lake, i.e. those whose exponent
/// is positive: the centre or island shore (a1) and the outer shore (a0).
inline double shore_distance(const LakeSpec& spec, const Grid& g, Vec2 x) {
  double d = INFINITY;
  if (g.kind == Grid::Kind::Polar) {
    const double r = norm(x);
    if (spec.a1 > 0.0) d = std::min(d, r - g.r_in);
    if (spec.a0 > 0.0) d = std::min(d, g.r_out - r);
    return d;
  }
  for (const Face& f : g.faces) {
    const bool inner = f.tag == FaceTag::Island || f.tag == FaceTag::Pole;
    if ((inner && spec.a1 > 0.0) || (f.tag == FaceTag::Outer && spec.a0 > 0.0)) {
      d = std::min(d, norm(x - f.mid));
    }
  }
  if (!g.has_island && spec.a1 > 0.0) d = std::min(d, norm(x));
  return d;
}

/// Ratio || b^{-1/2} f/d || / || b^{-1/2} grad f || over the band {d < R}.
inline double hardy_ratio(const CellField& f, const LakeSpec& spec, const Grid& g, const CellField& b,
                          double R) {
  const VectorField grad = gradient(f, g).cell;
  double num = 0.0, den = 0.0;
  int count = 0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double d = shore_distance(spec, g, g.cells[c].center);
    if (!(d < R)) continue;
    ++count;
    const double w = g.cells[c].area / b[c];
    num += w * (f[c] / d) * (f[c] / d);
    den += w * dot(grad[c], grad[c]);
  }
  if (count == 0) fail(ErrorKind::EmptyBand, "no cells in the shore band");
  if (num == 0.0) return 0.0;
  return std::sqrt(num / den);
}

}  // namespace lakelab
