#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "lakelab/errors.hpp"
#include "lakelab/hodge.hpp"

namespace lakelab {

enum class Scheme { UpwindEuler, SSPRK2 };

struct TimeStepper {
  double cfl = 0.45;
  Scheme scheme = Scheme::SSPRK2;
  double dt_max = std::numeric_limits<double>::infinity();
};

struct FlowDiagnostics {
  double mass = 0.0;       // sum b omega A
  double max_omega = 0.0;
  double min_omega = 0.0;
  double gamma = 0.0;      // measured generalized circulation
  double energy = 0.0;     // int b |v|^2 from face circulations
};

struct FlowState {
  double t = 0.0;
  double gamma = 0.0;  // prescribed circulation
  CellField omega;
  VelocityField vel;
  FlowDiagnostics diag;
  int steps = 0;
};

inline FlowDiagnostics diagnose(const DiscreteLake& lake, const FlowState& s) {
  const Grid& g = lake.g();
  FlowDiagnostics d;
  const CellField F = curl_source(lake, s.omega);
  for (double m : F) d.mass += m;
  d.max_omega = *std::max_element(s.omega.begin(), s.omega.end());
  d.min_omega = *std::min_element(s.omega.begin(), s.omega.end());
  d.gamma = generalized_circulation(s.vel, F, default_cutoff(g), g);
  const FaceField& T = lake.op0->transmissibility();
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    if (T[fi] > 0.0) d.energy += s.vel.face_circ[fi] * s.vel.face_circ[fi] / T[fi];
  }
  return d;
}

inline FlowState make_state(const DiscreteLake& lake, CellField omega0, double gamma, double t = 0.0) {
  FlowState s;
  s.t = t;
  s.gamma = gamma;
  s.omega = std::move(omega0);
  s.vel = reconstruct_velocity(lake, curl_source(lake, s.omega), gamma);
  s.diag = diagnose(lake, s);
  return s;
}

/// Largest forward-Euler step keeping every update a convex combination:
/// dt <= b_i A_i / (sum of outgoing fluxes of cell i).
inline double stable_dt(const DiscreteLake& lake, const FaceField& q) {
  const Grid& g = lake.g();
  CellField out(g.size(), 0.0);
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    if (f.nbr < 0) continue;
    if (q[fi] > 0.0) out[f.owner] += q[fi];
    else out[f.nbr] -= q[fi];
  }
  double dt = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (out[c] > 0.0) dt = std::min(dt, lake.b()[c] * g.cells[c].area / out[c]);
  }
  return dt;
}

/// One forward-Euler upwind update of b omega.  Boundary fluxes vanish
/// identically, so they are skipped.
inline CellField upwind_update(const DiscreteLake& lake, const CellField& omega, const FaceField& q, double dt) {
  const Grid& g = lake.g();
  CellField m(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) m[c] = lake.b()[c] * omega[c] * g.cells[c].area;
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    if (f.nbr < 0 || q[fi] == 0.0) continue;
    const double up = q[fi] > 0.0 ? omega[f.owner] : omega[f.nbr];
    const double flux = dt * q[fi] * up;
    m[f.owner] -= flux;
    m[f.nbr] += flux;
  }
  CellField w(g.size());
  for (std::size_t c = 0; c < g.size(); ++c) w[c] = m[c] / (lake.b()[c] * g.cells[c].area);
  return w;
}

inline FlowState step(const FlowState& s, const DiscreteLake& lake, const TimeStepper& ts,
                      double t_limit = std::numeric_limits<double>::infinity()) {
  if (!(ts.cfl > 0.0) || ts.cfl > 1.0) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "CFL %g outside (0, 1]", ts.cfl);
    fail(ErrorKind::TimeStepTooLarge, buf);
  }
  double dt = std::min({ts.cfl * stable_dt(lake, s.vel.face_flux), ts.dt_max, t_limit - s.t});
  if (!std::isfinite(dt)) dt = t_limit - s.t;
  if (!std::isfinite(dt)) dt = ts.dt_max;
  if (!(dt > 0.0)) fail(ErrorKind::TimeStepTooLarge, "no admissible time step");

  FlowState n;
  n.gamma = s.gamma;
  n.steps = s.steps + 1;
  for (int attempt = 0;; ++attempt) {
    CellField w1 = upwind_update(lake, s.omega, s.vel.face_flux, dt);
    if (ts.scheme == Scheme::UpwindEuler) {
      n.omega = std::move(w1);
      break;
    }
    const VelocityField v1 = reconstruct_velocity(lake, curl_source(lake, w1), s.gamma, &s.vel.psi0);
    if (dt > stable_dt(lake, v1.face_flux) && attempt < 20) {
      dt *= 0.5;  // the intermediate velocity tightened the limit
      continue;
    }
    CellField w2 = upwind_update(lake, w1, v1.face_flux, dt);
    n.omega.resize(w2.size());
    for (std::size_t c = 0; c < w2.size(); ++c) n.omega[c] = 0.5 * (s.omega[c] + w2[c]);
    break;
  }
  n.t = s.t + dt;
  n.vel = reconstruct_velocity(lake, curl_source(lake, n.omega), s.gamma, &s.vel.psi0);
  n.diag = diagnose(lake, n);
  return n;
}

using StateObserver = std::function<void(const FlowState&)>;

/// Runs to time T.  The observer sees every state including the first;
/// snapshots are kept every `snapshot_every` steps plus the final state.
inline std::vector<FlowState> evolve(const FlowState& s0, double T, const DiscreteLake& lake,
                                     const TimeStepper& ts, const StateObserver& observer = {},
                                     int snapshot_every = 0) {
  std::vector<FlowState> snaps{s0};
  if (observer) observer(s0);
  if (!(T > s0.t)) return snaps;
  FlowState cur = s0;
  const double eps_t = 1e-14 * std::max(1.0, T);
  while (cur.t < T - eps_t) {
    cur = step(cur, lake, ts, T);
    if (T - cur.t <= eps_t) cur.t = T;
    if (observer) observer(cur);
    const bool last = cur.t >= T;
    if (last || (snapshot_every > 0 && cur.steps % snapshot_every == 0)) snaps.push_back(cur);
  }
  return snaps;
}

/// Phi(t, x) = theta(t) g(x) with theta = cos^2(pi t / 2T) and
/// g = (1 - |x-c|^2/s^2)^4 on B(c, s).
struct BumpTest {
  Vec2 center;
  double radius = 0.1;
  double T = 1.0;

  double theta(double t) const {
    const double c = std::cos(0.5 * std::numbers::pi * t / T);
    return t >= T ? 0.0 : c * c;
  }
  double theta_dot(double t) const {
    return t >= T ? 0.0 : -0.5 * std::numbers::pi / T * std::sin(std::numbers::pi * t / T);
  }
  double g(Vec2 x) const {
    const double u = 1.0 - dot(x - center, x - center) / (radius * radius);
    return u > 0.0 ? u * u * u * u : 0.0;
  }
  Vec2 grad(Vec2 x) const {
    const double u = 1.0 - dot(x - center, x - center) / (radius * radius);
    if (u <= 0.0) return {};
    return (4.0 * u * u * u * (-2.0 / (radius * radius))) * (x - center);
  }
  /// Hessian entries (xx, xy, yy).
  std::array<double, 3> hess(Vec2 x) const {
    const double s2 = radius * radius;
    const Vec2 d = x - center;
    const double u = 1.0 - dot(d, d) / s2;
    if (u <= 0.0) return {0.0, 0.0, 0.0};
    const Vec2 gu = (-2.0 / s2) * d;
    const double a = 12.0 * u * u, b = 4.0 * u * u * u * (-2.0 / s2);
    return {a * gu.x * gu.x + b, a * gu.x * gu.y, a * gu.y * gu.y + b};
  }
};

namespace detail {
inline void check_support(const DiscreteLake& lake, Vec2 c, double s) {
  const Grid& g = lake.g();
  const double r = norm(c);
  bool ok = s > 0.0;
  if (g.kind == Grid::Kind::Polar) {
    const double inner = g.r_in > 0.0 ? g.r_in : (lake.spec.punctured() ? 0.0 : -1.0);
    ok = ok && r + s < g.r_out && (inner < 0.0 || r - s > inner);
  } else {
    for (int k = 0; k < 64 && ok; ++k) {
      const double th = 2.0 * std::numbers::pi * k / 64;
      for (double rr : {0.0, 0.5 * s, s}) {
        const Vec2 x = c + rr * Vec2{std::cos(th), std::sin(th)};
        const int i = static_cast<int>(std::floor((x.x - g.x0) / g.h));
        const int j = static_cast<int>(std::floor((x.y - g.y0) / g.h));
        if (i < 0 || j < 0 || i >= g.nx || j >= g.ny || g.cell_at[j * g.nx + i] < 0) ok = false;
      }
    }
    if (lake.spec.punctured() && r <= s) ok = false;
  }
  if (!ok) fail(ErrorKind::BadTestFunction, "test function support leaves the wet region");
}
}  // namespace detail

/// Streaming trapezoidal quadrature of the weak vorticity equation
///   int int d_t Phi b omega + grad Phi . b v omega + int b omega0 Phi(0).
class WeakVorticityResidual {
 public:
  WeakVorticityResidual(const DiscreteLake& lake, BumpTest phi) : lake_(&lake), phi_(phi) {
    detail::check_support(lake, phi.center, phi.radius);
  }

  void operator()(const FlowState& s) {
    const Grid& g = lake_->g();
    double I = 0.0;
    for (std::size_t c = 0; c < g.size(); ++c) {
      const Vec2 x = g.cells[c].center;
      const double gx = phi_.g(x);
      const Vec2 gg = phi_.grad(x);
      if (gx == 0.0 && gg.x == 0.0 && gg.y == 0.0) continue;
      const double bw = lake_->b()[c] * s.omega[c] * g.cells[c].area;
      if (first_) initial_ += bw * phi_.theta(s.t) * gx;
      I += bw * (phi_.theta_dot(s.t) * gx + phi_.theta(s.t) * dot(gg, s.vel.v[c]));
    }
    if (!first_) sum_ += 0.5 * (s.t - t_prev_) * (I + I_prev_);
    first_ = false;
    t_prev_ = s.t;
    I_prev_ = I;
  }

  double value() const { return sum_ + initial_; }

 private:
  const DiscreteLake* lake_;
  BumpTest phi_;
  bool first_ = true;
  double t_prev_ = 0.0, I_prev_ = 0.0, sum_ = 0.0, initial_ = 0.0;
};

/// Divergence-free velocity test field Phi = theta(t) perp grad g, checked
/// against the weak velocity equation
///   int int v . d_t Phi + (b v (x) v) : grad(Phi / b) + int v0 . Phi(0).
class WeakVelocityResidual {
 public:
  /// `compress` adds compress * grad g to the field; any nonzero value makes
  /// it compressible and is rejected.
  WeakVelocityResidual(const DiscreteLake& lake, BumpTest phi, double compress = 0.0)
      : lake_(&lake), phi_(phi), kappa_(compress) {
    detail::check_support(lake, phi.center, phi.radius);
    // the Laplacian of g vanishes on |x - c| = s/2, so probe several radii
    for (double rr : {0.3, 0.5, 0.7}) {
      for (int k = 0; k < 16; ++k) {
        const double th = 2.0 * std::numbers::pi * k / 16;
        const Vec2 x = phi.center + rr * phi.radius * Vec2{std::cos(th), std::sin(th)};
        const auto J = jacobian(x);
        if (std::abs(J[0][0] + J[1][1]) > 1e-10) {
          fail(ErrorKind::BadTestFunction, "test field is not divergence-free");
        }
      }
    }
  }

  void operator()(const FlowState& s) {
    const Grid& g = lake_->g();
    const DepthLaw& depth = *lake_->spec.depth;
    double I = 0.0;
    for (std::size_t c = 0; c < g.size(); ++c) {
      const Vec2 x = g.cells[c].center;
      if (phi_.g(x) == 0.0) continue;
      const double A = g.cells[c].area;
      const Vec2 gg = phi_.grad(x);
      const Vec2 P = perp(gg) + kappa_ * gg;  // spatial part of Phi
      const Vec2 v = s.vel.v[c];
      if (first_) initial_ += phi_.theta(s.t) * dot(v, P) * A;
      const auto dP = jacobian(x);
      const double b = lake_->b()[c];
      const Vec2 db = depth.gradient(x);
      const double dbv[2] = {db.x, db.y};
      const double vv[2] = {v.x, v.y};
      const double Pv[2] = {P.x, P.y};
      double conv = 0.0;
      for (int j = 0; j < 2; ++j) {
        for (int k = 0; k < 2; ++k) {
          const double dPhib = dP[j][k] / b - Pv[k] * dbv[j] / (b * b);
          conv += b * vv[j] * vv[k] * dPhib;
        }
      }
      I += (phi_.theta_dot(s.t) * dot(v, P) + phi_.theta(s.t) * conv) * A;
    }
    if (!first_) sum_ += 0.5 * (s.t - t_prev_) * (I + I_prev_);
    first_ = false;
    t_prev_ = s.t;
    I_prev_ = I;
  }

  double value() const { return sum_ + initial_; }

 private:
  /// J[j][k] = d_j P_k for P = (-g_y, g_x) + kappa grad g.
  std::array<std::array<double, 2>, 2> jacobian(Vec2 x) const {
    const auto H = phi_.hess(x);
    const double Hm[2][2] = {{H[0], H[1]}, {H[1], H[2]}};
    std::array<std::array<double, 2>, 2> J{};
    for (int j = 0; j < 2; ++j) {
      J[j][0] = -Hm[j][1] + kappa_ * Hm[j][0];
      J[j][1] = Hm[j][0] + kappa_ * Hm[j][1];
    }
    return J;
  }

  const DiscreteLake* lake_;
  BumpTest phi_;
  double kappa_ = 0.0;
  bool first_ = true;
  double t_prev_ = 0.0, I_prev_ = 0.0, sum_ = 0.0, initial_ = 0.0;
};

inline double weak_vorticity_residual(const DiscreteLake& lake, const std::vector<FlowState>& snaps,
                                      const BumpTest& phi) {
  WeakVorticityResidual acc(lake, phi);
  for (const auto& s : snaps) acc(s);
  return acc.value();
}

inline double weak_velocity_residual(const DiscreteLake& lake, const std::vector<FlowState>& snaps,
                                     const BumpTest& phi) {
  WeakVelocityResidual acc(lake, phi);
  for (const auto& s : snaps) acc(s);
  return acc.value();
}

}  // namespace lakelab
