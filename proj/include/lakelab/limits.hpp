#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "lakelab/errors.hpp"
#include "lakelab/geometry.hpp"
#include "lakelab/hodge.hpp"
#include "lakelab/transport.hpp"

namespace lakelab {

enum class OmegaKind { Zero, Constant, Blob, Ring };

/// Initial potential vorticity.
struct OmegaRecipe {
  OmegaKind kind = OmegaKind::Zero;
  double amplitude = 1.0;
  Vec2 center{0.55, 0.0};  // blob
  double width = 0.1;      // blob and ring
  double ring_radius = 0.5;

  bool radial() const { return kind != OmegaKind::Blob; }

  double operator()(Vec2 x) const {
    switch (kind) {
      case OmegaKind::Zero: return 0.0;
      case OmegaKind::Constant: return amplitude;
      case OmegaKind::Blob: {
        const Vec2 d = x - center;
        return amplitude * std::exp(-dot(d, d) / (width * width));
      }
      case OmegaKind::Ring: {
        const double s = (norm(x) - ring_radius) / width;
        return amplitude * std::exp(-s * s);
      }
    }
    return 0.0;
  }

  double sup() const { return kind == OmegaKind::Zero ? 0.0 : std::abs(amplitude); }

  CellField sample(const Grid& g) const {
    CellField w(g.size());
    for (std::size_t c = 0; c < g.size(); ++c) w[c] = (*this)(g.cells[c].center);
    return w;
  }
};

namespace detail {

/// Gauss-Legendre on dyadic pieces of [a, b] refined toward a, which copes
/// with integrable power singularities at the left end.
inline double quad(const std::function<double(double)>& f, double a, double b) {
  static constexpr std::array<double, 8> x = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                                              -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                                              0.7966664774136267,  0.9602898564975363};
  static constexpr std::array<double, 8> w = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                              0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                              0.2223810344533745, 0.1012285362903763};
  if (!(b > a)) return 0.0;
  auto piece = [&](double lo, double hi) {
    double s = 0.0;
    const double m = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    for (int k = 0; k < 8; ++k) s += w[k] * f(m + h * x[k]);
    return s * h;
  };
  double total = 0.0;
  double hi = b;
  const double len = b - a;
  for (int k = 0; k < 60; ++k) {
    const double lo = a + 0.5 * (hi - a);
    // split each dyadic piece further so smooth parts are resolved too
    const int sub = 8;
    for (int m = 0; m < sub; ++m) total += piece(lo + (hi - lo) * m / sub, lo + (hi - lo) * (m + 1) / sub);
    hi = lo;
    if (hi - a < 1e-18 * len) break;
  }
  return total;
}

/// Single 8-point Gauss-Legendre panel, for smooth integrands.
inline double quad_smooth(const std::function<double(double)>& f, double a, double b) {
  static constexpr std::array<double, 4> x = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                              0.9602898564975363};
  static constexpr std::array<double, 4> w = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                              0.1012285362903763};
  const double m = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int k = 0; k < 4; ++k) s += w[k] * (f(m - h * x[k]) + f(m + h * x[k]));
  return s * h;
}

}  // namespace detail

/// Closed-form limit objects of a radial lake on the disk B(0, R): the
/// b-harmonic function phi, the velocity of a radial vorticity with an
/// optional point circulation at the origin, and their integrals.
struct RadialLimit {
  DepthPtr b;
  double R = 1.0;
  OmegaRecipe omega;
  double gamma = 0.0;  // circulation concentrated at the origin
  double log_integral = 0.0;  // int_0^R b(s)/s ds

  RadialLimit(DepthPtr depth, double radius, OmegaRecipe w, double g)
      : b(std::move(depth)), R(radius), omega(w), gamma(g) {
    // with b(0) > 0 the integral diverges and the origin has zero capacity
    log_integral = b->profile(0.0) > 0.0 ? INFINITY
                                         : detail::quad([&](double s) { return b->profile(s) / s; }, 0.0, R);
    // cumulative table of the enclosed b omega, for fast velocity lookups
    table_.assign(kTable + 1, 0.0);
    if (omega.kind != OmegaKind::Zero) {
      const double h = R / kTable;
      auto f = [&](double s) { return 2.0 * std::numbers::pi * b->profile(s) * omega(Vec2{s, 0.0}) * s; };
      table_[1] = detail::quad(f, 0.0, h);
      for (int k = 1; k < kTable; ++k) table_[k + 1] = table_[k] + detail::quad_smooth(f, k * h, (k + 1) * h);
    }
  }

  double capacity() const { return 2.0 * std::numbers::pi / log_integral; }

  double phi(double r) const {
    if (std::isinf(log_integral)) return 0.0;
    return detail::quad([&](double s) { return b->profile(s) / s; }, r, R) / log_integral;
  }

  /// Radial derivative of phi.
  double dphi(double r) const { return -b->profile(r) / (r * log_integral); }

  /// 2 pi int_0^rho b omega s ds, exact quadrature.
  double enclosed(double rho) const {
    if (omega.kind == OmegaKind::Zero) return 0.0;
    return 2.0 * std::numbers::pi *
           detail::quad([&](double s) { return b->profile(s) * omega(Vec2{s, 0.0}) * s; }, 0.0, rho);
  }

  /// Tabulated enclosed b omega, linear between nodes.
  double enclosed_fast(double rho) const {
    if (omega.kind == OmegaKind::Zero) return 0.0;
    const double t = std::clamp(rho / R, 0.0, 1.0) * kTable;
    const int k = std::min(static_cast<int>(t), kTable - 1);
    return table_[k] + (t - k) * (table_[k + 1] - table_[k]);
  }

  Vec2 velocity(Vec2 x) const {
    const double r = norm(x);
    const double vt = (gamma + enclosed_fast(r)) / (2.0 * std::numbers::pi * r);
    return (vt / r) * perp(x);
  }

  double alpha() const {
    if (omega.kind == OmegaKind::Zero) return gamma;
    return gamma + 2.0 * std::numbers::pi *
                       detail::quad([&](double s) { return b->profile(s) * omega(Vec2{s, 0.0}) * phi(s) * s; },
                                    0.0, R);
  }

 private:
  static constexpr int kTable = 1 << 14;
  std::vector<double> table_;
};

struct DiracProbe {
  double rho = 0.0;
  bool valid = false;
  double circulation = 0.0;  // line part of the generalized circulation
  double expected = 0.0;     // gamma + int chi b omega
  double line = 0.0;         // midpoint-rule oracle on the circle
};

/// Circulation probes: the generalized-circulation formula with a narrow
/// cutoff around each circle, compared with gamma plus the enclosed b omega.
inline std::vector<DiracProbe> dirac_diagnostic(const DiscreteLake& lake, const VelocityField& v,
                                                const CellField& F, double gamma,
                                                const std::vector<double>& rhos) {
  const Grid& g = lake.g();
  const double r_in = g.kind == Grid::Kind::Polar ? g.r_in : 0.0;
  const double R = g.kind == Grid::Kind::Polar ? g.r_out : 0.5 * std::min(g.nx, g.ny) * g.h;
  const double gam = lake.basis ? gamma : 0.0;
  std::vector<DiracProbe> out;
  for (double rho : rhos) {
    DiracProbe p;
    p.rho = rho;
    if (rho > r_in + 2.0 * g.spacing() && rho < R - 2.0 * g.spacing()) {
      const CutoffChi chi = probe_cutoff(g, rho);
      p.valid = true;
      p.circulation = cutoff_line_part(g, v.face_circ, chi);
      double enclosed = 0.0;
      for (std::size_t c = 0; c < g.size(); ++c) enclosed += chi(g.cells[c].center) * F[c];
      p.expected = gam + enclosed;
      p.line = line_circulation(g, v.v, rho);
    }
    out.push_back(p);
  }
  return out;
}

struct StudySpec {
  LakeSpec base;
  SequenceMode mode = SequenceMode::Evanescent;
  SequenceOptions sequence;
  std::vector<double> eps_list;
  double gamma = 0.0;
  OmegaRecipe omega;
  std::vector<double> probes;
  double T_final = 0.0;
  TimeStepper stepper;
  GridOptions grid;
  double tol = 1e-10;
  // optional annular comparison window; zero means the whole common region
  double compare_inner = 0.0;
  double compare_outer = 0.0;
};

struct EpsRow {
  double eps = 0.0;
  double island_radius = 0.0;
  double dist_v = 0.0;    // || sqrt(b_eps) v_eps - sqrt(b) v ||
  double dist_phi = 0.0;  // || grad phi_eps / sqrt(b_eps) - grad phi / sqrt(b) ||
  double rel_dist_v = 0.0;
  double capacity = 0.0;
  double energy = 0.0;  // int b_eps |v_eps|^2
  double alpha = 0.0;
  double vnorm = 0.0;        // || sqrt(b_eps) v_eps ||
  double bound_ratio = 0.0;  // vnorm / (|gamma| + sup omega0)
  double gamma_measured = 0.0;
  std::vector<DiracProbe> probes;
};

struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double expected = 0.0;
};

struct ConvergenceReport {
  SequenceMode mode = SequenceMode::Evanescent;
  std::vector<double> probe_radii;
  std::vector<EpsRow> rows;
  EpsRow limit;  // eps = 0: analytic objects or the finest member
  bool analytic_limit = false;
  double dirac_strength = 0.0;
  std::vector<Check> checks;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }

  void write_csv(std::ostream& os) const {
    os << "kind,eps,island_radius,dist_v,rel_dist_v,dist_phi,capacity,energy,alpha,vnorm,bound_ratio,gamma_measured";
    char buf[64];
    for (double r : probe_radii) {
      std::snprintf(buf, sizeof buf, ",probe_%g", r);
      os << buf;
    }
    os << "\n";
    auto num = [&](double v) {
      if (std::isnan(v)) return std::string("nan");
      std::snprintf(buf, sizeof buf, "%.10g", v);
      return std::string(buf);
    };
    auto row = [&](const char* kind, const EpsRow& r) {
      os << kind << ',' << num(r.eps) << ',' << num(r.island_radius) << ',' << num(r.dist_v) << ','
         << num(r.rel_dist_v) << ',' << num(r.dist_phi) << ',' << num(r.capacity) << ',' << num(r.energy) << ','
         << num(r.alpha) << ',' << num(r.vnorm) << ',' << num(r.bound_ratio) << ',' << num(r.gamma_measured);
      for (const auto& p : r.probes) os << ',' << num(p.valid ? p.circulation : NAN);
      os << "\n";
    };
    for (const auto& r : rows) row("eps", r);
    row("limit", limit);
  }

  nlohmann::ordered_json summary() const {
    nlohmann::ordered_json j;
    j["mode"] = mode == SequenceMode::Evanescent ? "evanescent" : "emergent";
    j["limit_capacity"] = std::isnan(limit.capacity) ? nlohmann::ordered_json() : nlohmann::ordered_json(limit.capacity);
    j["dirac_strength"] = dirac_strength;
    j["passed_checks"] = nlohmann::ordered_json::array();
    j["failed_checks"] = nlohmann::ordered_json::array();
    for (const auto& c : checks) {
      nlohmann::ordered_json e;
      e["name"] = c.name;
      e["measured"] = c.measured;
      e["expected"] = c.expected;
      j[c.passed ? "passed_checks" : "failed_checks"].push_back(e);
    }
    return j;
  }
};

/// Worker count: LAKE_THREADS if set, else the hardware concurrency.
inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("LAKE_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) n = static_cast<unsigned>(v);
  }
  return n;
}

/// Runs fn(k) for k in [0, n) on at most worker_count() threads.  The first
/// exception is rethrown after all workers stop.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  const unsigned workers = std::min<unsigned>(worker_count(), static_cast<unsigned>(std::max(n, 1)));
  if (workers <= 1) {
    for (int k = 0; k < n; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mutex;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < n; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

struct MemberRun {
  DiscreteLake lake;
  FlowState state;
  CellField F;
  VectorField grad_phi;  // cell gradient of phi1 (evanescent only)
};

namespace detail {

inline MemberRun run_member(const LakeSpec& spec, const StudySpec& study) {
  MemberRun m;
  m.lake = discretize(spec, study.grid, study.tol);
  m.state = make_state(m.lake, study.omega.sample(m.lake.g()), study.gamma);
  if (study.T_final > 0.0) m.state = evolve(m.state, study.T_final, m.lake, study.stepper).back();
  m.F = curl_source(m.lake, m.state.omega);
  if (m.lake.basis) m.grad_phi = gradient(m.lake.basis->phi1, m.lake.g(), {0.0, 1.0}).cell;
  return m;
}

inline void add_check(ConvergenceReport& rep, std::string name, bool ok, double measured, double expected) {
  rep.checks.push_back({std::move(name), ok, measured, expected});
}

}  // namespace detail

/// Shared driver of both studies.
inline ConvergenceReport run_study(const StudySpec& study) {
  if (study.eps_list.size() < 2) fail(ErrorKind::InvalidSequence, "a study needs at least two eps values");
  const std::vector<LakeSpec> members = make_eps_sequence(study.base, study.mode, study.eps_list, study.sequence);
  const bool evanescent = study.mode == SequenceMode::Evanescent;
  const int n = static_cast<int>(members.size());

  std::vector<MemberRun> runs(n);
  parallel_for(n, [&](int k) { runs[k] = detail::run_member(members[k], study); });

  ConvergenceReport rep;
  rep.mode = study.mode;
  rep.probe_radii = study.probes;
  const DepthLaw& b0 = *study.base.depth;
  const double R = study.base.outer_radius();
  const bool radial_ref = std::holds_alternative<Disk>(study.base.domain) && b0.radial() &&
                          study.omega.radial() && study.T_final == 0.0 &&
                          study.sequence.kind != SequenceKind::Shelf;
  rep.analytic_limit = radial_ref;
  const double gamma_lim = evanescent ? study.gamma : 0.0;
  std::optional<RadialLimit> lim;
  if (radial_ref) lim.emplace(study.base.depth, R, study.omega, gamma_lim);

  // Common region: outside the largest island plus a collar of one cell of
  // the coarsest grid, optionally restricted to a comparison annulus.
  const double island_max = members.front().island_radius();
  const double collar = runs.front().lake.g().spacing();
  const MaskedJordan* first_mask = std::get_if<MaskedJordan>(&members.front().domain);
  auto in_region = [&](Vec2 x) {
    const double r = norm(x);
    if (study.compare_inner > 0.0 && r < study.compare_inner) return false;
    if (study.compare_outer > 0.0 && r > study.compare_outer) return false;
    if (first_mask) {
      const int i = static_cast<int>(std::floor((x.x - first_mask->x0) / first_mask->h));
      const int j = static_cast<int>(std::floor((x.y - first_mask->y0) / first_mask->h));
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di)
          if (!first_mask->is_wet(i + di, j + dj)) return false;
      return true;
    }
    return r >= island_max + collar && r <= R;
  };

  const MemberRun& ref = runs.back();
  auto ref_velocity = [&](Vec2 x) { return lim ? lim->velocity(x) : sample_at(ref.lake.g(), ref.state.vel.v, x); };
  auto ref_grad_phi = [&](Vec2 x) -> Vec2 {
    if (lim) return (lim->dphi(norm(x)) / norm(x)) * x;
    return sample_at(ref.lake.g(), ref.grad_phi, x);
  };

  const double scale = std::abs(study.gamma) * (evanescent ? 1.0 : 0.0) + study.omega.sup();
  for (int k = 0; k < n; ++k) {
    const MemberRun& m = runs[k];
    const Grid& g = m.lake.g();
    EpsRow row;
    row.eps = study.eps_list[k];
    row.island_radius = members[k].island_radius();
    double dv = 0.0, vref = 0.0, dphi = 0.0;
    for (std::size_t c = 0; c < g.size(); ++c) {
      const Vec2 x = g.cells[c].center;
      if (!in_region(x)) continue;
      const double A = g.cells[c].area;
      const double bl = b0(x);
      const Vec2 target = std::sqrt(bl) * ref_velocity(x);
      const Vec2 diff = std::sqrt(m.lake.b()[c]) * m.state.vel.v[c] - target;
      dv += dot(diff, diff) * A;
      vref += dot(target, target) * A;
      if (m.lake.basis) {
        const Vec2 dp = (1.0 / std::sqrt(m.lake.b()[c])) * m.grad_phi[c] - (1.0 / std::sqrt(bl)) * ref_grad_phi(x);
        dphi += dot(dp, dp) * A;
      }
    }
    row.dist_v = std::sqrt(dv);
    row.rel_dist_v = vref > 0.0 ? std::sqrt(dv / vref) : 0.0;
    row.dist_phi = m.lake.basis ? std::sqrt(dphi) : NAN;
    row.capacity = m.lake.basis ? m.lake.basis->capacity : NAN;
    row.energy = m.state.diag.energy;
    row.alpha = m.lake.basis ? m.state.vel.alpha : NAN;
    row.vnorm = weighted_velocity_norm(m.lake, m.state.vel.v);
    row.bound_ratio = scale > 0.0 ? row.vnorm / scale : 0.0;
    row.gamma_measured = m.state.diag.gamma;
    row.probes = dirac_diagnostic(m.lake, m.state.vel, m.F, study.gamma, study.probes);
    rep.rows.push_back(row);
  }

  // limit row
  EpsRow& L = rep.limit;
  L.eps = 0.0;
  if (lim) {
    L.capacity = evanescent ? lim->capacity() : NAN;
    L.alpha = evanescent ? lim->alpha() : NAN;
    for (double rho : study.probes) {
      DiracProbe p;
      p.rho = rho;
      p.valid = rho > 0.0 && rho < R;
      p.circulation = p.expected = gamma_lim + lim->enclosed(rho);
      L.probes.push_back(p);
    }
    L.dist_phi = evanescent ? 0.0 : NAN;
  } else {
    L = rep.rows.back();
    L.eps = 0.0;
  }
  L.dist_v = 0.0;
  L.rel_dist_v = 0.0;

  // dirac strength: circulation left after removing the enclosed b omega
  {
    double s = 0.0;
    int cnt = 0;
    for (const auto& p : rep.rows.back().probes) {
      if (!p.valid) continue;
      s += p.circulation - (p.expected - (evanescent ? study.gamma : 0.0));
      ++cnt;
    }
    rep.dirac_strength = cnt ? s / cnt : 0.0;
  }

  // checks.  The distance and energy-bound checks rest on a positive
  // capacity of the origin, which fails when the base depth is positive there.
  const bool positive_capacity = !evanescent || !(b0(Vec2{}) > 0.0);
  const int last_cmp = lim ? n : n - 1;  // a numerical reference compares to itself last
  if (positive_capacity) {
    bool mono = true;
    double worst = 0.0;
    for (int k = 1; k < last_cmp; ++k) {
      const double a = rep.rows[k - 1].dist_v, b = rep.rows[k].dist_v;
      if (b > a * (1.0 + 1e-9) + 1e-14) {
        mono = false;
        worst = std::max(worst, b - a);
      }
    }
    detail::add_check(rep, "distance_nonincreasing", mono, worst, 0.0);
  }
  if (evanescent) {
    bool mono = true;
    for (int k = 1; k < n; ++k) mono = mono && rep.rows[k].capacity <= rep.rows[k - 1].capacity;
    detail::add_check(rep, "capacity_decreasing", mono, rep.rows.back().capacity, rep.rows.front().capacity);
    double worst = 0.0;
    for (const auto& r : rep.rows) worst = std::max(worst, std::abs(r.gamma_measured - study.gamma));
    detail::add_check(rep, "circulation_roundtrip", worst <= 1e-6, worst, 0.0);
    if (lim) {
      const double a = rep.rows.back().alpha, e = L.alpha;
      detail::add_check(rep, "alpha_limit", std::abs(a - e) <= 0.01 * std::abs(e) + 1e-12, a, e);
    }
  }
  if (positive_capacity) {
    const double C = rep.rows.front().bound_ratio;
    double worst = 0.0;
    for (const auto& r : rep.rows) worst = std::max(worst, C > 0.0 ? std::abs(r.bound_ratio / C - 1.0) : 0.0);
    detail::add_check(rep, "energy_bound_stable", worst <= 0.2, worst, 0.2);
  }
  {
    double worst = 0.0;
    for (const auto& p : rep.rows.back().probes) {
      if (p.valid) worst = std::max(worst, std::abs(p.circulation - p.expected));
    }
    detail::add_check(rep, "probe_matches_enclosed", worst <= 1e-6, worst, 0.0);
  }
  if (lim) {
    // every probe column moves toward its limit value over the halvings
    bool mono = true;
    for (std::size_t k = 0; k < study.probes.size(); ++k) {
      double prev = INFINITY;
      for (const auto& r : rep.rows) {
        if (!r.probes[k].valid) continue;
        const double d = std::abs(r.probes[k].circulation - L.probes[k].expected);
        if (d > prev * (1.0 + 1e-9) + 1e-12) mono = false;
        prev = d;
      }
    }
    detail::add_check(rep, "probe_approaches_limit", mono, 0.0, 0.0);
  }
  if (lim && evanescent) {
    double worst = 0.0;
    const auto& fin = rep.rows.back().probes;
    for (std::size_t k = 0; k < fin.size(); ++k) {
      if (!fin[k].valid) continue;
      const double e = L.probes[k].expected;
      worst = std::max(worst, std::abs(fin[k].circulation - e) / std::max(1.0, std::abs(e)));
    }
    detail::add_check(rep, "probe_matches_limit", worst <= 0.02, worst, 0.02);
  }
  return rep;
}

inline ConvergenceReport run_evanescent(StudySpec study) {
  study.mode = SequenceMode::Evanescent;
  if (!study.base.punctured() && study.sequence.kind == SequenceKind::Flooded) {
    fail(ErrorKind::InvalidSequence, "evanescent flooding starts from a punctured lake");
  }
  return run_study(study);
}

inline ConvergenceReport run_emergent(StudySpec study) {
  study.mode = SequenceMode::Emergent;
  return run_study(study);
}

}  // namespace lakelab
