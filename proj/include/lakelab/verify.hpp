#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "lakelab/limits.hpp"
#include "lakelab/transport.hpp"

namespace lakelab {

struct VerifyOptions {
  long seed = 0;
  double cfl = 0.45;
  // Flips the orientation of the reconstructed circulation before it is
  // measured; used to show that the suite notices a sign error.
  bool mis_signed_circulation = false;
};

struct VerifyRow {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double expected = 0.0;
  std::string note;
};

struct VerifyResult {
  std::vector<VerifyRow> rows;

  bool all_passed() const {
    for (const auto& r : rows) {
      if (!r.passed) return false;
    }
    return true;
  }

  void print(std::ostream& os) const {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-40s %-6s %14s %14s  %s\n", "invariant", "status", "measured", "expected", "note");
    os << buf;
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%-40s %-6s %14.6g %14.6g  %s\n", r.name.c_str(), r.passed ? "pass" : "FAIL",
                    r.measured, r.expected, r.note.c_str());
      os << buf;
    }
  }
};

namespace detail {

class Suite {
 public:
  explicit Suite(VerifyResult& out) : out_(out) {}

  /// Runs `body`, which appends its own rows; a library error becomes a
  /// failed row carrying the error kind.
  void group(const std::string& name, const std::function<void()>& body) {
    try {
      body();
    } catch (const LakeError& e) {
      out_.rows.push_back({name, false, NAN, NAN, e.what()});
    }
  }

  void row(std::string name, bool ok, double measured, double expected, std::string note = "") {
    out_.rows.push_back({std::move(name), ok, measured, expected, std::move(note)});
  }

 private:
  VerifyResult& out_;
};

inline LakeSpec power_annulus(double alpha, double r_in) {
  LakeSpec s;
  s.domain = Annulus{r_in, 1.0};
  s.depth = DepthLaw::power(alpha);
  s.a1 = alpha;
  return s;
}

inline GridOptions polar(int nr, int nth) {
  GridOptions g;
  g.nr = nr;
  g.ntheta = nth;
  return g;
}

}  // namespace detail

/// The invariant suite on small grids.  Every row is an invariant of one
/// module, measured against its expected value.
inline VerifyResult run_verify(const VerifyOptions& opt = {}) {
  VerifyResult res;
  detail::Suite S(res);
  std::mt19937_64 rng(static_cast<std::uint64_t>(opt.seed));
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const double pi = std::numbers::pi;

  // ---- lake_geometry
  S.group("geometry", [&] {
    const Grid g = make_polar_grid(0.25, 1.0, 24, 48);
    double area = 0.0;
    for (const auto& c : g.cells) area += c.area;
    const double exact = pi * (1.0 - 0.0625);
    S.row("geometry.area_sum_polar", std::abs(area - exact) <= 1e-12 * exact, area, exact);

    LakeSpec disk;
    disk.depth = DepthLaw::flat(1.0);
    const MaskedJordan m = rasterize(disk, 40);
    const Grid gc = make_cartesian_grid(m);
    double ac = 0.0, wet = 0.0;
    for (const auto& c : gc.cells) ac += c.area;
    for (auto w : m.wet) wet += w ? 1.0 : 0.0;
    const double poly = wet * m.h * m.h;
    S.row("geometry.area_sum_mask", std::abs(ac - poly) <= 1e-12 * poly, ac, poly);

    int bad = 0;
    for (const Grid* gg : {&g, &gc}) {
      for (const Face& f : gg->faces) {
        if (f.nbr >= 0 && (f.nbr == f.owner || f.tag != FaceTag::Interior)) ++bad;
        if (f.nbr < 0 && f.tag == FaceTag::Interior) ++bad;
      }
    }
    S.row("geometry.face_two_cells_or_tagged", bad == 0, bad, 0);

    LakeSpec base;
    base.depth = DepthLaw::power(1.0);
    int not_nested = 0;
    MaskedJordan prev = detail::flood_mask(base, 0.4, 64);
    for (double eps : {0.2, 0.1, 0.05}) {
      const MaskedJordan cur = detail::flood_mask(base, eps, 64);
      for (std::size_t k = 0; k < cur.wet.size(); ++k) not_nested += prev.wet[k] && !cur.wet[k];
      prev = cur;
    }
    S.row("geometry.flooded_islands_nested", not_nested == 0, not_nested, 0);

    const LakeSpec vol = [] {
      LakeSpec s;
      s.domain = Annulus{0.2, 1.0};
      s.depth = DepthLaw::volcano(1.0, 0.05, 0.3, DepthLaw::power(1.0));
      return s;
    }();
    const Grid gv = build_grid(vol, detail::polar(16, 32));
    const DepthSample ds = sample_depth(vol, gv);
    int outside = 0;
    for (std::size_t fi = 0; fi < gv.faces.size(); ++fi) {
      const Face& f = gv.faces[fi];
      if (f.nbr < 0) continue;
      const double lo = std::min(ds.cell[f.owner], ds.cell[f.nbr]), hi = std::max(ds.cell[f.owner], ds.cell[f.nbr]);
      if (ds.face[fi] < lo * (1 - 1e-14) || ds.face[fi] > hi * (1 + 1e-14)) ++outside;
    }
    S.row("geometry.face_depth_between_cells", outside == 0, outside, 0);

    CellField f(g.size());
    for (double& v : f) v = unif(rng);
    const CellField b = sample_depth(detail::power_annulus(1.0, 0.25), g).cell;
    const double c = -3.7;
    CellField cf = f;
    for (double& v : cf) v *= c;
    const double n1 = weighted_norm(f, Weight::InvB, g, b), n2 = weighted_norm(cf, Weight::InvB, g, b);
    S.row("geometry.norm_homogeneous", std::abs(n2 - std::abs(c) * n1) <= 1e-14 * n2, n2 / n1, std::abs(c));

    std::vector<double> norms;
    for (int n : {16, 32, 64}) {
      const Grid gr = make_polar_grid(0.0, 1.0, n, 4 * n);
      CellField h(gr.size());
      for (std::size_t k = 0; k < gr.size(); ++k) h[k] = std::cos(0.5 * pi * norm(gr.cells[k].center));
      norms.push_back(weighted_norm(h, Weight::One, gr, CellField(gr.size(), 1.0)));
    }
    const double ratio = (norms[0] - norms[1]) / (norms[1] - norms[2]);
    S.row("geometry.norm_refinement_ratio", ratio >= 3.5 && ratio <= 4.5, ratio, 4.0);
  });

  // ---- weighted_elliptic
  S.group("elliptic", [&] {
    LakeSpec s;
    s.domain = Annulus{0.3, 1.0};
    Tabulated t;
    t.x0 = t.y0 = -1.05;
    t.h = 0.15;
    t.nx = t.ny = 15;
    for (int j = 0; j < t.ny; ++j) {
      for (int i = 0; i < t.nx; ++i) t.values.push_back(1.0 + 0.5 * std::sin(1.3 * i) * std::cos(0.7 * j) + 0.6);
    }
    s.depth = std::make_shared<DepthLaw>(t);
    s.a1 = 0.0;
    const Grid g = build_grid(s, detail::polar(24, 48));
    const DepthSample ds = sample_depth(s, g);
    const EllipticOperator op = assemble(ds.face, g, {0.0, 1.0});
    SolveReport rep;
    const CellField phi = solve(op, CellField(g.size(), 0.0), rep);
    double lo = INFINITY, hi = -INFINITY;
    for (double v : phi) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    S.row("elliptic.max_principle_low", lo >= -1e-12, lo, 0.0);
    S.row("elliptic.max_principle_high", hi <= 1.0 + 1e-12, hi, 1.0);

    CellField u(g.size()), w(g.size()), Lu, Lw;
    for (auto& v : u) v = unif(rng);
    for (auto& v : w) v = unif(rng);
    op.apply_linear(u, Lu);
    op.apply_linear(w, Lw);
    const double a = detail::dotv(Lu, w), bb = detail::dotv(u, Lw);
    S.row("elliptic.symmetry", std::abs(a - bb) <= 1e-13 * std::abs(a), std::abs(a - bb) / std::abs(a), 0.0);

    // integration by parts: energy = -<A phi, phi> + sum over boundary faces of T g (g - phi)
    const CellField Aphi = op.apply(phi);
    double rhs = -detail::dotv(Aphi, phi);
    const FaceField& T = op.transmissibility();
    for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
      const Face& f = g.faces[fi];
      if (f.nbr >= 0) continue;
      const double gv = op.ghost(f);
      rhs += T[fi] * gv * (gv - phi[f.owner]);
    }
    const double E = op.energy(phi);
    S.row("elliptic.energy_identity", std::abs(E - rhs) <= 1e-12 * E, std::abs(E - rhs) / E, 0.0);
    S.row("elliptic.solve_tolerance", rep.residual <= 1e-10, rep.residual, 1e-10);

    std::vector<double> errs;
    for (int n : {128, 256}) {
      const LakeSpec pa = detail::power_annulus(1.0, 0.25);
      const Grid gp = build_grid(pa, detail::polar(n, 8));
      const HodgeBasis hb = harmonic_basis(pa, gp, 1e-13);
      double e = 0.0;
      for (std::size_t c = 0; c < gp.size(); ++c) {
        const double r = norm(gp.cells[c].center);
        e = std::max(e, std::abs(hb.phi1[c] - (r - 1.0) / (0.25 - 1.0)));
      }
      errs.push_back(e);
    }
    const double order = std::log2(errs[0] / errs[1]);
    S.row("elliptic.phi1_order", order >= 1.9, order, 2.0);
  });

  // ---- hodge_circulation
  S.group("hodge", [&] {
    const LakeSpec s = detail::power_annulus(1.0, 0.25);
    const DiscreteLake lake = discretize(s, detail::polar(32, 64));
    const Grid& g = lake.g();
    const HodgeBasis& hb = *lake.basis;
    S.row("hodge.a_scal_times_energy", std::abs(hb.a_scal * hb.energy_phi + 1.0) <= 1e-10,
          hb.a_scal * hb.energy_phi, -1.0);

    struct Case {
      OmegaRecipe w;
      double gamma;
    };
    OmegaRecipe blob;
    blob.kind = OmegaKind::Blob;
    blob.center = {0.6, 0.1};
    OmegaRecipe one;
    one.kind = OmegaKind::Constant;
    double worst_rt = 0.0, worst_ind = 0.0, worst_div = 0.0, worst_bdry = 0.0;
    for (const Case& k : {Case{OmegaRecipe{}, 1.0}, Case{one, 0.0}, Case{blob, -0.7}, Case{one, 2.5}}) {
      const CellField F = curl_source(lake, k.w.sample(g));
      VelocityField vf = reconstruct_velocity(lake, F, k.gamma);
      if (opt.mis_signed_circulation) {
        for (double& c : vf.face_circ) c = -c;
      }
      const CutoffChi chi = default_cutoff(g);
      const double gm = generalized_circulation(vf, F, chi, g);
      worst_rt = std::max(worst_rt, std::abs(gm - k.gamma));
      const double gm2 = generalized_circulation(vf, F, CutoffChi::standard(1.5 * chi.inner()), g);
      worst_ind = std::max(worst_ind, std::abs(gm - gm2));
      double scale = 0.0;
      for (double q : vf.face_flux) scale = std::max(scale, std::abs(q));
      CellField div(g.size(), 0.0);
      for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
        const Face& f = g.faces[fi];
        div[f.owner] += vf.face_flux[fi];
        if (f.nbr >= 0) div[f.nbr] -= vf.face_flux[fi];
        else worst_bdry = std::max(worst_bdry, std::abs(vf.face_flux[fi]));
      }
      for (double d : div) worst_div = std::max(worst_div, std::abs(d) / std::max(scale, 1e-300));
    }
    S.row("hodge.circulation_roundtrip", worst_rt <= 1e-6, worst_rt, 0.0);
    S.row("hodge.cutoff_independence", worst_ind <= 1e-6, worst_ind, 0.0);
    S.row("hodge.div_bv_zero", worst_div <= 1e-13, worst_div, 0.0);
    S.row("hodge.boundary_flux_zero", worst_bdry == 0.0, worst_bdry, 0.0);

    std::vector<double> caps;
    bool floor_ok = true;
    double worst_floor = INFINITY;
    for (double r : {0.5, 0.25, 0.125, 0.0625}) {
      const LakeSpec sp = detail::power_annulus(1.0, r);
      const Grid gr = build_grid(sp, detail::polar(64, 8));
      const HodgeBasis h = harmonic_basis(sp, gr);
      caps.push_back(h.capacity);
      const double fl = capacity_floor_explicit(gr, sample_depth(sp, gr).cell, 1.0, std::min(3.0 * r, 1.0 / 3.0));
      floor_ok = floor_ok && h.capacity >= fl;
      worst_floor = std::min(worst_floor, h.capacity / fl);
    }
    bool mono = true;
    for (std::size_t k = 1; k < caps.size(); ++k) mono = mono && caps[k] < caps[k - 1] && caps[k] > 2.0 * pi;
    S.row("hodge.capacity_monotone_to_2pi_alpha", mono, caps.back(), 2.0 * pi);
    S.row("hodge.capacity_above_floor", floor_ok, worst_floor, 1.0, "capacity / floor");
  });

  // ---- vorticity_transport
  S.group("transport", [&] {
    const LakeSpec s = detail::power_annulus(1.0, 0.25);
    const DiscreteLake lake = discretize(s, detail::polar(24, 48));
    const Grid& g = lake.g();
    OmegaRecipe blob;
    blob.kind = OmegaKind::Blob;
    blob.center = {0.6, 0.0};
    blob.width = 0.15;
    const CellField w0 = blob.sample(g);
    const double wmax = *std::max_element(w0.begin(), w0.end());
    const double wmin = *std::min_element(w0.begin(), w0.end());
    TimeStepper ts;
    ts.cfl = opt.cfl;
    const FlowState s0 = make_state(lake, w0, 0.5);
    const double C0 = s0.diag.energy;
    double mass_dev = 0.0, over = 0.0, gdev = 0.0, edev = 0.0;
    evolve(s0, 0.25, lake, ts, [&](const FlowState& st) {
      mass_dev = std::max(mass_dev, std::abs(st.diag.mass - s0.diag.mass) / std::abs(s0.diag.mass));
      over = std::max({over, st.diag.max_omega - wmax, wmin - st.diag.min_omega});
      gdev = std::max(gdev, std::abs(st.diag.gamma - s0.diag.gamma));
      edev = std::max(edev, std::abs(std::sqrt(st.diag.energy / C0) - 1.0));
    });
    S.row("transport.mass_conserved", mass_dev <= 1e-12, mass_dev, 0.0);
    S.row("transport.max_principle", over <= 1e-12, over, 0.0);
    S.row("transport.circulation_constant", gdev <= 1e-6, gdev, 0.0);
    S.row("transport.energy_bounded", edev <= 0.2, edev, 0.2);

    OmegaRecipe c;
    c.kind = OmegaKind::Constant;
    c.amplitude = 0.8;
    const auto snaps = evolve(make_state(lake, c.sample(g), 0.3), 0.1, lake, ts);
    double dc = 0.0;
    for (double v : snaps.back().omega) dc = std::max(dc, std::abs(v - 0.8));
    S.row("transport.constant_preserved", dc <= 1e-12, dc, 0.0);

    bool rejected = false;
    try {
      TimeStepper bad;
      bad.cfl = 2.0;
      (void)step(s0, lake, bad);
    } catch (const LakeError& e) {
      rejected = e.kind() == ErrorKind::TimeStepTooLarge;
    }
    S.row("transport.cfl_above_one_rejected", rejected, rejected ? 1 : 0, 1);
  });

  // ---- limit_harness: a coarse evanescent study
  S.group("limits", [&] {
    StudySpec st;
    st.base.depth = DepthLaw::power(1.0);
    st.base.a1 = 1.0;
    st.eps_list = halving(0.05, 4);
    st.gamma = 1.0;
    st.omega.kind = OmegaKind::Constant;
    st.probes = {0.3, 0.5, 0.7};
    st.grid = detail::polar(96, 64);
    const ConvergenceReport rep = run_evanescent(st);
    for (const auto& ck : rep.checks) S.row("limits." + ck.name, ck.passed, ck.measured, ck.expected);
  });
  return res;
}

}  // namespace lakelab
