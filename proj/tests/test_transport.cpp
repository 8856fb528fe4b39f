#include <gtest/gtest.h>

#include <cmath>

#include "gen.hpp"
#include "lakelab/limits.hpp"
#include "lakelab/transport.hpp"

using namespace lakelab;
using lakelab::testing::for_all;
using lakelab::testing::Gen;

namespace {

LakeSpec power_annulus(double alpha, double r_in) {
  LakeSpec s;
  s.domain = Annulus{r_in, 1.0};
  s.depth = DepthLaw::power(alpha);
  s.a1 = alpha;
  return s;
}

GridOptions polar(int nr, int nth) { return {Grid::Kind::Polar, nr, nth, 0}; }

OmegaRecipe blob_at(Vec2 c, double width) {
  OmegaRecipe w;
  w.kind = OmegaKind::Blob;
  w.center = c;
  w.width = width;
  return w;
}

double max_diff(const CellField& a, const CellField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST(Transport, ConstantVorticityIsPreserved) {
  const DiscreteLake lake = discretize(power_annulus(1.0, 0.25), polar(24, 48));
  const FlowState s0 = make_state(lake, CellField(lake.g().size(), 1.0), 0.5);
  const auto snaps = evolve(s0, 0.3, lake, TimeStepper{});
  EXPECT_LE(max_diff(snaps.back().omega, s0.omega), 1e-12);
}

TEST(Transport, RadialProfileIsSteady) {
  LakeSpec s;
  s.depth = DepthLaw::power(1.0);
  s.a1 = 1.0;
  const DiscreteLake lake = discretize(s, polar(48, 64));
  OmegaRecipe ring;
  ring.kind = OmegaKind::Ring;
  const FlowState s0 = make_state(lake, ring.sample(lake.g()), 0.0);
  const auto snaps = evolve(s0, 0.5, lake, TimeStepper{});
  EXPECT_GT(snaps.back().steps, 1);
  EXPECT_LE(max_diff(snaps.back().omega, s0.omega), 1e-12);
}

TEST(Transport, UpwindStepMatchesFluxSumOracle) {
  const DiscreteLake lake = discretize(power_annulus(1.0, 0.25), polar(16, 32));
  const Grid& g = lake.g();
  const FlowState s0 = make_state(lake, blob_at({0.55, 0.0}, 0.15).sample(g), 0.5);
  TimeStepper ts;
  ts.scheme = Scheme::UpwindEuler;
  ts.cfl = 0.8;
  const FlowState s1 = step(s0, lake, ts);

  // independent oracle: loop cell by cell over its own faces
  const FaceField& q = s0.vel.face_flux;
  std::vector<double> outgoing(g.size(), 0.0), change(g.size(), 0.0);
  for (std::size_t c = 0; c < g.size(); ++c) {
    g.for_cell_faces(static_cast<int>(c), [&](int fi) {
      const Face& f = g.faces[fi];
      if (f.nbr < 0) return;
      const double out = g.orientation(static_cast<int>(c), fi) * q[fi];
      const int other = f.owner == static_cast<int>(c) ? f.nbr : f.owner;
      if (out > 0.0) outgoing[c] += out;
      change[c] -= out * (out > 0.0 ? s0.omega[c] : s0.omega[other]);
    });
  }
  double dt = INFINITY;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (outgoing[c] > 0.0) dt = std::min(dt, lake.b()[c] * g.cells[c].area / outgoing[c]);
  }
  dt *= ts.cfl;
  EXPECT_NEAR(s1.t, dt, 1e-15);
  for (std::size_t c = 0; c < g.size(); ++c) {
    const double bA = lake.b()[c] * g.cells[c].area;
    EXPECT_NEAR(s1.omega[c], s0.omega[c] + dt * change[c] / bA, 1e-13);
  }
}

TEST(Transport, ZeroHorizonKeepsOnlyInitialSnapshot) {
  const DiscreteLake lake = discretize(power_annulus(1.0, 0.25), polar(8, 16));
  const FlowState s0 = make_state(lake, blob_at({0.55, 0.0}, 0.1).sample(lake.g()), 0.0);
  int seen = 0;
  const auto snaps = evolve(s0, 0.0, lake, TimeStepper{}, [&](const FlowState&) { ++seen; }, 1);
  EXPECT_EQ(snaps.size(), 1u);
  EXPECT_EQ(seen, 1);
}

TEST(Transport, SnapshotCadenceAndFinalTime) {
  const DiscreteLake lake = discretize(power_annulus(1.0, 0.25), polar(8, 16));
  const FlowState s0 = make_state(lake, blob_at({0.55, 0.0}, 0.1).sample(lake.g()), 1.0);
  TimeStepper ts;
  ts.dt_max = 0.01;
  const auto snaps = evolve(s0, 0.105, lake, ts, {}, 5);
  EXPECT_DOUBLE_EQ(snaps.back().t, 0.105);
  for (std::size_t k = 1; k + 1 < snaps.size(); ++k) EXPECT_EQ(snaps[k].steps % 5, 0);
  EXPECT_GE(snaps.back().steps, 11);
}

TEST(Transport, CflOutsideUnitIntervalIsRejected) {
  const DiscreteLake lake = discretize(power_annulus(1.0, 0.25), polar(8, 16));
  const FlowState s0 = make_state(lake, CellField(lake.g().size(), 0.0), 1.0);
  for (double cfl : {0.0, -0.5, 1.5, 2.0}) {
    TimeStepper ts;
    ts.cfl = cfl;
    try {
      step(s0, lake, ts);
      FAIL() << cfl;
    } catch (const LakeError& e) {
      EXPECT_EQ(e.kind(), ErrorKind::TimeStepTooLarge);
    }
  }
  TimeStepper edge;
  edge.cfl = 1.0;
  EXPECT_NO_THROW(step(s0, lake, edge));
}

TEST(WeakForm, VanishingVorticityHasZeroVorticityResidual) {
  const DiscreteLake lake = discretize(power_annulus(1.0, 0.25), polar(32, 64));
  const FlowState s0 = make_state(lake, CellField(lake.g().size(), 0.0), 1.0);
  const BumpTest phi{{0.55, 0.1}, 0.2, 0.2};
  const auto snaps = evolve(s0, phi.T, lake, TimeStepper{});
  EXPECT_EQ(weak_vorticity_residual(lake, snaps, phi), 0.0);
}

TEST(WeakForm, SteadyHarmonicFlowSatisfiesVelocityEquation) {
  std::vector<double> r;
  for (int n : {32, 64}) {
    LakeSpec s = power_annulus(1.0, 0.25);
    s.depth = DepthLaw::flat(1.0);
    s.a1 = 0.0;
    const DiscreteLake lake = discretize(s, polar(n, 2 * n));
    const FlowState s0 = make_state(lake, CellField(lake.g().size(), 0.0), 1.0);
    const BumpTest phi{{0.55, 0.1}, 0.2, 0.2};
    TimeStepper ts;
    ts.dt_max = 0.02;
    r.push_back(std::abs(weak_velocity_residual(lake, evolve(s0, phi.T, lake, ts), phi)));
  }
  EXPECT_LT(r[1], 1e-3);
  EXPECT_LT(r[1], r[0]);
}

TEST(WeakForm, SupportMustStayWet) {
  const DiscreteLake lake = discretize(power_annulus(1.0, 0.25), polar(8, 16));
  for (const BumpTest& phi : {BumpTest{{0.9, 0.0}, 0.2, 1.0}, BumpTest{{0.3, 0.0}, 0.1, 1.0}}) {
    try {
      WeakVorticityResidual acc(lake, phi);
      FAIL();
    } catch (const LakeError& e) {
      EXPECT_EQ(e.kind(), ErrorKind::BadTestFunction);
    }
  }
}

TEST(WeakForm, CompressibleVelocityTestFieldIsRejected) {
  const DiscreteLake lake = discretize(power_annulus(1.0, 0.25), polar(8, 16));
  const BumpTest phi{{0.55, 0.0}, 0.2, 1.0};
  EXPECT_NO_THROW(WeakVelocityResidual(lake, phi));
  try {
    WeakVelocityResidual acc(lake, phi, 0.3);
    FAIL();
  } catch (const LakeError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BadTestFunction);
  }
}

TEST(TransportProperties, ConservationBoundsAndCirculation) {
  for_all(8, 3000, [](Gen& g) {
    const LakeSpec s = power_annulus(g.uniform(0.5, 1.5), g.uniform(0.15, 0.35));
    const DiscreteLake lake = discretize(s, polar(g.integer(8, 24), g.integer(16, 48)));
    CellField w0 = g.field(lake.g().size(), -1.0, 2.0);
    const double lo = *std::min_element(w0.begin(), w0.end());
    const double hi = *std::max_element(w0.begin(), w0.end());
    const double gamma = g.uniform(-2, 2);
    TimeStepper ts;
    ts.cfl = g.uniform(0.1, 1.0);
    ts.scheme = g.coin() ? Scheme::SSPRK2 : Scheme::UpwindEuler;
    FlowState cur = make_state(lake, std::move(w0), gamma);
    const double m0 = cur.diag.mass;
    for (int k = 0; k < 10; ++k) {
      cur = step(cur, lake, ts);
      EXPECT_NEAR(cur.diag.mass, m0, 1e-12 * std::max(1.0, std::abs(m0)));
      EXPECT_GE(cur.diag.min_omega, lo - 1e-12);
      EXPECT_LE(cur.diag.max_omega, hi + 1e-12);
      EXPECT_NEAR(cur.diag.gamma, gamma, 1e-6);
    }
  });
}
