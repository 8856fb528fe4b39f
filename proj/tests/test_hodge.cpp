#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gen.hpp"
#include "lakelab/hodge.hpp"
#include "lakelab/limits.hpp"

using namespace lakelab;
using lakelab::testing::for_all;
using lakelab::testing::Gen;

namespace {

constexpr double kPi = std::numbers::pi;

LakeSpec annulus(double r_in, DepthPtr d, double a1) {
  LakeSpec s;
  s.domain = Annulus{r_in, 1.0};
  s.depth = std::move(d);
  s.a1 = a1;
  return s;
}

GridOptions polar(int nr, int nth) { return {Grid::Kind::Polar, nr, nth, 0}; }

double div_residual(const Grid& g, const VelocityField& vf, double& boundary) {
  CellField div(g.size(), 0.0);
  double scale = 0.0;
  for (std::size_t fi = 0; fi < g.faces.size(); ++fi) {
    const Face& f = g.faces[fi];
    scale = std::max(scale, std::abs(vf.face_flux[fi]));
    div[f.owner] += vf.face_flux[fi];
    if (f.nbr >= 0) div[f.nbr] -= vf.face_flux[fi];
    else boundary = std::max(boundary, std::abs(vf.face_flux[fi]));
  }
  double worst = 0.0;
  for (double d : div) worst = std::max(worst, std::abs(d));
  return scale > 0.0 ? worst / scale : worst;
}

OmegaRecipe random_omega(Gen& g) {
  OmegaRecipe w;
  w.kind = static_cast<OmegaKind>(g.integer(0, 3));
  w.amplitude = g.uniform(-2, 2);
  w.center = {g.uniform(-0.7, 0.7), g.uniform(-0.7, 0.7)};
  w.width = g.uniform(0.05, 0.3);
  w.ring_radius = g.uniform(0.3, 0.8);
  return w;
}

}  // namespace

TEST(HarmonicBasis, PowerAnnulusEnergy) {
  const LakeSpec s = annulus(0.5, DepthLaw::power(1.0), 1.0);
  const HodgeBasis hb = harmonic_basis(s, build_grid(s, polar(256, 16)));
  EXPECT_NEAR(hb.energy_phi, 4.0 * kPi, 1e-4 * 4.0 * kPi);
  EXPECT_NEAR(hb.a_scal, -1.0 / (4.0 * kPi), 1e-4 / (4.0 * kPi));
}

TEST(HarmonicBasis, FlatAnnulusEnergy) {
  const LakeSpec s = annulus(0.5, DepthLaw::flat(1.0), 0.0);
  const HodgeBasis hb = harmonic_basis(s, build_grid(s, polar(256, 16)));
  EXPECT_NEAR(hb.energy_phi, 2.0 * kPi / std::log(2.0), 1e-3);
}

TEST(HarmonicBasis, SingleRingIsTwoResistorDivider) {
  const LakeSpec s = annulus(0.5, DepthLaw::power(1.0), 1.0);
  const Grid g = build_grid(s, polar(1, 6));
  const HodgeBasis hb = harmonic_basis(s, g);
  const EllipticOperator op = assemble(sample_depth(s, g).face, g, {0.0, 1.0});
  double t_in = 0.0, t_out = 0.0;
  g.for_cell_faces(0, [&](int fi) {
    if (g.faces[fi].tag == FaceTag::Island) t_in = op.transmissibility()[fi];
    if (g.faces[fi].tag == FaceTag::Outer) t_out = op.transmissibility()[fi];
  });
  for (double p : hb.phi1) EXPECT_NEAR(p, t_in / (t_in + t_out), 1e-12);
}

TEST(HarmonicBasis, DiskHasNoIsland) {
  LakeSpec s;
  const Grid g = build_grid(s, polar(8, 8));
  try {
    harmonic_basis(s, g);
    FAIL();
  } catch (const LakeError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoIsland);
  }
}

TEST(Capacity, FlatAndPowerExamples) {
  const LakeSpec flat = annulus(0.25, DepthLaw::flat(1.0), 0.0);
  EXPECT_NEAR(capacity(flat, polar(256, 8)), 2.0 * kPi / std::log(4.0), 1e-3);
  const LakeSpec pw = annulus(0.125, DepthLaw::power(1.0), 1.0);
  EXPECT_NEAR(capacity(pw, polar(256, 8)), 2.0 * kPi / 0.875, 1e-3);
}

TEST(Reconstruct, HarmonicFieldOnFlatAnnulus) {
  const LakeSpec s = annulus(0.25, DepthLaw::flat(1.0), 0.0);
  const DiscreteLake lake = discretize(s, polar(192, 256));
  const VelocityField vf = reconstruct_velocity(lake, CellField(lake.g().size(), 0.0), 1.0);
  const Vec2 v = sample_at(lake.g(), vf.v, Vec2{0.0, 0.5});
  EXPECT_NEAR(norm(v), 1.0 / kPi, 1e-3);
  EXPECT_LT(v.x, 0.0);  // counterclockwise
  EXPECT_NEAR(generalized_circulation(vf, CellField(lake.g().size(), 0.0), default_cutoff(lake.g()), lake.g()), 1.0,
              1e-9);
}

TEST(Reconstruct, SolidBodyOnFlatDisk) {
  LakeSpec s;
  const DiscreteLake lake = discretize(s, polar(128, 256));
  OmegaRecipe one;
  one.kind = OmegaKind::Constant;
  const VelocityField vf = reconstruct_velocity(lake, curl_source(lake, one.sample(lake.g())), 0.0);
  EXPECT_NEAR(norm(sample_at(lake.g(), vf.v, Vec2{0.5, 0.0})), 0.25, 1e-3);
}

TEST(Reconstruct, ZeroDataZeroCirculation) {
  const LakeSpec s = annulus(0.25, DepthLaw::power(1.0), 1.0);
  const DiscreteLake lake = discretize(s, polar(32, 32));
  const CellField zero(lake.g().size(), 0.0);
  const VelocityField vf = reconstruct_velocity(lake, zero, 0.0);
  EXPECT_EQ(generalized_circulation(vf, zero, default_cutoff(lake.g()), lake.g()), 0.0);
  for (const Vec2& v : vf.v) EXPECT_EQ(norm(v), 0.0);
}

TEST(Reconstruct, DirichletPartCirculationIsMinusPhiMoment) {
  const LakeSpec s = annulus(0.25, DepthLaw::power(1.0), 1.0);
  DiscreteLake lake = discretize(s, polar(64, 128));
  OmegaRecipe blob;
  blob.kind = OmegaKind::Blob;
  blob.center = {0.5, 0.2};
  const CellField F = curl_source(lake, blob.sample(lake.g()));
  double moment = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) moment += F[i] * lake.basis->phi1[i];
  DiscreteLake dirichlet = lake;
  dirichlet.basis.reset();
  const VelocityField vf = reconstruct_velocity(dirichlet, F, 0.0);
  EXPECT_NEAR(generalized_circulation(vf, F, default_cutoff(lake.g()), lake.g()), -moment, 1e-8);
}

TEST(Reconstruct, LineIntegralSeesEnclosedVorticity) {
  const LakeSpec s = annulus(0.25, DepthLaw::flat(1.0), 0.0);
  const DiscreteLake lake = discretize(s, polar(128, 256));
  OmegaRecipe one;
  one.kind = OmegaKind::Constant;
  const double gamma = 0.7, rho = 0.6;
  const VelocityField vf = reconstruct_velocity(lake, curl_source(lake, one.sample(lake.g())), gamma);
  EXPECT_NEAR(line_circulation(lake.g(), vf.v, rho), gamma + kPi * (rho * rho - 0.0625), 1e-2);
}

TEST(HodgeProperties, CirculationRoundTripAndCutoffIndependence) {
  for_all(12, 2000, [](Gen& g) {
    const double r_in = g.uniform(0.1, 0.3);
    const LakeSpec s = annulus(r_in, DepthLaw::power(g.uniform(0.5, 1.5)), 1.0);
    const DiscreteLake lake = discretize(s, polar(g.integer(16, 48), g.integer(16, 64)));
    const OmegaRecipe w = random_omega(g);
    const double gamma = g.uniform(-3, 3);
    const CellField F = curl_source(lake, w.sample(lake.g()));
    const VelocityField vf = reconstruct_velocity(lake, F, gamma);
    const CutoffChi chi = default_cutoff(lake.g());
    const double gm = generalized_circulation(vf, F, chi, lake.g());
    EXPECT_NEAR(gm, gamma, 1e-6);
    const double gm2 = generalized_circulation(vf, F, CutoffChi::standard(1.25 * chi.inner()), lake.g());
    EXPECT_NEAR(gm, gm2, 1e-6);
  });
}

TEST(HodgeProperties, DivergenceFreeWithNoShoreFlux) {
  for_all(12, 2100, [](Gen& g) {
    const LakeSpec s = g.coin() ? annulus(g.uniform(0.1, 0.5), DepthLaw::power(g.uniform(0.5, 1.5)), 1.0)
                                : LakeSpec{};
    const DiscreteLake lake = discretize(s, polar(g.integer(4, 40), g.integer(4, 64)));
    const CellField F = curl_source(lake, random_omega(g).sample(lake.g()));
    const VelocityField vf = reconstruct_velocity(lake, F, g.uniform(-2, 2));
    double boundary = 0.0;
    EXPECT_LE(div_residual(lake.g(), vf, boundary), 1e-13);
    EXPECT_EQ(boundary, 0.0);
  });
}

TEST(HodgeProperties, ScaleTimesEnergyIsMinusOne) {
  for_all(10, 2200, [](Gen& g) {
    const LakeSpec s = annulus(g.uniform(0.05, 0.6), DepthLaw::power(g.uniform(0.3, 2.0)), 1.0);
    const HodgeBasis hb = harmonic_basis(s, build_grid(s, polar(g.integer(4, 64), 8)));
    EXPECT_NEAR(hb.a_scal * hb.energy_phi, -1.0, 1e-12);
  });
}

TEST(HodgeProperties, CapacityDecreasesTowardTwoPiAndStaysAboveFloor) {
  for_all(6, 2300, [](Gen& g) {
    const double alpha = g.uniform(0.5, 1.5);
    double prev = INFINITY;
    for (double r : {0.5, 0.25, 0.125, 0.0625}) {
      const LakeSpec s = annulus(r, DepthLaw::power(alpha), alpha);
      const Grid grid = build_grid(s, polar(96, 8));
      const double cap = harmonic_basis(s, grid).capacity;
      EXPECT_LT(cap, prev);
      EXPECT_GT(cap, 2.0 * kPi * alpha);
      const CellField b = sample_depth(s, grid).cell;
      EXPECT_GE(cap, capacity_floor_explicit(grid, b, alpha, std::min(3.0 * r, 1.0 / 3.0)));
      EXPECT_GE(cap, capacity_floor(grid, b) * (1.0 - 1e-12));
      prev = cap;
    }
  });
}
