#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "gen.hpp"
#include "lakelab/cutoff.hpp"
#include "lakelab/geometry.hpp"
#include "lakelab/grid.hpp"

using namespace lakelab;
using lakelab::testing::for_all;
using lakelab::testing::Gen;

namespace {

constexpr double kPi = std::numbers::pi;

LakeSpec annulus(double r_in, DepthPtr b) {
  LakeSpec s;
  s.domain = Annulus{r_in, 1.0};
  s.depth = std::move(b);
  return s;
}

LakeSpec disk(DepthPtr b, double a1 = 1.0) {
  LakeSpec s;
  s.depth = std::move(b);
  s.a1 = a1;
  return s;
}

MaskedJordan random_mask(Gen& g) {
  MaskedJordan m;
  m.nx = g.integer(4, 30);
  m.ny = g.integer(4, 30);
  m.h = g.uniform(0.01, 0.2);
  m.x0 = g.uniform(-1, 0);
  m.y0 = g.uniform(-1, 0);
  // a blob of wet cells grown from the centre keeps the mask connected
  m.wet.assign(static_cast<std::size_t>(m.nx) * m.ny, 0);
  const double cx = 0.5 * m.nx, cy = 0.5 * m.ny, rad = 0.45 * std::min(m.nx, m.ny);
  for (int j = 0; j < m.ny; ++j) {
    for (int i = 0; i < m.nx; ++i) {
      const double dx = i + 0.5 - cx, dy = j + 0.5 - cy;
      m.wet[static_cast<std::size_t>(j) * m.nx + i] = dx * dx + dy * dy < rad * rad ? 1 : 0;
    }
  }
  return m;
}

}  // namespace

TEST(DepthLaw, PowerRadialAtHalfRadius) {
  const LakeSpec s = annulus(0.25, DepthLaw::power(1.0));
  const Grid g = make_polar_grid(0.25, 1.0, 3, 8);  // ring centres 0.375, 0.625, 0.875
  const DepthSample d = sample_depth(s, g);
  EXPECT_DOUBLE_EQ(d.cell[0], 0.375);
  EXPECT_DOUBLE_EQ((*s.depth)(Vec2{0.5, 0.0}), 0.5);
  EXPECT_DOUBLE_EQ((*s.depth)(Vec2{0.0, -0.5}), 0.5);
}

TEST(DepthLaw, FlatIsConstant) {
  const auto b = DepthLaw::flat(1.0);
  for (Vec2 x : {Vec2{0, 0}, Vec2{0.3, -0.9}, Vec2{5, 5}}) EXPECT_EQ((*b)(x), 1.0);
}

TEST(DepthLaw, FloodedWetRegionAndValue) {
  const auto b = DepthLaw::flooded(DepthLaw::power(1.0), 0.25);
  EXPECT_DOUBLE_EQ((*b)(Vec2{0.5, 0.0}), 0.25);
  EXPECT_EQ((*b)(Vec2{0.2, 0.0}), 0.0);
  EXPECT_EQ((*b)(Vec2{0.25, 0.0}), 0.0);
  EXPECT_GT((*b)(Vec2{0.2501, 0.0}), 0.0);
  // island radius eps^(1/a1)
  EXPECT_NEAR(detail::flood_radius(*DepthLaw::power(1.0), 0.25, 1.0), 0.25, 1e-12);
  EXPECT_NEAR(detail::flood_radius(*DepthLaw::power(2.0), 0.25, 1.0), 0.5, 1e-12);
}

TEST(DepthLaw, RejectsBadParameters) {
  EXPECT_THROW(DepthLaw::flat(0.0), LakeError);
  EXPECT_THROW(DepthLaw::power(-1.0), LakeError);
  EXPECT_THROW(DepthLaw::flooded(DepthLaw::power(1.0), 0.0), LakeError);
  try {
    DepthLaw::raised(DepthLaw::power(1.0), -0.1);
    FAIL();
  } catch (const LakeError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDepth);
  }
}

TEST(DepthLaw, FloodedBelowRaisedAndVolcanoAboveBase) {
  for_all(40, 100, [](Gen& g) {
    const double alpha = g.uniform(0.2, 1.9), eps = g.uniform(0.001, 0.3);
    const auto base = DepthLaw::power(alpha);
    const auto fl = DepthLaw::flooded(base, eps);
    const auto ra = DepthLaw::raised(base, eps);
    const auto vo = DepthLaw::volcano(alpha, eps, g.uniform(0.1, 0.4), base);
    EXPECT_GT((*ra)(Vec2{}), 0.0);
    EXPECT_GT((*vo)(Vec2{}), 0.0);
    for (int k = 0; k < 50; ++k) {
      const Vec2 x{g.uniform(-1, 1), g.uniform(-1, 1)};
      EXPECT_LE((*fl)(x), (*base)(x));
      EXPECT_GE((*ra)(x), (*base)(x));
      EXPECT_GE((*vo)(x), (*base)(x) * (1 - 1e-15));
    }
  });
}

TEST(LakeSpec, PuncturedLakeNeedsExponentBelowTwo) {
  LakeSpec s = disk(DepthLaw::power(1.0), 2.5);
  try {
    s.validate();
    FAIL();
  } catch (const LakeError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDepth);
  }
  s.a1 = 1.0;
  EXPECT_NO_THROW(s.validate());
  EXPECT_TRUE(s.punctured());
}

TEST(LakeSpec, AnnulusNeedsOrderedRadii) {
  LakeSpec s = annulus(0.5, DepthLaw::flat(1.0));
  s.domain = Annulus{1.2, 1.0};
  try {
    s.validate();
    FAIL();
  } catch (const LakeError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidGeometry);
  }
}

TEST(SampleDepth, DryCellInsideWetRegionIsRejected) {
  // a flooded depth on the full disk leaves dry cells near the centre
  const LakeSpec s = disk(DepthLaw::flooded(DepthLaw::power(1.0), 0.3));
  const Grid g = make_polar_grid(0.0, 1.0, 10, 16);
  try {
    sample_depth(s, g);
    FAIL();
  } catch (const LakeError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDepth);
  }
}

TEST(SampleDepth, HarmonicMeanFaceLiesBetweenCells) {
  for_all(20, 200, [](Gen& g) {
    const double alpha = g.uniform(0.1, 1.9);
    const LakeSpec s = annulus(g.uniform(0.05, 0.6), DepthLaw::volcano(alpha, g.uniform(0.01, 0.2), 0.3,
                                                                        DepthLaw::power(alpha)));
    const Grid gr = make_polar_grid(std::get<Annulus>(s.domain).r_in, 1.0, g.integer(2, 20), g.integer(3, 30));
    const DepthSample d = sample_depth(s, gr);
    for (std::size_t fi = 0; fi < gr.faces.size(); ++fi) {
      const Face& f = gr.faces[fi];
      if (f.nbr < 0) continue;
      const double lo = std::min(d.cell[f.owner], d.cell[f.nbr]);
      const double hi = std::max(d.cell[f.owner], d.cell[f.nbr]);
      EXPECT_GE(d.face[fi], lo * (1 - 1e-14));
      EXPECT_LE(d.face[fi], hi * (1 + 1e-14));
    }
  });
}

TEST(EpsSequence, EvanescentPowerGivesAnnuli) {
  const auto seq = make_eps_sequence(disk(DepthLaw::power(1.0)), SequenceMode::Evanescent, {0.5, 0.25});
  ASSERT_EQ(seq.size(), 2u);
  EXPECT_NEAR(std::get<Annulus>(seq[0].domain).r_in, 0.5, 1e-12);
  EXPECT_NEAR(std::get<Annulus>(seq[1].domain).r_in, 0.25, 1e-12);
  EXPECT_TRUE(seq[1].has_island());
}

TEST(EpsSequence, EmptyListGivesEmptySequence) {
  EXPECT_TRUE(make_eps_sequence(disk(DepthLaw::power(1.0)), SequenceMode::Evanescent, {}).empty());
  EXPECT_TRUE(make_eps_sequence(disk(DepthLaw::power(1.0)), SequenceMode::Emergent, {}).empty());
}

TEST(EpsSequence, EmergentRaisedHasPositiveCentre) {
  SequenceOptions o;
  o.kind = SequenceKind::Raised;
  const auto seq = make_eps_sequence(disk(DepthLaw::power(1.0)), SequenceMode::Emergent, {0.1}, o);
  ASSERT_EQ(seq.size(), 1u);
  EXPECT_FALSE(seq[0].has_island());
  EXPECT_DOUBLE_EQ((*seq[0].depth)(Vec2{}), 0.1);
  EXPECT_DOUBLE_EQ((*seq[0].depth)(Vec2{0.5, 0}), 0.6);
}

TEST(EpsSequence, RejectsBadLists) {
  const LakeSpec base = disk(DepthLaw::power(1.0));
  for (const std::vector<double>& eps :
       {std::vector<double>{0.1, 0.2}, std::vector<double>{0.2, 0.2}, std::vector<double>{0.1, -0.05},
        std::vector<double>{1.5}}) {
    try {
      make_eps_sequence(base, SequenceMode::Evanescent, eps);
      FAIL();
    } catch (const LakeError& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidSequence);
    }
  }
}

TEST(EpsSequence, FloodedIslandsAreNestedOnMasks) {
  for_all(15, 300, [](Gen& g) {
    LakeSpec base = disk(DepthLaw::power(g.uniform(0.3, 1.9)));
    const auto eps = g.decreasing(4, 0.5);
    const int cells = g.integer(16, 64);
    MaskedJordan prev = detail::flood_mask(base, eps[0], cells);
    for (std::size_t k = 1; k < eps.size(); ++k) {
      const MaskedJordan cur = detail::flood_mask(base, eps[k], cells);
      for (std::size_t c = 0; c < cur.wet.size(); ++c) {
        if (prev.wet[c]) EXPECT_TRUE(cur.wet[c]) << "wet cell dried as eps decreased";
      }
      prev = cur;
    }
  });
}

TEST(EpsSequence, NonRadialFloodBuildsMaskWithOneIsland) {
  Tabulated t;
  t.x0 = t.y0 = -1.2;
  t.h = 0.1;
  t.nx = t.ny = 25;
  for (int j = 0; j < t.ny; ++j) {
    for (int i = 0; i < t.nx; ++i) {
      const double x = t.x0 + i * t.h, y = t.y0 + j * t.h;
      t.values.push_back(std::sqrt(x * x + 2 * y * y));
    }
  }
  LakeSpec base = disk(std::make_shared<DepthLaw>(t));
  SequenceOptions o;
  o.mask_cells = 48;
  const auto seq = make_eps_sequence(base, SequenceMode::Evanescent, {0.3, 0.15}, o);
  ASSERT_EQ(seq.size(), 2u);
  for (const auto& m : seq) {
    ASSERT_TRUE(std::holds_alternative<MaskedJordan>(m.domain));
    EXPECT_EQ(label_dry(std::get<MaskedJordan>(m.domain)).islands(), 1);
  }
}

TEST(GridTopology, PolarAreasSumToAnnulus) {
  for_all(30, 400, [](Gen& g) {
    const double r_in = g.coin() ? 0.0 : g.uniform(0.01, 0.9);
    const double R = r_in + g.uniform(0.1, 2.0);
    const Grid gr = make_polar_grid(r_in, R, g.integer(1, 40), g.integer(3, 50));
    double a = 0.0;
    for (const auto& c : gr.cells) a += c.area;
    const double exact = kPi * (R * R - r_in * r_in);
    EXPECT_NEAR(a, exact, 1e-12 * exact);
  });
}

TEST(GridTopology, MaskAreasSumToWetCells) {
  for_all(30, 500, [](Gen& g) {
    const MaskedJordan m = random_mask(g);
    const Grid gr = make_cartesian_grid(m);
    double a = 0.0, n = 0.0;
    for (const auto& c : gr.cells) a += c.area;
    for (auto w : m.wet) n += w;
    EXPECT_NEAR(a, n * m.h * m.h, 1e-12 * a);
  });
}

TEST(GridTopology, InteriorFacesJoinTwoCellsBoundaryFacesTagged) {
  for_all(20, 600, [](Gen& g) {
    const Grid polar = make_polar_grid(g.coin() ? 0.0 : 0.2, 1.0, g.integer(1, 12), g.integer(3, 16));
    const Grid cart = make_cartesian_grid(random_mask(g));
    for (const Grid* gr : {&polar, &cart}) {
      std::vector<int> faces_per_cell(gr->size(), 0);
      for (const Face& f : gr->faces) {
        ASSERT_GE(f.owner, 0);
        ++faces_per_cell[f.owner];
        if (f.nbr >= 0) {
          EXPECT_NE(f.nbr, f.owner);
          EXPECT_EQ(f.tag, FaceTag::Interior);
          ++faces_per_cell[f.nbr];
        } else {
          EXPECT_NE(f.tag, FaceTag::Interior);
        }
      }
      for (int n : faces_per_cell) EXPECT_EQ(n, 4);
    }
  });
}

TEST(WeightedNorm, ZeroFieldHasZeroNorm) {
  const Grid g = make_polar_grid(0.0, 1.0, 8, 16);
  EXPECT_EQ(weighted_norm(CellField(g.size(), 0.0), Weight::One, g, CellField(g.size(), 1.0)), 0.0);
}

TEST(WeightedNorm, UnitFieldOnUnitDisk) {
  const Grid g = make_polar_grid(0.0, 1.0, 16, 32);
  EXPECT_NEAR(weighted_norm(CellField(g.size(), 1.0), Weight::One, g, CellField(g.size(), 1.0)), std::sqrt(kPi),
              1e-13);
}

TEST(WeightedNorm, ExactGradientOfHarmonicProfile) {
  // phi = (r - 1)/(0.5 - 1) on 0.5 < r < 1 with b = r: |grad phi| = 2
  const LakeSpec s = annulus(0.5, DepthLaw::power(1.0));
  const Grid g = make_polar_grid(0.5, 1.0, 20, 24);
  const CellField b = sample_depth(s, g).cell;
  EXPECT_NEAR(weighted_norm(CellField(g.size(), 2.0), Weight::InvB, g, b), std::sqrt(4 * kPi), 1e-12);
}

TEST(WeightedNorm, InverseWeightOnDryCellFails) {
  const Grid g = make_polar_grid(0.0, 1.0, 2, 4);
  CellField b(g.size(), 1.0);
  b[3] = 0.0;
  try {
    weighted_norm(CellField(g.size(), 1.0), Weight::InvB, g, b);
    FAIL();
  } catch (const LakeError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateWeight);
  }
}

TEST(WeightedNorm, AbsolutelyHomogeneous) {
  for_all(30, 700, [](Gen& g) {
    const Grid gr = make_polar_grid(0.1, 1.0, g.integer(2, 20), g.integer(3, 20));
    const CellField f = g.field(gr.size());
    const CellField b = g.field(gr.size(), 0.01, 3.0);
    const double c = g.uniform(-10, 10);
    CellField cf = f;
    for (double& v : cf) v *= c;
    for (Weight w : {Weight::InvB, Weight::B, Weight::One}) {
      const double n = weighted_norm(f, w, gr, b);
      EXPECT_NEAR(weighted_norm(cf, w, gr, b), std::abs(c) * n, 1e-14 * std::abs(c) * n + 1e-300);
    }
  });
}

TEST(WeightedNorm, SecondOrderUnderRefinement) {
  // k = 1 is avoided: the leading midpoint error term of r cos^2(pi r) cancels
  for (double k : {0.5, 0.75, 1.25}) {
    std::vector<double> n;
    for (int nr : {16, 32, 64}) {
      const Grid g = make_polar_grid(0.0, 1.0, nr, 4 * nr);
      CellField f(g.size());
      for (std::size_t c = 0; c < g.size(); ++c) f[c] = std::cos(k * kPi * norm(g.cells[c].center));
      n.push_back(weighted_norm(f, Weight::One, g, CellField(g.size(), 1.0)));
    }
    const double ratio = (n[0] - n[1]) / (n[1] - n[2]);
    EXPECT_GE(ratio, 3.5) << "k=" << k;
    EXPECT_LE(ratio, 4.5) << "k=" << k;
  }
}

TEST(Cutoff, BoundedWithGradientInTransitionBand) {
  for_all(30, 800, [](Gen& g) {
    const double delta = g.uniform(0.01, 0.4);
    const CutoffChi chi = CutoffChi::standard(delta);
    for (int k = 0; k < 200; ++k) {
      const double r = g.uniform(0.0, 3.0 * delta), th = g.uniform(0, 2 * kPi);
      const Vec2 x{r * std::cos(th), r * std::sin(th)};
      const double v = chi(x);
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      if (r <= delta) EXPECT_EQ(v, 1.0);
      if (r >= 2 * delta) EXPECT_EQ(v, 0.0);
      const Vec2 gr = chi.gradient(x);
      if (r <= delta || r >= 2 * delta) {
        EXPECT_EQ(gr.x, 0.0);
        EXPECT_EQ(gr.y, 0.0);
      } else {
        // centred difference oracle
        const double h = 1e-7 * delta;
        const double dx = (chi(x + Vec2{h, 0}) - chi(x - Vec2{h, 0})) / (2 * h);
        EXPECT_NEAR(gr.x, dx, 1e-5 / delta);
      }
    }
  });
  EXPECT_THROW(CutoffChi(0.2, 0.1), LakeError);
}
