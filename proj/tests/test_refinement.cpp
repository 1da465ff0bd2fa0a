#include <acl/refinement.hpp>
#include <acl/errors.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace acl;

namespace
{

Averaging moment_average(int d)
{
  return Averaging{PolyCurve::moment(d), WeightedMeasure(d, 0), 0.0, 1.0, 64};
}

Grid square_grid(double h, double lo, double hi)
{
  return Grid::covering(Eigen::Vector2d(h, h), Eigen::Vector2d(lo, lo), Eigen::Vector2d(hi, hi));
}

VoxelSet full_spatial(Grid const& g)
{
  VoxelSet s = empty_spatial_set(g);
  std::fill(s.v.begin(), s.v.end(), 1);
  return s;
}

VoxelSet full_layered(Grid const& g, Dilations const& dil)
{
  VoxelSet s = empty_layered_set(g, dil);
  std::fill(s.v.begin(), s.v.end(), 1);
  return s;
}

struct Built
{
  RefinementInstance I;
  IncidenceSequence S;
  Tower initial;
};

Built build(int d, uint64_t seed)
{
  RefinementInstance I = refinement_instance(d, seed);
  RefineOptions opt;
  IncidenceSequence S = build_U_sequence(make_incidence_grid(I.A, I.E, I.F, opt.nt));
  Tower T = grow_initial_tower(S, opt);
  return {std::move(I), std::move(S), std::move(T)};
}

}

TEST(Refinement, FullSetFirstStepKeepsEveryFibre)
{
  Grid big = square_grid(1.0 / 16, -3, 3), small = square_grid(1.0 / 16, -0.25, 0.25);
  Dilations dil{1, 2, 4};
  auto G = make_incidence_grid(moment_average(2), full_spatial(big), full_layered(small, dil), 64);
  IncidenceSequence S = build_U_sequence(G);
  EXPECT_NEAR(S.stats.alpha, 1.0, 1e-12);
  EXPECT_NEAR(S.slabFloor, 0.5, 1e-15);
  IncidenceSet const &U0 = S.U[0], &U1 = S.U[1];
  double u = S.stats.alpha / 16;
  for(int64_t f = 0; f < G->fibre_count(); ++f)
  {
    bool any0 = false, any1 = false;
    double tail = 0;
    for(int k = G->nt - 1; k >= 0; --k)
    {
      bool in0 = U0.has(f, k, G->words), in1 = U1.has(f, k, G->words);
      any0 |= in0;
      any1 |= in1;
      EXPECT_FALSE(in1 && !in0);
      if(in0 && !in1)
        EXPECT_LE(tail, u + 1e-12);
      if(in0)
        tail += G->q.w[k];
    }
    EXPECT_EQ(any0, any1) << "fibre " << f;
  }
  // per fibre at most u plus one atom goes: (1/16 + 1/64) of 1/2
  EXPECT_GE(U1.mass, (1 - 1.0 / 8 - 1.0 / 32) * U0.mass * (1 - 1e-12));
}

TEST(Refinement, UsequenceAndTowerContracts)
{
  for(uint64_t seed : {100, 101})
  {
    Built b = build(2, seed);
    USequenceCheck uc = verify_U_sequence(b.S);
    EXPECT_TRUE(uc.ok());
    for(double r : uc.ratio)
      EXPECT_GE(r, 0.25);
    int d = 2;
    EXPECT_GE(b.S.U.back().mass, std::pow(0.25, d + 1) * b.S.U[0].mass);
    Tower T = refine_tower(b.initial, 1e-2);
    TowerReport R = check_tower(T);
    EXPECT_TRUE(R.ok()) << (R.failures.empty() ? "" : R.failures[0]);
    EXPECT_GT(R.tuples, 0);
    EXPECT_GE(R.minSeparation, 1e-3);
    for(int lvl = 1; lvl <= T.depth(); ++lvl)
      for(int i : T.alive(lvl))
        EXPECT_GE(T.coords(lvl, i).t(1), b.S.slabFloor);
  }
}

TEST(Refinement, RefineBinaryTrivialPredicates)
{
  Built b = build(2, 102);
  Tower all = refine_binary(b.initial, [](Tower const&, int, int) { return true; });
  Tower none = refine_binary(b.initial, [](Tower const&, int, int) { return false; });
  for(int lvl = 0; lvl <= b.initial.depth(); ++lvl)
  {
    EXPECT_EQ(all.alive(lvl).size(), b.initial.alive(lvl).size());
    EXPECT_EQ(none.alive(lvl).size(), b.initial.alive(lvl).size());
  }
  for(int k = 2; k <= b.initial.depth(); k += 2)
  {
    EXPECT_EQ(all.inA[k], 1);
    EXPECT_EQ(none.inA[k], 0);
  }
  EXPECT_DOUBLE_EQ(check_tower(all).minRetention, 1.0);
}

TEST(Refinement, PreRedRefinementHasDefiniteColours)
{
  Built b = build(2, 103);
  Tower T = refine_tower(b.initial, 1e-2);
  int D = T.depth();
  for(int k = 2; k <= D; k += 2)
    EXPECT_NE(T.pre[k], PreColour::none);
  TowerReport R = check_tower(T);
  EXPECT_TRUE(R.dichotomy);
  EXPECT_GE(R.minRetention, std::pow(2.0, -(D / 2)));
}

TEST(Refinement, FreezeWithoutBlueIndices)
{
  Built b = build(2, 100);
  Tower T = refine_tower(b.initial, 1e-2);
  SigmaChart c = chart_from_tower(T);
  if(c.n != 0)
    GTEST_SKIP() << "instance produced a pre-blue index";
  FrozenChart fc = freeze_variables(T, c, 200);
  EXPECT_EQ(fc.chart.sigma.size(), 0);
  EXPECT_TRUE(fc.roundTrip);
  EXPECT_TRUE(fc.wBoxOk);
  EXPECT_EQ(fc.omega.size(), fc.tuples.size());
  EXPECT_GT(fc.omega.size(), 1u);
  EXPECT_LE(fc.phiMaxRelErr, 1e-6);
}

TEST(Refinement, ChainShortCircuitsWhenAlphaAtMostBeta)
{
  Grid small = square_grid(1.0 / 16, -0.25, 0.25), big = square_grid(1.0 / 16, -3, 3);
  Dilations dil{1, 2, 4};
  WeakTypeReport R = weak_type_chain(moment_average(2), full_spatial(small), full_layered(big, dil));
  EXPECT_TRUE(R.shortCircuit);
  EXPECT_LE(R.stats.alpha, R.stats.beta);
}

TEST(Refinement, EmptyIncidence)
{
  Grid g = square_grid(1.0 / 16, -0.25, 0.25);
  Grid far = Grid::covering(Eigen::Vector2d(1.0 / 16, 1.0 / 16), Eigen::Vector2d(20, 20), Eigen::Vector2d(21, 21));
  Dilations dil{1, 2, 4};
  auto G = make_incidence_grid(moment_average(2), full_spatial(far), full_layered(g, dil), 32);
  EXPECT_THROW(build_U_sequence(G), EmptyIncidence);
  EXPECT_THROW(make_incidence_grid(moment_average(2), full_layered(g, dil), full_layered(g, dil), 32),
               ConsistencyError);
}

TEST(Refinement, ChainD2ReportsPositiveConstant)
{
  RefinementInstance I = refinement_instance(2, 104);
  WeakTypeReport R = weak_type_chain(I.A, I.E, I.F);
  ASSERT_FALSE(R.shortCircuit);
  EXPECT_TRUE(R.uOk);
  EXPECT_TRUE(R.towerOk);
  EXPECT_GT(R.cMeasured, 0);
  EXPECT_GT(R.minJacRatio, 0);
  EXPECT_LE(R.gMaxRelErr, 1e-4);
  EXPECT_LE(R.phiMaxRelErr, 1e-6);
  EXPECT_LE(R.maxErrorRatio, 0.5);
}
