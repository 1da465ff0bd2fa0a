#include <acl/operator.hpp>
#include <acl/errors.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace acl;

namespace
{

Averaging moment_average(int d, int Q = 256)
{
  Averaging A{PolyCurve::moment(d), WeightedMeasure(d, 0), 0.0, 1.0, Q};
  return A;
}

Grid square_grid(double h, double lo, double hi, int d = 2)
{
  return Grid::covering(Eigen::VectorXd::Constant(d, h), Eigen::VectorXd::Constant(d, lo),
                        Eigen::VectorXd::Constant(d, hi));
}

VoxelSet box_set(Grid const& g, Eigen::VectorXd const& half)
{
  VoxelSet s = empty_spatial_set(g);
  for(int64_t i = 0; i < g.size(); ++i)
    s.v[i] = (g.node(g.index(i)).cwiseAbs().array() <= half.array() * (1 + 1e-12)).all();
  return s;
}

VoxelSet random_set(Grid const& g, std::mt19937_64& rng, double p)
{
  std::bernoulli_distribution B(p);
  VoxelSet s = empty_spatial_set(g);
  for(auto& v : s.v)
    v = B(rng);
  return s;
}

VoxelSet random_layered(Grid const& g, Dilations const& dil, std::mt19937_64& rng, double p)
{
  std::bernoulli_distribution B(p);
  VoxelSet s = empty_layered_set(g, dil);
  for(auto& v : s.v)
    v = B(rng);
  return s;
}

}

TEST(Operator, ConstantFunctionAveragesToWeightIntegral)
{
  Averaging A = moment_average(2);
  Grid big = square_grid(1.0 / 32, -3, 3);
  VoxelSet one = empty_spatial_set(big);
  std::fill(one.v.begin(), one.v.end(), 1);
  Grid out = square_grid(1.0 / 32, -0.5, 0.5);
  GriddedFunction Af = apply(A, one, out, Dilations{1, 2, 8});
  for(double v : Af.v)
    EXPECT_NEAR(v, 1.0, 1e-12);
  Averaging B{PolyCurve::moment(2), WeightedMeasure(2, 3), 0.0, 1.0, 512};
  GriddedFunction Bf = apply(B, one, out, Dilations{1, 2, 4});
  EXPECT_NEAR(Bf.v[0], weight_integral(B.measure, 0, 1), 1e-5);
}

TEST(Operator, BoxAverageLowerBound)
{
  Averaging A = moment_average(2, 4096);
  for(double delta : {0.25, 0.125})
  {
    double h = delta * delta / 16;
    Eigen::Vector2d half(delta, delta * delta);
    Grid g = Grid::covering(Eigen::Vector2d(h, h), -half, half);
    VoxelSet R = box_set(g, half);
    GriddedFunction AR = apply(A, R, g, Dilations{1, 2, 8});
    double worst = INFINITY;
    for(int k = 0; k < 8; ++k)
      for(int64_t i = 0; i < g.size(); ++i)
      {
        Eigen::VectorXd x = g.node(g.index(i));
        if((x.cwiseAbs().array() <= 0.5 * half.array()).all())
          worst = std::min(worst, AR.layer(k)[i]);
      }
    EXPECT_GE(worst, delta / 4 - 2.0 / A.Q) << "delta = " << delta;
  }
}

TEST(Operator, DualityIdentity)
{
  std::mt19937_64 rng(3);
  Averaging A = moment_average(2, 64);
  Grid g = square_grid(1.0 / 16, -2, 2);
  Dilations dil{1, 2, 6};
  for(int i = 0; i < 5; ++i)
  {
    VoxelSet E = random_set(g, rng, 0.3), F = random_layered(g, dil, rng, 0.3);
    double a = bilinear(A, E, F).value, b = bilinear_dual(A, E, F);
    EXPECT_LE(std::abs(a - b), 1e-9 * a);
  }
  VoxelSet zero = empty_layered_set(g, dil);
  GriddedFunction z = adjoint_apply(A, zero, g);
  for(double v : z.v)
    EXPECT_EQ(v, 0.0);
}

TEST(Operator, BilinearFullSetsAndEmptyIncidence)
{
  Averaging A = moment_average(2, 128);
  Grid big = square_grid(1.0 / 16, -3, 3);
  VoxelSet E = empty_spatial_set(big);
  std::fill(E.v.begin(), E.v.end(), 1);
  Grid small = square_grid(1.0 / 16, -0.5, 0.5);
  Dilations dil{1, 2, 4};
  VoxelSet F = empty_layered_set(small, dil);
  std::fill(F.v.begin(), F.v.end(), 1);
  BilinearStats s = bilinear(A, E, F);
  EXPECT_NEAR(s.alpha, 1.0, 1e-12);
  EXPECT_NEAR(s.beta, s.value / E.measure(), 1e-15);

  Grid far = Grid::covering(Eigen::Vector2d(1.0 / 16, 1.0 / 16), Eigen::Vector2d(20, 20), Eigen::Vector2d(21, 21));
  VoxelSet Ef = empty_spatial_set(far);
  std::fill(Ef.v.begin(), Ef.v.end(), 1);
  EXPECT_THROW(bilinear(A, Ef, F), EmptyIncidence);
}

TEST(Operator, MonotoneInTheSet)
{
  std::mt19937_64 rng(9);
  Averaging A = moment_average(2, 64);
  Grid g = square_grid(1.0 / 16, -2, 2);
  VoxelSet E = random_set(g, rng, 0.2), E2 = E;
  std::bernoulli_distribution B(0.3);
  for(auto& v : E2.v)
    v = v || B(rng);
  Dilations dil{1, 2, 4};
  GriddedFunction a = apply(A, E, g, dil), b = apply(A, E2, g, dil);
  for(size_t i = 0; i < a.v.size(); ++i)
    EXPECT_LE(a.v[i], b.v[i] + 1e-15);
}

TEST(Operator, QuadratureDoublingConverges)
{
  Grid g = square_grid(1.0 / 64, -2.5, 2.5);
  Eigen::Vector2d half(0.4, 0.3);
  VoxelSet E = box_set(g, half);
  Dilations dil{1, 2, 8};
  VoxelSet F = empty_layered_set(g, dil);
  for(int k = 0; k < 8; ++k)
    for(int64_t i = 0; i < g.size(); ++i)
      F.layer(k)[i] = g.node(g.index(i)).norm() < 1.2;
  double prev = bilinear(moment_average(2, 256), E, F).value;
  double next = bilinear(moment_average(2, 512), E, F).value;
  EXPECT_LT(std::abs(next - prev), 0.01 * next);
}

TEST(Operator, BoxFamilyMeasure)
{
  FamilyOptions opt{384, 16, 64};
  FamilyPair fp = extremizer_family(Family::boxR, 0.25, moment_average(2), opt);
  EXPECT_DOUBLE_EQ(fp.predictedE, 1.0 / 16);
  Eigen::VectorXd h = fp.E.grid.h;
  double layer = 2 * 0.25 * h(1) + 2 * 0.0625 * h(0) + h.prod();
  EXPECT_NEAR(fp.E.measure(), 1.0 / 16, 2 * layer);
  EXPECT_GT(fp.stats.alpha, 0.25 / 8);
  EXPECT_THROW(extremizer_family(Family::boxR, 0.05, moment_average(2), FamilyOptions{64, 8, 16}),
               ResolutionError);
}

TEST(Operator, TrapeziumVertices)
{
  TrapeziumSpec T2 = trapezium(2);
  EXPECT_NEAR(T2.vertices[2](0), 0.5, 1e-15);
  EXPECT_NEAR(T2.vertices[2](1), 1.0 / 6, 1e-15);
  EXPECT_NEAR(T2.vertices[3](0), 2.0 / 3, 1e-15);
  EXPECT_NEAR(T2.vertices[3](1), 1.0 / 3, 1e-15);
  for(int d = 2; d <= 5; ++d)
  {
    TrapeziumSpec T = trapezium(d);
    for(int v : {2, 3})
    {
      EXPECT_NEAR(T.vertices[v](1), T.vertices[v](0) - 2.0 / (d * (d + 1)), 1e-15);
      EXPECT_TRUE(trapezium_contains(T, T.vertices[v]));
    }
    EXPECT_TRUE(trapezium_contains(T, Eigen::Vector2d(0.5, 0.5)));
    EXPECT_FALSE(trapezium_contains(T, Eigen::Vector2d(0.2, 0.8)));
    EXPECT_FALSE(trapezium_contains(T, Eigen::Vector2d(0.9, 0.1)));
  }
  TrapeziumSpec T3 = trapezium(3);
  EXPECT_NEAR(T3.vertices[2](0), 1.0 / 3, 1e-15);
  EXPECT_NEAR(T3.vertices[3](1), 0.5, 1e-15);
  EXPECT_NEAR(trapezium_distance(T2, Eigen::Vector2d(0.5, 0.7)), 0.2 / std::sqrt(2.0), 1e-12);
  EXPECT_EQ(trapezium_depth(T2, Eigen::Vector2d(0.5, 0.7)), 0.0);
}

TEST(Operator, LogLogSlope)
{
  std::vector<double> x{0.5, 0.25, 0.125}, y;
  for(double v : x)
    y.push_back(3 * std::pow(v, 2.5));
  EXPECT_NEAR(loglog_slope(x, y), 2.5, 1e-12);
}

TEST(Operator, RieszVerdicts)
{
  FamilyOptions opt{384, 16, 64};
  std::vector<double> deltas{0.25, 0.25 / 1.5, 0.125, 0.0625};
  Averaging A = moment_average(2);
  std::vector<FamilyPair> pairs;
  for(double dl : deltas)
    pairs.push_back(extremizer_family(Family::boxR, dl, A, opt));
  EXPECT_EQ(riesz_ratios(pairs, 0.5, 0.5).verdict, "bounded");
  EXPECT_EQ(riesz_ratios(pairs, 0.5, 1.0 / 6).verdict, "bounded");
  RieszReport out = riesz_ratios(pairs, 0.5, 1.0 / 6 - 0.1);
  EXPECT_EQ(out.verdict, "divergent");
  EXPECT_LT(out.slope, -0.05);
  EXPECT_THROW(riesz_scan(A, Family::boxR, {0.25, 0.2, 0.15, 0.1}, 2, 2, opt), DomainError);
}
