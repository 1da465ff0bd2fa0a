#include <acl/jacobian.hpp>
#include <acl/errors.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace acl;

namespace
{

Eigen::VectorXd sorted_tuple(std::mt19937_64& rng, int d, double lo = 0, double hi = 1)
{
  std::uniform_real_distribution<double> U(lo, hi);
  Eigen::VectorXd t(d);
  for(int i = 0; i < d; ++i)
    t(i) = U(rng);
  std::sort(t.data(), t.data() + d);
  return t;
}

BiPoly bipoly(std::initializer_list<std::initializer_list<double>> rows)
{
  BiPoly p;
  p.c = Eigen::MatrixXd::Zero(int(rows.size()), int(rows.begin()->size()));
  int i = 0;
  for(auto const& r : rows)
  {
    int j = 0;
    for(double v : r)
      p.c(i, j++) = v;
    ++i;
  }
  return p;
}

}

TEST(Jacobian, MomentJpAndVandermonde)
{
  EXPECT_DOUBLE_EQ(jp(PolyCurve::moment(2), Eigen::Vector2d(0, 1)), 2.0);
  EXPECT_DOUBLE_EQ(vandermonde(Eigen::Vector3d(0, 1, 2)), 2.0);
  EXPECT_EQ(vandermonde(Eigen::Vector3d(0.4, 1, 0.4)), 0.0);
  EXPECT_NEAR(jp(PolyCurve::moment(3), Eigen::Vector3d(0.1, 0.1, 0.8)), 0.0, 1e-15);
}

TEST(Jacobian, ModelJacobianD3)
{
  EXPECT_NEAR(model_jacobian_d3(1, 0, 1).value, 1.0, 1e-15);
  EXPECT_NEAR(model_jacobian_d3(2, 0, 1).value, 4.0, 1e-15);
  EXPECT_EQ(model_jacobian_d3(1.5, 0.3, 0.3).value, 0.0);
  // 6 |int_{t1}^{t2} (t2 - t1)(x - t1)(x - t2) dx| by Simpson, exact for cubics
  for(auto [r, a, b] : {std::tuple{1.0, 0.2, 0.9}, {1.7, -0.5, 0.1}, {1.2, 0.6, 0.15}})
  {
    auto V = [&](double x) { return (b - a) * (x - a) * (x - b); };
    double simpson = (b - a) / 6 * (V(a) + 4 * V(0.5 * (a + b)) + V(b));
    auto m = model_jacobian_d3(r, a, b);
    EXPECT_NEAR(m.value, 6 * r * r * std::abs(simpson), 1e-13);
    EXPECT_LE(m.lowerBound, m.value);
  }
}

TEST(Jacobian, StovallBoundMomentD2)
{
  PolyCurve h = PolyCurve::moment(2);
  Eigen::Vector2d t(0.3, 0.7);
  StovallCheck c = stovall_check(h, t, {0});
  // J_h = 2 (t2 - t1)
  EXPECT_NEAR(c.fd, 2.0, 1e-8);
  EXPECT_NEAR(c.bound, 0.8 * (2 / 0.3 + 1 / 0.4), 1e-12);
  EXPECT_LE(c.ratio, 1.0);
  StovallCheck both = stovall_check(h, t, {0, 1});
  EXPECT_NEAR(both.fd, 0.0, 1e-6);
  EXPECT_GT(both.bound, 0);
}

TEST(JacobianProperty, StovallBoundOnRandomTuples)
{
  std::mt19937_64 rng(5);
  PolyCurve c(std::vector<std::vector<mpq_class>>{{0, 1, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}});
  PolyCurve q(std::vector<std::vector<mpq_class>>{{0, 1, 0, 0}, {0, 0, 0, 1}});
  for(int i = 0; i < 200; ++i)
  {
    Eigen::VectorXd t = sorted_tuple(rng, 2, 0.05, 1);
    if(t(1) - t(0) < 1e-3)
      continue;
    for(std::vector<int> S : {std::vector<int>{0}, {1}, {0, 1}})
      EXPECT_NO_THROW(stovall_check(q, t, S));
    Eigen::VectorXd u = sorted_tuple(rng, 3, 0.05, 1);
    if((u(1) - u(0)) * (u(2) - u(1)) < 1e-4)
      continue;
    for(std::vector<int> S : {std::vector<int>{0}, {2}, {0, 1, 2}})
      EXPECT_NO_THROW(stovall_check(c, u, S));
  }
}

TEST(JacobianProperty, MomentJpOverVandermondeConstant)
{
  std::mt19937_64 rng(13);
  for(int d = 2; d <= 4; ++d)
  {
    PolyCurve h = PolyCurve::moment(d);
    double lo = INFINITY, hi = -INFINITY;
    for(int i = 0; i < 1000; ++i)
    {
      Eigen::VectorXd t = sorted_tuple(rng, d, -2, 2);
      if(std::abs(vandermonde(t)) < 1e-6)
        continue;
      double r = jp(h, t) / vandermonde(t);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    EXPECT_LT((hi - lo) / std::abs(hi), 1e-9) << "d = " << d;
  }
}

TEST(JacobianProperty, Antisymmetry)
{
  std::mt19937_64 rng(19);
  PolyCurve P(std::vector<std::vector<mpq_class>>{{1, 1, 0, 2, 0}, {0, 0, 3, 0, 0}, {0, -1, 0, 0, 1}});
  for(int i = 0; i < 100; ++i)
  {
    Eigen::VectorXd t = sorted_tuple(rng, 3, -1, 1);
    Eigen::VectorXd s = t;
    std::swap(s(0), s(2));
    EXPECT_NEAR(jp(P, s), -jp(P, t), 1e-12 * (1 + std::abs(jp(P, t))));
    EXPECT_NEAR(vandermonde(s), -vandermonde(t), 1e-15);
    EXPECT_NEAR(jp(P, s) / vandermonde(s), jp(P, t) / vandermonde(t), 1e-9 * std::abs(jp(P, t) / vandermonde(t)));
  }
}

TEST(JacobianProperty, SignConstantOnOrderedTuples)
{
  std::mt19937_64 rng(31);
  PolyCurve q(std::vector<std::vector<mpq_class>>{{0, 1, 0, 0}, {0, 0, 0, 1}});
  for(int i = 0; i < 500; ++i)
  {
    Eigen::VectorXd t = sorted_tuple(rng, 2, 0.01, 1);
    if(t(1) - t(0) < 1e-6)
      continue;
    EXPECT_GT(jp(q, t), 0);
  }
}

TEST(Multiplicity, Bezout)
{
  EXPECT_EQ(bezout_bound({2, 2}), 4);
  EXPECT_EQ(bezout_bound({3, 1, 2}), 6);
}

TEST(Multiplicity, IdentityAndSquares)
{
  BiPoly x = bipoly({{0, 0}, {1, 0}}), y = bipoly({{0, 1}, {0, 0}});
  EXPECT_EQ(count_preimages_2d(x, y, Eigen::Vector2d(0.3, -1.2)), 1);
  BiPoly x2 = bipoly({{0, 0}, {0, 0}, {1, 0}}), y2 = bipoly({{0, 0, 1}});
  EXPECT_EQ(count_preimages_2d(x2, y2, Eigen::Vector2d(1, 1)), 4);
  EXPECT_EQ(count_preimages_2d(x2, y2, Eigen::Vector2d(-1, 1)), 0);
  EXPECT_THROW(count_preimages_2d(x2, y2, Eigen::Vector2d(0, 0)), NonGenericTarget);
}

TEST(MultiplicityProperty, RandomQuadraticMapsRespectBezout)
{
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> U(-1, 1);
  for(int m = 0; m < 10; ++m)
  {
    BiPoly f, g;
    f.c = g.c = Eigen::MatrixXd::Zero(3, 3);
    for(int i = 0; i < 3; ++i)
      for(int j = 0; i + j <= 2; ++j)
      {
        f.c(i, j) = U(rng);
        g.c(i, j) = U(rng);
      }
    for(int k = 0; k < 20; ++k)
    {
      Eigen::Vector2d target(U(rng), U(rng));
      try
      {
        EXPECT_LE(count_preimages_2d(f, g, target, 24, 6.0), 4);
      }
      catch(NonGenericTarget const&)
      {
      }
    }
  }
}
