#include <acl/curves.hpp>
#include <acl/errors.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace acl;

namespace
{

PolyCurve random_curve(std::mt19937_64& rng, int d, int n)
{
  std::uniform_int_distribution<int> num(-6, 6), den(1, 4);
  while(true)
  {
    std::vector<std::vector<mpq_class>> c(d, std::vector<mpq_class>(n + 1));
    for(auto& row : c)
      for(auto& v : row)
      {
        v = mpq_class(num(rng), den(rng));
        v.canonicalize();
      }
    c[d - 1][n] = 1;
    try
    {
      return PolyCurve(c);
    }
    catch(DegenerateCurve const&)
    {
    }
  }
}

}

TEST(Curves, EvalExamples)
{
  EXPECT_TRUE(eval(PolyCurve::moment(2), 1.0).isApprox(Eigen::Vector2d(1, 1)));
  EXPECT_TRUE(eval(PolyCurve::moment(3), 0.0, 2).isApprox(Eigen::Vector3d(0, 2, 0)));
  PolyCurve c({{0, 1, 0, 0}, {0, 0, 0, 1}});
  EXPECT_TRUE(eval(c, 2.0, 1).isApprox(Eigen::Vector2d(1, 12)));
  EXPECT_EQ(eval(c, 2.0, 4).norm(), 0.0);
  auto e = eval_exact(c, mpq_class(1, 2), 0);
  EXPECT_EQ(e[1], mpq_class(1, 8));
}

TEST(Curves, MomentTorsionIsProductOfFactorials)
{
  long f = 1, prod = 1;
  for(int d = 2; d <= 5; ++d)
  {
    f *= d;
    prod = 1;
    long g = 1;
    for(int j = 1; j <= d; ++j)
    {
      g *= j;
      prod *= g;
    }
    QPoly L = torsion_poly(PolyCurve::moment(d));
    EXPECT_EQ(L.degree(), 0);
    EXPECT_EQ(L.coeff(0), mpq_class(prod));
  }
  EXPECT_EQ(torsion(PolyCurve::moment(3), 0.7), 12.0);
}

TEST(Curves, TorsionOfCubicAndQuartic)
{
  PolyCurve c({{0, 1, 0, 0}, {0, 0, 0, 1}});
  EXPECT_EQ(torsion_poly(c), QPoly::monomial(1, 6));
  PolyCurve q({{0, 1, 0, 0, 0}, {0, 0, 0, 0, 1}});
  EXPECT_EQ(torsion_poly(q), QPoly::monomial(2, 12));
}

TEST(Curves, DegenerateCurveRejected)
{
  EXPECT_THROW(PolyCurve({{0, 1}, {0, 1}}), DegenerateCurve);
  EXPECT_THROW(PolyCurve({{0, 1, 0}, {0, 2, 0}}), DegenerateCurve);
}

TEST(Curves, WeightIntegralClosedForms)
{
  WeightedMeasure m0(2, 0);
  EXPECT_DOUBLE_EQ(weight_integral(m0, 0.25, 0.75), 0.5);
  WeightedMeasure m3(2, 3);
  EXPECT_EQ(m3.kappa(), mpq_class(1, 2));
  EXPECT_NEAR(weight_integral(m3, 0, 1), 0.5, 1e-15);
  EXPECT_NEAR(affine_arclength_weight(PolyCurve::moment(2), 0.3), std::cbrt(2.0), 1e-15);
  EXPECT_THROW(weight_integral(m0, -0.1, 1), DomainError);
}

TEST(Curves, KappaRange)
{
  for(int d = 2; d <= 5; ++d)
    for(int K = 0; K <= 6; ++K)
    {
      WeightedMeasure m(d, K);
      EXPECT_GT(m.kappa(), 0);
      EXPECT_LE(m.kappa(), 1);
      EXPECT_EQ(m.kappa() == 1, K == 0);
    }
}

TEST(Curves, WeightAdvanceInvertsIntegral)
{
  for(int K : {0, 1, 3})
  {
    WeightedMeasure m(3, K, 1.7);
    for(double t : {0.0, 0.1, 0.6})
      for(double mass : {1e-4, 0.05, 0.4})
      {
        double s = weight_advance(m, t, mass);
        EXPECT_NEAR(weight_integral(m, t, s), mass, 1e-12);
      }
  }
  EXPECT_DOUBLE_EQ(weight_advance(WeightedMeasure(2, 0), 0.25, 0.125), 0.375);
}

TEST(CurvesProperty, TorsionMatchesFiniteDifferences)
{
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-2, 2);
  for(int c = 0; c < 10; ++c)
  {
    PolyCurve P = random_curve(rng, 2 + c % 2, 3 + c % 3);
    for(int i = 0; i < 100; ++i)
    {
      double t = U(rng);
      double L = torsion(P, t), fd = torsion_fd(P, t);
      EXPECT_LE(std::abs(fd - L), 1e-9 * std::abs(L)) << "t = " << t;
    }
  }
}

TEST(CurvesProperty, TorsionAffineInvariance)
{
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> e(-3, 3);
  for(int c = 0; c < 10; ++c)
  {
    int d = 2 + c % 2;
    PolyCurve P = random_curve(rng, d, 4);
    std::vector<std::vector<mpq_class>> X(d, std::vector<mpq_class>(d));
    Eigen::MatrixXd Xd(d, d);
    do
    {
      for(int i = 0; i < d; ++i)
        for(int j = 0; j < d; ++j)
        {
          int v = e(rng);
          X[i][j] = v;
          Xd(i, j) = v;
        }
    } while(std::abs(Xd.determinant()) < 0.5);
    mpq_class det(long(std::lround(Xd.determinant())));
    EXPECT_EQ(torsion_poly(P.transformed(X)), torsion_poly(P) * det);
  }
}

TEST(CurvesProperty, WeightIntegralAdditive)
{
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0, 4);
  for(int i = 0; i < 200; ++i)
  {
    double v[3] = {U(rng), U(rng), U(rng)};
    std::sort(v, v + 3);
    WeightedMeasure m(2 + i % 3, i % 4, 1.3);
    double whole = weight_integral(m, v[0], v[2]);
    EXPECT_NEAR(weight_integral(m, v[0], v[1]) + weight_integral(m, v[1], v[2]), whole, 1e-13 * (1 + whole));
  }
}

TEST(Curves, JsonRoundTrip)
{
  PolyCurve c({{mpq_class(1, 3), 1, 0}, {0, mpq_class(-2, 5), 1}});
  PolyCurve back = curve_from_json(curve_to_json(c));
  for(int i = 0; i < 2; ++i)
    EXPECT_EQ(back.component(i), c.component(i));
  nlohmann::json j = {{"preset", "moment"}, {"dim", 4}};
  EXPECT_EQ(curve_from_json(j).dim(), 4);
  EXPECT_EQ(parse_rational("3/4"), mpq_class(3, 4));
}
