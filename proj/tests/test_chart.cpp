#include <acl/chart.hpp>
#include <acl/errors.hpp>
#include <acl/jacobian.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

using namespace acl;

namespace
{

std::vector<PreColour> uniform_pre(int d, PreColour p)
{
  std::vector<PreColour> v(d + 4, PreColour::none);
  for(int k = 2; k < int(v.size()); k += 2)
    v[k] = p;
  return v;
}

SigmaChart with_curve(SigmaChart c, PolyCurve const& P, int K)
{
  c.curve = std::make_shared<PolyCurve>(P);
  c.K = K;
  c.cprime = 2.0 * K / (c.d * (c.d + 1));
  c.x0 = Eigen::VectorXd::Zero(c.d);
  c.r0 = 1.3;
  return c;
}

// d = 3, index 2 pre-blue: Case(1,d) with one blue index, curve (t, t^2, t^4).
SigmaChart blue_chart(double sigma)
{
  std::vector<PreColour> pre = uniform_pre(3, PreColour::red);
  pre[2] = PreColour::blue;
  PolyCurve P(std::vector<std::vector<mpq_class>>{{0, 1, 0, 0, 0}, {0, 0, 1, 0, 0}, {0, 0, 0, 0, 1}});
  SigmaChart c = with_curve(select_case(3, pre), P, 1);
  c.sigma = Eigen::VectorXd::Constant(1, sigma);
  return c;
}

}

TEST(Chart, CaseSelectionExamples)
{
  SigmaChart a = select_case(3, uniform_pre(3, PreColour::red));
  EXPECT_EQ(a.tag, CaseTag::Case2d);
  EXPECT_EQ(a.N, 2);
  EXPECT_EQ(a.Z, 3);
  EXPECT_EQ(a.m, 1);
  EXPECT_EQ(a.n, 0);
  EXPECT_EQ(a.eta, 1);

  SigmaChart b = select_case(2, uniform_pre(2, PreColour::blue));
  EXPECT_EQ(b.tag, CaseTag::Case2d);
  EXPECT_EQ(b.N, 2);
  EXPECT_EQ(b.m, 0);
  EXPECT_EQ(b.n, 1);

  SigmaChart c = select_case(2, uniform_pre(2, PreColour::red));
  EXPECT_EQ(c.tag, CaseTag::Case2d1);
  EXPECT_EQ(c.Z, 3);
  EXPECT_EQ(c.rows(), 3);
  EXPECT_EQ(c.eta, 0);

  SigmaChart e = blue_chart(0.01);
  EXPECT_EQ(e.tag, CaseTag::Case1d);
  EXPECT_EQ(e.N, 3);
  EXPECT_EQ(e.n, 1);
  EXPECT_THROW(select_case(3, std::vector<PreColour>(2, PreColour::none)), ConsistencyError);
}

TEST(ChartProperty, CountingIdentitiesOverAllColourings)
{
  for(int d = 2; d <= 6; ++d)
  {
    std::vector<int> even;
    for(int k = 2; k <= d + 2; k += 2)
      even.push_back(k);
    for(int mask = 0; mask < (1 << even.size()); ++mask)
    {
      std::vector<PreColour> pre(d + 4, PreColour::none);
      for(size_t i = 0; i < even.size(); ++i)
        pre[even[i]] = (mask >> i & 1) ? PreColour::red : PreColour::blue;
      SigmaChart c;
      ASSERT_NO_THROW(c = select_case(d, pre)) << "d = " << d << " mask = " << mask;
      EXPECT_TRUE(c.Z == d || c.Z == d + 1);
      int Z = 1;
      for(int N = 2; N < c.N; ++N)
      {
        Z += (N % 2 == 0 && pre[N] == PreColour::red) ? 2 : 1;
        EXPECT_TRUE(Z != d && Z != d + 1) << "N not minimal";
      }
      switch(c.tag)
      {
      case CaseTag::Case1d:
        EXPECT_EQ(c.N, 2 * c.m + 2 * c.n + 1);
        EXPECT_EQ(d, 3 * c.m + 2 * c.n + 1);
        break;
      case CaseTag::Case2d1:
        EXPECT_EQ(c.N, 2 * c.m + 2 * c.n);
        EXPECT_EQ(d, 3 * c.m + 2 * c.n - 1);
        break;
      case CaseTag::Case2d:
        EXPECT_EQ(c.N, 2 * c.m + 2 * c.n);
        EXPECT_EQ(d, 3 * c.m + 2 * c.n);
        break;
      }
      EXPECT_EQ(c.M, c.N - c.n);
      EXPECT_EQ(c.eta == 1, c.tag == CaseTag::Case2d);
      EXPECT_EQ(c.variables(), c.rows());
    }
  }
}

TEST(Chart, RoundTripAndPhiJacobian)
{
  SigmaChart c = blue_chart(0.0);
  TowerCoords tc;
  tc.r = Eigen::Vector2d(c.r0, 1.7);
  tc.t = Eigen::Vector4d(0, 0.4, 0.43, 0.8);
  Eigen::VectorXd s;
  Eigen::VectorXd z = chart_forward(c, tc, &s);
  c.sigma = s;
  EXPECT_NEAR(s(0), 0.03 * std::pow(0.4, 1.0 / 6), 1e-15);
  TowerCoords back = chart_inverse(c, z);
  EXPECT_NEAR((back.t - tc.t).norm(), 0, 1e-15);
  EXPECT_EQ((back.r - tc.r).norm(), 0);
  PhiJacobianCheck pj = phi_jacobian_check(c, tc);
  EXPECT_NEAR(pj.closed, std::pow(0.4, 1.0 / 6), 1e-15);
  EXPECT_LE(pj.relErr, 1e-6);
}

TEST(Chart, GSigmaAgreesWithFiniteDifferences)
{
  SigmaChart c = blue_chart(0.02);
  for(double t1 : {0.3, 0.5})
    for(double t3 : {0.7, 0.95})
    {
      Eigen::Vector3d z(1.6, t1, t3);
      JacobianChartEval ev = assemble_G_sigma(c, z);
      EXPECT_LE(ev.relErr, 1e-4);
      EXPECT_EQ(ev.matrix.rows(), 3);
    }
}

TEST(Chart, ModelCaseMatchesClosedForm)
{
  SigmaChart c = with_curve(select_case(3, uniform_pre(3, PreColour::red)), PolyCurve::moment(3), 0);
  c.t0 = 0.2;
  for(auto [r1, t2, t3] : {std::tuple{1.5, 0.4, 0.9}, {1.1, 0.35, 0.5}, {1.9, 0.8, 0.3}})
  {
    JacobianChartEval ev = assemble_G_sigma(c, Eigen::Vector3d(r1, t2, t3));
    double mv = model_jacobian_d3(r1, t2, t3).value;
    EXPECT_NEAR(std::abs(ev.detValue), mv, 1e-12 * mv);
  }
  JacobianChartEval rep = assemble_G_sigma(c, Eigen::Vector3d(1.5, 0.6, 0.6));
  EXPECT_NEAR(rep.detValue, 0, 1e-15);
  auto [a, b] = weak_type_exponents(c);
  EXPECT_EQ(a, 6);
  EXPECT_EQ(b, 1);
}

TEST(Chart, Case2d1RowExpansion)
{
  SigmaChart c = with_curve(select_case(2, uniform_pre(2, PreColour::red)), PolyCurve::moment(2), 0);
  Eigen::Vector3d z(1.4, 0.3, 0.7);
  JacobianChartEval ev = assemble_G_sigma(c, z);
  Eigen::MatrixXd const& J = ev.matrix;
  ASSERT_EQ(J.rows(), 3);
  int col = c.R - 1;
  for(int v = 0; v < J.cols(); ++v)
    EXPECT_EQ(J(2, v), v == col ? 1.0 : 0.0);
  Eigen::MatrixXd minor(2, 2);
  int w = 0;
  for(int v = 0; v < 3; ++v)
    if(v != col)
      minor.col(w++) = J.col(v).head(2);
  double sign = ((2 + col) % 2) ? -1.0 : 1.0;
  EXPECT_NEAR(ev.detValue, sign * minor.determinant(), 1e-14);
  EXPECT_NEAR(assemble_G_sigma(c, Eigen::Vector3d(1.4, 0.5, 0.5)).detValue, 0, 1e-15);
}

TEST(Chart, ErrorSplit)
{
  SigmaChart red = with_curve(select_case(3, uniform_pre(3, PreColour::red)), PolyCurve::moment(3), 0);
  red.t0 = 0.2;
  Eigen::Vector3d z(1.5, 0.4, 0.9);
  ErrorSplit e = error_split(red, z, Eigen::VectorXd::Constant(1, 0.6));
  EXPECT_EQ(e.error, 0.0);
  EXPECT_EQ(e.wp, e.main);

  double prev = 0;
  for(double sigma : {0.004, 0.002, 0.001, 0.0005})
  {
    SigmaChart c = blue_chart(sigma);
    ErrorSplit s = error_split(c, Eigen::Vector3d(1.6, 0.3, 0.8), Eigen::VectorXd::Constant(1, 0.55));
    double ratio = std::abs(s.error / s.main);
    if(prev > 0)
      EXPECT_NEAR(prev / ratio, 2.0, 0.1);
    prev = ratio;
  }
}

TEST(Chart, TruncationAndJaclem)
{
  Interval iv = truncate_interval(0, 1, 0.25);
  EXPECT_DOUBLE_EQ(iv.lo, 0.25);
  EXPECT_DOUBLE_EQ(iv.hi, 0.75);
  EXPECT_THROW(truncate_interval(0, 1, 0.5), DomainError);
  EXPECT_THROW(truncate_interval(0.3, 0.3, 0.1), DegenerateTruncation);

  SigmaChart c = with_curve(select_case(3, uniform_pre(3, PreColour::red)), PolyCurve::moment(3), 0);
  c.t0 = 0.1;
  Eigen::Vector3d z(1.2, 0.4, 0.8);
  double alpha = 0.5, beta = 0.1;
  // K = 0: rhs = alpha^{6 - M} (beta / alpha)^{(m + n - eta) / 2}
  double J = std::abs(assemble_G_sigma(c, z).detValue);
  EXPECT_NEAR(jaclem1_check(c, z, alpha, beta), J / std::pow(alpha, 4), 1e-12 * J);
  TruncatedDomain D = truncate_domain(c, z, 1.0 / 12, alpha);
  ASSERT_EQ(D.box.size(), 1u);
  EXPECT_NEAR(D.box[0].lo, 0.4 + 0.4 / 12, 1e-15);
  EXPECT_GT(D.separation, 0);
}
