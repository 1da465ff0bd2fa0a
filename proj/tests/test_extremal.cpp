#include <acl/extremal.hpp>
#include <acl/errors.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace acl;

TEST(Extremal, ConstantsAndLinear)
{
  EXPECT_EQ(CM(0), 1.0);
  CMResult r = compute_CM(1);
  EXPECT_NEAR(r.value, 1 + std::sqrt(2.0), 1e-3);
  EXPECT_LE(r.value, r.upper * (1 + 1e-12));
  EXPECT_LE(r.upper, r.value * 1.01);
}

TEST(Extremal, MonotoneInDegree)
{
  double prev = CM(0);
  for(int M = 1; M <= 6; ++M)
  {
    EXPECT_GE(CM(M), prev * (1 - 1e-9)) << "M = " << M;
    prev = CM(M);
  }
  EXPECT_THROW(compute_CM(13), DomainError);
}

TEST(Extremal, CertificatesBracket)
{
  for(int M = 2; M <= 5; ++M)
  {
    CMResult r = compute_CM(M);
    EXPECT_LE(r.upper, r.value * 1.01);
    EXPECT_GE(r.upper, r.value * (1 - 1e-9));
  }
}

TEST(Extremal, TruncationEqualityForConstants)
{
  for(double eps : {0.01, 0.05, 1.0 / 12})
  {
    TruncationCheck c = truncation_check({1.0}, eps);
    EXPECT_NEAR(c.lhs, 2 * eps, 1e-12);
    EXPECT_NEAR(c.rhs, 2 * eps, 1e-12);
    EXPECT_TRUE(c.ok);
  }
  TruncationCheck z = truncation_check({-0.5, 1.0}, 0.0);
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_TRUE(z.ok);
  EXPECT_TRUE(truncation_check({-0.5, 1.0}, 0.1).ok);
  EXPECT_NEAR(truncation_check({-0.5, 1.0}, 0.1).lhs, 2 * (0.5 * 0.5 - 0.4 * 0.4) / 2, 1e-14);
  EXPECT_THROW(truncation_check({1.0}, 0.5), DomainError);
}

TEST(Extremal, DeriveC0)
{
  EXPECT_NEAR(derive_c0(0, 1), 1.0 / 12, 1e-15);
  for(int K = 1; K <= 2; ++K)
    for(int M = 0; M <= 6; ++M)
    {
      double c0 = derive_c0(M, K);
      EXPECT_GT(c0, 0);
      EXPECT_LT(c0, 0.25);
      EXPECT_LT(C_MK(M, K, c0), 0.5);
      EXPECT_LE(derive_c0(M + 1, K), c0 * (1 + 1e-9));
    }
  EXPECT_NEAR(C_MK(3, 2, 1e-9), 0, 1e-7);
}

TEST(ExtremalProperty, TruncationOnRandomPolynomials)
{
  std::mt19937_64 rng(101);
  std::normal_distribution<double> N(0, 1);
  for(int M = 0; M <= 6; ++M)
  {
    double e1 = derive_c0(M, 1), e2 = derive_c0(M, 2);
    for(int i = 0; i < 200; ++i)
    {
      std::vector<double> p(M + 1), q(M + 1);
      for(int k = 0; k <= M; ++k)
      {
        p[k] = N(rng);
        q[k] = N(rng);
      }
      TruncationCheck a = truncation_check(p, e1);
      EXPECT_TRUE(a.ok) << a.lhs << " > " << a.rhs;
      TruncationCheck b = truncation_check_separable({p, q}, e2);
      EXPECT_TRUE(b.ok) << b.lhs << " > " << b.rhs;
    }
  }
}

TEST(ExtremalProperty, SupBoundedByL1)
{
  std::mt19937_64 rng(103);
  std::normal_distribution<double> N(0, 1);
  for(int M = 0; M <= 5; ++M)
    for(int i = 0; i < 300; ++i)
    {
      LegendrePoly p{Eigen::VectorXd(M + 1)};
      for(int k = 0; k <= M; ++k)
        p.a(k) = N(rng);
      double sup = 0;
      for(int j = 0; j <= 2000; ++j)
        sup = std::max(sup, std::abs(p(j / 2000.0)));
      EXPECT_LE(sup, CM(M) * l1_norm(p) * (1 + 1e-6));
    }
}

TEST(Extremal, LegendrePrimitive)
{
  LegendrePoly p{Eigen::Vector3d(0.3, -1.1, 0.7)};
  int n = 20000;
  double acc = 0;
  for(int i = 0; i < n; ++i)
    acc += p((i + 0.5) / n) / n;
  EXPECT_NEAR(p.primitive(1.0), acc, 1e-8);
  EXPECT_NEAR(p.primitive(1.0), 0.3, 1e-14);
}
