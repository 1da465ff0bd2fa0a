#pragma once

#include <Eigen/Dense>

#include <vector>

namespace acl
{

// Polynomial on [0, 1] in the orthonormal shifted Legendre basis.
struct LegendrePoly
{
  Eigen::VectorXd a;

  int degree() const { return int(a.size()) - 1; }
  double operator()(double x) const;
  // antiderivative vanishing at 0
  double primitive(double x) const;
};

// Values of the orthonormal shifted Legendre basis at x, degrees 0..M.
Eigen::VectorXd legendre_basis(int M, double x);

// Exact integral of |p| over [a, b] between sign changes located by bisection.
double l1_norm(LegendrePoly const& p, double a = 0.0, double b = 1.0);

struct CMResult
{
  double value;   // lower certificate
  double upper;   // dual certificate
  double argmax;  // evaluation point of the extremiser
  LegendrePoly extremiser;
};

// sup ||p||_inf / ||p||_1 over degree <= M on (0, 1). Throws ExtremalUncertain
// when the certificates differ by more than 1%.
CMResult compute_CM(int M, int gridSize = 2000, int restarts = 16);
// Cached compute_CM(M).value.
double CM(int M);

double C_M1(int M, double eps);
double C_MK(int M, int K, double eps);
double derive_c0(int M, int K);

struct TruncationCheck
{
  double lhs, rhs;
  bool ok;
};

// Univariate, monomial coefficients.
TruncationCheck truncation_check(std::vector<double> const& p, double eps);
// Separable product of univariate factors, one per coordinate.
TruncationCheck truncation_check_separable(std::vector<std::vector<double>> const& factors, double eps);
// Dense bivariate, c(i, j) multiplies x^i y^j.
TruncationCheck truncation_check_bivariate(Eigen::MatrixXd const& c, double eps);

struct TruncationTable
{
  int maxDegree;
  std::vector<double> cM;
  std::vector<std::vector<double>> c0;   // [M][K-1]
};

TruncationTable truncation_table(int maxDegree, int maxK = 2);

}
