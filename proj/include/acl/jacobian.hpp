#pragma once

#include <acl/curves.hpp>

#include <Eigen/Dense>

#include <vector>

namespace acl
{

template <typename Derived>
double vandermonde(Eigen::MatrixBase<Derived> const& t)
{
  double v = 1.0;
  for(Eigen::Index i = 0; i < t.size(); ++i)
    for(Eigen::Index j = i + 1; j < t.size(); ++j)
      v *= t(j) - t(i);
  return v;
}

// det(P'(t_1) ... P'(t_d))
double jp(PolyCurve const& curve, Eigen::Ref<const Eigen::VectorXd> const& t);

struct ModelJacobian
{
  double value;
  double lowerBound;   // 6 r1^2 h (3h/4)(7h^2/64) from removing h/8 neighbourhoods
};

// 6 r1^2 |int_{t1}^{t2} V(t1, t2, x) dx| = r1^2 |t2 - t1|^4
ModelJacobian model_jacobian_d3(double r1, double t1, double t2);

// Right-hand side of the derivative estimate for prod_{j in S} d/dt_j J_P.
// S holds zero-based indices.
double stovall_derivative_bound(PolyCurve const& curve, Eigen::Ref<const Eigen::VectorXd> const& t,
                                std::vector<int> const& S);

// Mixed partial by central differences (step h) applied column by column.
double jp_mixed_partial_fd(PolyCurve const& curve, Eigen::Ref<const Eigen::VectorXd> const& t,
                           std::vector<int> const& S, double h = 1e-5);

struct StovallCheck
{
  double bound, fd, ratio;
};

// Throws DerivativeBoundViolation if fd > bound (1 + 1e-6).
StovallCheck stovall_check(PolyCurve const& curve, Eigen::Ref<const Eigen::VectorXd> const& t,
                           std::vector<int> const& S);

// Bivariate polynomial, c(i, j) multiplies x^i y^j.
struct BiPoly
{
  Eigen::MatrixXd c;
  double operator()(double x, double y) const;
  double dx(double x, double y) const;
  double dy(double x, double y) const;
  int degree() const;
};

long bezout_bound(std::vector<int> const& degrees);

// Real solutions of (f, g) = target inside [-radius, radius]^2, seeded from a
// grid x grid lattice. Throws NonGenericTarget if the Jacobian is below 1e-9
// at a root.
int count_preimages_2d(BiPoly const& f, BiPoly const& g, Eigen::Vector2d const& target,
                       int grid = 40, double radius = 4.0);

}
