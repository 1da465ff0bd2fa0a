#include <acl/jacobian.hpp>
#include <acl/errors.hpp>

#include <cmath>
#include <sstream>

namespace acl
{

double jp(PolyCurve const& curve, Eigen::Ref<const Eigen::VectorXd> const& t)
{
  int d = curve.dim();
  Eigen::MatrixXd M(d, d);
  for(int j = 0; j < d; ++j)
    M.col(j) = eval(curve, t(j), 1);
  return M.determinant();
}

ModelJacobian model_jacobian_d3(double r1, double t1, double t2)
{
  double h = std::abs(t2 - t1);
  double value = r1 * r1 * h * h * h * h;
  double lower = 6.0 * r1 * r1 * h * (0.75 * h) * (7.0 * h * h / 64.0);
  return {value, lower};
}

double stovall_derivative_bound(PolyCurve const& curve, Eigen::Ref<const Eigen::VectorXd> const& t,
                                std::vector<int> const& S)
{
  int d = curve.dim();
  int s = int(S.size());
  double J = std::abs(jp(curve, t));
  double total = 0;
  for(int T = 0; T < (1 << s); ++T)
  {
    // Sum over u and eps factorises across j in T.
    double term = 1;
    for(int a = 0; a < s; ++a)
    {
      int j = S[a];
      if(!(T >> a & 1))
      {
        term *= 1.0 / t(j);
        continue;
      }
      double inner = 0;
      for(int u = 0; u < d; ++u)
      {
        if(u == j)
          continue;
        inner += 1.0 / std::abs(t(j) - t(u)) + 1.0 / t(j);
      }
      term *= inner;
    }
    total += term;
  }
  return total * J;
}

double jp_mixed_partial_fd(PolyCurve const& curve, Eigen::Ref<const Eigen::VectorXd> const& t,
                           std::vector<int> const& S, double h)
{
  int d = curve.dim();
  Eigen::MatrixXd M(d, d);
  for(int j = 0; j < d; ++j)
    M.col(j) = eval(curve, t(j), 1);
  for(int j : S)
    M.col(j) = (eval(curve, t(j) + h, 1) - eval(curve, t(j) - h, 1)) / (2 * h);
  return M.determinant();
}

StovallCheck stovall_check(PolyCurve const& curve, Eigen::Ref<const Eigen::VectorXd> const& t,
                           std::vector<int> const& S)
{
  double bound = stovall_derivative_bound(curve, t, S);
  double fd = std::abs(jp_mixed_partial_fd(curve, t, S));
  if(fd > bound * (1 + 1e-6))
  {
    std::ostringstream os;
    os << "|dJ| = " << fd << " exceeds bound " << bound << " at " << t.transpose();
    throw DerivativeBoundViolation(os.str());
  }
  return {bound, fd, bound > 0 ? fd / bound : 0.0};
}

double BiPoly::operator()(double x, double y) const
{
  double acc = 0;
  for(int i = int(c.rows()) - 1; i >= 0; --i)
  {
    double row = 0;
    for(int j = int(c.cols()) - 1; j >= 0; --j)
      row = row * y + c(i, j);
    acc = acc * x + row;
  }
  return acc;
}

double BiPoly::dx(double x, double y) const
{
  double acc = 0;
  for(int i = 1; i < c.rows(); ++i)
    for(int j = 0; j < c.cols(); ++j)
      acc += i * c(i, j) * std::pow(x, i - 1) * std::pow(y, j);
  return acc;
}

double BiPoly::dy(double x, double y) const
{
  double acc = 0;
  for(int i = 0; i < c.rows(); ++i)
    for(int j = 1; j < c.cols(); ++j)
      acc += j * c(i, j) * std::pow(x, i) * std::pow(y, j - 1);
  return acc;
}

int BiPoly::degree() const
{
  int deg = -1;
  for(int i = 0; i < c.rows(); ++i)
    for(int j = 0; j < c.cols(); ++j)
      if(c(i, j) != 0)
        deg = std::max(deg, i + j);
  return deg;
}

long bezout_bound(std::vector<int> const& degrees)
{
  long p = 1;
  for(int k : degrees)
    p *= k;
  return p;
}

int count_preimages_2d(BiPoly const& f, BiPoly const& g, Eigen::Vector2d const& target, int grid,
                       double radius)
{
  std::vector<Eigen::Vector2d> roots;
  double step = 2 * radius / grid;
  for(int a = 0; a <= grid; ++a)
    for(int b = 0; b <= grid; ++b)
    {
      Eigen::Vector2d z(-radius + a * step, -radius + b * step);
      bool ok = false;
      for(int it = 0; it < 60; ++it)
      {
        Eigen::Vector2d F(f(z(0), z(1)) - target(0), g(z(0), z(1)) - target(1));
        Eigen::Matrix2d J;
        J << f.dx(z(0), z(1)), f.dy(z(0), z(1)), g.dx(z(0), z(1)), g.dy(z(0), z(1));
        if(F.norm() < 1e-13)
        {
          ok = true;
          break;
        }
        if(std::abs(J.determinant()) < 1e-300)
          break;
        Eigen::Vector2d dz = J.fullPivLu().solve(F);
        // halve the step until the residual decreases
        double lam = 1;
        for(int k = 0; k < 30; ++k)
        {
          Eigen::Vector2d zn = z - lam * dz;
          Eigen::Vector2d Fn(f(zn(0), zn(1)) - target(0), g(zn(0), zn(1)) - target(1));
          if(Fn.norm() < F.norm())
            break;
          lam *= 0.5;
        }
        z -= lam * dz;
        if(z.cwiseAbs().maxCoeff() > 2 * radius)
          break;
      }
      if(!ok || z.cwiseAbs().maxCoeff() > radius)
        continue;
      bool seen = false;
      for(auto const& r : roots)
        if((r - z).norm() < 1e-7)
          seen = true;
      if(seen)
        continue;
      double det = f.dx(z(0), z(1)) * g.dy(z(0), z(1)) - f.dy(z(0), z(1)) * g.dx(z(0), z(1));
      if(std::abs(det) < 1e-9)
      {
        std::ostringstream os;
        os << "Jacobian " << det << " at root " << z.transpose();
        throw NonGenericTarget(os.str());
      }
      roots.push_back(z);
    }
  return int(roots.size());
}

}
