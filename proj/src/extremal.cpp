#include <acl/extremal.hpp>
#include <acl/errors.hpp>

#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>

namespace acl
{

namespace
{

// Legendre P_0..P_{M+1} at u in [-1, 1].
Eigen::VectorXd legendre_raw(int M, double u)
{
  Eigen::VectorXd P(M + 2);
  P(0) = 1;
  if(M + 1 >= 1)
    P(1) = u;
  for(int k = 1; k <= M; ++k)
    P(k + 1) = ((2 * k + 1) * u * P(k) - k * P(k - 1)) / (k + 1);
  return P;
}

// Integral of |f| over [a, b] for a polynomial f of degree <= M given with
// its primitive F; sign changes found on a fine grid and refined by bisection.
double abs_integral(std::function<double(double)> const& f, std::function<double(double)> const& F,
                    int M, double a, double b)
{
  if(b <= a)
    return 0.0;
  int n = std::max(64, 64 * (M + 1));
  std::vector<double> cuts{a};
  double xl = a, fl = f(a);
  for(int i = 1; i <= n; ++i)
  {
    double xr = a + (b - a) * i / n;
    double fr = f(xr);
    if(fl == 0 && i > 1)
      cuts.push_back(xl);
    else if(fl * fr < 0)
    {
      double lo = xl, hi = xr, flo = fl;
      for(int k = 0; k < 200 && hi - lo > 1e-16 * std::max(1.0, std::abs(hi)); ++k)
      {
        double mid = 0.5 * (lo + hi);
        double fm = f(mid);
        if(fm == 0)
        {
          lo = hi = mid;
          break;
        }
        if((fm < 0) == (flo < 0))
        {
          lo = mid;
          flo = fm;
        }
        else
          hi = mid;
      }
      cuts.push_back(0.5 * (lo + hi));
    }
    xl = xr;
    fl = fr;
  }
  cuts.push_back(b);
  double total = 0;
  for(size_t i = 0; i + 1 < cuts.size(); ++i)
    total += std::abs(F(cuts[i + 1]) - F(cuts[i]));
  return total;
}

std::vector<double> mono_primitive(std::vector<double> const& p)
{
  std::vector<double> q(p.size() + 1, 0.0);
  for(size_t i = 0; i < p.size(); ++i)
    q[i + 1] = p[i] / double(i + 1);
  return q;
}

double horner(std::vector<double> const& p, double x)
{
  double acc = 0;
  for(size_t i = p.size(); i-- > 0;)
    acc = acc * x + p[i];
  return acc;
}

double mono_abs_integral(std::vector<double> const& p, double a, double b)
{
  auto q = mono_primitive(p);
  return abs_integral([&](double x) { return horner(p, x); },
                      [&](double x) { return horner(q, x); }, int(p.size()), a, b);
}

// Minimise int |p| subject to p(x0) = 1 by iteratively reweighted least squares.
LegendrePoly l1_minimiser(int M, double x0, int gridSize)
{
  Eigen::MatrixXd B(gridSize, M + 1);
  for(int i = 0; i < gridSize; ++i)
    B.row(i) = legendre_basis(M, (i + 0.5) / gridSize).transpose();
  double w = 1.0 / gridSize;
  Eigen::VectorXd b0 = legendre_basis(M, x0);
  Eigen::VectorXd c = b0 / b0.squaredNorm();
  double e = 1.0;
  for(int it = 0; it < 300; ++it)
  {
    Eigen::VectorXd pv = B * c;
    Eigen::VectorXd om = (pv.array().square() + e * e).sqrt().inverse() * w;
    Eigen::MatrixXd G = B.transpose() * om.asDiagonal() * B;
    Eigen::VectorXd y = G.ldlt().solve(b0);
    c = y / b0.dot(y);
    e = std::max(e * 0.92, 1e-12);
  }
  return {c};
}

std::vector<double> sign_changes(LegendrePoly const& p)
{
  std::vector<double> z;
  int n = 4096;
  double xl = 0, fl = p(0);
  for(int i = 1; i <= n; ++i)
  {
    double xr = double(i) / n, fr = p(xr);
    if(fl * fr < 0)
    {
      double lo = xl, hi = xr, flo = fl;
      for(int k = 0; k < 100; ++k)
      {
        double mid = 0.5 * (lo + hi);
        double fm = p(mid);
        if((fm < 0) == (flo < 0))
        {
          lo = mid;
          flo = fm;
        }
        else
          hi = mid;
      }
      z.push_back(0.5 * (lo + hi));
    }
    xl = xr;
    fl = fr;
  }
  return z;
}

// Moments int s phi_k of the sign function that starts with sign s0 and
// switches at the sorted points z.
Eigen::VectorXd sign_moments(int M, double s0, std::vector<double> const& z)
{
  Eigen::VectorXd m = Eigen::VectorXd::Zero(M + 1);
  std::vector<double> cuts{0.0};
  cuts.insert(cuts.end(), z.begin(), z.end());
  cuts.push_back(1.0);
  double sg = s0;
  for(size_t s = 0; s + 1 < cuts.size(); ++s, sg = -sg)
    for(int k = 0; k <= M; ++k)
    {
      LegendrePoly phi{Eigen::VectorXd::Unit(M + 1, k)};
      m(k) += sg * (phi.primitive(cuts[s + 1]) - phi.primitive(cuts[s]));
    }
  return m;
}

// Newton on the switch points z and multiplier lam for the optimality system
// int sign(p) phi_k = lam phi_k(x0). Returns false if it does not settle.
bool polish_switches(int M, double x0, double s0, std::vector<double>& z, double& lam)
{
  Eigen::VectorXd v = legendre_basis(M, x0);
  for(int it = 0; it < 60; ++it)
  {
    Eigen::VectorXd F = sign_moments(M, s0, z) - lam * v;
    if(F.norm() < 1e-15)
      return true;
    Eigen::MatrixXd J(M + 1, M + 1);
    double sg = s0;
    for(int i = 0; i < M; ++i, sg = -sg)
      J.col(i) = 2 * sg * legendre_basis(M, z[i]);
    J.col(M) = -v;
    Eigen::VectorXd step = J.fullPivLu().solve(F);
    for(int i = 0; i < M; ++i)
      z[i] -= step(i);
    lam -= step(M);
    for(int i = 0; i < M; ++i)
      if(!(z[i] > 0 && z[i] < 1) || (i > 0 && z[i] <= z[i - 1]))
        return false;
  }
  return (sign_moments(M, s0, z) - lam * v).norm() < 1e-12;
}

// Polynomial with the given roots scaled so that p(x0) = 1, by interpolation.
LegendrePoly from_roots(int M, std::vector<double> const& z, double x0)
{
  Eigen::MatrixXd A(M + 1, M + 1);
  Eigen::VectorXd y(M + 1);
  for(int i = 0; i <= M; ++i)
  {
    double x = 0.5 - 0.5 * std::cos(M_PI * (i + 0.5) / (M + 1));
    A.row(i) = legendre_basis(M, x).transpose();
    double prod = 1;
    for(double r : z)
      prod *= (x - r);
    y(i) = prod;
  }
  LegendrePoly p{A.fullPivLu().solve(y)};
  p.a /= p(x0);
  return p;
}

// Dual bound: for any g with int g q = q(x0) on degree <= M, C(x0) <= ||g||_inf.
// g = sign(p) / lam + h with h in the span; ||h||_inf <= sum |a_k| sqrt(2k+1).
double dual_upper(int M, double x0, double s0, std::vector<double> const& z)
{
  Eigen::VectorXd m = sign_moments(M, s0, z);
  Eigen::VectorXd v = legendre_basis(M, x0);
  double lam = m.dot(v) / v.squaredNorm();
  if(!(std::abs(lam) > 0))
    return std::numeric_limits<double>::infinity();
  Eigen::VectorXd a = v - m / lam;
  double hsup = 0;
  for(int k = 0; k <= M; ++k)
    hsup += std::abs(a(k)) * std::sqrt(2.0 * k + 1);
  return 1.0 / std::abs(lam) + hsup;
}

double sup_norm_grid(LegendrePoly const& p, int n)
{
  double s = 0;
  for(int i = 0; i <= n; ++i)
  {
    double x = 0.5 - 0.5 * std::cos(M_PI * i / n);
    s = std::max(s, std::abs(p(x)));
  }
  return s;
}

}

Eigen::VectorXd legendre_basis(int M, double x)
{
  Eigen::VectorXd P = legendre_raw(M, 2 * x - 1).head(M + 1);
  for(int k = 0; k <= M; ++k)
    P(k) *= std::sqrt(2.0 * k + 1);
  return P;
}

double LegendrePoly::operator()(double x) const { return legendre_basis(degree(), x).dot(a); }

double LegendrePoly::primitive(double x) const
{
  int M = degree();
  Eigen::VectorXd P = legendre_raw(M, 2 * x - 1);
  Eigen::VectorXd P0 = legendre_raw(M, -1.0);
  double acc = a(0) * x;
  for(int k = 1; k <= M; ++k)
  {
    double val = (P(k + 1) - P(k - 1)) - (P0(k + 1) - P0(k - 1));
    acc += a(k) * std::sqrt(2.0 * k + 1) * val / (2.0 * (2 * k + 1));
  }
  return acc;
}

double l1_norm(LegendrePoly const& p, double a, double b)
{
  return abs_integral([&](double x) { return p(x); }, [&](double x) { return p.primitive(x); },
                      p.degree(), a, b);
}

CMResult compute_CM(int M, int gridSize, int restarts)
{
  if(M < 0 || M > 12)
    throw DomainError("compute_CM supports 0 <= M <= 12");
  if(M == 0)
    return {1.0, 1.0, 0.0, LegendrePoly{Eigen::VectorXd::Ones(1)}};
  CMResult best{0, 0, 0, {}};
  double upper = 0;
  // extremal problem is symmetric under x -> 1 - x
  for(int r = 0; r <= restarts; ++r)
  {
    double x0 = 0.5 * r / restarts;
    LegendrePoly p = l1_minimiser(M, x0, gridSize);
    std::vector<double> z = sign_changes(p);
    double s0 = p(0.5 * (z.empty() ? 1.0 : z[0])) >= 0 ? 1.0 : -1.0;
    Eigen::VectorXd v = legendre_basis(M, x0);
    double lam = sign_moments(M, s0, z).dot(v) / v.squaredNorm();
    if(int(z.size()) == M && polish_switches(M, x0, s0, z, lam))
      p = from_roots(M, z, x0);
    double ratio = sup_norm_grid(p, 20000) / l1_norm(p);
    upper = std::max(upper, dual_upper(M, x0, s0, z));
    if(ratio > best.value)
      best = {ratio, 0, x0, p};
  }
  best.upper = upper;
  if(best.upper > best.value * 1.01)
  {
    std::ostringstream os;
    os << "M=" << M << " lower " << best.value << " upper " << best.upper;
    throw ExtremalUncertain(os.str());
  }
  return best;
}

double CM(int M)
{
  static std::mutex mu;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(M);
  if(it != cache.end())
    return it->second;
  double v = compute_CM(M).value;
  cache[M] = v;
  return v;
}

double C_M1(int M, double eps)
{
  double x = 2 * eps * CM(M);
  if(x >= 1)
    return std::numeric_limits<double>::infinity();
  return x / (1 - x);
}

double C_MK(int M, int K, double eps)
{
  double c1 = C_M1(M, eps);
  // one coordinate at a time: C -> (1 + C)(1 + C_{M,1}) - 1
  double c = 0;
  for(int k = 0; k < K; ++k)
    c = (1 + c) * (1 + c1) - 1;
  return c;
}

double derive_c0(int M, int K)
{
  double q = std::pow(1.5, 1.0 / K) - 1;
  double epsStar = q / (2 * CM(M) * (1 + q));
  return 0.5 * epsStar;
}

TruncationCheck truncation_check(std::vector<double> const& p, double eps)
{
  if(eps < 0 || eps >= 0.5)
    throw DomainError("truncation_check needs 0 <= eps < 1/2");
  int M = std::max(0, int(p.size()) - 1);
  double outer = mono_abs_integral(p, 0, eps) + mono_abs_integral(p, 1 - eps, 1);
  double inner = mono_abs_integral(p, eps, 1 - eps);
  double rhs = C_M1(M, eps) * inner;
  return {outer, rhs, outer <= rhs + 1e-12 * std::max(rhs, outer)};
}

TruncationCheck truncation_check_separable(std::vector<std::vector<double>> const& factors, double eps)
{
  if(eps < 0 || eps >= 0.5)
    throw DomainError("truncation_check needs 0 <= eps < 1/2");
  int M = 0;
  double total = 1, inner = 1;
  for(auto const& f : factors)
  {
    M = std::max(M, int(f.size()) - 1);
    total *= mono_abs_integral(f, 0, 1);
    inner *= mono_abs_integral(f, eps, 1 - eps);
  }
  double lhs = std::max(0.0, total - inner);
  double rhs = C_MK(M, int(factors.size()), eps) * inner;
  return {lhs, rhs, lhs <= rhs + 1e-12 * std::max(rhs, lhs)};
}

TruncationCheck truncation_check_bivariate(Eigen::MatrixXd const& c, double eps)
{
  if(eps < 0 || eps >= 0.5)
    throw DomainError("truncation_check needs 0 <= eps < 1/2");
  int M = int(std::max(c.rows(), c.cols())) - 1;
  // outer composite Gauss-Legendre in x, exact inner integrals in y
  static double const gx[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                               0.5384693101056831, 0.9061798459386640};
  static double const gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                               0.4786286704993665, 0.2369268850561891};
  auto row = [&](double x) {
    std::vector<double> q(c.cols(), 0.0);
    for(int j = 0; j < c.cols(); ++j)
    {
      double acc = 0;
      for(int i = int(c.rows()) - 1; i >= 0; --i)
        acc = acc * x + c(i, j);
      q[j] = acc;
    }
    return q;
  };
  auto integrate = [&](double a, double b, double ya, double yb) {
    int panels = 400;
    double h = (b - a) / panels, acc = 0;
    for(int k = 0; k < panels; ++k)
    {
      double mid = a + (k + 0.5) * h;
      for(int g = 0; g < 5; ++g)
        acc += gw[g] * 0.5 * h * mono_abs_integral(row(mid + 0.5 * h * gx[g]), ya, yb);
    }
    return acc;
  };
  double total = integrate(0, 1, 0, 1);
  double inner = integrate(eps, 1 - eps, eps, 1 - eps);
  double lhs = std::max(0.0, total - inner);
  double rhs = C_MK(M, 2, eps) * inner;
  return {lhs, rhs, lhs <= rhs + 1e-9 * std::max(rhs, lhs)};
}

TruncationTable truncation_table(int maxDegree, int maxK)
{
  TruncationTable t{maxDegree, {}, {}};
  for(int M = 0; M <= maxDegree; ++M)
  {
    t.cM.push_back(CM(M));
    std::vector<double> row;
    for(int K = 1; K <= maxK; ++K)
      row.push_back(derive_c0(M, K));
    t.c0.push_back(row);
  }
  return t;
}

}
