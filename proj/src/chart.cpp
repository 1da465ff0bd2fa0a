#include <acl/chart.hpp>
#include <acl/errors.hpp>
#include <acl/jacobian.hpp>

#include <cmath>
#include <sstream>

namespace acl
{

std::string to_string(CaseTag c)
{
  switch(c)
  {
  case CaseTag::Case1d: return "Case(1,d)";
  case CaseTag::Case2d1: return "Case(2,d+1)";
  case CaseTag::Case2d: return "Case(2,d)";
  }
  return "?";
}

SigmaChart select_case(int d, std::vector<PreColour> const& evenPre)
{
  SigmaChart c;
  c.d = d;
  auto pre = [&](int k) {
    if(k >= int(evenPre.size()) || evenPre[k] == PreColour::none)
      throw ConsistencyError("missing pre-colour for index " + std::to_string(k));
    return evenPre[k];
  };
  int Z = 1, N = 1;
  while(true)
  {
    ++N;
    if(N > d + 1)
      throw ConsistencyError("no N <= d+1 with Z(N) in {d, d+1}");
    Z += (N % 2 == 0 && pre(N) == PreColour::red) ? 2 : 1;
    if(Z == d || Z == d + 1)
      break;
  }
  c.N = N;
  c.Z = Z;
  if(N % 2)
    c.tag = CaseTag::Case1d;
  else
    c.tag = Z == d + 1 ? CaseTag::Case2d1 : CaseTag::Case2d;
  c.eta = c.tag == CaseTag::Case2d ? 1 : 0;
  c.L = c.tag == CaseTag::Case2d ? N + 1 : N;
  c.R = c.L / 2;
  c.pre.assign(c.L + 1, PreColour::none);
  for(int k = 2; k <= c.L; k += 2)
    c.pre[k] = pre(k);

  c.colours.assign(N + 1, Colour::achromatic);
  for(int j = 1; j <= N; ++j)
  {
    int orig = c.tag == CaseTag::Case2d ? j + 1 : j;
    if(orig % 2 == 0)
      c.colours[j] = c.pre[orig] == PreColour::red ? Colour::red : Colour::blue;
  }
  for(int j = 1; j <= N; ++j)
  {
    if(c.colours[j] != Colour::blue)
      c.l.push_back(j);
    if(c.colours[j] == Colour::red)
      c.mu.push_back(j);
    if(c.colours[j] == Colour::blue)
      c.nu.push_back(j);
  }
  c.m = int(c.mu.size());
  c.n = int(c.nu.size());
  c.M = N - c.n;

  bool ok = false;
  switch(c.tag)
  {
  case CaseTag::Case1d: ok = N == 2 * c.m + 2 * c.n + 1 && d == 3 * c.m + 2 * c.n + 1; break;
  case CaseTag::Case2d1: ok = N == 2 * c.m + 2 * c.n && d == 3 * c.m + 2 * c.n - 1; break;
  case CaseTag::Case2d: ok = N == 2 * c.m + 2 * c.n && d == 3 * c.m + 2 * c.n; break;
  }
  if(!ok || int(c.l.size()) != c.M)
    throw ConsistencyError("counting identities fail for " + to_string(c.tag));

  c.slotKind.assign(c.L + 1, 1);
  c.slotTau.assign(c.L + 1, -1);
  c.slotSigma.assign(c.L + 1, -1);
  int tau = 0, sig = 0;
  for(int k = 1; k <= c.L; ++k)
  {
    if(c.tag == CaseTag::Case2d && k == 1)
      c.slotKind[k] = 0;
    else if(k % 2 == 0 && c.pre[k] == PreColour::blue)
    {
      c.slotKind[k] = 2;
      c.slotSigma[k] = sig++;
    }
    else
      c.slotTau[k] = tau++;
  }
  if(tau != c.M || sig != c.n || c.R + c.M != c.rows())
    throw ConsistencyError("variable count does not match the chart dimension");
  c.sigma = Eigen::VectorXd::Zero(c.n);
  return c;
}

TowerCoords chart_inverse(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z)
{
  TowerCoords tc;
  tc.r.resize(c.R + 1);
  tc.r(0) = c.r0;
  for(int i = 1; i <= c.R; ++i)
    tc.r(i) = z(i - 1);
  tc.t = Eigen::VectorXd::Zero(c.L + 1);
  for(int k = 1; k <= c.L; ++k)
  {
    switch(c.slotKind[k])
    {
    case 0: tc.t(k) = c.t0; break;
    case 1: tc.t(k) = z(c.R + c.slotTau[k]); break;
    case 2:
    {
      double p = tc.t(k - 1);
      tc.t(k) = p + c.sigma(c.slotSigma[k]) * std::pow(p, -c.cprime);
      break;
    }
    }
  }
  return tc;
}

Eigen::VectorXd chart_forward(SigmaChart const& c, TowerCoords const& tc, Eigen::VectorXd* sigma)
{
  Eigen::VectorXd z(c.R + c.M);
  for(int i = 1; i <= c.R; ++i)
    z(i - 1) = tc.r(i);
  Eigen::VectorXd s = Eigen::VectorXd::Zero(c.n);
  for(int k = 1; k <= c.L; ++k)
  {
    if(c.slotKind[k] == 1)
      z(c.R + c.slotTau[k]) = tc.t(k);
    else if(c.slotKind[k] == 2)
      s(c.slotSigma[k]) = (tc.t(k) - tc.t(k - 1)) * std::pow(tc.t(k - 1), c.cprime);
  }
  if(sigma)
    *sigma = s;
  return z;
}

Eigen::VectorXd chart_map(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z)
{
  TowerCoords tc = chart_inverse(c, z);
  Eigen::VectorXd psi = c.x0;
  for(int k = 1; k <= c.L; ++k)
    psi += ((k % 2) ? -1.0 : 1.0) * tc.r(k / 2) * eval(*c.curve, tc.t(k), 0);
  if(c.tag != CaseTag::Case2d1)
    return psi;
  Eigen::VectorXd out(c.d + 1);
  out << psi, tc.r(c.L / 2);
  return out;
}

namespace
{

double sgn_k(int k) { return (k % 2) ? -1.0 : 1.0; }

Eigen::MatrixXd analytic_jacobian(SigmaChart const& c, TowerCoords const& tc)
{
  PolyCurve const& P = *c.curve;
  int rows = c.rows();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(rows, c.variables());
  for(int i = 1; i <= c.R; ++i)
  {
    Eigen::VectorXd col = eval(P, tc.t(2 * i), 0);
    if(2 * i + 1 <= c.L)
      col -= eval(P, tc.t(2 * i + 1), 0);
    J.block(0, i - 1, c.d, 1) = col;
    if(c.tag == CaseTag::Case2d1 && i == c.L / 2)
      J(c.d, i - 1) = 1;
  }
  for(int k = 1; k <= c.L; ++k)
  {
    if(c.slotKind[k] != 1)
      continue;
    Eigen::VectorXd col = sgn_k(k) * tc.r(k / 2) * eval(P, tc.t(k), 1);
    if(k + 1 <= c.L && c.slotKind[k + 1] == 2)
    {
      double s = tc.t(k + 1) - tc.t(k);
      col += sgn_k(k + 1) * tc.r((k + 1) / 2) * (1 - c.cprime * s / tc.t(k)) * eval(P, tc.t(k + 1), 1);
    }
    J.block(0, c.R + c.slotTau[k], c.d, 1) = col;
  }
  return J;
}

}

JacobianChartEval assemble_G_sigma(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z,
                                   double tol, double h)
{
  TowerCoords tc = chart_inverse(c, z);
  JacobianChartEval ev;
  ev.caseTag = c.tag;
  ev.rho = z.head(c.R);
  ev.tau = z.tail(c.M);
  ev.sigma = c.sigma;
  ev.matrix = analytic_jacobian(c, tc);
  ev.detValue = ev.matrix.determinant();
  int nv = c.variables();
  Eigen::MatrixXd fd(c.rows(), nv);
  for(int v = 0; v < nv; ++v)
  {
    auto at = [&](double s) {
      Eigen::VectorXd zs = z;
      zs(v) += s;
      return chart_map(c, zs);
    };
    fd.col(v) = (8 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12 * h);
  }
  ev.fdDet = fd.determinant();
  double hadamard = 1;
  for(int v = 0; v < nv; ++v)
    hadamard *= ev.matrix.col(v).norm();
  double scale = std::abs(ev.detValue) > 1e-9 * hadamard ? std::abs(ev.detValue) : hadamard;
  ev.relErr = scale > 0 ? std::abs(ev.detValue - ev.fdDet) / scale : 0.0;
  if(ev.relErr > tol)
  {
    std::ostringstream os;
    os << "analytic det " << ev.detValue << " vs finite differences " << ev.fdDet << " (rel "
       << ev.relErr << ") at z = " << z.transpose();
    throw JacobianAssemblyError(os.str());
  }
  return ev;
}

PhiJacobianCheck phi_jacobian_check(SigmaChart const& c, TowerCoords const& tc, double h)
{
  // variables: r_1..r_R then t_k for non-frozen k; outputs: rho, tau, sigma
  std::vector<int> tk;
  for(int k = 1; k <= c.L; ++k)
    if(c.slotKind[k] != 0)
      tk.push_back(k);
  int nv = c.R + int(tk.size());
  auto forward = [&](Eigen::VectorXd const& v) {
    TowerCoords q = tc;
    for(int i = 1; i <= c.R; ++i)
      q.r(i) = v(i - 1);
    for(size_t a = 0; a < tk.size(); ++a)
      q.t(tk[a]) = v(c.R + a);
    Eigen::VectorXd s;
    Eigen::VectorXd z = chart_forward(c, q, &s);
    Eigen::VectorXd out(z.size() + s.size());
    out << z, s;
    return out;
  };
  Eigen::VectorXd v0(nv);
  for(int i = 1; i <= c.R; ++i)
    v0(i - 1) = tc.r(i);
  for(size_t a = 0; a < tk.size(); ++a)
    v0(c.R + a) = tc.t(tk[a]);
  Eigen::MatrixXd J(nv, nv);
  for(int v = 0; v < nv; ++v)
  {
    Eigen::VectorXd vp = v0, vm = v0;
    double step = h * std::max(1.0, std::abs(v0(v)));
    vp(v) += step;
    vm(v) -= step;
    J.col(v) = (forward(vp) - forward(vm)) / (2 * step);
  }
  double closed = 1;
  for(int k = 1; k <= c.L; ++k)
    if(c.slotKind[k] == 2)
      closed *= std::pow(tc.t(k - 1), c.cprime);
  double fd = std::abs(J.determinant());
  return {fd, closed, std::abs(fd - closed) / closed};
}

Interval truncate_interval(double a, double b, double eps)
{
  if(!(eps >= 0 && eps < 0.5))
    throw DomainError("truncation needs 0 <= eps < 1/2");
  double w = b - a;
  Interval iv{a + eps * w, b - eps * w};
  if(!(iv.hi > iv.lo))
    throw DegenerateTruncation("empty truncated interval");
  return iv;
}

int x_variable_count(SigmaChart const& c)
{
  int n = 0;
  for(int i = 1; i <= c.R; ++i)
    if(2 * i + 1 <= c.L)
      ++n;
  return n;
}

TruncatedDomain truncate_domain(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z,
                                double c0, double alpha)
{
  TowerCoords tc = chart_inverse(c, z);
  TruncatedDomain D;
  for(int i = 1; i <= c.R; ++i)
    if(2 * i + 1 <= c.L)
      D.box.push_back(truncate_interval(tc.t(2 * i), tc.t(2 * i + 1), c0));
  double sep = std::numeric_limits<double>::infinity();
  for(int k = 1; k <= c.L; ++k)
  {
    if(c.slotKind[k] != 1)
      continue;
    double tau = tc.t(k);
    for(auto const& iv : D.box)
      for(double x : {iv.lo, iv.hi})
        sep = std::min(sep, std::abs(tau - x) * std::pow(tau, c.cprime) / alpha);
  }
  D.separation = sep;
  return D;
}

ErrorSplit error_split(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z,
                       Eigen::Ref<const Eigen::VectorXd> const& x)
{
  PolyCurve const& P = *c.curve;
  TowerCoords tc = chart_inverse(c, z);
  Eigen::MatrixXd A(c.d, c.d), B(c.d, c.d);
  int col = 0, xi = 0;
  for(int i = 1; i <= c.R; ++i)
  {
    if(2 * i + 1 > c.L)
      continue;   // Case(2,d+1): column removed with the last row
    A.col(col) = B.col(col) = eval(P, x(xi++), 1);
    ++col;
  }
  for(int k = 1; k <= c.L; ++k)
  {
    if(c.slotKind[k] != 1)
      continue;
    if(k + 1 <= c.L && c.slotKind[k + 1] == 2)
    {
      double a = sgn_k(k) * tc.r(k / 2), b = sgn_k(k + 1) * tc.r((k + 1) / 2);
      double s = tc.t(k + 1) - tc.t(k);
      A.col(col) = a * eval(P, tc.t(k), 1) + b * (1 - c.cprime * s / tc.t(k)) * eval(P, tc.t(k + 1), 1);
      B.col(col) = (a + b) * eval(P, tc.t(k), 1);
    }
    else
      A.col(col) = B.col(col) = eval(P, tc.t(k), 1);
    ++col;
  }
  if(col != c.d)
    throw ConsistencyError("error split column count mismatch");
  ErrorSplit es;
  es.wp = A.determinant();
  es.main = B.determinant();
  es.error = es.wp - es.main;
  if(std::abs(es.error) > 0.5 * std::abs(es.main))
  {
    std::ostringstream os;
    os << "|E| = " << std::abs(es.error) << " > |main|/2 = " << 0.5 * std::abs(es.main)
       << " at z = " << z.transpose() << ", x = " << x.transpose();
    throw ErrorDominationFailure(os.str());
  }
  return es;
}

double jaclem1_check(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z, double alpha,
                     double beta)
{
  TowerCoords tc = chart_inverse(c, z);
  double J = std::abs(analytic_jacobian(c, tc).determinant());
  double prodTau = 1;
  for(int k = 1; k <= c.L; ++k)
    if(c.slotKind[k] == 1)
      prodTau *= std::pow(tc.t(k), c.cprime);
  double rhs = std::pow(alpha, c.d * (c.d + 1) / 2.0 - c.M) *
               std::pow(beta / alpha, (c.m + c.n - c.eta) / 2.0) * prodTau;
  return J / rhs;
}

double vandermonde_floor_ratio(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z,
                               double alpha, double beta)
{
  Eigen::VectorXd tau = z.tail(c.M);
  double e = c.tag == CaseTag::Case2d ? (c.m - 1) / 2.0 : c.m / 2.0;
  double prodTau = 1;
  for(int q = 0; q < c.M; ++q)
    prodTau *= std::pow(tau(q), -double(c.K) * (c.M - 1) / (c.d * (c.d + 1)));
  double rhs = std::pow(alpha, c.M * (c.M - 1) / 2.0) * std::pow(beta / alpha, e) * prodTau;
  return std::abs(vandermonde(tau)) / rhs;
}

std::pair<double, double> weak_type_exponents(SigmaChart const& c)
{
  double a = c.d * (c.d + 1) / 2.0 - c.M + c.N - c.n;
  double b = (c.m - c.eta) / 2.0 + c.N / 2;
  return {a, b};
}

}
