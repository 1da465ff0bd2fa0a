#include <acl/curves.hpp>
#include <acl/errors.hpp>

#include <cmath>
#include <functional>

namespace acl
{

namespace
{

// Laplace expansion along the first column; d is small.
QPoly symbolic_det(std::vector<std::vector<QPoly>> const& m)
{
  int n = int(m.size());
  if(n == 1)
    return m[0][0];
  QPoly acc;
  for(int i = 0; i < n; ++i)
  {
    if(m[i][0].isZero())
      continue;
    std::vector<std::vector<QPoly>> minor;
    for(int r = 0; r < n; ++r)
    {
      if(r == i)
        continue;
      minor.emplace_back(m[r].begin() + 1, m[r].end());
    }
    QPoly term = m[i][0] * symbolic_det(minor);
    if(i % 2)
      acc -= term;
    else
      acc += term;
  }
  return acc;
}

}

PolyCurve::PolyCurve(std::vector<std::vector<mpq_class>> coeffs)
{
  for(auto& row : coeffs)
    comp_.emplace_back(std::move(row));
  init();
}

PolyCurve::PolyCurve(std::vector<QPoly> components) : comp_(std::move(components))
{
  init();
}

PolyCurve PolyCurve::moment(int d)
{
  std::vector<QPoly> c;
  for(int j = 1; j <= d; ++j)
    c.push_back(QPoly::monomial(j));
  return PolyCurve(std::move(c));
}

void PolyCurve::init()
{
  int d = dim();
  if(d < 2)
    throw DegenerateCurve("dimension must be at least 2");
  degree_ = 0;
  for(auto const& c : comp_)
    degree_ = std::max(degree_, c.degree());
  if(degree_ < 1)
    throw DegenerateCurve("constant curve");
  deriv_.clear();
  for(int k = 0; k <= degree_; ++k)
  {
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(d, degree_ + 1);
    for(int i = 0; i < d; ++i)
    {
      QPoly p = comp_[i].derivative(k);
      for(int j = 0; j <= p.degree(); ++j)
        T(i, j) = p.coeffs()[j].get_d();
    }
    deriv_.push_back(std::move(T));
  }
  std::vector<std::vector<QPoly>> m(d, std::vector<QPoly>(d));
  for(int i = 0; i < d; ++i)
    for(int j = 0; j < d; ++j)
      m[i][j] = comp_[i].derivative(j + 1);
  torsion_ = symbolic_det(m);
  if(torsion_.isZero())
    throw DegenerateCurve("torsion vanishes identically");
}

PolyCurve PolyCurve::transformed(std::vector<std::vector<mpq_class>> const& X) const
{
  int d = dim();
  std::vector<QPoly> out(d);
  for(int i = 0; i < d; ++i)
    for(int j = 0; j < d; ++j)
      out[i] += comp_[j] * X[i][j];
  return PolyCurve(std::move(out));
}

PolyCurve PolyCurve::reparametrized(mpq_class const& a, mpq_class const& s) const
{
  std::vector<QPoly> out;
  for(auto const& c : comp_)
    out.push_back(c.compose_affine(a, s));
  return PolyCurve(std::move(out));
}

Eigen::VectorXd eval(PolyCurve const& curve, double t, int order)
{
  int d = curve.dim();
  if(order > curve.degree())
    return Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd const& T = curve.derivative_table(order);
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
  for(int j = curve.degree() - order; j >= 0; --j)
    acc = acc * t + T.col(j);
  return acc;
}

std::vector<mpq_class> eval_exact(PolyCurve const& curve, mpq_class const& t, int order)
{
  std::vector<mpq_class> out;
  for(auto const& c : curve.components())
    out.push_back(order > curve.degree() ? mpq_class(0) : c.derivative(order)(t));
  return out;
}

Eigen::MatrixXd derivative_matrix(PolyCurve const& curve, double t)
{
  int d = curve.dim();
  Eigen::MatrixXd M(d, d);
  for(int j = 0; j < d; ++j)
    M.col(j) = eval(curve, t, j + 1);
  return M;
}

double torsion(PolyCurve const& curve, double t) { return curve.torsion_poly()(t); }

QPoly torsion_poly(PolyCurve const& curve) { return curve.torsion_poly(); }

double torsion_fd(PolyCurve const& curve, double t, double h)
{
  int d = curve.dim();
  mpq_class tq = rational_from_double(t), hq = rational_from_double(h);
  Eigen::MatrixXd M(d, d);
  for(int k = 1; k <= d; ++k)
  {
    // delta^k P(t) = sum_j (-1)^j C(k, j) P(t + (k/2 - j) h)
    std::vector<mpq_class> acc(d, mpq_class(0));
    mpq_class binom = 1;
    for(int j = 0; j <= k; ++j)
    {
      mpq_class at = tq + (mpq_class(k, 2) - j) * hq;
      at.canonicalize();
      std::vector<mpq_class> v = eval_exact(curve, at, 0);
      for(int i = 0; i < d; ++i)
        acc[i] += (j % 2 ? -binom : binom) * v[i];
      binom = binom * (k - j) / (j + 1);
    }
    mpq_class hk = 1;
    for(int j = 0; j < k; ++j)
      hk *= hq;
    for(int i = 0; i < d; ++i)
      M(i, k - 1) = mpq_class(acc[i] / hk).get_d();
  }
  return M.determinant();
}

double affine_arclength_weight(PolyCurve const& curve, double t)
{
  int d = curve.dim();
  return std::pow(std::abs(torsion(curve, t)), 2.0 / (d * (d + 1)));
}

WeightedMeasure::WeightedMeasure(int d_, int K_, double normalization_)
  : d(d_), K(K_), normalization(normalization_)
{
  if(d < 2 || K < 0 || !(normalization > 0))
    throw DomainError("invalid weighted measure parameters");
}

mpq_class WeightedMeasure::exponent() const
{
  mpq_class e(2 * K, d * (d + 1));
  e.canonicalize();
  return e;
}

mpq_class WeightedMeasure::kappa() const
{
  mpq_class k(d * (d + 1), 2 * K + d * (d + 1));
  k.canonicalize();
  return k;
}

double affine_weight(WeightedMeasure const& m, double t)
{
  if(t < 0)
    throw DomainError("affine_weight needs t >= 0");
  if(m.K == 0)
    return m.normalization;
  return m.normalization * std::pow(t, m.exponent_d());
}

double weight_integral(WeightedMeasure const& m, double a, double b)
{
  if(a < 0 || b < a)
    throw DomainError("weight_integral needs 0 <= a <= b");
  if(m.K == 0)
    return m.normalization * (b - a);
  double k = m.kappa_d();
  return m.normalization * k * (std::pow(b, 1.0 / k) - std::pow(a, 1.0 / k));
}

double weight_advance(WeightedMeasure const& m, double t, double mass)
{
  if(t < 0 || mass < 0)
    throw DomainError("weight_advance needs t >= 0 and mass >= 0");
  if(m.K == 0)
    return t + mass / m.normalization;
  double k = m.kappa_d();
  return std::pow(std::pow(t, 1.0 / k) + mass / (m.normalization * k), k);
}

PolyCurve curve_from_json(nlohmann::json const& j)
{
  if(j.contains("preset"))
  {
    if(j.at("preset") != "moment")
      throw ConfigError("unknown curve preset");
    return PolyCurve::moment(j.at("dim").get<int>());
  }
  int d = j.at("dim").get<int>();
  auto const& rows = j.at("coeffs");
  if(int(rows.size()) != d)
    throw ConfigError("coeffs must have dim rows");
  std::vector<std::vector<mpq_class>> c;
  for(auto const& row : rows)
  {
    std::vector<mpq_class> r;
    for(auto const& v : row)
      r.push_back(v.is_string() ? parse_rational(v.get<std::string>())
                                : (v.is_number_integer() ? mpq_class(v.get<long>())
                                                         : rational_from_double(v.get<double>())));
    c.push_back(std::move(r));
  }
  return PolyCurve(std::move(c));
}

nlohmann::json curve_to_json(PolyCurve const& c)
{
  nlohmann::json rows = nlohmann::json::array();
  for(auto const& comp : c.components())
  {
    nlohmann::json r = nlohmann::json::array();
    for(int k = 0; k <= c.degree(); ++k)
      r.push_back(comp.coeff(k).get_str());
    rows.push_back(r);
  }
  return {{"dim", c.dim()}, {"coeffs", rows}};
}

}
