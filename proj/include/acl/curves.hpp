#pragma once

#include <acl/poly.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <vector>

namespace acl
{

// Polynomial map R -> R^d with exact rational coefficients.
class PolyCurve
{
public:
  // coeffs[i][k] multiplies t^k in component i.
  explicit PolyCurve(std::vector<std::vector<mpq_class>> coeffs);
  explicit PolyCurve(std::vector<QPoly> components);

  static PolyCurve moment(int d);

  int dim() const { return int(comp_.size()); }
  int degree() const { return degree_; }
  QPoly const& component(int i) const { return comp_[i]; }
  std::vector<QPoly> const& components() const { return comp_; }

  // Coefficients of P^(k) as a d x (n+1) double matrix, cached for k <= n.
  Eigen::MatrixXd const& derivative_table(int k) const { return deriv_[k]; }

  QPoly const& torsion_poly() const { return torsion_; }

  // X o P for an integer/rational matrix X.
  PolyCurve transformed(std::vector<std::vector<mpq_class>> const& X) const;
  // t -> P(a + s t)
  PolyCurve reparametrized(mpq_class const& a, mpq_class const& s) const;

private:
  void init();

  std::vector<QPoly> comp_;
  int degree_ = 0;
  std::vector<Eigen::MatrixXd> deriv_;
  QPoly torsion_;
};

Eigen::VectorXd eval(PolyCurve const& curve, double t, int order = 0);
std::vector<mpq_class> eval_exact(PolyCurve const& curve, mpq_class const& t, int order = 0);

// d x d matrix with columns P^(1)(t) .. P^(d)(t).
Eigen::MatrixXd derivative_matrix(PolyCurve const& curve, double t);

double torsion(PolyCurve const& curve, double t);
QPoly torsion_poly(PolyCurve const& curve);
// det of central k-th differences of P, step h, in exact arithmetic.
double torsion_fd(PolyCurve const& curve, double t, double h = 0x1p-30);

// |L_P(t)|^{2/d(d+1)}
double affine_arclength_weight(PolyCurve const& curve, double t);

// Reduced weight lambda(t) = normalization * t^{2K/d(d+1)} on (0, inf).
struct WeightedMeasure
{
  int d = 2;
  int K = 0;
  double normalization = 1.0;

  WeightedMeasure() = default;
  WeightedMeasure(int d, int K, double normalization = 1.0);

  mpq_class exponent() const;
  mpq_class kappa() const;
  double exponent_d() const { return exponent().get_d(); }
  double kappa_d() const { return kappa().get_d(); }
};

double affine_weight(WeightedMeasure const& m, double t);
double weight_integral(WeightedMeasure const& m, double a, double b);
// Inverse of s -> weight_integral(m, t, s): the s > t with the given mass.
double weight_advance(WeightedMeasure const& m, double t, double mass);

PolyCurve curve_from_json(nlohmann::json const& j);
nlohmann::json curve_to_json(PolyCurve const& c);

}
