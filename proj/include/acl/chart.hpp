#pragma once

#include <acl/curves.hpp>

#include <Eigen/Dense>

#include <memory>
#include <string>
#include <vector>

namespace acl
{

enum class CaseTag
{
  Case1d,    // Case(1,d)
  Case2d1,   // Case(2,d+1)
  Case2d     // Case(2,d)
};

std::string to_string(CaseTag c);

enum class PreColour
{
  none,
  red,
  blue
};

enum class Colour
{
  achromatic,
  red,
  blue
};

// Frozen-variable chart. Indices follow the type-1 tower numbering 1..L
// ("original"); chart labels 1..N coincide with it except in Case(2,d),
// where chart label j is original index j + 1 and original t_1 is frozen.
struct SigmaChart
{
  int d = 0;
  CaseTag tag = CaseTag::Case1d;
  int N = 0, Z = 0, M = 0, m = 0, n = 0, eta = 0;
  int L = 0;   // original indices used
  int R = 0;   // dilation variables r_1..r_R

  std::vector<PreColour> pre;   // original index -> pre-colour, size L + 1
  std::vector<Colour> colours;  // chart label -> colour, size N + 1
  std::vector<int> l, mu, nu;   // chart labels: non-blue, red, pre-blue

  // per original index 1..L: 0 frozen, 1 free (a tau column), 2 blue
  std::vector<int> slotKind;
  std::vector<int> slotTau;     // tau position for free slots
  std::vector<int> slotSigma;   // sigma position for blue slots

  std::shared_ptr<const PolyCurve> curve;
  int K = 0;
  double cprime = 0;            // 2K / d(d+1)
  Eigen::VectorXd x0;
  double r0 = 1, t0 = 0;        // t0 is the frozen t_1 in Case(2,d)
  Eigen::VectorXd sigma;

  int variables() const { return R + M; }
  int rows() const { return tag == CaseTag::Case2d1 ? d + 1 : d; }
};

// zeta, minimal N, case tag, colours and counting identities. evenPre[k]
// holds the pre-colour of original index k (entries for odd k ignored).
SigmaChart select_case(int d, std::vector<PreColour> const& evenPre);

// Original (r_1..r_R, t_1..t_L) from chart variables z = (rho, tau).
struct TowerCoords
{
  Eigen::VectorXd r;   // r(0) = r0, then r_1..r_R
  Eigen::VectorXd t;   // t(0) unused, t_1..t_L
};

TowerCoords chart_inverse(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z);
// Chart variables and sigma from a tower tuple.
Eigen::VectorXd chart_forward(SigmaChart const& c, TowerCoords const& tc, Eigen::VectorXd* sigma = nullptr);

// Phi o phi^{-1}(z): Psi_L, plus r_{L/2} in Case(2,d+1).
Eigen::VectorXd chart_map(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z);

struct JacobianChartEval
{
  CaseTag caseTag;
  Eigen::VectorXd rho, tau, sigma;
  Eigen::MatrixXd matrix;
  double detValue = 0;
  double fdDet = 0;
  double relErr = 0;
  double mainTerm = 0, errorTerm = 0;
};

// Analytic chain-rule Jacobian, cross-checked against five-point differences
// of chart_map (step h). Throws JacobianAssemblyError beyond tol.
JacobianChartEval assemble_G_sigma(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z,
                                   double tol = 1e-4, double h = 1e-3);

// det of d(phi)/d(r, t) by finite differences and its closed form prod tau_nu^{c'}.
struct PhiJacobianCheck
{
  double fd, closed, relErr;
};
PhiJacobianCheck phi_jacobian_check(SigmaChart const& c, TowerCoords const& tc, double h = 1e-6);

struct Interval
{
  double lo, hi;
};

// eps-truncate of (a, b): (a + eps w, b - eps w).
Interval truncate_interval(double a, double b, double eps);

struct TruncatedDomain
{
  std::vector<Interval> box;   // one interval per x variable
  double separation = 0;       // min |tau - x| tau^{c'} / alpha over corners
};

TruncatedDomain truncate_domain(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z,
                                double c0, double alpha);

int x_variable_count(SigmaChart const& c);

struct ErrorSplit
{
  double wp;      // det with substituted columns
  double main;    // Delta(rho) J_P(tau, x)
  double error;   // wp - main
};

// Throws ErrorDominationFailure unless |error| <= |main| / 2.
ErrorSplit error_split(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z,
                       Eigen::Ref<const Eigen::VectorXd> const& x);

// |J_sigma| / (alpha^{d(d+1)/2-M} (beta/alpha)^{(m+n-eta)/2} prod tau_l^{c'})
double jaclem1_check(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z, double alpha,
                     double beta);

// |V(tau)| / (alpha^{M(M-1)/2} (beta/alpha)^{e} prod tau^{-K(M-1)/d(d+1)}),
// e = m/2 for type 1 cases and (m-1)/2 in Case(2,d).
double vandermonde_floor_ratio(SigmaChart const& c, Eigen::Ref<const Eigen::VectorXd> const& z,
                               double alpha, double beta);

// Exponents (a, b) of alpha^a (beta/alpha)^b in the final lower bound.
std::pair<double, double> weak_type_exponents(SigmaChart const& c);

}
