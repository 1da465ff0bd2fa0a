#pragma once

#include <gmpxx.h>

#include <string>
#include <utility>
#include <vector>

namespace acl
{

// Univariate polynomial with exact rational coefficients, c[i] multiplies t^i.
// The coefficient vector is kept trimmed: no trailing zeros, empty for 0.
class QPoly
{
public:
  QPoly() = default;
  explicit QPoly(std::vector<mpq_class> c);
  static QPoly constant(mpq_class const& c);
  static QPoly monomial(int k, mpq_class const& c = 1);

  int degree() const { return int(c_.size()) - 1; }
  bool isZero() const { return c_.empty(); }
  std::vector<mpq_class> const& coeffs() const { return c_; }
  mpq_class coeff(int i) const;
  mpq_class lead() const { return c_.empty() ? mpq_class(0) : c_.back(); }

  mpq_class operator()(mpq_class const& t) const;
  double operator()(double t) const;

  QPoly derivative(int order = 1) const;
  // p(a + s t)
  QPoly compose_affine(mpq_class const& a, mpq_class const& s) const;

  QPoly& operator+=(QPoly const& o);
  QPoly& operator-=(QPoly const& o);
  QPoly& operator*=(QPoly const& o);
  QPoly& operator*=(mpq_class const& s);

  friend QPoly operator+(QPoly a, QPoly const& b) { return a += b; }
  friend QPoly operator-(QPoly a, QPoly const& b) { return a -= b; }
  friend QPoly operator*(QPoly a, QPoly const& b) { return a *= b; }
  friend QPoly operator*(QPoly a, mpq_class const& s) { return a *= s; }
  friend QPoly operator-(QPoly a) { return a *= mpq_class(-1); }
  friend bool operator==(QPoly const& a, QPoly const& b) { return a.c_ == b.c_; }

  std::string str() const;

private:
  void trim();
  std::vector<mpq_class> c_;
};

// Euclidean division a = q*b + r, deg r < deg b.
std::pair<QPoly, QPoly> divmod(QPoly const& a, QPoly const& b);
QPoly gcd(QPoly a, QPoly b);
QPoly monic(QPoly const& p);

// Square-free factorisation p = c * prod_i f_i^i (Yun); entry i-1 holds f_i.
std::vector<QPoly> squarefree_factors(QPoly const& p);

std::vector<QPoly> sturm_sequence(QPoly const& p);
// Number of distinct real roots of p in (a, b]; p must be square-free.
int sturm_count(std::vector<QPoly> const& seq, mpq_class const& a, mpq_class const& b);

struct RealRoot
{
  mpq_class lo, hi;   // isolating interval, root in [lo, hi]
  mpq_class approx;   // midpoint after refinement
  int multiplicity;
  double value() const { return approx.get_d(); }
};

// All real roots with multiplicities, sorted, isolating intervals refined to
// width below 2^-bits.
std::vector<RealRoot> real_roots(QPoly const& p, int bits = 80);

mpq_class rational_from_double(double x);
mpq_class parse_rational(std::string const& s);

}
