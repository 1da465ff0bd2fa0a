#include <acl/poly.hpp>
#include <acl/errors.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace acl
{

QPoly::QPoly(std::vector<mpq_class> c) : c_(std::move(c)) { trim(); }

QPoly QPoly::constant(mpq_class const& c) { return QPoly({c}); }

QPoly QPoly::monomial(int k, mpq_class const& c)
{
  std::vector<mpq_class> v(k + 1, mpq_class(0));
  v[k] = c;
  return QPoly(std::move(v));
}

void QPoly::trim()
{
  for(auto& x : c_)
    x.canonicalize();
  while(!c_.empty() && c_.back() == 0)
    c_.pop_back();
}

mpq_class QPoly::coeff(int i) const
{
  return (i >= 0 && i < int(c_.size())) ? c_[i] : mpq_class(0);
}

mpq_class QPoly::operator()(mpq_class const& t) const
{
  mpq_class acc = 0;
  for(int i = degree(); i >= 0; --i)
    acc = acc * t + c_[i];
  return acc;
}

double QPoly::operator()(double t) const
{
  double acc = 0.0;
  for(int i = degree(); i >= 0; --i)
    acc = acc * t + c_[i].get_d();
  return acc;
}

QPoly QPoly::derivative(int order) const
{
  std::vector<mpq_class> v = c_;
  for(int k = 0; k < order && !v.empty(); ++k)
  {
    std::vector<mpq_class> w;
    for(size_t i = 1; i < v.size(); ++i)
      w.push_back(v[i] * int(i));
    v = std::move(w);
  }
  return QPoly(std::move(v));
}

QPoly QPoly::compose_affine(mpq_class const& a, mpq_class const& s) const
{
  QPoly lin({a, s});
  QPoly acc;
  for(int i = degree(); i >= 0; --i)
    acc = acc * lin + QPoly::constant(c_[i]);
  return acc;
}

QPoly& QPoly::operator+=(QPoly const& o)
{
  if(o.c_.size() > c_.size())
    c_.resize(o.c_.size(), mpq_class(0));
  for(size_t i = 0; i < o.c_.size(); ++i)
    c_[i] += o.c_[i];
  trim();
  return *this;
}

QPoly& QPoly::operator-=(QPoly const& o)
{
  if(o.c_.size() > c_.size())
    c_.resize(o.c_.size(), mpq_class(0));
  for(size_t i = 0; i < o.c_.size(); ++i)
    c_[i] -= o.c_[i];
  trim();
  return *this;
}

QPoly& QPoly::operator*=(QPoly const& o)
{
  if(isZero() || o.isZero())
  {
    c_.clear();
    return *this;
  }
  std::vector<mpq_class> r(c_.size() + o.c_.size() - 1, mpq_class(0));
  for(size_t i = 0; i < c_.size(); ++i)
    for(size_t j = 0; j < o.c_.size(); ++j)
      r[i + j] += c_[i] * o.c_[j];
  c_ = std::move(r);
  trim();
  return *this;
}

QPoly& QPoly::operator*=(mpq_class const& s)
{
  for(auto& x : c_)
    x *= s;
  trim();
  return *this;
}

std::string QPoly::str() const
{
  if(isZero())
    return "0";
  std::ostringstream os;
  bool first = true;
  for(int i = degree(); i >= 0; --i)
  {
    if(c_[i] == 0)
      continue;
    if(!first)
      os << " + ";
    os << "(" << c_[i].get_str() << ")";
    if(i > 0)
      os << "*t^" << i;
    first = false;
  }
  return os.str();
}

std::pair<QPoly, QPoly> divmod(QPoly const& a, QPoly const& b)
{
  if(b.isZero())
    throw DomainError("polynomial division by zero");
  std::vector<mpq_class> r = a.coeffs();
  int db = b.degree();
  std::vector<mpq_class> q(std::max(0, a.degree() - db + 1), mpq_class(0));
  for(int i = a.degree(); i >= db; --i)
  {
    mpq_class f = r[i] / b.lead();
    q[i - db] = f;
    for(int j = 0; j <= db; ++j)
      r[i - db + j] -= f * b.coeffs()[j];
  }
  return {QPoly(std::move(q)), QPoly(std::move(r))};
}

QPoly monic(QPoly const& p)
{
  if(p.isZero())
    return p;
  return p * mpq_class(1 / p.lead());
}

QPoly gcd(QPoly a, QPoly b)
{
  while(!b.isZero())
  {
    QPoly r = divmod(a, b).second;
    a = std::move(b);
    b = std::move(r);
  }
  return monic(a);
}

std::vector<QPoly> squarefree_factors(QPoly const& p)
{
  std::vector<QPoly> out;
  if(p.degree() < 1)
    return out;
  QPoly dp = p.derivative();
  QPoly a = gcd(p, dp);
  QPoly b = divmod(p, a).first;
  QPoly c = divmod(dp, a).first;
  QPoly d = c - b.derivative();
  while(b.degree() >= 1)
  {
    QPoly g = gcd(b, d);
    out.push_back(g);
    b = divmod(b, g).first;
    c = divmod(d, g).first;
    d = c - b.derivative();
  }
  while(!out.empty() && out.back().degree() < 1)
    out.pop_back();
  return out;
}

std::vector<QPoly> sturm_sequence(QPoly const& p)
{
  std::vector<QPoly> seq{p, p.derivative()};
  while(!seq.back().isZero())
  {
    QPoly r = divmod(seq[seq.size() - 2], seq.back()).second;
    if(r.isZero())
      break;
    seq.push_back(-r);
  }
  return seq;
}

namespace
{

int variations(std::vector<QPoly> const& seq, mpq_class const& x)
{
  int v = 0, last = 0;
  for(auto const& s : seq)
  {
    int sg = sgn(s(x));
    if(sg == 0)
      continue;
    if(last != 0 && sg != last)
      ++v;
    last = sg;
  }
  return v;
}

mpq_class cauchy_bound(QPoly const& p)
{
  mpq_class m = 0;
  for(int i = 0; i < p.degree(); ++i)
  {
    mpq_class r = abs(p.coeffs()[i] / p.lead());
    if(r > m)
      m = r;
  }
  return m + 1;
}

}

int sturm_count(std::vector<QPoly> const& seq, mpq_class const& a, mpq_class const& b)
{
  return variations(seq, a) - variations(seq, b);
}

std::vector<RealRoot> real_roots(QPoly const& p, int bits)
{
  std::vector<RealRoot> roots;
  if(p.isZero())
    throw DomainError("roots of the zero polynomial");
  auto factors = squarefree_factors(p);
  mpq_class width;
  mpz_class two = 1;
  two <<= bits;
  width = mpq_class(1, 1) / mpq_class(two);
  for(size_t m = 0; m < factors.size(); ++m)
  {
    QPoly const& f = factors[m];
    if(f.degree() < 1)
      continue;
    auto seq = sturm_sequence(f);
    mpq_class B = cauchy_bound(f);
    std::vector<std::pair<mpq_class, mpq_class>> stack{{-B, B}};
    while(!stack.empty())
    {
      auto [lo, hi] = stack.back();
      stack.pop_back();
      int n = sturm_count(seq, lo, hi);
      if(n == 0)
        continue;
      if(n > 1)
      {
        mpq_class mid = (lo + hi) / 2;
        stack.push_back({lo, mid});
        stack.push_back({mid, hi});
        continue;
      }
      while(hi - lo > width)
      {
        if(f(hi) == 0)
        {
          lo = hi;
          break;
        }
        mpq_class mid = (lo + hi) / 2;
        if(sturm_count(seq, lo, mid) == 1)
          hi = mid;
        else
          lo = mid;
      }
      if(f(hi) == 0)
        lo = hi;
      RealRoot r{lo, hi, (lo + hi) / 2, int(m) + 1};
      r.approx.canonicalize();
      roots.push_back(r);
    }
  }
  std::sort(roots.begin(), roots.end(),
            [](RealRoot const& a, RealRoot const& b) { return a.approx < b.approx; });
  return roots;
}

mpq_class rational_from_double(double x)
{
  mpq_class q(x);
  q.canonicalize();
  return q;
}

mpq_class parse_rational(std::string const& s)
{
  std::string t;
  for(char ch : s)
    if(!std::isspace(static_cast<unsigned char>(ch)))
      t += ch;
  if(t.empty())
    throw ConfigError("empty rational");
  if(t.find('.') != std::string::npos || t.find('e') != std::string::npos)
    return rational_from_double(std::stod(t));
  if(t[0] == '+')
    t = t.substr(1);
  mpq_class q;
  if(q.set_str(t, 10) != 0)
    throw ConfigError("cannot parse rational '" + s + "'");
  if(q.get_den() == 0)
    throw ConfigError("zero denominator in '" + s + "'");
  q.canonicalize();
  return q;
}

}
