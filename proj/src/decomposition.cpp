#include <acl/decomposition.hpp>
#include <acl/errors.hpp>
#include <acl/jacobian.hpp>
#include <acl/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>

namespace acl
{

namespace
{

struct RootInfo
{
  mpq_class exact;
  double value;
  int multiplicity;
};

std::vector<double> comparability_samples(double lo, double hi)
{
  std::vector<double> s;
  int n = 256;
  double w = hi - lo;
  for(int i = 0; i < n; ++i)
    s.push_back(lo + w * (i + 0.5) / n);
  for(int k = 1; k <= 40; ++k)
  {
    double u = std::ldexp(1.0, -k);
    s.push_back(lo + w * u);
    s.push_back(hi - w * u);
  }
  return s;
}

void assign_center(std::vector<RootInfo> const& roots, DecompInterval& iv)
{
  double best = std::numeric_limits<double>::infinity();
  RootInfo const* pick = nullptr;
  for(auto const& r : roots)
  {
    if(r.value > iv.lo && r.value < iv.hi)
      continue;
    double dist = r.value <= iv.lo ? iv.lo - r.value : r.value - iv.hi;
    if(dist < best)
    {
      best = dist;
      pick = &r;
    }
  }
  if(pick)
  {
    iv.b = pick->exact;
    iv.K = pick->multiplicity;
  }
  else
  {
    iv.b = iv.hi <= 0 ? rational_from_double(iv.hi) : rational_from_double(iv.lo);
    iv.K = 0;
  }
}

}

void fit_monomial_model(PolyCurve const& curve, DecompInterval& iv)
{
  QPoly const& L = curve.torsion_poly();
  double b = iv.center();
  std::vector<double> g;
  for(double t : comparability_samples(iv.lo, iv.hi))
  {
    double dist = std::abs(t - b);
    double v = std::abs(L(t));
    if(dist == 0 || v == 0)
      continue;
    g.push_back(std::log(v) - iv.K * std::log(dist));
  }
  if(g.empty())
    throw ComparabilityFailure("no usable samples");
  double mean = 0;
  for(double x : g)
    mean += x;
  mean /= g.size();
  iv.D = std::exp(mean);

  // Extremes of |L(t)| / |t - b|^K on [lo, hi] sit at the endpoints or at
  // roots of L'(t)(t - b) - K L(t).
  QPoly lin(std::vector<mpq_class>{-iv.b, 1});
  QPoly crit = L.derivative() * lin - L * mpq_class(iv.K);
  double w = iv.hi - iv.lo;
  std::vector<double> pts;
  for(double t : {iv.lo, iv.hi})
    pts.push_back(std::abs(t - b) < std::ldexp(w, -40) ? t + (t == iv.lo ? 1 : -1) * std::ldexp(w, -40) : t);
  if(!crit.isZero() && crit.degree() > 0)
    for(auto const& r : real_roots(crit))
      if(r.value() > iv.lo && r.value() < iv.hi)
        pts.push_back(r.value());
  double mn = INFINITY, mx = 0;
  for(double t : pts)
  {
    double v = std::abs(L(t)) / std::pow(std::abs(t - b), iv.K);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  iv.cLow = mn / iv.D;
  iv.cHigh = mx / iv.D;
}

std::vector<DecompInterval> decompose(PolyCurve const& curve, double clipRadius, int maxIntervals)
{
  QPoly const& L = curve.torsion_poly();
  if(L.isZero())
    throw DegenerateCurve("torsion vanishes identically");
  std::vector<RootInfo> roots;
  if(L.degree() >= 1)
    for(auto const& r : real_roots(L))
      roots.push_back({r.approx, r.value(), r.multiplicity});

  std::vector<double> cuts{-clipRadius, 0.0, clipRadius};
  for(auto const& r : roots)
    if(r.value > -clipRadius && r.value < clipRadius)
      cuts.push_back(r.value);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end(),
                         [](double a, double b) { return std::abs(a - b) < 1e-15; }),
             cuts.end());

  std::vector<DecompInterval> todo, done;
  for(size_t i = 0; i + 1 < cuts.size(); ++i)
  {
    DecompInterval iv;
    iv.lo = cuts[i];
    iv.hi = cuts[i + 1];
    todo.push_back(iv);
  }
  std::reverse(todo.begin(), todo.end());
  int total = int(todo.size());
  while(!todo.empty())
  {
    DecompInterval iv = todo.back();
    todo.pop_back();
    assign_center(roots, iv);
    fit_monomial_model(curve, iv);
    if(iv.cHigh / iv.cLow <= 4.0)
    {
      done.push_back(iv);
      continue;
    }
    if(total + 1 > maxIntervals)
    {
      std::ostringstream os;
      os << "budget exhausted at (" << iv.lo << ", " << iv.hi << ") with cHigh/cLow = "
         << iv.cHigh / iv.cLow;
      throw ComparabilityFailure(os.str());
    }
    ++total;
    double mid = 0.5 * (iv.lo + iv.hi);
    DecompInterval left = iv, right = iv;
    left.hi = mid;
    right.lo = mid;
    todo.push_back(right);
    todo.push_back(left);
  }
  std::sort(done.begin(), done.end(),
            [](DecompInterval const& a, DecompInterval const& b) { return a.lo < b.lo; });
  return done;
}

double geometric_ratio(PolyCurve const& curve, Eigen::Ref<const Eigen::VectorXd> const& t)
{
  int d = curve.dim();
  double prodL = 1;
  for(int i = 0; i < d; ++i)
    prodL *= std::pow(std::abs(torsion(curve, t(i))), 1.0 / d);
  return std::abs(jp(curve, t)) / (prodL * std::abs(vandermonde(t)));
}

DecompInterval certify_geometric(PolyCurve const& curve, DecompInterval iv, int samples, uint64_t seed)
{
  int d = curve.dim();
  double w = iv.width();
  double vfloor = 1e-12 * std::pow(w, d * (d - 1) / 2.0);
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd witness;
  std::mutex mu;
  parallel_for(samples, [&](int64_t b, int64_t e) {
    double localBest = std::numeric_limits<double>::infinity();
    Eigen::VectorXd localW;
    Eigen::VectorXd t(d);
    for(int64_t i = b; i < e; ++i)
    {
      std::mt19937_64 rng(derive_seed(seed, uint64_t(i)));
      std::uniform_real_distribution<double> U(iv.lo, iv.hi);
      for(int k = 0; k < d; ++k)
        t(k) = U(rng);
      std::sort(t.data(), t.data() + d);
      if(std::abs(vandermonde(t)) < vfloor)
        continue;
      double r = geometric_ratio(curve, t);
      if(r < localBest || (r == localBest && localW.size() == 0))
      {
        localBest = r;
        localW = t;
      }
    }
    std::lock_guard<std::mutex> lock(mu);
    if(localBest < best)
    {
      best = localBest;
      witness = localW;
    }
  });
  if(witness.size() && best < 1e-9)
  {
    std::ostringstream os;
    os << "ratio " << best << " at tuple " << witness.transpose();
    throw GeometricInequalityViolation(os.str());
  }
  iv.geoConstant = std::isfinite(best) ? best : 0.0;
  iv.witness = witness;
  iv.certified = true;
  return iv;
}

ReducedSetting reduce_to_unit_interval(PolyCurve const& curve, DecompInterval const& iv)
{
  int d = curve.dim();
  mpq_class lo = rational_from_double(iv.lo), hi = rational_from_double(iv.hi);
  mpq_class w = hi - lo;
  mpq_class scale = iv.b <= lo ? w : mpq_class(-w);
  mpq_class nlo, nhi;
  if(iv.b <= lo)
  {
    nlo = (lo - iv.b) / w;
    nhi = (hi - iv.b) / w;
  }
  else
  {
    nlo = (iv.b - hi) / w;
    nhi = (iv.b - lo) / w;
  }
  PolyCurve q = (iv.b == 0 && scale == 1) ? curve : curve.reparametrized(iv.b, scale);
  double wd = w.get_d();
  double Dq = iv.D * std::pow(wd, d * (d + 1) / 2.0 + iv.K);
  WeightedMeasure m(d, iv.K, std::pow(Dq, 2.0 / (d * (d + 1))));
  return {std::move(q), m, nlo.get_d(), nhi.get_d(), iv.b, scale};
}

}
