// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <acl/chart.hpp>
#include <acl/curves.hpp>
#include <acl/decomposition.hpp>
#include <acl/errors.hpp>
#include <acl/extremal.hpp>
#include <acl/jacobian.hpp>
#include <acl/operator.hpp>
#include <acl/refinement.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace acl;

namespace
{

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void verdict(int id, bool pass, std::string const& detail)
{
  std::printf("criterion %d: %s  %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if(!pass)
    ++failures;
}

template <typename... T>
std::string fmt(char const* f, T... args)
{
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Averaging unit_moment(int d)
{
  return Averaging{PolyCurve::moment(d), WeightedMeasure(d, 0), 0.0, 1.0, 256};
}

std::vector<double> dyadic(double start, int count)
{
  std::vector<double> v;
  for(int i = 0; i < count; ++i)
    v.push_back(std::ldexp(start, -i));
  return v;
}

PolyCurve random_curve(std::mt19937_64& rng, int d, int n)
{
  std::uniform_int_distribution<int> num(-5, 5), den(1, 3);
  while(true)
  {
    std::vector<std::vector<mpq_class>> c(d, std::vector<mpq_class>(n + 1));
    for(auto& row : c)
      for(auto& v : row)
      {
        v = mpq_class(num(rng), den(rng));
        v.canonicalize();
      }
    if(c[d - 1][n] == 0)
      c[d - 1][n] = 1;
    try
    {
      return PolyCurve(c);
    }
    catch(DegenerateCurve const&)
    {
    }
  }
}

// Corpus shared by criteria 3 and 9.
std::vector<PolyCurve> curve_corpus()
{
  std::mt19937_64 rng(2024);
  std::vector<PolyCurve> v;
  for(int i = 0; i < 20; ++i)
  {
    int d = 2 + i % 2;
    int n = d + int(rng() % (6 - d));
    v.push_back(random_curve(rng, d, n));
  }
  return v;
}

struct Chain
{
  bool ok = false;
  std::string error;
  WeakTypeReport report;
};

std::map<std::pair<int, uint64_t>, Chain> chainCache;

Chain const& chain(int d, uint64_t seed)
{
  auto key = std::make_pair(d, seed);
  auto it = chainCache.find(key);
  if(it != chainCache.end())
    return it->second;
  Chain c;
  try
  {
    RefinementInstance I = refinement_instance(d, seed);
    c.report = weak_type_chain(I.A, I.E, I.F);
    c.ok = !c.report.shortCircuit;
    if(!c.ok)
      c.error = "alpha <= beta";
  }
  catch(Error const& e)
  {
    c.error = e.what();
  }
  return chainCache[key] = c;
}

std::vector<uint64_t> const d2Seeds{100, 101, 102, 103, 104, 105, 106, 107, 108, 109};
std::vector<uint64_t> const d3Seeds{100, 101, 102, 103, 104};

void criterion1()
{
  auto t0 = Clock::now();
  Averaging A = unit_moment(2);
  FamilyOptions opt{512, 64, 64};
  std::vector<double> ds = dyadic(0.25, 5), mR, mSuper, mF;
  try
  {
    for(double dl : ds)
    {
      FamilyPair b = extremizer_family(Family::boxR, dl, A, opt);
      FamilyPair a = extremizer_family(Family::adjointF, dl, A, opt);
      mR.push_back(b.stats.measureE);
      mSuper.push_back(b.stats.measureF);
      mF.push_back(a.stats.measureF);
    }
  }
  catch(Error const& e)
  {
    verdict(1, false, e.what());
    return;
  }
  double sR = loglog_slope(ds, mR), sS = loglog_slope(ds, mSuper), sF = loglog_slope(ds, mF);
  double t = seconds_since(t0);
  bool pass = std::abs(sR - 3) <= 0.1 && std::abs(sF - 3) <= 0.15 && sS >= 3 - 0.15 && t <= 300;
  verdict(1, pass, fmt("slope |R| %.4f (3 +- 0.1), |F(delta)| %.4f (3 +- 0.15), superlevel %.4f (>= 2.85), %.1f s (<= 300)",
                       sR, sF, sS, t));
}

void criterion2()
{
  auto t0 = Clock::now();
  std::vector<Family> fams{Family::boxR, Family::ballB, Family::neighborhoodF, Family::adjointF,
                           Family::translates};
  RieszDiagram D;
  try
  {
    D = riesz_diagram(unit_moment(2), fams, dyadic(0.25, 5), 17, 17, 0.05, FamilyOptions{512, 64, 64});
  }
  catch(Error const& e)
  {
    verdict(2, false, e.what());
    return;
  }
  double t = seconds_since(t0);
  double frac = D.tested ? double(D.agree) / D.tested : 0.0;
  verdict(2, frac >= 0.95 && t <= 1800,
          fmt("%d / %d lattice points agree (%.1f%%, >= 95%%), %.1f s (<= 1800)", D.agree, D.tested,
              100 * frac, t));
}

void criterion3(std::vector<PolyCurve> const& corpus)
{
  double minGeo = INFINITY;
  int intervals = 0;
  std::string err;
  for(size_t i = 0; i < corpus.size() && err.empty(); ++i)
  {
    try
    {
      for(auto const& iv : decompose(corpus[i]))
      {
        DecompInterval c = certify_geometric(corpus[i], iv, 100000, 7 + i);
        minGeo = std::min(minGeo, c.geoConstant);
        ++intervals;
      }
    }
    catch(Error const& e)
    {
      err = "curve " + std::to_string(i) + ": " + e.what();
    }
  }
  // closed-form witnesses
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.01, 8);
  PolyCurve h = PolyCurve::moment(2);
  PolyCurve cubic(std::vector<std::vector<mpq_class>>{{0, 1, 0, 0}, {0, 0, 0, 1}});
  double wMoment = 0, wCubic = 0;
  for(int k = 0; k < 10000; ++k)
  {
    double a = U(rng), b = U(rng);
    if(std::abs(a - b) < 1e-6)
      continue;
    Eigen::Vector2d t(std::min(a, b), std::max(a, b));
    wMoment = std::max(wMoment, std::abs(geometric_ratio(h, t) - 1));
    wCubic = std::max(wCubic, std::abs(geometric_ratio(cubic, t) - (a + b) / (2 * std::sqrt(a * b))));
  }
  bool pass = err.empty() && minGeo > 1e-6 && wMoment <= 1e-9 && wCubic <= 1e-9;
  verdict(3, pass,
          err.empty() ? fmt("%d intervals over 20 curves, min geoConstant %.4g (> 1e-6); witness errors %.2g, %.2g (<= 1e-9)",
                            intervals, minGeo, wMoment, wCubic)
                      : err);
}

struct TowerRun
{
  double seconds = 0;
  bool uOk = false, towerOk = false, colours = false, separation = false;
  double minRatio = 0, minSep = 0;
  std::string failure;
};

TowerRun tower_run(int d, uint64_t seed)
{
  TowerRun r;
  auto t0 = Clock::now();
  try
  {
    RefinementInstance I = refinement_instance(d, seed);
    RefineOptions opt;
    IncidenceSequence S = build_U_sequence(make_incidence_grid(I.A, I.E, I.F, opt.nt));
    USequenceCheck uc = verify_U_sequence(S);
    r.uOk = uc.ok();
    r.minRatio = uc.ratio.empty() ? 0 : *std::min_element(uc.ratio.begin(), uc.ratio.end());
    if(!uc.failures.empty())
      r.failure = uc.failures[0];
    Tower T = refine_tower(grow_initial_tower(S, opt), opt.delta);
    TowerReport R = check_tower(T);
    r.towerOk = R.ok();
    r.minSep = R.minSeparation;
    r.separation = R.minSeparation >= 1e-3;
    r.colours = R.dichotomy;
    for(int k = 2; k <= T.depth(); k += 2)
      r.colours = r.colours && T.pre[k] != PreColour::none;
    if(!R.failures.empty() && r.failure.empty())
      r.failure = R.failures[0];
  }
  catch(Error const& e)
  {
    r.failure = e.what();
  }
  r.seconds = seconds_since(t0);
  return r;
}

void criterion4()
{
  int ok = 0, total = 0;
  double worstRatio = INFINITY, worstSep = INFINITY, worstTime = 0;
  std::string firstFailure;
  auto one = [&](int d, uint64_t seed) {
    TowerRun r = tower_run(d, seed);
    bool good = r.uOk && r.minRatio >= 0.25 && r.towerOk && r.colours && r.separation &&
                (d != 2 || r.seconds <= 600);
    ++total;
    ok += good;
    worstRatio = std::min(worstRatio, r.minRatio);
    worstSep = std::min(worstSep, r.minSep);
    if(d == 2)
      worstTime = std::max(worstTime, r.seconds);
    if(!good && firstFailure.empty())
      firstFailure = fmt("d=%d seed=%llu: ", d, (unsigned long long)seed) + r.failure;
  };
  for(uint64_t s : d2Seeds)
    one(2, s);
  for(size_t i = 0; i < 3; ++i)
    one(3, d3Seeds[i]);
  verdict(4, ok == total,
          fmt("%d / %d instances; min mass ratio %.4f (>= 0.25), min separation %.4g (>= 1e-3), slowest d=2 %.1f s (<= 600)",
              ok, total, worstRatio, worstSep, worstTime) +
              (firstFailure.empty() ? "" : "; " + firstFailure));
}

void criterion5()
{
  std::vector<double> cs;
  double modelErr = 0;
  int minPoints = 1 << 30;
  std::string err;
  for(uint64_t s : d3Seeds)
  {
    Chain const& c = chain(3, s);
    if(!c.ok)
    {
      err = fmt("seed %llu: ", (unsigned long long)s) + c.error;
      break;
    }
    cs.push_back(c.report.cMeasured);
    modelErr = std::max(modelErr, c.report.modelMaxRelErr);
    minPoints = std::min(minPoints, c.report.modelPoints);
  }
  if(!err.empty())
  {
    verdict(5, false, err);
    return;
  }
  double mean = 0;
  for(double c : cs)
    mean += c;
  mean /= cs.size();
  double spread = 0, cmin = INFINITY;
  for(double c : cs)
  {
    spread = std::max(spread, std::abs(c - mean) / mean);
    cmin = std::min(cmin, c);
  }
  bool pass = cmin > 0 && spread <= 0.2 && minPoints >= 500 && modelErr <= 1e-6;
  std::ostringstream os;
  for(double c : cs)
    os << " " << c;
  verdict(5, pass,
          fmt("c = |E| / (alpha^5 beta):%s; max deviation from mean %.1f%% (<= 20%%); model identity max rel err %.2g at >= %d points (<= 1e-6, 500)",
              os.str().c_str(), 100 * spread, modelErr, minPoints));
}

void criterion6()
{
  double minJac = INFINITY, maxErr = 0;
  int points = 0, runs = 0, blue = 0;
  std::string err;
  auto one = [&](int d, uint64_t s) {
    Chain const& c = chain(d, s);
    if(!c.ok)
    {
      if(err.empty())
        err = fmt("d=%d seed=%llu: ", d, (unsigned long long)s) + c.error;
      return;
    }
    ++runs;
    blue += c.report.n > 0;
    minJac = std::min(minJac, c.report.minJacRatio);
    maxErr = std::max(maxErr, c.report.maxErrorRatio);
    points += c.report.errorSplitPoints;
  };
  for(uint64_t s : d2Seeds)
    one(2, s);
  for(size_t i = 0; i < 3; ++i)
    one(3, d3Seeds[i]);
  bool pass = err.empty() && minJac > 0 && maxErr <= 0.5 && points > 0;
  verdict(6, pass,
          err.empty() ? fmt("%d towers (%d with blue indices); min jaclem1 ratio %.4g (> 0); max |E_sigma| / |Delta J_P| %.4g over %d D(tau) points (<= 0.5)",
                            runs, blue, minJac, maxErr, points)
                      : err);
}

void criterion7()
{
  std::mt19937_64 rng(77);
  std::normal_distribution<double> N(0, 1);
  double c0 = CM(0), c1 = 0;
  std::string err;
  try
  {
    c1 = compute_CM(1).value;
  }
  catch(Error const& e)
  {
    err = e.what();
  }
  int checks = 0, bad = 0;
  auto poly = [&](int M) {
    std::vector<double> p(M + 1);
    for(auto& v : p)
      v = N(rng);
    return p;
  };
  for(int M = 0; M <= 6 && err.empty(); ++M)
  {
    try
    {
      double e1 = derive_c0(M, 1), e2 = derive_c0(M, 2);
      for(int i = 0; i < 1000; ++i)
      {
        bad += !truncation_check(poly(M), e1).ok;
        ++checks;
      }
      for(int i = 0; i < 1000; ++i)
      {
        // dense bivariate for degree <= 4, every tenth sample
        if(M <= 4 && i % 10 == 0)
        {
          Eigen::MatrixXd c = Eigen::MatrixXd::Zero(M + 1, M + 1);
          for(int a = 0; a <= M; ++a)
            for(int b = 0; a + b <= M; ++b)
              c(a, b) = N(rng);
          bad += !truncation_check_bivariate(c, e2).ok;
        }
        else
          bad += !truncation_check_separable({poly(M), poly(M)}, e2).ok;
        ++checks;
      }
    }
    catch(Error const& e)
    {
      err = e.what();
    }
  }
  double eq = 0;
  for(double eps : {0.01, 1.0 / 12, 0.2})
  {
    TruncationCheck t = truncation_check({1.0}, eps);
    eq = std::max({eq, std::abs(t.lhs - t.rhs), std::abs(t.lhs - 2 * eps)});
  }
  bool pass = err.empty() && c0 == 1.0 && std::abs(c1 - (1 + std::sqrt(2.0))) <= 1e-3 && bad == 0 && eq <= 1e-12;
  verdict(7, pass,
          err.empty() ? fmt("C_0 = %.17g, C_1 = %.6f (1+sqrt2 +- 1e-3); %d / %d truncation checks fail; equality case error %.2g (<= 1e-12)",
                            c0, c1, bad, checks, eq)
                      : err);
}

void criterion8()
{
  std::mt19937_64 rng(88);
  std::uniform_real_distribution<double> U(-1, 1);
  int worst = 0, counted = 0, resampled = 0;
  for(int m = 0; m < 50; ++m)
  {
    BiPoly f, g;
    f.c = g.c = Eigen::MatrixXd::Zero(3, 3);
    for(int i = 0; i < 3; ++i)
      for(int j = 0; i + j <= 2; ++j)
      {
        f.c(i, j) = U(rng);
        g.c(i, j) = U(rng);
      }
    for(int k = 0; k < 100;)
    {
      Eigen::Vector2d target(U(rng), U(rng));
      try
      {
        worst = std::max(worst, count_preimages_2d(f, g, target, 20, 5.0));
        ++counted;
        ++k;
      }
      catch(NonGenericTarget const&)
      {
        ++resampled;
      }
    }
  }
  BiPoly x2, y2;
  x2.c = Eigen::MatrixXd::Zero(3, 1);
  x2.c(2, 0) = 1;
  y2.c = Eigen::MatrixXd::Zero(1, 3);
  y2.c(0, 2) = 1;
  int squares = count_preimages_2d(x2, y2, Eigen::Vector2d(1, 1));
  verdict(8, worst <= bezout_bound({2, 2}) && squares == 4,
          fmt("max preimages %d over %d targets (<= 4, %d non-generic resampled); (t1^2, t2^2) at (1,1): %d (== 4)",
              worst, counted, resampled, squares));
}

void criterion9(std::vector<PolyCurve> const& corpus)
{
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> U(-2, 2);
  double torsionErr = 0;
  int torsionPoints = 0, torsionBad = 0;
  for(auto const& P : corpus)
    for(int i = 0; i < 100; ++i)
    {
      double t = U(rng);
      double L = torsion(P, t), fd = torsion_fd(P, t);
      double rel = std::abs(fd - L) / std::abs(L);
      torsionErr = std::max(torsionErr, rel);
      torsionBad += !(rel <= 1e-9);
      ++torsionPoints;
    }
  double phiErr = 0, gErr = 0;
  int phiBad = 0, gBad = 0, runs = 0;
  std::string err;
  auto one = [&](int d, uint64_t s) {
    Chain const& c = chain(d, s);
    if(!c.ok)
    {
      if(err.empty())
        err = fmt("d=%d seed=%llu: ", d, (unsigned long long)s) + c.error;
      return;
    }
    ++runs;
    phiErr = std::max(phiErr, c.report.phiMaxRelErr);
    gErr = std::max(gErr, c.report.gMaxRelErr);
    phiBad += !(c.report.phiMaxRelErr <= 1e-6);
    gBad += !(c.report.gMaxRelErr <= 1e-4);
  };
  for(uint64_t s : d2Seeds)
    one(2, s);
  for(uint64_t s : d3Seeds)
    one(3, s);
  int fails = torsionBad + phiBad + gBad;
  verdict(9, err.empty() && fails == 0,
          err.empty() ? fmt("torsion %.2g at %d points (1e-9); phi %.2g, G_sigma %.2g over %d chains (1e-6, 1e-4); failures = %d",
                            torsionErr, torsionPoints, phiErr, gErr, runs, fails)
                      : err);
}

}

int main()
{
  auto t0 = Clock::now();
  std::vector<PolyCurve> corpus = curve_corpus();
  std::vector<std::function<void()>> steps{
      criterion1, criterion2, [&] { criterion3(corpus); }, criterion4, criterion5, criterion6,
      criterion7, criterion8, [&] { criterion9(corpus); }};
  for(auto const& s : steps)
    s();
  std::printf("%d of 9 criteria failed, %.0f s total\n", failures, seconds_since(t0));
  return failures ? 1 : 0;
}
