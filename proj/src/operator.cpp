#include <acl/operator.hpp>
#include <acl/errors.hpp>
#include <acl/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>

namespace acl
{

int64_t Grid::size() const
{
  int64_t s = 1;
  for(int a = 0; a < dim(); ++a)
    s *= n(a);
  return s;
}

int64_t Grid::linear(Eigen::Ref<const Eigen::VectorXi> const& idx) const
{
  int64_t off = 0, stride = 1;
  for(int a = 0; a < dim(); ++a)
  {
    int i = idx(a) - lo(a);
    if(i < 0 || i >= n(a))
      return -1;
    off += i * stride;
    stride *= n(a);
  }
  return off;
}

Eigen::VectorXi Grid::index(int64_t linear) const
{
  Eigen::VectorXi idx(dim());
  for(int a = 0; a < dim(); ++a)
  {
    idx(a) = lo(a) + int(linear % n(a));
    linear /= n(a);
  }
  return idx;
}

Grid Grid::covering(Eigen::VectorXd const& h, Eigen::VectorXd const& bmin, Eigen::VectorXd const& bmax)
{
  Grid g;
  g.h = h;
  int d = int(h.size());
  g.lo.resize(d);
  g.n.resize(d);
  for(int a = 0; a < d; ++a)
  {
    g.lo(a) = int(std::floor(bmin(a) / h(a)));
    g.n(a) = int(std::ceil(bmax(a) / h(a))) - g.lo(a) + 1;
  }
  return g;
}

int64_t VoxelSet::count() const
{
  return std::count(v.begin(), v.end(), uint8_t(1));
}

double VoxelSet::measure() const { return double(count()) * voxel_measure(); }

VoxelSet empty_spatial_set(Grid const& g)
{
  VoxelSet s;
  s.grid = g;
  s.layers = 0;
  s.v.assign(g.size(), 0);
  return s;
}

VoxelSet empty_layered_set(Grid const& g, Dilations const& dil)
{
  VoxelSet s;
  s.grid = g;
  s.dil = dil;
  s.layers = dil.n;
  s.v.assign(g.size() * dil.n, 0);
  return s;
}

GriddedFunction zero_field(Grid const& g, Dilations const& dil, int layers)
{
  GriddedFunction f;
  f.grid = g;
  f.dil = dil;
  f.layers = layers;
  f.v.assign(g.size() * std::max(layers, 1), 0.0);
  return f;
}

Quadrature midpoint_quadrature(WeightedMeasure const& m, double a, double b, int Q)
{
  if(a < 0 || b <= a || Q < 1)
    throw DomainError("quadrature needs 0 <= a < b and Q >= 1");
  Quadrature q;
  double dt = (b - a) / Q;
  for(int k = 0; k < Q; ++k)
  {
    double t = a + (k + 0.5) * dt;
    q.t.push_back(t);
    q.w.push_back(affine_weight(m, t) * dt);
  }
  return q;
}

Eigen::VectorXi snapped_shift(PolyCurve const& c, Eigen::VectorXd const& h, double r, double t)
{
  Eigen::VectorXd p = r * eval(c, t, 0);
  Eigen::VectorXi s(p.size());
  for(int a = 0; a < p.size(); ++a)
    s(a) = int(std::lround(p(a) / h(a)));
  return s;
}

namespace
{

struct Bbox
{
  Eigen::VectorXi lo, hi;   // hi exclusive
  bool empty = true;
};

template <typename T>
Bbox support_bbox(Grid const& g, T const* data)
{
  Bbox b;
  int d = g.dim();
  b.lo = g.hi();
  b.hi = g.lo;
  int64_t N = g.size();
  for(int64_t i = 0; i < N; ++i)
  {
    if(data[i] == T(0))
      continue;
    Eigen::VectorXi idx = g.index(i);
    b.lo = b.lo.cwiseMin(idx);
    b.hi = b.hi.cwiseMax(idx + Eigen::VectorXi::Ones(d));
    b.empty = false;
  }
  return b;
}

Eigen::VectorXi strides(Grid const& g)
{
  Eigen::VectorXi s(g.dim());
  int64_t acc = 1;
  for(int a = 0; a < g.dim(); ++a)
  {
    s(a) = int(acc);
    acc *= g.n(a);
  }
  return s;
}

// dst(i) += w * src(i + s) over i in dst box with i + s in the source bbox.
template <typename T>
void accumulate(double* dst, Grid const& dg, Eigen::VectorXi const& dstride, T const* src,
                Grid const& sg, Eigen::VectorXi const& sstride, Bbox const& sb,
                Eigen::VectorXi const& s, double w)
{
  int d = dg.dim();
  Eigen::VectorXi lo = dg.lo.cwiseMax(sb.lo - s);
  Eigen::VectorXi hi = dg.hi().cwiseMin(sb.hi - s);
  for(int a = 0; a < d; ++a)
    if(hi(a) <= lo(a))
      return;
  Eigen::VectorXi idx = lo;
  int len = hi(0) - lo(0);
  while(true)
  {
    int64_t dOff = 0, sOff = 0;
    for(int a = 0; a < d; ++a)
    {
      dOff += int64_t(idx(a) - dg.lo(a)) * dstride(a);
      sOff += int64_t(idx(a) + s(a) - sg.lo(a)) * sstride(a);
    }
    double* dp = dst + dOff;
    T const* sp = src + sOff;
    for(int q = 0; q < len; ++q)
      dp[q] += w * double(sp[q]);
    int a = 1;
    for(; a < d; ++a)
    {
      if(++idx(a) < hi(a))
        break;
      idx(a) = lo(a);
    }
    if(a >= d)
      break;
  }
}

void check_lattice(Grid const& a, Grid const& b)
{
  if(a.dim() != b.dim() || ((a.h - b.h).cwiseAbs().array() > 1e-12 * a.h.array().abs()).any())
    throw ConsistencyError("grids live on different lattices");
}

template <typename T>
GriddedFunction apply_impl(Averaging const& A, Field<T> const& f, Grid const& out,
                           Dilations const& dil, bool requireContainment)
{
  check_lattice(f.grid, out);
  if(f.layers)
    throw ConsistencyError("apply expects a spatial function");
  Quadrature q = A.quadrature();
  GriddedFunction g = zero_field(out, dil, dil.n);
  Bbox sb = support_bbox(f.grid, f.v.data());
  if(sb.empty)
    return g;
  Eigen::VectorXi ds = strides(out), ss = strides(f.grid);
  std::mutex mu;
  std::string failure;
  parallel_for(dil.n, [&](int64_t jb, int64_t je) {
    for(int64_t j = jb; j < je; ++j)
    {
      double r = dil.r(int(j));
      double* layer = g.layer(int(j));
      for(size_t k = 0; k < q.t.size(); ++k)
      {
        Eigen::VectorXi sigma = snapped_shift(A.curve, out.h, r, q.t[k]);
        if(requireContainment)
        {
          Eigen::VectorXi lo = sb.lo + sigma, hi = sb.hi + sigma;
          if((lo.array() < out.lo.array()).any() || (hi.array() > out.hi().array()).any())
          {
            Eigen::VectorXi need = (out.lo - lo).cwiseMax(hi - out.hi()).cwiseMax(0);
            std::ostringstream os;
            os << "translate at r=" << r << ", t=" << q.t[k]
               << " leaves the grid; padding needed (voxels): " << need.transpose();
            std::lock_guard<std::mutex> lock(mu);
            failure = os.str();
            return;
          }
        }
        accumulate(layer, out, ds, f.v.data(), f.grid, ss, sb, Eigen::VectorXi(-sigma), q.w[k]);
      }
    }
  });
  if(!failure.empty())
    throw BoxTooSmall(failure);
  return g;
}

template <typename T>
GriddedFunction adjoint_impl(Averaging const& A, Field<T> const& g, Grid const& out)
{
  check_lattice(g.grid, out);
  if(!g.layers)
    throw ConsistencyError("adjoint_apply expects a layered function");
  Quadrature q = A.quadrature();
  Dilations const& dil = g.dil;
  Eigen::VectorXi ds = strides(out), ss = strides(g.grid);
  std::vector<Bbox> boxes;
  for(int j = 0; j < dil.n; ++j)
    boxes.push_back(support_bbox(g.grid, g.layer(j)));
  int nt = std::max(1, std::min(thread_count(), dil.n));
  std::vector<GriddedFunction> partial(nt, zero_field(out, dil, 0));
  parallel_for(nt, [&](int64_t tb, int64_t te) {
    for(int64_t tid = tb; tid < te; ++tid)
      for(int j = int(tid); j < dil.n; j += nt)
      {
        if(boxes[j].empty)
          continue;
        double r = dil.r(j);
        for(size_t k = 0; k < q.t.size(); ++k)
        {
          Eigen::VectorXi sigma = snapped_shift(A.curve, out.h, r, q.t[k]);
          accumulate(partial[tid].v.data(), out, ds, g.layer(j), g.grid, ss, boxes[j], sigma,
                     q.w[k] * dil.dr());
        }
      }
  });
  GriddedFunction res = std::move(partial[0]);
  for(int t = 1; t < nt; ++t)
    for(size_t i = 0; i < res.v.size(); ++i)
      res.v[i] += partial[t].v[i];
  return res;
}

}

GriddedFunction apply(Averaging const& A, VoxelSet const& f, Grid const& out, Dilations const& dil,
                      bool requireContainment)
{
  return apply_impl<uint8_t>(A, f, out, dil, requireContainment);
}

GriddedFunction apply(Averaging const& A, GriddedFunction const& f, Grid const& out,
                      Dilations const& dil, bool requireContainment)
{
  return apply_impl<double>(A, f, out, dil, requireContainment);
}

GriddedFunction adjoint_apply(Averaging const& A, VoxelSet const& g, Grid const& out)
{
  return adjoint_impl<uint8_t>(A, g, out);
}

GriddedFunction adjoint_apply(Averaging const& A, GriddedFunction const& g, Grid const& out)
{
  return adjoint_impl<double>(A, g, out);
}

BilinearStats bilinear(Averaging const& A, VoxelSet const& E, VoxelSet const& F)
{
  if(!F.layers || E.layers)
    throw ConsistencyError("bilinear expects spatial E and layered F");
  GriddedFunction AE = apply(A, E, F.grid, F.dil);
  double acc = 0;
  for(size_t i = 0; i < F.v.size(); ++i)
    if(F.v[i])
      acc += AE.v[i];
  BilinearStats s;
  s.value = acc * F.voxel_measure();
  s.measureE = E.measure();
  s.measureF = F.measure();
  if(!(s.value > 0))
    throw EmptyIncidence("<A chi_E, chi_F> = 0");
  s.alpha = s.value / s.measureF;
  s.beta = s.value / s.measureE;
  s.kappa = A.measure.kappa_d();
  return s;
}

double bilinear_dual(Averaging const& A, VoxelSet const& E, VoxelSet const& F)
{
  GriddedFunction AF = adjoint_apply(A, F, E.grid);
  double acc = 0;
  for(size_t i = 0; i < E.v.size(); ++i)
    if(E.v[i])
      acc += AF.v[i];
  return acc * E.voxel_measure();
}

VoxelSet superlevel(GriddedFunction const& f, double threshold)
{
  VoxelSet s;
  s.grid = f.grid;
  s.dil = f.dil;
  s.layers = f.layers;
  s.v.resize(f.v.size());
  for(size_t i = 0; i < f.v.size(); ++i)
    s.v[i] = f.v[i] > threshold ? 1 : 0;
  return s;
}

Family family_from_string(std::string const& s)
{
  if(s == "boxR")
    return Family::boxR;
  if(s == "ballB")
    return Family::ballB;
  if(s == "neighborhoodF")
    return Family::neighborhoodF;
  if(s == "adjointF")
    return Family::adjointF;
  if(s == "translates")
    return Family::translates;
  throw ConfigError("unknown family '" + s + "'");
}

std::string to_string(Family f)
{
  switch(f)
  {
  case Family::boxR: return "boxR";
  case Family::ballB: return "ballB";
  case Family::neighborhoodF: return "neighborhoodF";
  case Family::adjointF: return "adjointF";
  case Family::translates: return "translates";
  }
  return "?";
}

namespace
{

struct CurveExtent
{
  Eigen::VectorXd pmin, pmax;   // of P over [a, b]
  double speed = 0;             // max |P'|
  double radius = 0;            // max |P|
  double lambdaMin = 0;
};

CurveExtent curve_extent(Averaging const& A)
{
  int d = A.curve.dim();
  CurveExtent e;
  e.pmin = Eigen::VectorXd::Constant(d, 1e300);
  e.pmax = Eigen::VectorXd::Constant(d, -1e300);
  e.lambdaMin = 1e300;
  int n = 4000;
  for(int i = 0; i <= n; ++i)
  {
    double t = A.a + (A.b - A.a) * i / n;
    Eigen::VectorXd p = eval(A.curve, t, 0);
    e.pmin = e.pmin.cwiseMin(p);
    e.pmax = e.pmax.cwiseMax(p);
    e.speed = std::max(e.speed, eval(A.curve, t, 1).norm());
    e.radius = std::max(e.radius, p.norm());
    if(t > 0 || A.measure.K == 0)
      e.lambdaMin = std::min(e.lambdaMin, affine_weight(A.measure, t));
  }
  return e;
}

// Bounding box of {r P(t)} for r in [rlo, rhi].
void dilated_box(CurveExtent const& e, double rlo, double rhi, Eigen::VectorXd& lo, Eigen::VectorXd& hi)
{
  lo = (rlo * e.pmin).cwiseMin(rhi * e.pmin);
  hi = (rlo * e.pmax).cwiseMax(rhi * e.pmax);
}

VoxelSet ball_set(Grid const& g, Eigen::VectorXd const& centre, double radius)
{
  VoxelSet s = empty_spatial_set(g);
  for(int64_t i = 0; i < g.size(); ++i)
    if((g.node(g.index(i)) - centre).norm() <= radius)
      s.v[i] = 1;
  return s;
}

void require_resolution(double feature, double h, char const* what)
{
  if(feature < 2 * h)
  {
    std::ostringstream os;
    os << what << " of size " << feature << " is below two voxels (" << h << ")";
    throw ResolutionError(os.str());
  }
}

// Rejects superlevel sets that reach the boundary of their grid.
void require_interior(VoxelSet const& s, char const* what)
{
  Grid const& g = s.grid;
  for(int k = 0; k < s.layer_count(); ++k)
  {
    uint8_t const* m = s.layer(k);
    for(int64_t i = 0; i < g.size(); ++i)
    {
      if(!m[i])
        continue;
      Eigen::VectorXi idx = g.index(i) - g.lo;
      for(int a = 0; a < g.dim(); ++a)
        if(idx(a) == 0 || idx(a) == g.n(a) - 1)
          throw BoxTooSmall(std::string(what) + " touches the grid boundary");
    }
  }
}

FamilyPair family_boxR(double delta, Averaging const& A0, FamilyOptions const& opt)
{
  int d = A0.curve.dim();
  Averaging A = A0;
  A.Q = int(std::lround(opt.nodesPerDelta * (A.b - A.a) / delta));
  // a t-window of weight delta/8 inside R(delta) forces t <= T_r
  double lmax = affine_weight(A.measure, A.b);
  Eigen::VectorXd bmin(d), bmax(d), h(d);
  for(int j = 1; j <= d; ++j)
  {
    double reach = 0;
    for(double r : {1.0, 2.0})
    {
      double T = delta * std::pow(16.0 * lmax / (r * d), 1.0 / (d - 1)) + delta / (8 * lmax);
      reach = std::max(reach, r * std::pow(T, j));
    }
    double dj = std::pow(delta, j);
    bmin(j - 1) = -2 * dj;
    bmax(j - 1) = 1.25 * reach + 2 * dj;
    h(j - 1) = (bmax(j - 1) - bmin(j - 1)) / (opt.gridN - 1);
    require_resolution(2 * dj, h(j - 1), "R(delta) side");
  }
  Grid gF = Grid::covering(h, bmin, bmax);
  Eigen::VectorXd half(d);
  for(int j = 1; j <= d; ++j)
    half(j - 1) = std::pow(delta, j);
  Grid gE = Grid::covering(h, -half, half);
  VoxelSet E = empty_spatial_set(gE);
  for(int64_t i = 0; i < gE.size(); ++i)
  {
    Eigen::VectorXd x = gE.node(gE.index(i));
    E.v[i] = (x.cwiseAbs().array() <= half.array() * (1 + 1e-12)).all() ? 1 : 0;
  }
  Dilations dil{1.0, 2.0, opt.layers};
  GriddedFunction AE = apply(A, E, gF, dil);
  VoxelSet F = superlevel(AE, delta / 8);
  require_interior(F, "superlevel set of A chi_R");
  FamilyPair fp{Family::boxR, delta, std::move(E), std::move(F), 0, 0, {}};
  fp.predictedE = (2 * half).prod();
  fp.predictedF = fp.predictedE;
  double acc = 0;
  for(size_t i = 0; i < fp.F.v.size(); ++i)
    if(fp.F.v[i])
      acc += AE.v[i];
  fp.stats.value = acc * fp.F.voxel_measure();
  return fp;
}

FamilyPair family_ball(Family kind, double delta, Averaging const& A0, FamilyOptions const& opt)
{
  int d = A0.curve.dim();
  CurveExtent ext = curve_extent(A0);
  Eigen::VectorXd lo, hi;
  dilated_box(ext, 1.0, 2.0, lo, hi);
  lo = lo.cwiseMin(0.0).array() - delta;
  hi = hi.cwiseMax(0.0).array() + delta;
  double hs = (hi - lo).maxCoeff() / (opt.gridN - 1);
  require_resolution(delta, hs, "ball radius");
  Eigen::VectorXd h = Eigen::VectorXd::Constant(d, hs);
  Grid gF = Grid::covering(h, lo, hi);
  Grid gE = Grid::covering(h, Eigen::VectorXd::Constant(d, -delta), Eigen::VectorXd::Constant(d, delta));
  VoxelSet E = ball_set(gE, Eigen::VectorXd::Zero(d), delta);
  Averaging A = A0;
  A.Q = std::max(A0.Q, int(std::ceil(2.0 * ext.speed * (A.b - A.a) / hs)));
  Dilations dil{1.0, 2.0, opt.layers};
  GriddedFunction AE = apply(A, E, gF, dil, true);
  VoxelSet F;
  if(kind == Family::ballB)
  {
    // one-sided t-window for x within delta/3 of r P(t0), r <= 2
    double predicted = ext.lambdaMin * (2 * delta / 3) / (2 * ext.speed);
    F = superlevel(AE, predicted / 2);
  }
  else
  {
    F = empty_layered_set(gF, dil);
    double rad = delta / 3;
    int reach = int(std::ceil(rad / hs));
    for(int j = 0; j < dil.n; ++j)
    {
      double r = dil.r(j);
      uint8_t* m = F.layer(j);
      int nt = int(std::ceil(4 * r * ext.speed * (A.b - A.a) / hs)) + 1;
      for(int s = 0; s <= nt; ++s)
      {
        double t = A.a + (A.b - A.a) * s / nt;
        Eigen::VectorXd c = r * eval(A.curve, t, 0);
        Eigen::VectorXi base(d);
        for(int a = 0; a < d; ++a)
          base(a) = int(std::lround(c(a) / hs));
        Eigen::VectorXi off = Eigen::VectorXi::Constant(d, -reach);
        while(true)
        {
          Eigen::VectorXi idx = base + off;
          int64_t li = gF.linear(idx);
          if(li >= 0 && (gF.node(idx) - c).norm() < rad)
            m[li] = 1;
          int a = 0;
          for(; a < d; ++a)
          {
            if(++off(a) <= reach)
              break;
            off(a) = -reach;
          }
          if(a == d)
            break;
        }
      }
    }
  }
  FamilyPair fp{kind, delta, std::move(E), std::move(F), 0, 0, {}};
  fp.predictedE = fp.E.measure();
  fp.predictedF = std::pow(delta, d - 1);
  double acc = 0;
  for(size_t i = 0; i < fp.F.v.size(); ++i)
    if(fp.F.v[i])
      acc += AE.v[i];
  fp.stats.value = acc * fp.F.voxel_measure();
  return fp;
}

FamilyPair family_adjoint(double delta, Averaging const& A0, FamilyOptions const& opt)
{
  int d = A0.curve.dim();
  CurveExtent ext = curve_extent(A0);
  double c = 1.0 / 8;
  Dilations dil{1.0, 1.0 + c * delta, opt.layers};
  Eigen::VectorXd lo, hi;
  dilated_box(ext, dil.lo, dil.hi, lo, hi);
  Eigen::VectorXd elo = (-hi).cwiseMin(0.0).array() - delta;
  Eigen::VectorXd ehi = (-lo).cwiseMax(0.0).array() + delta;
  double hs = (ehi - elo).maxCoeff() / (opt.gridN - 1);
  require_resolution(delta, hs, "ball radius");
  Eigen::VectorXd h = Eigen::VectorXd::Constant(d, hs);
  Grid gE = Grid::covering(h, elo, ehi);
  Grid gF = Grid::covering(h, Eigen::VectorXd::Constant(d, -delta), Eigen::VectorXd::Constant(d, delta));
  VoxelSet B = ball_set(gF, Eigen::VectorXd::Zero(d), delta);
  VoxelSet F = empty_layered_set(gF, dil);
  for(int j = 0; j < dil.n; ++j)
    std::copy(B.v.begin(), B.v.end(), F.layer(j));
  Averaging A = A0;
  A.Q = std::max(A0.Q, int(std::ceil(2.0 * ext.speed * (A.b - A.a) / hs)));
  GriddedFunction AF = adjoint_apply(A, F, gE);
  double window = std::max(0.0, 2 * delta / 3 - c * delta * ext.radius) / ext.speed;
  double predicted = ext.lambdaMin * c * delta * window;
  VoxelSet E = superlevel(AF, predicted / 2);
  FamilyPair fp{Family::adjointF, delta, std::move(E), std::move(F), 0, 0, {}};
  fp.predictedF = B.measure() * c * delta;
  fp.predictedE = std::pow(delta, d - 1);
  double acc = 0;
  for(size_t i = 0; i < fp.E.v.size(); ++i)
    if(fp.E.v[i])
      acc += AF.v[i];
  fp.stats.value = acc * fp.E.voxel_measure();
  return fp;
}

// N = 1/delta far-separated copies of a fixed ball; detects 1/q > 1/p.
FamilyPair family_translates(double delta, Averaging const& A0, FamilyOptions const& opt)
{
  int d = A0.curve.dim();
  CurveExtent ext = curve_extent(A0);
  double rho = 0.25;
  double hs = rho / 8;
  int N = std::max(1, int(std::lround(1.0 / delta)));
  Eigen::VectorXd lo, hi;
  dilated_box(ext, 1.0, 2.0, lo, hi);
  lo = lo.cwiseMin(0.0).array() - rho;
  hi = hi.cwiseMax(0.0).array() + rho;
  int spacing = int(std::ceil((hi(0) - lo(0)) / hs)) + 4;
  Eigen::VectorXd h = Eigen::VectorXd::Constant(d, hs);
  Eigen::VectorXd flo = lo, fhi = hi;
  fhi(0) += (N - 1) * spacing * hs;
  Grid gF = Grid::covering(h, flo, fhi);
  Eigen::VectorXd elo = Eigen::VectorXd::Constant(d, -rho), ehi = Eigen::VectorXd::Constant(d, rho);
  ehi(0) += (N - 1) * spacing * hs;
  Grid gE = Grid::covering(h, elo, ehi);
  VoxelSet E = empty_spatial_set(gE);
  for(int i = 0; i < N; ++i)
  {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
    c(0) = i * spacing * hs;
    VoxelSet b = ball_set(gE, c, rho);
    for(size_t k = 0; k < b.v.size(); ++k)
      E.v[k] |= b.v[k];
  }
  Averaging A = A0;
  A.Q = std::max(A0.Q, int(std::ceil(2.0 * ext.speed * (A.b - A.a) / hs)));
  Dilations dil{1.0, 2.0, std::max(4, opt.layers / 4)};
  GriddedFunction AE = apply(A, E, gF, dil, true);
  double predicted = ext.lambdaMin * (2 * rho / 3) / (2 * ext.speed);
  VoxelSet F = superlevel(AE, predicted / 2);
  FamilyPair fp{Family::translates, delta, std::move(E), std::move(F), 0, 0, {}};
  fp.predictedE = N * M_PI * rho * rho;
  fp.predictedF = fp.predictedE;
  double acc = 0;
  for(size_t i = 0; i < fp.F.v.size(); ++i)
    if(fp.F.v[i])
      acc += AE.v[i];
  fp.stats.value = acc * fp.F.voxel_measure();
  return fp;
}

}

FamilyPair extremizer_family(Family kind, double delta, Averaging const& A, FamilyOptions const& opt)
{
  if(!(delta > 0 && delta < 1))
    throw DomainError("delta must lie in (0, 1)");
  FamilyPair fp;
  switch(kind)
  {
  case Family::boxR: fp = family_boxR(delta, A, opt); break;
  case Family::ballB:
  case Family::neighborhoodF: fp = family_ball(kind, delta, A, opt); break;
  case Family::adjointF: fp = family_adjoint(delta, A, opt); break;
  case Family::translates: fp = family_translates(delta, A, opt); break;
  }
  fp.stats.measureE = fp.E.measure();
  fp.stats.measureF = fp.F.measure();
  if(!(fp.stats.value > 0))
    throw EmptyIncidence("family " + to_string(kind) + " has zero pairing");
  fp.stats.alpha = fp.stats.value / fp.stats.measureF;
  fp.stats.beta = fp.stats.value / fp.stats.measureE;
  fp.stats.kappa = A.measure.kappa_d();
  return fp;
}

TrapeziumSpec trapezium(int d)
{
  double dd = d;
  TrapeziumSpec T{d, {}};
  T.vertices = {{0, 0},
                {1, 1},
                {1 / dd, (dd - 1) / (dd * (dd + 1))},
                {(dd * dd - dd + 2) / (dd * (dd + 1)), (dd - 1) / (dd + 1)}};
  return T;
}

namespace
{

std::vector<Eigen::Vector2d> polygon(TrapeziumSpec const& T)
{
  // boundary order: (0,0) -> v1 -> v2 -> (1,1)
  return {T.vertices[0], T.vertices[2], T.vertices[3], T.vertices[1]};
}

double segment_distance(Eigen::Vector2d const& p, Eigen::Vector2d const& a, Eigen::Vector2d const& b)
{
  Eigen::Vector2d ab = b - a;
  double s = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (a + s * ab - p).norm();
}

}

bool trapezium_contains(TrapeziumSpec const& T, Eigen::Vector2d const& pt)
{
  auto P = polygon(T);
  int pos = 0, neg = 0;
  for(size_t i = 0; i < P.size(); ++i)
  {
    Eigen::Vector2d a = P[i], b = P[(i + 1) % P.size()];
    double cr = (b - a).x() * (pt - a).y() - (b - a).y() * (pt - a).x();
    if(cr > 1e-14)
      ++pos;
    else if(cr < -1e-14)
      ++neg;
  }
  return pos == 0 || neg == 0;
}

double trapezium_distance(TrapeziumSpec const& T, Eigen::Vector2d const& pt)
{
  if(trapezium_contains(T, pt))
    return 0;
  auto P = polygon(T);
  double best = 1e300;
  for(size_t i = 0; i < P.size(); ++i)
    best = std::min(best, segment_distance(pt, P[i], P[(i + 1) % P.size()]));
  return best;
}

double trapezium_depth(TrapeziumSpec const& T, Eigen::Vector2d const& pt)
{
  if(!trapezium_contains(T, pt))
    return 0;
  auto P = polygon(T);
  double best = 1e300;
  for(size_t i = 0; i < P.size(); ++i)
    best = std::min(best, segment_distance(pt, P[i], P[(i + 1) % P.size()]));
  return best;
}

double loglog_slope(std::vector<double> const& x, std::vector<double> const& y)
{
  int n = int(x.size());
  Eigen::MatrixXd A(n, 2);
  Eigen::VectorXd b(n);
  for(int i = 0; i < n; ++i)
  {
    A(i, 0) = std::log(x[i]);
    A(i, 1) = 1;
    b(i) = std::log(y[i]);
  }
  return A.colPivHouseholderQr().solve(b)(0);
}

RieszReport riesz_ratios(std::vector<FamilyPair> const& pairs, double invP, double invQ)
{
  RieszReport rep;
  std::vector<double> xs, ys;
  for(auto const& fp : pairs)
  {
    double mE = fp.stats.measureE, mF = fp.stats.measureF;
    double ratio = fp.stats.value / (std::pow(mE, invP) * std::pow(mF, 1 - invQ));
    rep.rows.push_back({fp.delta, mE, mF, fp.stats.value, ratio});
    xs.push_back(fp.delta);
    ys.push_back(ratio);
  }
  rep.slope = loglog_slope(xs, ys);
  rep.verdict = rep.slope >= -0.05 ? "bounded" : "divergent";
  return rep;
}

RieszReport riesz_scan(Averaging const& A, Family family, std::vector<double> const& deltas, double p,
                       double q, FamilyOptions const& opt)
{
  if(deltas.size() < 4 || *std::max_element(deltas.begin(), deltas.end()) <
                              4 * *std::min_element(deltas.begin(), deltas.end()))
    throw DomainError("riesz_scan needs >= 4 deltas spanning >= 2 octaves");
  std::vector<FamilyPair> pairs;
  for(double dl : deltas)
    pairs.push_back(extremizer_family(family, dl, A, opt));
  return riesz_ratios(pairs, 1 / p, 1 / q);
}

RieszDiagram riesz_diagram(Averaging const& A, std::vector<Family> const& families,
                           std::vector<double> const& deltas, int nx, int ny, double margin,
                           FamilyOptions const& opt)
{
  if(families.empty() || nx < 2 || ny < 2)
    throw DomainError("riesz_diagram needs a family and a lattice of at least 2 x 2");
  std::vector<std::vector<FamilyPair>> pairs;
  for(Family f : families)
  {
    std::vector<FamilyPair> v;
    for(double dl : deltas)
      v.push_back(extremizer_family(f, dl, A, opt));
    pairs.push_back(std::move(v));
  }
  RieszDiagram D;
  D.T = trapezium(A.curve.dim());
  D.margin = margin;
  for(int i = 0; i < nx; ++i)
    for(int j = 0; j < ny; ++j)
    {
      DiagramPoint p{Eigen::Vector2d(double(i) / (nx - 1), double(j) / (ny - 1)),
                     std::numeric_limits<double>::infinity(), families[0], "", 0};
      for(size_t f = 0; f < families.size(); ++f)
      {
        double s = riesz_ratios(pairs[f], p.pt(0), p.pt(1)).slope;
        if(s < p.slope)
        {
          p.slope = s;
          p.family = families[f];
        }
      }
      p.verdict = p.slope >= -0.05 ? "bounded" : "divergent";
      if(trapezium_depth(D.T, p.pt) >= margin)
        p.expected = 1;
      else if(trapezium_distance(D.T, p.pt) >= margin)
        p.expected = -1;
      if(p.expected)
      {
        ++D.tested;
        if((p.expected == 1) == (p.verdict == "bounded"))
          ++D.agree;
      }
      D.points.push_back(p);
    }
  return D;
}

}
