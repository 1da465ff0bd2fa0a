#include <acl/refinement.hpp>
#include <acl/errors.hpp>
#include <acl/extremal.hpp>
#include <acl/jacobian.hpp>
#include <acl/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace acl
{

namespace
{

struct Lattice
{
  int d = 0;
  std::vector<int> lo, n;
  std::vector<int64_t> stride;
};

Lattice lattice_of(Grid const& g)
{
  Lattice L;
  L.d = g.dim();
  int64_t acc = 1;
  for(int a = 0; a < L.d; ++a)
  {
    L.lo.push_back(g.lo(a));
    L.n.push_back(g.n(a));
    L.stride.push_back(acc);
    acc *= g.n(a);
  }
  return L;
}

inline int64_t lin(Lattice const& L, int const* idx)
{
  int64_t off = 0;
  for(int a = 0; a < L.d; ++a)
  {
    int i = idx[a] - L.lo[a];
    if(i < 0 || i >= L.n[a])
      return -1;
    off += i * L.stride[a];
  }
  return off;
}

inline void unlin(Lattice const& L, int64_t i, int* idx)
{
  for(int a = 0; a < L.d; ++a)
  {
    idx[a] = L.lo[a] + int(i % L.n[a]);
    i /= L.n[a];
  }
}

double pow4(double e) { return std::pow(4.0, e); }

bool is_pi2(int k, int d) { return (k % 2) == (d % 2); }

inline void clear_bit(std::vector<uint64_t>& b, int64_t f, int k, int words)
{
  b[f * words + (k >> 6)] &= ~(uint64_t(1) << (k & 63));
}

void compute_mass(IncidenceGrid const& G, IncidenceSet& S)
{
  int64_t nf = G.fibre_count();
  std::vector<double> per(nf, 0.0);
  parallel_for(nf, [&](int64_t b, int64_t e) {
    for(int64_t f = b; f < e; ++f)
    {
      double s = 0;
      for(int k = 0; k < G.nt; ++k)
        if(S.has(f, k, G.words))
          s += G.q.w[k];
      per[f] = s;
    }
  });
  double acc = 0;
  for(double v : per)
    acc += v;
  S.mass = acc * G.F.grid.cell_volume() * G.F.dil.dr();
}

// Layers of F that contain at least one voxel.
std::vector<int> active_layers(IncidenceGrid const& G)
{
  std::vector<int> out;
  int64_t fs = G.F.grid.size();
  for(int j = 0; j < G.nr; ++j)
  {
    uint8_t const* m = G.F.layer(j);
    if(std::any_of(m, m + fs, [](uint8_t v) { return v != 0; }))
      out.push_back(j);
  }
  return out;
}

// For every voxel y of E, m[k] = nu-mass at node k of the pi_2 fibre over y
// within S; fn(e, m) is called once per E voxel (in parallel).
template <typename Fn>
void for_each_pi2_fibre(IncidenceGrid const& G, IncidenceSet const& S, Fn const& fn)
{
  Lattice LE = lattice_of(G.E.grid), LF = lattice_of(G.F.grid);
  std::vector<int> layers = active_layers(G);
  int64_t fs = G.F.grid.size();
  int d = G.d;
  double dr = G.F.dil.dr();
  int64_t ne = G.E.grid.size();
  parallel_for(ne, [&](int64_t b, int64_t e) {
    std::vector<double> m(G.nt);
    std::vector<int> y(d), x(d);
    for(int64_t i = b; i < e; ++i)
    {
      if(!G.E.v[i])
        continue;
      std::fill(m.begin(), m.end(), 0.0);
      unlin(LE, i, y.data());
      for(int j : layers)
        for(int k = 0; k < G.nt; ++k)
        {
          int const* s = G.shift_of(j, k);
          for(int a = 0; a < d; ++a)
            x[a] = y[a] + s[a];
          int64_t fx = lin(LF, x.data());
          if(fx < 0)
            continue;
          if(S.has(j * fs + fx, k, G.words))
            m[k] += G.q.w[k] * dr;
        }
      fn(i, m);
    }
  });
}

// E-grid index of pi_2 of atom (f, k), or -1.
struct Pi2Map
{
  Lattice LE, LF;
  int64_t fs;
  int d;

  explicit Pi2Map(IncidenceGrid const& G)
      : LE(lattice_of(G.E.grid)), LF(lattice_of(G.F.grid)), fs(G.F.grid.size()), d(G.d)
  {}

  int64_t operator()(IncidenceGrid const& G, int64_t f, int k, int* x, int* y) const
  {
    unlin(LF, f % fs, x);
    int const* s = G.shift_of(int(f / fs), k);
    for(int a = 0; a < d; ++a)
      y[a] = x[a] - s[a];
    return lin(LE, y);
  }
};

IncidenceSet pi1_step(IncidenceGrid const& G, IncidenceSet const& prev, double thrB, double u)
{
  IncidenceSet out = prev;
  parallel_for(G.fibre_count(), [&](int64_t b, int64_t e) {
    for(int64_t f = b; f < e; ++f)
    {
      double total = 0;
      for(int k = 0; k < G.nt; ++k)
        if(prev.has(f, k, G.words))
          total += G.q.w[k];
      if(total == 0)
        continue;
      if(total <= thrB)
      {
        for(int w = 0; w < G.words; ++w)
          out.bits[f * G.words + w] = 0;
        continue;
      }
      double tail = 0;
      for(int k = G.nt - 1; k >= 0; --k)
      {
        if(!prev.has(f, k, G.words))
          continue;
        if(tail > u)
          break;
        clear_bit(out.bits, f, k, G.words);
        tail += G.q.w[k];
      }
    }
  });
  return out;
}

IncidenceSet pi2_step(IncidenceGrid const& G, IncidenceSet const& prev, double thrB, double u)
{
  std::vector<int> kcut(G.E.grid.size(), G.nt);
  for_each_pi2_fibre(G, prev, [&](int64_t e, std::vector<double> const& m) {
    double total = std::accumulate(m.begin(), m.end(), 0.0);
    if(total == 0)
      return;
    if(total <= thrB)
    {
      kcut[e] = 0;
      return;
    }
    double tail = 0;
    int kc = G.nt;
    for(int k = G.nt - 1; k >= 0; --k)
    {
      if(m[k] == 0)
        continue;
      if(tail > u)
        break;
      kc = k;
      tail += m[k];
    }
    kcut[e] = kc;
  });
  IncidenceSet out = prev;
  Pi2Map map(G);
  parallel_for(G.fibre_count(), [&](int64_t b, int64_t e) {
    std::vector<int> x(G.d), y(G.d);
    for(int64_t f = b; f < e; ++f)
    {
      if(!G.F.v[f])
        continue;
      for(int k = 0; k < G.nt; ++k)
      {
        if(!prev.has(f, k, G.words))
          continue;
        int64_t ye = map(G, f, k, x.data(), y.data());
        if(k >= kcut[ye])
          clear_bit(out.bits, f, k, G.words);
      }
    }
  });
  return out;
}

}

std::shared_ptr<const IncidenceGrid> make_incidence_grid(Averaging A, VoxelSet E, VoxelSet F, int nt)
{
  if(A.a < 0 || std::abs(A.b - A.a - 1) > 1e-12)
    throw DomainError("the parameter interval must be (a, a + 1) with a >= 0");
  if(E.layers || !F.layers)
    throw ConsistencyError("E must be spatial and F layered");
  if(E.grid.dim() != F.grid.dim() || ((E.grid.h - F.grid.h).cwiseAbs().array() > 1e-12).any())
    throw ConsistencyError("E and F live on different lattices");
  if(nt < 2)
    throw ConfigError("nt must be at least 2");
  A.Q = nt;
  auto G = std::make_shared<IncidenceGrid>(std::move(A));
  G->E = std::move(E);
  G->F = std::move(F);
  G->q = G->A.quadrature();
  G->d = G->F.grid.dim();
  G->nt = nt;
  G->nr = G->F.dil.n;
  G->words = (nt + 63) / 64;
  G->shift.resize(int64_t(G->nr) * nt * G->d);
  for(int j = 0; j < G->nr; ++j)
    for(int k = 0; k < nt; ++k)
    {
      Eigen::VectorXi s = snapped_shift(G->A.curve, G->F.grid.h, G->F.dil.r(j), G->q.t[k]);
      std::copy(s.data(), s.data() + G->d, G->shift.begin() + (int64_t(j) * nt + k) * G->d);
    }
  return G;
}

IncidenceSequence build_U_sequence(std::shared_ptr<const IncidenceGrid> const& grid)
{
  IncidenceGrid const& G = *grid;
  IncidenceSequence S;
  S.grid = grid;
  S.full.bits.assign(G.fibre_count() * G.words, 0);
  Lattice LE = lattice_of(G.E.grid), LF = lattice_of(G.F.grid);
  int64_t fs = G.F.grid.size();
  parallel_for(G.fibre_count(), [&](int64_t b, int64_t e) {
    std::vector<int> x(G.d), y(G.d);
    for(int64_t f = b; f < e; ++f)
    {
      if(!G.F.v[f])
        continue;
      unlin(LF, f % fs, x.data());
      int j = int(f / fs);
      for(int k = 0; k < G.nt; ++k)
      {
        int const* s = G.shift_of(j, k);
        for(int a = 0; a < G.d; ++a)
          y[a] = x[a] - s[a];
        int64_t ye = lin(LE, y.data());
        if(ye >= 0 && G.E.v[ye])
          S.full.bits[f * G.words + (k >> 6)] |= uint64_t(1) << (k & 63);
      }
    }
  });
  compute_mass(G, S.full);
  if(!(S.full.mass > 0))
    throw EmptyIncidence("<A chi_E, chi_F> = 0");
  S.stats.value = S.full.mass;
  S.stats.measureE = G.E.measure();
  S.stats.measureF = G.F.measure();
  S.stats.alpha = S.stats.value / S.stats.measureF;
  S.stats.beta = S.stats.value / S.stats.measureE;
  S.stats.kappa = G.A.measure.kappa_d();
  double alpha = S.stats.alpha, beta = S.stats.beta;

  // slab: the continuum weight of (0, floor) is alpha / 2
  S.slabFloor = weight_advance(G.A.measure, 0.0, alpha / 2);
  IncidenceSet U0 = S.full;
  for(int64_t f = 0; f < G.fibre_count(); ++f)
    for(int k = 0; k < G.nt && G.q.t[k] < S.slabFloor; ++k)
      clear_bit(U0.bits, f, k, G.words);
  compute_mass(G, U0);
  double slabD = 0;
  for(int k = 0; k < G.nt && G.q.t[k] < S.slabFloor; ++k)
    slabD += G.q.w[k];
  S.slabSlack = std::max(0.0, slabD - alpha / 2);
  if(U0.mass < 0.5 * S.full.mass - S.slabSlack * S.stats.measureF * (1 + 1e-12))
    throw RefinementContract("slab removal kept " + std::to_string(U0.mass / S.full.mass) +
                             " of the incidence mass");
  S.U.push_back(std::move(U0));

  for(int k = 1; k <= G.d + 1; ++k)
  {
    IncidenceSet const& prev = S.U.back();
    bool two = is_pi2(k, G.d);
    double scale = two ? beta : alpha;
    double thrB = pow4(-(k + 0.5)) * scale, u = pow4(-(k + 1.0)) * scale;
    IncidenceSet next = two ? pi2_step(G, prev, thrB, u) : pi1_step(G, prev, thrB, u);
    next.generation = k;
    compute_mass(G, next);
    if(next.mass < 0.25 * prev.mass)
    {
      std::ostringstream os;
      os << "U_" << k << " keeps " << next.mass / prev.mass << " of U_" << k - 1
         << " (pi_" << (two ? 2 : 1) << " step)";
      throw RefinementContract(os.str());
    }
    S.U.push_back(std::move(next));
  }
  return S;
}

USequenceCheck verify_U_sequence(IncidenceSequence const& S)
{
  IncidenceGrid const& G = *S.grid;
  USequenceCheck c;
  auto fail = [&](bool& flag, std::string const& msg) {
    flag = false;
    c.failures.push_back(msg);
  };
  if(S.U[0].mass < 0.5 * S.full.mass - S.slabSlack * S.stats.measureF * (1 + 1e-12))
    fail(c.retention, "mass(U_0) < mass(U) / 2 beyond the slab discretisation excess");
  for(int64_t f = 0; f < G.fibre_count(); ++f)
    for(int k = 0; k < G.nt && G.q.t[k] < S.slabFloor; ++k)
      if(S.U[0].has(f, k, G.words))
      {
        fail(c.slab, "atom below the slab floor in U_0");
        f = G.fibre_count();
        break;
      }
  for(size_t k = 1; k < S.U.size(); ++k)
  {
    IncidenceSet const& A = S.U[k];
    IncidenceSet const& B = S.U[k - 1];
    for(size_t i = 0; i < A.bits.size(); ++i)
      if(A.bits[i] & ~B.bits[i])
      {
        fail(c.nested, "U_" + std::to_string(k) + " not inside U_" + std::to_string(k - 1));
        break;
      }
    c.ratio.push_back(A.mass / B.mass);
    if(A.mass < 0.25 * B.mass)
      fail(c.retention, "mass(U_" + std::to_string(k) + ") < mass(U_" + std::to_string(k - 1) + ") / 4");

    bool two = is_pi2(int(k), G.d);
    double u = pow4(-(double(k) + 1)) * (two ? S.stats.beta : S.stats.alpha);
    std::vector<char> bad(1, 0);
    if(!two)
    {
      std::vector<char> badF(G.fibre_count(), 0);
      parallel_for(G.fibre_count(), [&](int64_t b, int64_t e) {
        for(int64_t f = b; f < e; ++f)
        {
          double tail = 0;
          for(int q = G.nt - 1; q >= 0; --q)
          {
            if(A.has(f, q, G.words) && tail < u)
              badF[f] = 1;
            if(B.has(f, q, G.words))
              tail += G.q.w[q];
          }
        }
      });
      bad[0] = std::any_of(badF.begin(), badF.end(), [](char v) { return v != 0; });
    }
    else
    {
      // tails of the pi_2 fibres in U_{k-1} at every node present in U_k
      std::vector<char> present(G.E.grid.size() * int64_t(G.nt), 0);
      Pi2Map map(G);
      parallel_for(G.fibre_count(), [&](int64_t b, int64_t e) {
        std::vector<int> x(G.d), y(G.d);
        for(int64_t f = b; f < e; ++f)
          for(int q = 0; q < G.nt; ++q)
            if(A.has(f, q, G.words))
              present[map(G, f, q, x.data(), y.data()) * G.nt + q] = 1;
      });
      std::vector<char> badE(G.E.grid.size(), 0);
      for_each_pi2_fibre(G, B, [&](int64_t e, std::vector<double> const& m) {
        double tail = 0;
        for(int q = G.nt - 1; q >= 0; --q)
        {
          if(present[e * G.nt + q] && tail < u)
            badE[e] = 1;
          tail += m[q];
        }
      });
      bad[0] = std::any_of(badE.begin(), badE.end(), [](char v) { return v != 0; });
    }
    if(bad[0])
      fail(c.fibres, "fibre tail bound fails in U_" + std::to_string(k));
  }
  return c;
}

TowerCoords Tower::coords(int level, int node) const
{
  std::vector<int> chain(level + 1);
  int i = node;
  for(int j = level; j >= 0; --j)
  {
    chain[j] = i;
    i = levels[j][i].parent;
  }
  TowerCoords tc;
  tc.r.resize(level / 2 + 1);
  tc.t = Eigen::VectorXd::Zero(level + 1);
  tc.r(0) = r(levels[0][chain[0]].layer);
  for(int j = 1; j <= level; ++j)
  {
    tc.t(j) = t(levels[j][chain[j]].tnode);
    if(j % 2 == 0)
      tc.r(j / 2) = r(levels[j][chain[j]].layer);
  }
  return tc;
}

std::vector<int> Tower::alive(int level) const
{
  std::vector<int> out;
  for(int i = 0; i < int(levels[level].size()); ++i)
    if(levels[level][i].alive)
      out.push_back(i);
  return out;
}

double Tower::retention(int level, int node) const
{
  if(level >= depth())
    return 1.0;
  TowerNode const& p = levels[level][node];
  double kept = 0;
  for(TowerNode const& c : levels[level + 1])
    if(c.alive && c.parent == node)
      kept += c.weight;
  return p.childWeight > 0 ? kept / p.childWeight : 0.0;
}

namespace
{

struct Candidate
{
  int layer, tnode;
  double mass;
  Eigen::VectorXi psi;
};

struct Expansion
{
  std::vector<TowerNode> children;
  double fibreMass = 0, nominal = 0, slack = 0;
  std::string collapse;
};

Expansion expand(IncidenceSequence const& S, Tower const& T, int j, int nodeIndex, int cap,
                 uint64_t seed)
{
  IncidenceGrid const& G = *S.grid;
  int d = G.d;
  TowerNode const& node = T.levels[j][nodeIndex];
  IncidenceSet const& U = S.U[d - j];
  double alpha = S.stats.alpha, beta = S.stats.beta;
  double tj = G.q.t[node.tnode];
  Lattice LF = lattice_of(G.F.grid);
  int64_t fs = G.F.grid.size();
  double dr = G.F.dil.dr();
  std::vector<Candidate> cand;
  Expansion ex;
  std::vector<int> x(d);
  std::ostringstream why;
  if(j % 2 == 0)
  {
    double slabC = pow4(-(d + 2.5 - j)) * alpha;
    double sj = weight_advance(G.A.measure, tj, slabC);
    int64_t fx = lin(LF, node.psi.data());
    if(fx < 0)
      throw ConsistencyError("tower point left the F grid");
    int64_t f = node.layer * fs + fx;
    double slabD = 0;
    for(int k = 0; k < G.nt; ++k)
    {
      if(!U.has(f, k, G.words))
        continue;
      double tk = G.q.t[k];
      if(tk <= sj)
      {
        if(tk > tj)
          slabD += G.q.w[k];
        continue;
      }
      Eigen::VectorXi psi = node.psi;
      int const* s = G.shift_of(node.layer, k);
      for(int a = 0; a < d; ++a)
        psi(a) -= s[a];
      cand.push_back({node.layer, k, G.q.w[k], psi});
    }
    ex.nominal = slabC;
    ex.slack = std::max(0.0, slabD - slabC);
    why << "pi_1 fibre above s_j = " << sj << " (t_j = " << tj << ", alpha = " << alpha << ")";
  }
  else
  {
    double slabC = pow4(-(d + 2.5 - j)) * beta;
    double rectC = pow4(-(d + 3.0 - j)) * beta;
    double sj = weight_advance(G.A.measure, tj, slabC);
    double stj = weight_advance(G.A.measure, tj, std::pow(2.0, -(d + 3.0 - j)) * std::sqrt(alpha * beta));
    double rw = std::pow(2.0, -(d + 4.0 - j)) * std::sqrt(beta / alpha);
    double rprev = G.F.dil.r(node.layer);
    double dt = G.q.t[1] - G.q.t[0];
    double slabD = 0, rectD = 0;
    for(int k = 0; k < G.nt; ++k)
    {
      double tk = G.q.t[k];
      if(tk <= tj)
        continue;
      for(int l = 0; l < G.nr; ++l)
      {
        int const* s = G.shift_of(l, k);
        for(int a = 0; a < d; ++a)
          x[a] = node.psi(a) + s[a];
        int64_t fx = lin(LF, x.data());
        if(fx < 0 || !U.has(l * fs + fx, k, G.words))
          continue;
        double mass = G.q.w[k] * dr;
        if(tk <= sj)
        {
          slabD += mass;
          continue;
        }
        // cells wholly inside the rectangle
        if(std::abs(G.F.dil.r(l) - rprev) + 0.5 * dr <= rw && tk - 0.5 * dt >= tj && tk + 0.5 * dt <= stj)
        {
          rectD += mass;
          continue;
        }
        cand.push_back({l, k, mass, Eigen::Map<Eigen::VectorXi>(x.data(), d)});
      }
    }
    ex.nominal = rectC;
    ex.slack = std::max(0.0, slabD - slabC) + std::max(0.0, rectD - rectC);
    why << "pi_2 fibre above s_j = " << sj << " outside the rectangle |r - " << rprev << "| <= " << rw
        << ", t <= " << stj << " (beta = " << beta << ")";
  }
  for(auto const& c : cand)
    ex.fibreMass += c.mass;
  if(cand.empty())
  {
    ex.collapse = why.str();
    return ex;
  }
  auto make = [&](Candidate const& c, double w) {
    TowerNode n;
    n.parent = nodeIndex;
    n.layer = c.layer;
    n.tnode = c.tnode;
    n.weight = w;
    n.psi = c.psi;
    return n;
  };
  int n = int(cand.size());
  if(n <= cap)
  {
    for(auto const& c : cand)
      ex.children.push_back(make(c, c.mass));
    return ex;
  }
  std::mt19937_64 rng(derive_seed(seed, (uint64_t(j) << 40) + uint64_t(nodeIndex)));
  for(int s = 0; s < cap; ++s)
  {
    int lo = int(int64_t(s) * n / cap), hi = int(int64_t(s + 1) * n / cap);
    double w = 0;
    for(int i = lo; i < hi; ++i)
      w += cand[i].mass;
    std::uniform_int_distribution<int> pick(lo, hi - 1);
    ex.children.push_back(make(cand[pick(rng)], w));
  }
  return ex;
}

}

Tower grow_initial_tower(IncidenceSequence const& S, RefineOptions const& opt)
{
  IncidenceGrid const& G = *S.grid;
  int d = G.d, D = d + 1;
  Tower T;
  T.grid = S.grid;
  T.stats = S.stats;
  T.slabFloor = S.slabFloor;
  T.d = d;
  T.pre.assign(D + 1, PreColour::none);

  // base: heaviest atom of U_{d+1}, lexicographic in (x, r, t)
  IncidenceSet const& top = S.U[d + 1];
  int64_t fs = G.F.grid.size();
  int64_t bestF = -1;
  int bestK = -1;
  double bestW = -1;
  for(int64_t x = 0; x < fs; ++x)
    for(int j = 0; j < G.nr; ++j)
      for(int k = 0; k < G.nt; ++k)
        if(top.has(j * fs + x, k, G.words) && G.q.w[k] > bestW)
        {
          bestW = G.q.w[k];
          bestF = j * fs + x;
          bestK = k;
        }
  if(bestF < 0)
    throw TowerCollapse("U_" + std::to_string(d + 1) + " is empty");
  TowerNode base;
  base.layer = int(bestF / fs);
  base.tnode = bestK;
  base.weight = bestW;
  base.psi = G.F.grid.index(bestF % fs);
  T.levels.push_back({base});

  int cap = 1;
  while(std::pow(double(cap + 1), D) <= double(opt.maxTuples) && cap + 1 <= opt.fanout)
    ++cap;
  T.cap = cap;

  for(int j = 0; j < D; ++j)
  {
    int np = int(T.levels[j].size());
    std::vector<Expansion> ex(np);
    parallel_for(np, [&](int64_t b, int64_t e) {
      for(int64_t i = b; i < e; ++i)
        ex[i] = expand(S, T, j, int(i), cap, opt.seed);
    });
    std::vector<TowerNode> next;
    for(int i = 0; i < np; ++i)
    {
      if(!ex[i].collapse.empty())
      {
        std::ostringstream os;
        os << "empty fibre at level " << j + 1 << " below node " << i << ": " << ex[i].collapse;
        throw TowerCollapse(os.str());
      }
      TowerNode& p = T.levels[j][i];
      p.fibreMass = ex[i].fibreMass;
      p.fibreNominal = ex[i].nominal;
      p.fibreSlack = ex[i].slack;
      for(auto& c : ex[i].children)
      {
        p.childWeight += c.weight;
        next.push_back(std::move(c));
      }
    }
    T.levels.push_back(std::move(next));
  }
  return T;
}

Tower refine_binary(Tower T, TowerPredicate const& A)
{
  int D = T.depth();
  T.inA.assign(D + 1, -1);
  for(int k = 2; k <= D; k += 2)
  {
    std::vector<std::vector<char>> good(k + 1);
    for(int j = 0; j <= k; ++j)
      good[j].assign(T.levels[j].size(), 0);
    for(int i : T.alive(k))
      good[k][i] = A(T, k, i) ? 1 : 0;
    for(int j = k - 1; j >= 0; --j)
    {
      std::vector<double> tot(T.levels[j].size(), 0.0), gw(T.levels[j].size(), 0.0);
      for(int c : T.alive(j + 1))
      {
        TowerNode const& n = T.levels[j + 1][c];
        tot[n.parent] += n.weight;
        if(good[j + 1][c])
          gw[n.parent] += n.weight;
      }
      for(int i : T.alive(j))
        good[j][i] = tot[i] > 0 && gw[i] >= 0.5 * tot[i];
    }
    char root = good[0][0];
    T.inA[k] = root;
    for(int j = 1; j <= k; ++j)
      for(int i : T.alive(j))
        if(good[j][i] != root)
          T.levels[j][i].alive = false;
    for(int j = 1; j <= D; ++j)
      for(auto& n : T.levels[j])
        if(n.alive && !T.levels[j - 1][n.parent].alive)
          n.alive = false;
  }
  return T;
}

TowerPredicate pre_red_predicate(double delta)
{
  return [delta](Tower const& T, int k, int node) {
    TowerNode const& n = T.levels[k][node];
    TowerNode const& p = T.levels[k - 1][n.parent];
    double tk = T.t(n.tnode), tp = T.t(p.tnode);
    double cp = 2.0 * T.grid->A.measure.K / (T.d * (T.d + 1));
    return tk - tp > delta * std::sqrt(T.stats.alpha * T.stats.beta) * std::pow(tp, -cp);
  };
}

Tower refine_tower(Tower const& initial, double delta)
{
  Tower T = refine_binary(initial, pre_red_predicate(delta));
  T.delta = delta;
  T.blueGapOk = true;
  int D = T.depth();
  double gap0 = std::sqrt(T.stats.beta / T.stats.alpha);
  for(int k = 2; k <= D; k += 2)
  {
    T.pre[k] = T.inA[k] ? PreColour::red : PreColour::blue;
    if(T.inA[k])
      continue;
    double need = std::pow(2.0, -(T.d + 5.0 - k)) * gap0;
    for(int i : T.alive(k))
    {
      TowerNode const& n = T.levels[k][i];
      TowerNode const& p = T.levels[k - 1][n.parent];
      if(!(std::abs(T.r(n.layer) - T.r(p.layer)) > need))
        T.blueGapOk = false;
    }
  }
  return T;
}

TowerReport check_tower(Tower const& T)
{
  TowerReport R;
  IncidenceGrid const& G = *T.grid;
  int D = T.depth(), d = T.d;
  double alpha = T.stats.alpha, beta = T.stats.beta;
  double cp = 2.0 * G.A.measure.K / (d * (d + 1));
  Lattice LE = lattice_of(G.E.grid), LF = lattice_of(G.F.grid);
  int64_t fs = G.F.grid.size();
  double floorD = std::pow(2.0, -std::floor(D / 2.0));
  R.minSeparation = std::numeric_limits<double>::infinity();
  R.fibreConstant.assign(D + 1, std::numeric_limits<double>::infinity());
  auto fail = [&](bool& flag, std::string const& msg) {
    if(flag)
      R.failures.push_back(msg);
    flag = false;
  };
  bool refined = int(T.inA.size()) == D + 1;
  if(!refined)
    fail(R.dichotomy, "tower has not been refined");
  TowerPredicate red = pre_red_predicate(T.delta);
  for(int j = 0; j <= D; ++j)
  {
    for(int i : T.alive(j))
    {
      TowerNode const& n = T.levels[j][i];
      if(j < D)
      {
        if(n.fibreMass < n.fibreNominal - n.fibreSlack - 1e-12 * n.fibreNominal)
          fail(R.fibreMass, "fibre mass below bound at level " + std::to_string(j + 1));
        double ret = T.retention(j, i);
        R.minRetention = std::min(R.minRetention, ret);
        if(ret < floorD)
          fail(R.retention, "retention below 2^-floor(D/2) at level " + std::to_string(j));
        R.fibreConstant[j + 1] =
            std::min(R.fibreConstant[j + 1], n.fibreMass * ret / (j % 2 ? beta : alpha));
      }
      if(j == 0)
        continue;
      TowerCoords tc = T.coords(j, i);
      for(int a = 2; a <= j; ++a)
        if(!(tc.t(a) > tc.t(a - 1)))
          fail(R.ordering, "t not increasing at level " + std::to_string(j));
      if(tc.t(1) < T.slabFloor)
        fail(R.slabFloor, "t_1 below the slab floor");
      bool inside;
      if(j % 2)
      {
        int64_t e = lin(LE, n.psi.data());
        inside = e >= 0 && G.E.v[e];
      }
      else
      {
        int64_t fx = lin(LF, n.psi.data());
        inside = fx >= 0 && G.F.v[n.layer * fs + fx];
      }
      if(!inside)
        fail(R.images, "Phi_" + std::to_string(j) + " leaves " + (j % 2 ? "E" : "F"));
      if(j >= 2)
        for(int a = 1; a < j; ++a)
        {
          double scale = (j % 2 == 0 && a == j - 1) ? beta : alpha;
          double c = (tc.t(j) - tc.t(a)) * std::pow(tc.t(a), cp) / scale;
          R.minSeparation = std::min(R.minSeparation, c);
        }
      if(refined && j % 2 == 0 && red(T, j, i) != bool(T.inA[j]))
        fail(R.dichotomy, "mixed pre-colour at index " + std::to_string(j));
    }
  }
  R.tuples = int(T.alive(D).size());
  if(R.minSeparation < 1e-3)
    fail(R.separation, "separation constant " + std::to_string(R.minSeparation) + " < 1e-3");
  return R;
}

SigmaChart chart_from_tower(Tower const& T)
{
  SigmaChart c = select_case(T.d, T.pre);
  IncidenceGrid const& G = *T.grid;
  c.curve = std::make_shared<const PolyCurve>(G.A.curve);
  c.K = G.A.measure.K;
  c.cprime = 2.0 * c.K / (c.d * (c.d + 1));
  TowerNode const& base = T.levels[0][0];
  c.x0 = G.F.grid.node(base.psi);
  c.r0 = T.r(base.layer);
  return c;
}

FrozenChart freeze_variables(Tower const& T, SigmaChart c, int maxSamples)
{
  FrozenChart out;
  int L = c.L;
  std::vector<int> nodes = T.alive(L);
  if(c.tag == CaseTag::Case2d)
  {
    // freeze t_1 at the level-1 node with the most surviving descendants
    std::vector<int> anc(nodes.size());
    std::vector<int> count(T.levels[1].size(), 0);
    for(size_t q = 0; q < nodes.size(); ++q)
    {
      int i = nodes[q];
      for(int j = L; j > 1; --j)
        i = T.levels[j][i].parent;
      anc[q] = i;
      ++count[i];
    }
    int best = int(std::max_element(count.begin(), count.end()) - count.begin());
    c.t0 = T.t(T.levels[1][best].tnode);
    std::vector<int> keep;
    for(size_t q = 0; q < nodes.size(); ++q)
      if(anc[q] == best)
        keep.push_back(nodes[q]);
    nodes = keep;
  }
  if(nodes.empty())
    throw TowerCollapse("no tuples at level " + std::to_string(L));
  Eigen::VectorXd sigmaStar;
  chart_forward(c, T.coords(L, nodes[0]), &sigmaStar);
  c.sigma = sigmaStar;
  double tol = 0.5 * (T.grid->q.t[1] - T.grid->q.t[0]);
  double wmax = T.delta * std::sqrt(T.stats.alpha * T.stats.beta);
  std::vector<TowerCoords> omega;
  for(int i : nodes)
  {
    TowerCoords tc = T.coords(L, i);
    Eigen::VectorXd s;
    chart_forward(c, tc, &s);
    if(c.n && (s - sigmaStar).cwiseAbs().maxCoeff() > tol)
      continue;
    omega.push_back(tc);
  }
  if(c.n && omega.size() == 1)
    out.warning = "omega(sigma) is a single stored tuple";
  int n = int(omega.size());
  int take = std::min(n, maxSamples);
  for(int s = 0; s < take; ++s)
  {
    TowerCoords const& tc = omega[int64_t(s) * n / take];
    Eigen::VectorXd own;
    Eigen::VectorXd z = chart_forward(c, tc, &own);
    SigmaChart ci = c;
    ci.sigma = own;
    TowerCoords back = chart_inverse(ci, z);
    for(int k = 1; k <= L; ++k)
    {
      double err = std::abs(back.t(k) - tc.t(k));
      if(c.slotKind[k] == 1 ? err != 0 : err > 1e-12 * std::abs(tc.t(k)))
        out.roundTrip = false;
    }
    if((back.r - tc.r).cwiseAbs().maxCoeff() != 0)
      out.roundTrip = false;
    for(int q = 0; q < own.size(); ++q)
      if(own(q) < 0 || own(q) > wmax)
        out.wBoxOk = false;
    PhiJacobianCheck pc = phi_jacobian_check(ci, tc);
    out.phiMaxRelErr = std::max(out.phiMaxRelErr, pc.relErr);
    if(pc.relErr > 1e-6)
      ++out.phiFailures;
    out.tuples.push_back(tc);
    out.omega.push_back(z);
  }
  out.chart = std::move(c);
  return out;
}

namespace
{

bool is_moment_curve(PolyCurve const& c)
{
  PolyCurve m = PolyCurve::moment(c.dim());
  for(int i = 0; i < c.dim(); ++i)
    if(!(c.component(i) == m.component(i)))
      return false;
  return true;
}

struct ChainPass
{
  double minJac = std::numeric_limits<double>::infinity();
  double minV = std::numeric_limits<double>::infinity();
  double gMax = 0, errMax = 0, modelMax = -1;
  int points = 0, modelPoints = 0;
};

ChainPass run_chain_checks(FrozenChart const& fc, Tower const& T, RefineOptions const& opt)
{
  SigmaChart const& c = fc.chart;
  ChainPass cp;
  double alpha = T.stats.alpha, beta = T.stats.beta;
  int nx = x_variable_count(c);
  double c0 = nx ? derive_c0(c.curve->degree() - 1, nx) : 0.0;
  for(size_t s = 0; s < fc.omega.size(); ++s)
  {
    Eigen::VectorXd const& z = fc.omega[s];
    JacobianChartEval ev = assemble_G_sigma(c, z, 1e-4);
    cp.gMax = std::max(cp.gMax, ev.relErr);
    cp.minJac = std::min(cp.minJac, jaclem1_check(c, z, alpha, beta));
    cp.minV = std::min(cp.minV, vandermonde_floor_ratio(c, z, alpha, beta));
    std::vector<Eigen::VectorXd> xs;
    if(nx == 0)
      xs.push_back(Eigen::VectorXd());
    else
    {
      TruncatedDomain D = truncate_domain(c, z, c0, alpha);
      Eigen::VectorXd lo(nx), hi(nx);
      for(int a = 0; a < nx; ++a)
      {
        lo(a) = D.box[a].lo;
        hi(a) = D.box[a].hi;
      }
      xs.push_back(0.5 * (lo + hi));
      for(int corner = 0; corner < (1 << nx) && corner < 16; ++corner)
      {
        Eigen::VectorXd x(nx);
        for(int a = 0; a < nx; ++a)
          x(a) = (corner >> a) & 1 ? hi(a) : lo(a);
        xs.push_back(x);
      }
      std::mt19937_64 rng(derive_seed(opt.seed, 0x5eed0000u + s));
      std::uniform_real_distribution<double> U(0, 1);
      while(int(xs.size()) < std::max(opt.pointsPerDomain, 2))
      {
        Eigen::VectorXd x(nx);
        for(int a = 0; a < nx; ++a)
          x(a) = lo(a) + U(rng) * (hi(a) - lo(a));
        xs.push_back(x);
      }
    }
    for(auto const& x : xs)
    {
      ErrorSplit es = error_split(c, z, x);
      cp.errMax = std::max(cp.errMax, es.main != 0 ? std::abs(es.error) / std::abs(es.main) : 0.0);
      ++cp.points;
    }
  }
  return cp;
}

}

ModelIdentityScan model_identity_scan(SigmaChart const& c, Tower const& T, int samples)
{
  ModelIdentityScan out;
  if(!(c.d == 3 && c.tag == CaseTag::Case2d && is_moment_curve(*c.curve)))
    return out;
  std::vector<int> nodes = T.alive(c.L);
  int n = int(nodes.size());
  int take = std::min(n, samples);
  for(int s = 0; s < take; ++s)
  {
    TowerCoords tc = T.coords(c.L, nodes[int64_t(s) * n / take]);
    SigmaChart ci = c;
    ci.t0 = tc.t(1);
    Eigen::VectorXd own;
    Eigen::VectorXd z = chart_forward(ci, tc, &own);
    ci.sigma = own;
    JacobianChartEval ev = assemble_G_sigma(ci, z, 1e-4);
    out.gMaxRelErr = std::max(out.gMaxRelErr, ev.relErr);
    double mv = model_jacobian_d3(tc.r(1), tc.t(2), tc.t(3)).value;
    out.maxRelErr = std::max(out.maxRelErr, std::abs(std::abs(ev.detValue) - mv) / mv);
    ++out.points;
  }
  return out;
}

nlohmann::json WeakTypeReport::to_json() const
{
  nlohmann::json j;
  j["stats"] = {{"pairing", stats.value}, {"alpha", stats.alpha}, {"beta", stats.beta},
                {"kappa", stats.kappa}, {"measureE", stats.measureE}, {"measureF", stats.measureF}};
  j["shortCircuit"] = shortCircuit;
  if(!note.empty())
    j["note"] = note;
  if(shortCircuit)
    return j;
  j["case"] = caseTag;
  j["N"] = N;
  j["M"] = M;
  j["m"] = m;
  j["n"] = n;
  j["eta"] = eta;
  j["exponents"] = {{"alpha", a}, {"betaOverAlpha", b}};
  j["measureX"] = measureX;
  j["cMeasured"] = cMeasured;
  j["cChain"] = cChain;
  j["minJacobianRatio"] = minJacRatio;
  j["minVandermondeRatio"] = minVandermondeRatio;
  j["fibreProduct"] = fibreProduct;
  j["bezout"] = bezout;
  j["delta"] = delta;
  j["retries"] = retries;
  j["samples"] = samples;
  j["gSigmaMaxRelErr"] = gMaxRelErr;
  j["phiMaxRelErr"] = phiMaxRelErr;
  j["errorSplitPoints"] = errorSplitPoints;
  j["maxErrorRatio"] = maxErrorRatio;
  if(modelPoints)
  {
    j["modelMaxRelErr"] = modelMaxRelErr;
    j["modelPoints"] = modelPoints;
  }
  j["uMass"] = uMass;
  j["fibreConstant"] = fibreConstant;
  j["colours"] = colours;
  j["minSeparation"] = minSeparation;
  j["retention"] = retention;
  j["towerOk"] = towerOk;
  j["uSequenceOk"] = uOk;
  j["weakTypeRatio"] = {weakRatio1, weakRatio2};
  return j;
}

WeakTypeReport weak_type_chain(Averaging const& A, VoxelSet const& E, VoxelSet const& F,
                               RefineOptions const& opt)
{
  WeakTypeReport R;
  auto grid = make_incidence_grid(A, E, F, opt.nt);
  IncidenceSequence S = build_U_sequence(grid);
  R.stats = S.stats;
  double alpha = S.stats.alpha, beta = S.stats.beta;
  if(alpha <= beta)
  {
    R.shortCircuit = true;
    R.note = "alpha <= beta: the bound follows from the (p2, q2) estimate for the adjoint";
    return R;
  }
  R.uOk = verify_U_sequence(S).ok();
  for(auto const& U : S.U)
    R.uMass.push_back(U.mass);
  Tower initial = grow_initial_tower(S, opt);

  double delta = opt.delta;
  Tower T;
  FrozenChart fc;
  ChainPass cp;
  for(int attempt = 0;; ++attempt)
  {
    T = refine_tower(initial, delta);
    bool ok = T.blueGapOk;
    if(ok)
    {
      fc = freeze_variables(T, chart_from_tower(T), opt.chainSamples);
      try
      {
        cp = run_chain_checks(fc, T, opt);
        ModelIdentityScan ms = model_identity_scan(fc.chart, T, opt.chainSamples);
        cp.gMax = std::max(cp.gMax, ms.gMaxRelErr);
        if(ms.points)
        {
          cp.modelMax = ms.maxRelErr;
          cp.modelPoints = ms.points;
        }
      }
      catch(ErrorDominationFailure const&)
      {
        if(attempt >= opt.maxRetries)
          throw;
        ok = false;
      }
    }
    else if(attempt >= opt.maxRetries)
      throw RefinementContract("blue dilation gap fails at delta = " + std::to_string(delta));
    if(ok)
      break;
    delta /= 2;
    ++R.retries;
  }
  R.delta = delta;
  TowerReport tr = check_tower(T);
  R.towerOk = tr.ok();
  R.minSeparation = tr.minSeparation;
  R.retention = tr.minRetention;
  R.fibreConstant.assign(tr.fibreConstant.begin() + 1, tr.fibreConstant.end());
  for(int k = 2; k <= T.depth(); k += 2)
    R.colours.push_back(T.pre[k] == PreColour::red ? "pre-red" : "pre-blue");

  SigmaChart const& c = fc.chart;
  R.caseTag = to_string(c.tag);
  R.N = c.N;
  R.M = c.M;
  R.m = c.m;
  R.n = c.n;
  R.eta = c.eta;
  std::tie(R.a, R.b) = weak_type_exponents(c);
  R.measureX = c.tag == CaseTag::Case2d1 ? S.stats.measureF : S.stats.measureE;
  R.cMeasured = R.measureX / (std::pow(alpha, R.a) * std::pow(beta / alpha, R.b));
  R.samples = int(fc.omega.size());
  R.phiMaxRelErr = fc.phiMaxRelErr;
  R.gMaxRelErr = cp.gMax;
  R.maxErrorRatio = cp.errMax;
  R.errorSplitPoints = cp.points;
  R.minJacRatio = cp.minJac;
  R.minVandermondeRatio = cp.minV;
  R.modelMaxRelErr = cp.modelMax;
  R.modelPoints = cp.modelPoints;
  R.fibreProduct = 1;
  for(int j = (c.tag == CaseTag::Case2d ? 2 : 1); j <= c.L; ++j)
    R.fibreProduct *= tr.fibreConstant[j];
  R.bezout = bezout_bound(std::vector<int>(c.d, c.curve->degree() + 1));
  R.cChain = R.minJacRatio * R.fibreProduct / double(R.bezout);

  TrapeziumSpec Tz = trapezium(c.d);
  auto ratio = [&](Eigen::Vector2d const& v) {
    return S.stats.value / (std::pow(S.stats.measureE, v(0)) * std::pow(S.stats.measureF, 1 - v(1)));
  };
  R.weakRatio1 = ratio(Tz.vertices[2]);
  R.weakRatio2 = ratio(Tz.vertices[3]);
  return R;
}

RefinementInstance refinement_instance(int d, uint64_t seed)
{
  if(d != 2 && d != 3)
    throw ConfigError("refinement instances exist for d = 2 and d = 3");
  std::mt19937_64 rng(derive_seed(seed, uint64_t(d)));
  std::uniform_real_distribution<double> U(0, 1);
  auto uni = [&](double a, double b) { return a + (b - a) * U(rng); };
  Averaging A{PolyCurve::moment(d), WeightedMeasure(d, 0, 1.0), 0.0, 1.0};
  RefinementInstance I{A, {}, {}};
  double hs = d == 2 ? 1.0 / 64 : 1.0 / 24;
  Eigen::VectorXd h = Eigen::VectorXd::Constant(d, hs);
  Grid gF = Grid::covering(h, Eigen::VectorXd::Constant(d, -0.5), Eigen::VectorXd::Constant(d, 0.5));
  Grid gE = Grid::covering(h, Eigen::VectorXd::Constant(d, -2.6), Eigen::VectorXd::Constant(d, 0.6));
  Dilations dil{1.0, 2.0, d == 2 ? 16 : 8};
  I.E = empty_spatial_set(gE);
  I.F = empty_layered_set(gF, dil);
  VoxelSet base = empty_spatial_set(gF);
  double rmax;
  if(d == 2)
  {
    Eigen::Vector2d c(uni(-0.1, 0.1), uni(-0.1, 0.1));
    double a1 = uni(0.2, 0.4), a2 = uni(0.2, 0.4), th = uni(0, M_PI);
    rmax = uni(1.5, 2.0);
    Eigen::Matrix2d Rt;
    Rt << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
    for(int64_t i = 0; i < gF.size(); ++i)
    {
      Eigen::Vector2d p = Rt * (gF.node(gF.index(i)) - c);
      base.v[i] = (p(0) * p(0) / (a1 * a1) + p(1) * p(1) / (a2 * a2) <= 1) ? 1 : 0;
    }
    for(int b = 0; b < 2; ++b)
    {
      Eigen::Vector2d ce(-0.7 + uni(-0.3, 0.3), -0.5 + uni(-0.3, 0.3));
      double rad = uni(0.6, 1.0);
      for(int64_t i = 0; i < gE.size(); ++i)
        if((gE.node(gE.index(i)) - ce).norm() <= rad)
          I.E.v[i] = 1;
    }
  }
  else
  {
    Eigen::Vector3d ce(-0.8 + uni(-0.05, 0.05), -0.5 + uni(-0.05, 0.05), -0.3 + uni(-0.05, 0.05));
    double re = 1.2 * (1 + uni(-0.01, 0.01));
    Eigen::Vector3d cf(uni(-0.05, 0.05), uni(-0.05, 0.05), uni(-0.05, 0.05));
    double rf = 0.3 * (1 + uni(-0.01, 0.01));
    rmax = 1.5;
    for(int64_t i = 0; i < gE.size(); ++i)
      I.E.v[i] = (gE.node(gE.index(i)) - ce).norm() <= re ? 1 : 0;
    for(int64_t i = 0; i < gF.size(); ++i)
      base.v[i] = (gF.node(gF.index(i)) - cf).norm() <= rf ? 1 : 0;
  }
  for(int j = 0; j < dil.n; ++j)
    if(dil.r(j) <= rmax)
      std::copy(base.v.begin(), base.v.end(), I.F.layer(j));
  return I;
}

nlohmann::json tower_to_json(Tower const& T)
{
  nlohmann::json j;
  j["d"] = T.d;
  j["delta"] = T.delta;
  j["slabFloor"] = T.slabFloor;
  j["stats"] = {{"alpha", T.stats.alpha}, {"beta", T.stats.beta}, {"kappa", T.stats.kappa},
                {"pairing", T.stats.value}, {"measureE", T.stats.measureE},
                {"measureF", T.stats.measureF}};
  TowerNode const& b = T.levels[0][0];
  j["base"] = {{"x", std::vector<double>(T.grid->F.grid.node(b.psi).data(),
                                          T.grid->F.grid.node(b.psi).data() + T.d)},
               {"r", T.r(b.layer)},
               {"t", T.t(b.tnode)}};
  nlohmann::json colours = nlohmann::json::array();
  for(int k = 2; k <= T.depth(); k += 2)
    colours.push_back({{"index", k},
                       {"colour", T.pre[k] == PreColour::red    ? "pre-red"
                                  : T.pre[k] == PreColour::blue ? "pre-blue"
                                                                : "none"}});
  j["colours"] = colours;
  nlohmann::json levels = nlohmann::json::array();
  for(int l = 1; l <= T.depth(); ++l)
  {
    nlohmann::json lv = nlohmann::json::array();
    for(int i : T.alive(l))
    {
      TowerNode const& n = T.levels[l][i];
      lv.push_back({{"parent", n.parent}, {"index", i}, {"r", T.r(n.layer)}, {"t", T.t(n.tnode)},
                    {"weight", n.weight}, {"fibreMass", n.fibreMass}});
    }
    levels.push_back(lv);
  }
  j["levels"] = levels;
  return j;
}

}
