#pragma once

#include <acl/chart.hpp>
#include <acl/operator.hpp>

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace acl
{

struct RefineOptions
{
  int nt = 256;               // t nodes on I
  uint64_t seed = 7;
  int fanout = 64;            // samples per fibre
  int64_t maxTuples = 1 << 16;
  double delta = 1e-2;
  int maxRetries = 6;
  int chainSamples = 500;     // omega points checked by the chain
  int pointsPerDomain = 6;    // x points per truncated domain
};

// Discretised Sigma: atoms (x, r_j, t_k) with x a voxel of F's grid, r_j a
// layer and t_k a midpoint node. Atom mass is w_k * |voxel| * dr.
struct IncidenceGrid
{
  explicit IncidenceGrid(Averaging a) : A(std::move(a)) {}

  Averaging A;
  VoxelSet E, F;
  Quadrature q;
  int d = 0, nt = 0, nr = 0, words = 0;
  std::vector<int> shift;   // lattice shift of r_j P(t_k), at (j * nt + k) * d

  int64_t fibre_count() const { return int64_t(F.v.size()); }
  double atom_mass(int k) const { return q.w[k] * F.grid.cell_volume() * F.dil.dr(); }
  int const* shift_of(int layer, int k) const { return shift.data() + (int64_t(layer) * nt + k) * d; }
};

// I must be (a, a + 1) with a >= 0; E spatial, F layered, common lattice.
std::shared_ptr<const IncidenceGrid> make_incidence_grid(Averaging A, VoxelSet E, VoxelSet F, int nt);

// Bit k of fibre f (= F.v index) marks atom (f, t_k).
struct IncidenceSet
{
  int generation = 0;
  std::vector<uint64_t> bits;
  double mass = 0;

  bool has(int64_t f, int k, int words) const
  {
    return (bits[f * words + (k >> 6)] >> (k & 63)) & 1u;
  }
};

struct IncidenceSequence
{
  std::shared_ptr<const IncidenceGrid> grid;
  BilinearStats stats;
  double slabFloor = 0;       // (alpha / 2 kappa)^kappa
  double slabSlack = 0;       // discrete slab weight beyond alpha / 2
  IncidenceSet full;          // U
  std::vector<IncidenceSet> U; // U_0 .. U_{d+1}
};

// Throws EmptyIncidence for a zero pairing and RefinementContract when a
// generation keeps less than a quarter of its predecessor's mass.
IncidenceSequence build_U_sequence(std::shared_ptr<const IncidenceGrid> const& grid);

struct USequenceCheck
{
  bool nested = true, retention = true, slab = true, fibres = true;
  std::vector<double> ratio;   // mass(U_k) / mass(U_{k-1}), k = 1..d+1
  std::vector<std::string> failures;
  bool ok() const { return nested && retention && slab && fibres; }
};

// Re-derives nesting, retention, the slab floor and the fibre tail bounds
// directly from the stored sets.
USequenceCheck verify_U_sequence(IncidenceSequence const& S);

struct TowerNode
{
  int parent = -1;
  int layer = 0;       // r_{floor(j/2)}
  int tnode = 0;       // t_j
  double weight = 0;   // fibre mass represented by this sample
  double fibreMass = 0;    // full discrete mass of the child fibre
  double fibreNominal = 0; // continuum lower bound for that fibre
  double fibreSlack = 0;   // discretisation excess of the removed pieces
  double childWeight = 0;  // sampled child weight before refinement
  bool alive = true;
  Eigen::VectorXi psi;     // lattice index of Psi_j
};

struct Tower
{
  std::shared_ptr<const IncidenceGrid> grid;
  BilinearStats stats;
  double slabFloor = 0;
  int d = 0;
  std::vector<std::vector<TowerNode>> levels;   // levels[0] holds the base point
  std::vector<PreColour> pre;                   // by index 0..d+1, even entries set
  std::vector<int> inA;                         // by even index: 1 case i), 0 case ii)
  double delta = 0;
  bool blueGapOk = true;
  int cap = 0;

  int depth() const { return int(levels.size()) - 1; }
  double t(int node_tnode) const { return grid->q.t[node_tnode]; }
  double r(int layer) const { return grid->F.dil.r(layer); }
  // r(0..floor(j/2)), t(1..j) of a level-j node
  TowerCoords coords(int level, int node) const;
  std::vector<int> alive(int level) const;
  // surviving / sampled child weight of a node
  double retention(int level, int node) const;
};

// Initial tower from U_{d+1}: base point, then alternating pi_1 / pi_2
// fibres with the slab and rectangle exclusions. Throws TowerCollapse.
Tower grow_initial_tower(IncidenceSequence const& S, RefineOptions const& opt = {});

// A_k(parent) membership of the level-k node.
using TowerPredicate = std::function<bool(Tower const&, int k, int node)>;

// Majority recursion for every even k in turn; afterwards each even level
// lies entirely inside or entirely outside A_k.
Tower refine_binary(Tower tower, TowerPredicate const& A);

// refine_binary with the pre-red half-spaces, pre-colours and the blue
// dilation-gap check.
Tower refine_tower(Tower const& initial, double delta);
TowerPredicate pre_red_predicate(double delta);

struct TowerReport
{
  int tuples = 0;
  bool ordering = true, slabFloor = true, images = true, dichotomy = true, fibreMass = true,
       retention = true, separation = true;
  double minSeparation = 0;
  double minRetention = 1;
  std::vector<double> fibreConstant;   // level j: min fibre mass * retention / (alpha or beta)
  std::vector<std::string> failures;
  bool ok() const
  {
    return ordering && slabFloor && images && dichotomy && fibreMass && retention && separation;
  }
};

TowerReport check_tower(Tower const& T);

SigmaChart chart_from_tower(Tower const& T);

struct FrozenChart
{
  SigmaChart chart;
  std::vector<TowerCoords> tuples;    // omega(sigma) as tower coordinates
  std::vector<Eigen::VectorXd> omega; // chart variables
  double phiMaxRelErr = 0;
  int phiFailures = 0;
  bool roundTrip = true;
  bool wBoxOk = true;
  std::string warning;
};

FrozenChart freeze_variables(Tower const& T, SigmaChart chart, int maxSamples = 500);

// d = 3 moment curve in Case(2,d): |det G_sigma| against 6 r1^2 |int V| at up
// to `samples` stored tuples, each under the chart frozen at its own t_1.
// Empty for any other chart.
struct ModelIdentityScan
{
  int points = 0;
  double maxRelErr = 0, gMaxRelErr = 0;
};

ModelIdentityScan model_identity_scan(SigmaChart const& c, Tower const& T, int samples = 500);

struct WeakTypeReport
{
  BilinearStats stats;
  bool shortCircuit = false;
  std::string note;
  std::string caseTag;
  int N = 0, M = 0, m = 0, n = 0, eta = 0;
  double a = 0, b = 0;
  double measureX = 0;
  double cMeasured = 0, cChain = 0;
  double minJacRatio = 0, minVandermondeRatio = 0, fibreProduct = 0;
  long bezout = 0;
  double delta = 0;
  int retries = 0, samples = 0;
  double gMaxRelErr = 0, phiMaxRelErr = 0, maxErrorRatio = 0;
  int errorSplitPoints = 0;
  double modelMaxRelErr = -1;   // d = 3 moment curve only
  int modelPoints = 0;
  std::vector<double> uMass, fibreConstant;
  std::vector<std::string> colours;
  double minSeparation = 0, retention = 0;
  bool towerOk = false, uOk = false;
  double weakRatio1 = 0, weakRatio2 = 0;   // <A chi_E, chi_F> / |E|^{1/p}|F|^{1/q'} at the two vertices

  nlohmann::json to_json() const;
};

WeakTypeReport weak_type_chain(Averaging const& A, VoxelSet const& E, VoxelSet const& F,
                               RefineOptions const& opt = {});

struct RefinementInstance
{
  Averaging A;
  VoxelSet E, F;
};

// Seeded random (E, F) for the moment curve: d = 2 unions of balls; d = 3
// a large ball E and a small ball F x [1, 1.5] with jittered centres.
RefinementInstance refinement_instance(int d, uint64_t seed);

nlohmann::json tower_to_json(Tower const& T);

}
