#pragma once

#include <acl/curves.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace acl
{

// Box of nodes i * h, lo <= i < lo + n per axis, on a lattice of spacing h.
struct Grid
{
  Eigen::VectorXd h;
  Eigen::VectorXi lo, n;

  int dim() const { return int(h.size()); }
  int64_t size() const;
  double cell_volume() const { return h.prod(); }
  Eigen::VectorXi hi() const { return lo + n; }
  int64_t linear(Eigen::Ref<const Eigen::VectorXi> const& idx) const;   // -1 if outside
  Eigen::VectorXi index(int64_t linear) const;
  Eigen::VectorXd node(Eigen::Ref<const Eigen::VectorXi> const& idx) const
  {
    return idx.cast<double>().cwiseProduct(h);
  }

  // Smallest grid with spacing h whose nodes cover [bmin, bmax].
  static Grid covering(Eigen::VectorXd const& h, Eigen::VectorXd const& bmin,
                       Eigen::VectorXd const& bmax);
};

// Midpoint layers r_k = lo + (k + 1/2)(hi - lo)/n inside [1, 2].
struct Dilations
{
  double lo = 1, hi = 2;
  int n = 1;
  double r(int k) const { return lo + (k + 0.5) * (hi - lo) / n; }
  double dr() const { return (hi - lo) / n; }
};

// Values on grid x layers, layout [layer][spatial]; layers == 0 means a
// purely spatial field.
template <typename T>
struct Field
{
  Grid grid;
  Dilations dil;
  int layers = 0;
  std::vector<T> v;

  int layer_count() const { return layers ? layers : 1; }
  int64_t spatial_size() const { return grid.size(); }
  T* layer(int k) { return v.data() + int64_t(k) * grid.size(); }
  T const* layer(int k) const { return v.data() + int64_t(k) * grid.size(); }
};

using GriddedFunction = Field<double>;

// Membership mask. measure = voxel volume (times dr for layered sets) x count.
struct VoxelSet : Field<uint8_t>
{
  int64_t count() const;
  double measure() const;
  double voxel_measure() const { return grid.cell_volume() * (layers ? dil.dr() : 1.0); }
};

VoxelSet empty_spatial_set(Grid const& g);
VoxelSet empty_layered_set(Grid const& g, Dilations const& dil);
GriddedFunction zero_field(Grid const& g, Dilations const& dil, int layers);

// Midpoint nodes on [a, b] with weights lambda(t_k) (b - a)/Q.
struct Quadrature
{
  std::vector<double> t, w;
};

Quadrature midpoint_quadrature(WeightedMeasure const& m, double a, double b, int Q);

struct Averaging
{
  PolyCurve curve;
  WeightedMeasure measure;
  double a = 0, b = 1;
  int Q = 256;

  Quadrature quadrature() const { return midpoint_quadrature(measure, a, b, Q); }
};

// Lattice shift round(r P(t) / h).
Eigen::VectorXi snapped_shift(PolyCurve const& c, Eigen::VectorXd const& h, double r, double t);

// A f (x, r) = sum_k f(x - sigma_{r,k} h) w_k on out x dil. With
// requireContainment, every translate of supp f must land inside out.
GriddedFunction apply(Averaging const& A, VoxelSet const& f, Grid const& out, Dilations const& dil,
                      bool requireContainment = false);
GriddedFunction apply(Averaging const& A, GriddedFunction const& f, Grid const& out,
                      Dilations const& dil, bool requireContainment = false);

// A* g (x) = sum_{j,k} g(x + sigma_{r_j,k} h, r_j) w_k dr.
GriddedFunction adjoint_apply(Averaging const& A, VoxelSet const& g, Grid const& out);
GriddedFunction adjoint_apply(Averaging const& A, GriddedFunction const& g, Grid const& out);

struct BilinearStats
{
  double value = 0, alpha = 0, beta = 0, kappa = 1;
  double measureE = 0, measureF = 0;
};

// <A chi_E, chi_F>; throws EmptyIncidence when zero.
BilinearStats bilinear(Averaging const& A, VoxelSet const& E, VoxelSet const& F);
// <chi_E, A* chi_F>
double bilinear_dual(Averaging const& A, VoxelSet const& E, VoxelSet const& F);

// {(x, r) : f > threshold}, strict.
VoxelSet superlevel(GriddedFunction const& f, double threshold);

enum class Family
{
  boxR,
  ballB,
  neighborhoodF,
  adjointF,
  translates
};

Family family_from_string(std::string const& s);
std::string to_string(Family f);

struct FamilyOptions
{
  int gridN = 512;    // voxels per axis of the larger grid
  int layers = 64;    // dilation layers
  int nodesPerDelta = 64;
};

struct FamilyPair
{
  Family kind;
  double delta;
  VoxelSet E, F;
  double predictedE = 0, predictedF = 0;
  BilinearStats stats;
};

// Builds (E, F) and the pairing. Curve and weight come from A; its Q is
// overridden per family.
FamilyPair extremizer_family(Family kind, double delta, Averaging const& A,
                             FamilyOptions const& opt = {});

struct TrapeziumSpec
{
  int d;
  std::vector<Eigen::Vector2d> vertices;   // (0,0), (1,1), (1/p1,1/q1), (1/p2,1/q2)
};

TrapeziumSpec trapezium(int d);
bool trapezium_contains(TrapeziumSpec const& T, Eigen::Vector2d const& pt);
// Euclidean distance to the closed trapezium (0 inside).
double trapezium_distance(TrapeziumSpec const& T, Eigen::Vector2d const& pt);
// Distance to the boundary from inside (0 outside).
double trapezium_depth(TrapeziumSpec const& T, Eigen::Vector2d const& pt);

// Least-squares slope of log y against log x.
double loglog_slope(std::vector<double> const& x, std::vector<double> const& y);

struct RieszRow
{
  double delta, measureE, measureF, pairing, ratio;
};

struct RieszReport
{
  std::vector<RieszRow> rows;
  double slope = 0;
  std::string verdict;   // "bounded" or "divergent"
};

// ratio(delta) = <A chi_E, chi_F> / (|E|^{1/p} |F|^{1/q'}).
RieszReport riesz_ratios(std::vector<FamilyPair> const& pairs, double invP, double invQ);
RieszReport riesz_scan(Averaging const& A, Family family, std::vector<double> const& deltas,
                       double p, double q, FamilyOptions const& opt = {});

struct DiagramPoint
{
  Eigen::Vector2d pt;   // (1/p, 1/q)
  double slope;         // minimum over families
  Family family;        // attaining the minimum
  std::string verdict;
  int expected;         // 1 inside shrunk T_d, -1 outside expanded T_d, 0 in the band
};

struct RieszDiagram
{
  TrapeziumSpec T;
  double margin = 0.05;
  std::vector<DiagramPoint> points;
  int tested = 0, agree = 0;
};

// Verdicts on an nx x ny lattice of [0, 1]^2; each family's pairs are built
// once and reused for every lattice point.
RieszDiagram riesz_diagram(Averaging const& A, std::vector<Family> const& families,
                           std::vector<double> const& deltas, int nx, int ny, double margin = 0.05,
                           FamilyOptions const& opt = {});

}
