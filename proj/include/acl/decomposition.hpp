#pragma once

#include <acl/curves.hpp>

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace acl
{

struct DecompInterval
{
  double lo = 0, hi = 0;
  mpq_class b = 0;   // centre, outside (lo, hi)
  int K = 0;
  double D = 1;
  double cLow = 1, cHigh = 1;
  double geoConstant = 0;
  bool certified = false;
  Eigen::VectorXd witness;   // tuple attaining geoConstant

  double center() const { return b.get_d(); }
  double width() const { return hi - lo; }
};

std::vector<DecompInterval> decompose(PolyCurve const& curve, double clipRadius = 8.0,
                                      int maxIntervals = 256);

// Fits D, cLow, cHigh for a fixed (lo, hi, b, K).
void fit_monomial_model(PolyCurve const& curve, DecompInterval& iv);

// Ratio |J_P| / (prod |L_P|^{1/d} |V|) at an ordered tuple.
double geometric_ratio(PolyCurve const& curve, Eigen::Ref<const Eigen::VectorXd> const& t);

DecompInterval certify_geometric(PolyCurve const& curve, DecompInterval iv,
                                 int samples = 100000, uint64_t seed = 7);

struct ReducedSetting
{
  PolyCurve curve;
  WeightedMeasure measure;
  double lo, hi;          // unit-length interval inside (0, inf)
  mpq_class shift, scale; // original t = shift + scale * t'
};

ReducedSetting reduce_to_unit_interval(PolyCurve const& curve, DecompInterval const& iv);

}
