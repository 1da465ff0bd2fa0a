#include "commands.hpp"

#include <acl/decomposition.hpp>
#include <acl/errors.hpp>
#include <acl/extremal.hpp>
#include <acl/operator.hpp>
#include <acl/parallel.hpp>
#include <acl/refinement.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace acl::cli
{

using nlohmann::json;
namespace fs = std::filesystem;

void Run::emit(std::string const& name, std::string const& text, bool primary)
{
  auto write = [&](fs::path const& p) {
    if(p.has_parent_path())
      fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if(!f)
      throw ConfigError("cannot write " + p.string());
    f << text;
  };
  write(dir / name);
  outputs["files"].push_back(name);
  std::string out = config.value("out", "");
  if(primary && !out.empty())
    write(out);
}

namespace
{

json load_json(std::string const& path)
{
  std::ifstream f(path);
  if(!f)
    throw ConfigError("cannot open " + path);
  try
  {
    return json::parse(f);
  }
  catch(json::parse_error const& e)
  {
    throw ConfigError(path + ": " + e.what());
  }
}

// A path is replaced by the file's contents; objects pass through.
json inline_ref(json const& v)
{
  if(v.is_string())
    return load_json(v.get<std::string>());
  return v;
}

std::string num(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json finite_or_null(double x)
{
  return std::isfinite(x) ? json(x) : json(nullptr);
}

bool is_moment_spec(json const& c)
{
  return (c.is_string() && c == "moment") || (c.is_object() && c.value("preset", "") == "moment");
}

// Curve spec in resolved, self-contained form.
json curve_spec(json const& cfg)
{
  json const& c = cfg.at("curve");
  if(c.is_null())
    throw ConfigError("--curve is required");
  if(is_moment_spec(c))
    return {{"preset", "moment"}, {"dim", c.is_object() ? c.value("dim", cfg.value("dim", 2)) : cfg.value("dim", 2)}};
  return inline_ref(c);
}

// Moment curve: dt on [0, 1]. Anything else: the chosen decomposition
// interval in reduced form.
Averaging averaging_of(json const& curve, int interval)
{
  PolyCurve P = curve_from_json(curve);
  if(curve.contains("preset"))
    return Averaging{P, WeightedMeasure(P.dim(), 0, 1.0), 0.0, 1.0};
  auto ivs = decompose(P);
  if(interval < 0 || interval >= int(ivs.size()))
    throw ConfigError("interval index out of range (" + std::to_string(ivs.size()) + " intervals)");
  ReducedSetting R = reduce_to_unit_interval(P, ivs[interval]);
  return Averaging{R.curve, R.measure, R.lo, R.hi};
}

std::vector<double> parse_deltas(std::string const& s)
{
  double a, r;
  int n;
  char c1, c2;
  std::istringstream in(s);
  if(!(in >> a >> c1 >> r >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1 || !(a > 0) || !(r > 0))
    throw ConfigError("deltas must read start:ratio:count, got '" + s + "'");
  std::vector<double> v;
  for(int k = 0; k < n; ++k)
    v.push_back(a * std::pow(r, k));
  return v;
}

std::vector<std::string> split(std::string const& s, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while(std::getline(in, cur, sep))
    if(!cur.empty())
      out.push_back(cur);
  return out;
}

Eigen::VectorXd vec(json const& a, int d, char const* what)
{
  if(!a.is_array() || int(a.size()) != d)
    throw ConfigError(std::string(what) + " must be an array of length " + std::to_string(d));
  Eigen::VectorXd v(d);
  for(int i = 0; i < d; ++i)
    v(i) = a[i].get<double>();
  return v;
}

// {"h", "lo", "hi", "balls": [{"center", "radius"}], "boxes": [{"lo", "hi"}]}
// plus "layers", "rmin", "rmax" for subsets of R^d x [1, 2].
VoxelSet voxel_set(json const& s, int d, bool layered)
{
  Eigen::VectorXd h = s.at("h").is_array() ? vec(s["h"], d, "h")
                                           : Eigen::VectorXd::Constant(d, s.at("h").get<double>());
  Grid g = Grid::covering(h, vec(s.at("lo"), d, "lo"), vec(s.at("hi"), d, "hi"));
  VoxelSet base = empty_spatial_set(g);
  for(int64_t i = 0; i < g.size(); ++i)
  {
    Eigen::VectorXd x = g.node(g.index(i));
    bool in = false;
    for(auto const& b : s.value("balls", json::array()))
      in = in || (x - vec(b.at("center"), d, "center")).norm() <= b.at("radius").get<double>();
    for(auto const& b : s.value("boxes", json::array()))
      in = in || ((x - vec(b.at("lo"), d, "lo")).minCoeff() >= 0 && (vec(b.at("hi"), d, "hi") - x).minCoeff() >= 0);
    base.v[i] = in;
  }
  if(!layered)
  {
    if(s.contains("layers"))
      throw ConfigError("E is a subset of R^d and takes no layers");
    return base;
  }
  Dilations dil{1.0, 2.0, s.at("layers").get<int>()};
  VoxelSet F = empty_layered_set(g, dil);
  double rmin = s.value("rmin", 1.0), rmax = s.value("rmax", 2.0);
  for(int j = 0; j < dil.n; ++j)
    if(dil.r(j) >= rmin && dil.r(j) <= rmax)
      std::copy(base.v.begin(), base.v.end(), F.layer(j));
  return F;
}

struct Inputs
{
  RefinementInstance inst;
  RefineOptions opt;
  json snapshot;
};

Inputs chain_inputs(json cfg)
{
  static char const* const keys[] = {"curve", "dim",   "interval", "E",   "F",
                                     "instance-seed", "delta", "nt", "fanout", "seed"};
  if(cfg.contains("tower") && cfg["tower"].is_string())
  {
    json t = load_json(cfg["tower"].get<std::string>());
    if(!t.contains("inputs"))
      throw ConfigError("tower file carries no inputs");
    for(auto const* k : keys)
      if(t["inputs"].contains(k))
        cfg[k] = t["inputs"][k];
  }
  json curve = curve_spec(cfg);
  int d = curve.at("dim").get<int>();
  Averaging A = averaging_of(curve, cfg.value("interval", 0));
  json E = cfg.value("E", json()), F = cfg.value("F", json());
  if(E.is_null() != F.is_null())
    throw ConfigError("give both E and F, or neither for a seeded instance");
  if(!E.is_null())
  {
    E = inline_ref(E);
    F = inline_ref(F);
  }
  RefineOptions opt;
  opt.nt = cfg.at("nt").get<int>();
  opt.fanout = cfg.at("fanout").get<int>();
  opt.delta = cfg.at("delta").get<double>();
  opt.seed = cfg.at("seed").get<uint64_t>();
  if(cfg.contains("samples"))
    opt.chainSamples = cfg["samples"].get<int>();
  auto instance = [&] {
    if(!E.is_null())
      return RefinementInstance{A, voxel_set(E, d, false), voxel_set(F, d, true)};
    RefinementInstance I = refinement_instance(d, cfg.at("instance-seed").get<uint64_t>());
    I.A = A;
    return I;
  };
  json snapshot = {{"curve", curve}, {"dim", d}, {"interval", cfg.value("interval", 0)},
                   {"E", E},         {"F", F}, {"instance-seed", cfg.at("instance-seed")},
                   {"delta", opt.delta}, {"nt", opt.nt}, {"fanout", opt.fanout},
                   {"seed", opt.seed}};
  return Inputs{instance(), opt, snapshot};
}

void cmd_decompose(Run& run)
{
  json const& cfg = run.config;
  PolyCurve P = curve_from_json(curve_spec(cfg));
  auto ivs = run.stage("decompose", [&] {
    return decompose(P, cfg.at("clip").get<double>(), cfg.at("max-intervals").get<int>());
  });
  json list = json::array();
  run.stage("certify", [&] {
    uint64_t seed = cfg.at("seed").get<uint64_t>();
    for(size_t i = 0; i < ivs.size(); ++i)
    {
      DecompInterval iv = certify_geometric(P, ivs[i], cfg.at("samples").get<int>(), derive_seed(seed, i));
      list.push_back({{"lo", iv.lo}, {"hi", iv.hi}, {"b", iv.b.get_str()}, {"K", iv.K}, {"D", iv.D},
                      {"cLow", iv.cLow}, {"cHigh", iv.cHigh}, {"geoConstant", iv.geoConstant},
                      {"witness", std::vector<double>(iv.witness.data(), iv.witness.data() + iv.witness.size())}});
    }
  });
  json out = {{"curve", curve_to_json(P)}, {"intervals", list}};
  run.outputs["intervals"] = list.size();
  run.emit(run.outName, out.dump(2), true);
}

void cmd_riesz(Run& run)
{
  json const& cfg = run.config;
  Averaging A = averaging_of(curve_spec(cfg), cfg.at("interval").get<int>());
  FamilyOptions fo;
  fo.gridN = cfg.at("grid-n").get<int>();
  fo.layers = cfg.at("layers").get<int>();
  Family fam = family_from_string(cfg.at("family").get<std::string>());
  RieszReport R = run.stage("scan", [&] {
    return riesz_scan(A, fam, parse_deltas(cfg.at("deltas").get<std::string>()), cfg.at("p").get<double>(),
                      cfg.at("q").get<double>(), fo);
  });
  std::ostringstream csv;
  csv << "delta,E_measure,F_measure,pairing,ratio\n";
  for(auto const& r : R.rows)
    csv << num(r.delta) << ',' << num(r.measureE) << ',' << num(r.measureF) << ',' << num(r.pairing) << ','
        << num(r.ratio) << '\n';
  run.outputs["slope"] = R.slope;
  run.outputs["verdict"] = R.verdict;
  run.emit(run.outName, csv.str(), true);
}

std::string fraction(long p, long q)
{
  mpq_class r(p, q);
  r.canonicalize();
  return r.get_str();
}

std::string diagram_svg(RieszDiagram const& D)
{
  int d = D.T.d;
  auto X = [](double u) { return 50 + 400 * u; };
  auto Y = [](double v) { return 450 - 400 * v; };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"500\" height=\"500\" font-family=\"sans-serif\" "
       "font-size=\"12\">\n";
  s << "<rect x=\"50\" y=\"50\" width=\"400\" height=\"400\" fill=\"white\" stroke=\"black\"/>\n";
  s << "<polygon fill=\"#dde8f4\" stroke=\"#335\" points=\"";
  for(int i : {0, 2, 3, 1})
    s << X(D.T.vertices[i](0)) << ',' << Y(D.T.vertices[i](1)) << ' ';
  s << "\"/>\n";
  for(auto const& p : D.points)
  {
    char const* col = p.verdict == "bounded" ? "#2a8a4a" : "#c0392b";
    s << "<circle cx=\"" << X(p.pt(0)) << "\" cy=\"" << Y(p.pt(1)) << "\" r=\"4\" ";
    if(p.expected)
      s << "fill=\"" << col << "\"";
    else
      s << "fill=\"none\" stroke=\"" << col << "\"";
    s << "><title>(" << p.pt(0) << ", " << p.pt(1) << ") slope " << p.slope << " " << to_string(p.family)
      << "</title></circle>\n";
  }
  std::string labels[2] = {"(" + fraction(1, d) + ", " + fraction(d - 1, d * (d + 1)) + ")",
                           "(" + fraction(d * d - d + 2, d * (d + 1)) + ", " + fraction(d - 1, d + 1) + ")"};
  for(int i = 0; i < 2; ++i)
  {
    Eigen::Vector2d v = D.T.vertices[2 + i];
    s << "<rect x=\"" << X(v(0)) - 5 << "\" y=\"" << Y(v(1)) - 5
      << "\" width=\"10\" height=\"10\" fill=\"none\" stroke=\"#335\" stroke-width=\"2\"/>\n";
    s << "<text x=\"" << X(v(0)) + 8 << "\" y=\"" << Y(v(1)) + (i ? -8 : 16) << "\">" << labels[i] << "</text>\n";
  }
  s << "<text x=\"250\" y=\"480\" text-anchor=\"middle\">1/p</text>\n";
  s << "<text x=\"20\" y=\"250\" text-anchor=\"middle\" transform=\"rotate(-90 20 250)\">1/q</text>\n";
  s << "<text x=\"250\" y=\"35\" text-anchor=\"middle\">d = " << d << ": " << D.agree << "/" << D.tested
    << " verdicts agree</text>\n";
  s << "</svg>\n";
  return s.str();
}

void cmd_riesz_diagram(Run& run)
{
  json const& cfg = run.config;
  int d = cfg.at("dim").get<int>();
  Averaging A{PolyCurve::moment(d), WeightedMeasure(d, 0, 1.0), 0.0, 1.0};
  int nx, ny;
  char x;
  std::istringstream g(cfg.at("grid").get<std::string>());
  if(!(g >> nx >> x >> ny) || x != 'x')
    throw ConfigError("grid must read NxM");
  std::vector<Family> fams;
  for(auto const& f : split(cfg.at("families").get<std::string>(), ','))
    fams.push_back(family_from_string(f));
  FamilyOptions fo;
  fo.gridN = cfg.at("grid-n").get<int>();
  fo.layers = cfg.at("layers").get<int>();
  RieszDiagram D = run.stage("scan", [&] {
    return riesz_diagram(A, fams, parse_deltas(cfg.at("deltas").get<std::string>()), nx, ny,
                         cfg.at("margin").get<double>(), fo);
  });
  std::ostringstream csv;
  csv << "kind,inv_p,inv_q,slope,family,verdict,expected\n";
  for(int i : {2, 3})
    csv << "vertex," << num(D.T.vertices[i](0)) << ',' << num(D.T.vertices[i](1)) << ",,,,\n";
  for(auto const& p : D.points)
    csv << "lattice," << num(p.pt(0)) << ',' << num(p.pt(1)) << ',' << num(p.slope) << ',' << to_string(p.family)
        << ',' << p.verdict << ','
        << (p.expected == 1 ? "bounded" : p.expected == -1 ? "divergent" : "band") << '\n';
  run.outputs["tested"] = D.tested;
  run.outputs["agree"] = D.agree;
  run.outputs["fraction"] = D.tested ? double(D.agree) / D.tested : 0.0;
  run.outputs["vertices"] = {{D.T.vertices[2](0), D.T.vertices[2](1)}, {D.T.vertices[3](0), D.T.vertices[3](1)}};
  run.emit(run.outName, diagram_svg(D), true);
  run.emit("diagram.csv", csv.str());
}

void cmd_refine(Run& run)
{
  Inputs in = chain_inputs(run.config);
  auto grid = run.stage("grid", [&] { return make_incidence_grid(in.inst.A, in.inst.E, in.inst.F, in.opt.nt); });
  IncidenceSequence S = run.stage("U", [&] { return build_U_sequence(grid); });
  USequenceCheck uc = verify_U_sequence(S);
  Tower T = run.stage("tower", [&] { return refine_tower(grow_initial_tower(S, in.opt), in.opt.delta); });
  TowerReport rep = check_tower(T);
  SigmaChart c = chart_from_tower(T);
  json mass = json::array();
  for(auto const& U : S.U)
    mass.push_back(U.mass);
  json out = {{"inputs", in.snapshot},
              {"caseTag", to_string(c.tag)},
              {"alphaExceedsBeta", S.stats.alpha > S.stats.beta},
              {"blueGapOk", T.blueGapOk},
              {"uSequence", {{"ok", uc.ok()}, {"mass", mass}, {"ratio", uc.ratio}, {"failures", uc.failures}}},
              {"towerCheck",
               {{"ok", rep.ok()},
                {"tuples", rep.tuples},
                {"minSeparation", rep.minSeparation},
                {"minRetention", rep.minRetention},
                {"fibreConstant", json::array()},
                {"failures", rep.failures}}},
              {"tower", tower_to_json(T)}};
  for(double f : rep.fibreConstant)
    out["towerCheck"]["fibreConstant"].push_back(finite_or_null(f));
  run.outputs["caseTag"] = out["caseTag"];
  run.outputs["uSequenceOk"] = uc.ok();
  run.outputs["towerOk"] = rep.ok();
  run.outputs["tuples"] = rep.tuples;
  run.emit(run.outName, out.dump(1), true);
}

void cmd_weak_type(Run& run)
{
  Inputs in = chain_inputs(run.config);
  WeakTypeReport W = run.stage("chain", [&] { return weak_type_chain(in.inst.A, in.inst.E, in.inst.F, in.opt); });
  json out = W.to_json();
  out["inputs"] = in.snapshot;
  if(in.inst.A.curve.dim() == 3 && !W.shortCircuit)
  {
    double a = W.stats.alpha, b = W.stats.beta;
    out["alpha5beta"] = {{"measureE", W.stats.measureE}, {"ratio", W.stats.measureE / (std::pow(a, 5) * b)}};
  }
  run.outputs["shortCircuit"] = W.shortCircuit;
  if(!W.shortCircuit)
  {
    run.outputs["caseTag"] = W.caseTag;
    run.outputs["cMeasured"] = W.cMeasured;
    run.outputs["cChain"] = W.cChain;
  }
  run.emit(run.outName, out.dump(2), true);
}

// min / median / max of a sample with the witness at the worst end.
struct Series
{
  std::vector<double> v;
  std::vector<json> w;

  void add(double x, json wit)
  {
    v.push_back(x);
    w.push_back(std::move(wit));
  }

  json summary(bool worstIsMin) const
  {
    if(v.empty())
      return {{"count", 0}};
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    size_t at = worstIsMin ? std::min_element(v.begin(), v.end()) - v.begin()
                           : std::max_element(v.begin(), v.end()) - v.begin();
    return {{"count", v.size()}, {"min", s.front()}, {"median", s[s.size() / 2]}, {"max", s.back()},
            {"witness", w[at]}};
  }
};

json to_json(Eigen::VectorXd const& z)
{
  return std::vector<double>(z.data(), z.data() + z.size());
}

void cmd_jacobian_verify(Run& run)
{
  json const& cfg = run.config;
  Inputs in = chain_inputs(cfg);
  auto grid = make_incidence_grid(in.inst.A, in.inst.E, in.inst.F, in.opt.nt);
  IncidenceSequence S = run.stage("U", [&] { return build_U_sequence(grid); });
  Tower T = run.stage("tower", [&] { return refine_tower(grow_initial_tower(S, in.opt), in.opt.delta); });
  SigmaChart chart = chart_from_tower(T);
  std::string want = cfg.at("case").get<std::string>();
  if(want != "auto" && want != to_string(chart.tag))
    throw ConfigError("tower is " + to_string(chart.tag) + ", --case asked for " + want);
  FrozenChart fc = run.stage("freeze", [&] { return freeze_variables(T, chart, in.opt.chainSamples); });
  SigmaChart const& c = fc.chart;
  double alpha = T.stats.alpha, beta = T.stats.beta;
  int nx = x_variable_count(c);
  double c0 = nx ? derive_c0(c.curve->degree() - 1, nx) : 0.0;
  Series g, jac, vf, err;
  int gFail = 0, errFail = 0;
  run.stage("checks", [&] {
    for(auto const& z : fc.omega)
    {
      JacobianChartEval ev = assemble_G_sigma(c, z, std::numeric_limits<double>::infinity());
      g.add(ev.relErr, {{"z", to_json(z)}});
      gFail += ev.relErr > 1e-4;
      jac.add(jaclem1_check(c, z, alpha, beta), {{"z", to_json(z)}});
      vf.add(vandermonde_floor_ratio(c, z, alpha, beta), {{"z", to_json(z)}});
      std::vector<Eigen::VectorXd> xs;
      if(nx == 0)
        xs.emplace_back();
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
        xs.push_back(lo);
        xs.push_back(hi);
      }
      for(auto const& x : xs)
      {
        try
        {
          ErrorSplit es = error_split(c, z, x);
          err.add(es.main != 0 ? std::abs(es.error) / std::abs(es.main) : 0.0, {{"z", to_json(z)}, {"x", to_json(x)}});
        }
        catch(ErrorDominationFailure const&)
        {
          ++errFail;
          err.add(std::numeric_limits<double>::infinity(), {{"z", to_json(z)}, {"x", to_json(x)}});
        }
      }
    }
  });
  ModelIdentityScan ms = model_identity_scan(c, T, in.opt.chainSamples);
  json out = {{"inputs", in.snapshot},
              {"caseTag", to_string(c.tag)},
              {"N", c.N}, {"M", c.M}, {"m", c.m}, {"n", c.n}, {"eta", c.eta},
              {"samples", fc.omega.size()},
              {"gSigmaRelErr", g.summary(false)},
              {"gSigmaFailures", gFail},
              {"jaclem1Ratio", jac.summary(true)},
              {"vandermondeRatio", vf.summary(true)},
              {"errorRatio", err.summary(false)},
              {"errorFailures", errFail},
              {"phi", {{"maxRelErr", fc.phiMaxRelErr}, {"failures", fc.phiFailures}}},
              {"roundTrip", fc.roundTrip},
              {"wBoxOk", fc.wBoxOk}};
  if(!fc.warning.empty())
    out["warning"] = fc.warning;
  if(ms.points)
    out["modelIdentity"] = {{"points", ms.points}, {"maxRelErr", ms.maxRelErr}, {"gSigmaMaxRelErr", ms.gMaxRelErr}};
  bool ok = gFail == 0 && errFail == 0 && fc.phiFailures == 0 && fc.roundTrip && fc.wBoxOk &&
            !jac.v.empty() && *std::min_element(jac.v.begin(), jac.v.end()) > 0;
  out["ok"] = ok;
  run.outputs["ok"] = ok;
  run.outputs["caseTag"] = out["caseTag"];
  run.emit(run.outName, out.dump(2), true);
}

void cmd_truncation_table(Run& run)
{
  json const& cfg = run.config;
  int M = cfg.at("max-degree").get<int>(), maxK = cfg.at("max-k").get<int>();
  TruncationTable T = run.stage("table", [&] { return truncation_table(M, maxK); });
  json eps = json::array();
  for(int m = 0; m <= M; ++m)
  {
    json perK = json::array();
    for(int K = 1; K <= maxK; ++K)
    {
      json rows = json::array();
      for(int e = 2; e <= 14; ++e)
      {
        double ep = std::ldexp(1.0, -e);
        double v = C_MK(m, K, ep);
        rows.push_back({ep, v > 0 ? finite_or_null(v) : json(nullptr)});
      }
      perK.push_back({{"K", K}, {"table", rows}});
    }
    eps.push_back(perK);
  }
  json out = {{"maxDegree", T.maxDegree},
              {"maxK", maxK},
              {"cM", T.cM},
              {"c0", T.c0},
              {"epsToConstant", eps},
              {"composition", "K > 1 applies the one-dimensional constant coordinate-wise, K times (conservative)"}};
  run.outputs["cM"] = T.cM;
  run.emit(run.outName, out.dump(2), true);
}

std::vector<OptSpec> chain_opts(bool fromTower)
{
  std::vector<OptSpec> o;
  if(fromTower)
    o.push_back({"tower", nullptr, "tower.json from refine; supplies every input below"});
  std::vector<OptSpec> rest = {
    {"curve", "moment", "curve JSON path, inline object, or 'moment'"},
    {"dim", 2, "dimension of the moment curve"},
    {"interval", 0, "decomposition interval for non-moment curves"},
    {"E", nullptr, "E set JSON (omit E and F for a seeded instance)"},
    {"F", nullptr, "F set JSON"},
    {"instance-seed", 100, "seed of the generated (E, F) instance"},
    {"delta", 0.01, "pre-colour threshold"},
    {"nt", 256, "t nodes on I"},
    {"fanout", 64, "samples per fibre"},
  };
  o.insert(o.end(), rest.begin(), rest.end());
  return o;
}

std::vector<CommandSpec> build_commands()
{
  std::vector<CommandSpec> v;
  v.push_back({"decompose", "interval decomposition and geometric-inequality certificates", "decomp.json",
               {{"curve", nullptr, "curve JSON path, inline object, or 'moment'"},
                {"dim", 2, "dimension of the moment curve"},
                {"clip", 8.0, "clip radius for unbounded pieces"},
                {"samples", 100000, "tuples per interval"},
                {"max-intervals", 256, "subdivision budget"},
                {"out", "", "copy of the output"}},
               cmd_decompose});
  v.push_back({"riesz", "ratio scan of one extremizer family", "riesz.csv",
               {{"curve", "moment", "curve JSON path, inline object, or 'moment'"},
                {"dim", 2, "dimension of the moment curve"},
                {"interval", 0, "decomposition interval for non-moment curves"},
                {"family", "boxR", "boxR, ballB, neighborhoodF, adjointF or translates"},
                {"p", 2.0, "exponent p"},
                {"q", 6.0, "exponent q"},
                {"deltas", "0.25:0.5:6", "start:ratio:count"},
                {"grid-n", 512, "voxels per axis"},
                {"layers", 64, "dilation layers"},
                {"out", "", "copy of the output"}},
               cmd_riesz});
  v.push_back({"riesz-diagram", "verdict map over the (1/p, 1/q) square", "diagram.svg",
               {{"dim", 2, "dimension of the moment curve"},
                {"grid", "17x17", "lattice size"},
                {"families", "boxR,ballB,neighborhoodF,adjointF,translates", "comma-separated families"},
                {"deltas", "0.25:0.5:5", "start:ratio:count"},
                {"grid-n", 512, "voxels per axis"},
                {"layers", 64, "dilation layers"},
                {"margin", 0.05, "band around the trapezium boundary left untested"},
                {"out", "", "copy of the SVG"}},
               cmd_riesz_diagram});
  auto refine = chain_opts(false);
  refine.push_back({"out", "", "copy of the output"});
  v.push_back({"refine", "U sequence, tower and colouring", "tower.json", refine, cmd_refine});
  auto weak = chain_opts(true);
  weak.push_back({"samples", 500, "chart samples"});
  weak.push_back({"out", "", "copy of the output"});
  v.push_back({"weak-type", "full chain to the measured weak-type constant", "chain_report.json", weak,
               cmd_weak_type});
  auto jac = chain_opts(true);
  jac.push_back({"case", "auto", "expected case tag, or auto"});
  jac.push_back({"samples", 500, "chart samples"});
  jac.push_back({"out", "", "copy of the output"});
  v.push_back({"jacobian-verify", "Jacobian checks on a tower's chart", "jac_report.json", jac,
               cmd_jacobian_verify});
  v.push_back({"truncation-table", "extremal constants and admissible truncation", "trunc.json",
               {{"max-degree", 8, "largest M"}, {"max-k", 2, "largest K"}, {"out", "", "copy of the output"}},
               cmd_truncation_table});
  return v;
}

}

std::vector<CommandSpec> const& commands()
{
  static std::vector<CommandSpec> const v = build_commands();
  return v;
}

CommandSpec const* find_command(std::string const& name)
{
  for(auto const& c : commands())
    if(c.name == name)
      return &c;
  return nullptr;
}

json coerce(OptSpec const& o, std::string const& text)
{
  try
  {
    size_t used = 0;
    if(o.def.is_number_integer())
    {
      long long v = std::stoll(text, &used);
      if(used == text.size())
        return v;
    }
    else if(o.def.is_number())
    {
      double v = std::stod(text, &used);
      if(used == text.size())
        return v;
    }
    else if(!text.empty() && text.front() == '{')
      return json::parse(text);
    else
      return text;
  }
  catch(std::exception const&)
  {
  }
  throw ConfigError("--" + o.name + ": cannot read '" + text + "'");
}

json resolve_config(CommandSpec const& c, json const& file)
{
  json cfg = {{"command", c.name}, {"seed", 7}};
  for(auto const& o : c.opts)
    cfg[o.name] = o.def;
  for(auto it = file.begin(); it != file.end(); ++it)
  {
    if(!cfg.contains(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' for " + c.name);
    json const& def = cfg[it.key()];
    json const& v = it.value();
    bool ok = def.is_null() || (def.is_number() && v.is_number()) || (def.is_string() && v.is_string());
    if(def.is_number_integer() && !v.is_number_integer())
      ok = false;
    if(!ok)
      throw ConfigError("key '" + it.key() + "' has the wrong type");
    cfg[it.key()] = v;
  }
  if(cfg["command"] != c.name)
    throw ConfigError("config is for " + cfg["command"].get<std::string>());
  return cfg;
}

std::string record_id(json const& config)
{
  std::string s = config.dump() + "|" + kVersion;
  uint64_t h = 1469598103934665603ull;
  for(unsigned char ch : s)
  {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}
