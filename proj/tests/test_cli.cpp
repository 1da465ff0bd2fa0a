#include <json.hpp>

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace
{

struct Result
{
  int code;
  std::string out;
};

class Cli : public ::testing::Test
{
protected:
  fs::path dir;

  void SetUp() override
  {
    dir = fs::temp_directory_path() /
          ("acl_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  Result run(std::string const& args)
  {
    std::string cmd = std::string(ACL_CLI_PATH) + " --runs-dir " + (dir / "runs").string() + " " + args +
                      " 2>" + (dir / "stderr.txt").string();
    FILE* p = popen(cmd.c_str(), "r");
    std::string out;
    std::array<char, 4096> buf;
    size_t n;
    while((n = fread(buf.data(), 1, buf.size(), p)) > 0)
      out.append(buf.data(), n);
    int status = pclose(p);
    while(!out.empty() && out.back() == '\n')
      out.pop_back();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
  }

  fs::path write(std::string const& name, std::string const& text)
  {
    fs::path f = dir / name;
    std::ofstream(f) << text;
    return f;
  }

  static json load(fs::path const& f)
  {
    std::ifstream in(f);
    return json::parse(in);
  }

  static std::string slurp(fs::path const& f)
  {
    std::ifstream in(f);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

}

TEST_F(Cli, UsageErrorsExitTwo)
{
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("--config " + write("empty.json", "{}").string()).code, 2);
  EXPECT_EQ(run("--config " + write("bad.json", R"({"command": "truncation-table", "bogus": 1})").string()).code, 2);
  EXPECT_EQ(run("--config " + write("type.json", R"({"command": "truncation-table", "max-degree": "x"})").string()).code, 2);
  EXPECT_EQ(run("--config " + (dir / "missing.json").string()).code, 2);
}

TEST_F(Cli, DeterministicRecord)
{
  Result a = run("truncation-table --max-degree 3");
  Result b = run("truncation-table --max-degree 3");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(a.out, b.out);
  fs::path rundir = fs::path(a.out).parent_path();
  json rec = load(a.out);
  EXPECT_EQ(rec["config"]["max-degree"], 3);
  EXPECT_EQ(rec["seed"], 7);
  json trunc = load(rundir / "trunc.json");
  EXPECT_EQ(trunc["cM"][0], 1.0);
  EXPECT_NEAR(trunc["cM"][1].get<double>(), 1 + std::sqrt(2.0), 1e-3);
  std::string first = slurp(rundir / "trunc.json");
  fs::remove(rundir / "trunc.json");
  ASSERT_EQ(run("truncation-table --max-degree 3").code, 0);
  EXPECT_EQ(slurp(rundir / "trunc.json"), first);
}

TEST_F(Cli, ConfigRoundTripAndFlagOverride)
{
  Result a = run("truncation-table --max-degree 2");
  ASSERT_EQ(a.code, 0);
  json cfg = load(a.out)["config"];
  Result b = run("--config " + write("cfg.json", cfg.dump()).string());
  ASSERT_EQ(b.code, 0);
  EXPECT_EQ(a.out, b.out);
  Result c = run("--config " + write("cfg3.json", R"({"command": "truncation-table", "max-degree": 3})").string() +
                 " truncation-table --max-degree 2");
  ASSERT_EQ(c.code, 0);
  EXPECT_EQ(load(c.out)["config"]["max-degree"], 2);
  Result s = run("--seed 11 truncation-table --max-degree 2");
  EXPECT_EQ(load(s.out)["seed"], 11);
  EXPECT_NE(s.out, a.out);
}

TEST_F(Cli, OutFlagCopiesPrimaryOutput)
{
  fs::path out = dir / "t.json";
  Result a = run("truncation-table --max-degree 1 --out " + out.string());
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(slurp(out), slurp(fs::path(a.out).parent_path() / "trunc.json"));
}

TEST_F(Cli, DecomposeCurveFile)
{
  fs::path curve = write("cubic.json", R"({"dim": 2, "coeffs": [["0", "1", "0", "0"], ["0", "0", "0", "1"]]})");
  Result a = run("decompose --curve " + curve.string() + " --samples 2000");
  ASSERT_EQ(a.code, 0) << slurp(dir / "stderr.txt");
  json d = load(fs::path(a.out).parent_path() / "decomp.json");
  ASSERT_EQ(d["intervals"].size(), 2u);
  for(auto const& iv : d["intervals"])
  {
    EXPECT_EQ(iv["K"], 1);
    EXPECT_GE(iv["geoConstant"].get<double>(), 1 - 1e-9);
  }
}

TEST_F(Cli, DecomposeInlineCurveFlag)
{
  Result a = run(R"(decompose --curve '{"dim":2,"coeffs":[["0","1"],["0","0","0","1"]]}' --samples 2000)");
  ASSERT_EQ(a.code, 0) << slurp(dir / "stderr.txt");
  json d = load(fs::path(a.out).parent_path() / "decomp.json");
  EXPECT_EQ(d["intervals"].size(), 2u);
}

TEST_F(Cli, StructuredErrorRecord)
{
  Result a = run("riesz --grid-n 16 --layers 4");
  EXPECT_EQ(a.code, 1);
  json rec = load(a.out);
  EXPECT_EQ(rec["error"]["name"], "ResolutionError");
}

TEST_F(Cli, DiagramLabelsVertices)
{
  Result a = run("riesz-diagram --grid 5x5 --grid-n 256 --layers 16 --deltas 0.25:0.5:4 --families boxR,translates");
  ASSERT_EQ(a.code, 0) << slurp(dir / "stderr.txt");
  fs::path rd = fs::path(a.out).parent_path();
  std::string svg = slurp(rd / "diagram.svg");
  EXPECT_NE(svg.find("(1/2, 1/6)"), std::string::npos);
  EXPECT_NE(svg.find("(2/3, 1/3)"), std::string::npos);
  std::string csv = slurp(rd / "diagram.csv");
  EXPECT_EQ(csv.rfind("kind,inv_p,inv_q,slope,family,verdict,expected", 0), 0u);
}

TEST_F(Cli, WeakTypeD3)
{
  Result a = run("weak-type --dim 3 --instance-seed 100");
  ASSERT_EQ(a.code, 0) << slurp(dir / "stderr.txt");
  json r = load(fs::path(a.out).parent_path() / "chain_report.json");
  EXPECT_GT(r["cMeasured"].get<double>(), 0);
  EXPECT_EQ(r["case"], "Case(2,d)");
  EXPECT_EQ(r["modelPoints"], 500);
  EXPECT_LE(r["modelMaxRelErr"].get<double>(), 1e-6);
  EXPECT_TRUE(r.contains("alpha5beta"));
}
