#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "solenoid/config.hpp"

using namespace solenoid;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

std::string cli() {
  const char* p = std::getenv("SOLENOID_CLI");
  return p ? p : "solenoid";
}

Run run(const std::string& args) {
  std::string cmd = cli() + " " + args + " 2>&1";
  FILE* f = popen(cmd.c_str(), "r");
  std::string out;
  std::array<char, 4096> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), f)) out.append(buf.data(), n);
  int st = pclose(f);
  return {WEXITSTATUS(st), out};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("solenoid-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  std::string config(const std::string& text, const std::string& name = "run.conf") {
    auto p = dir / name;
    std::ofstream(p) << text;
    return p.string();
  }
  fs::path dir;
};

const char* kZero = "[system]\nb = 2\ngamma_abs = 0.5\nphi = zero\n";
const char* kTernary =
    "[system]\nb = 3\ngamma_abs = 0.55\ndelta = 0.41421356237309515\ndelta_kind = irrational(sqrt(2)-1)\nphi = cos\n"
    "[experiment]\nmode = sampled\ncount = 65536\n";

}  // namespace

TEST(ParseConfig, MinimalValid) {
  auto c = parse_config("b = 2\ngamma_abs = 0.5\ndelta = 0.25\ndelta_kind = rational(1,4)\nphi = cos\n");
  auto p = c.system();
  EXPECT_EQ(p.b(), 2);
  EXPECT_TRUE(p.delta_is_rational());
  EXPECT_EQ(p.delta_kind().q, 4);
  EXPECT_EQ(p.delta(), 0.25);
}

TEST(ParseConfig, BaseTooSmall) {
  try {
    parse_config("b = 1\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("b must be ≥ 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(ParseConfig, UnknownKey) {
  try {
    parse_config("# comment\n\ngama_abs = 0.5\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(std::string(e.what()), "line 3: unknown key gama_abs");
  }
}

TEST(ParseConfig, ErrorsNameTheLine) {
  auto line_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const Error& e) {
      return std::string(e.what()).substr(0, 7);
    }
    return std::string("none");
  };
  EXPECT_EQ(line_of("b = 2\ngamma_abs = 1.5\n"), "line 2:");
  EXPECT_EQ(line_of("b = 2\ngamma_abs = abc\n"), "line 2:");
  EXPECT_EQ(line_of("[system]\nseed = 3\n"), "line 2:");
  EXPECT_EQ(line_of("[nonsense]\n"), "line 1:");
  EXPECT_EQ(line_of("b 2\n"), "line 1:");
  EXPECT_EQ(line_of("\n\ndelta_kind = rational(1,0)\n"), "line 3:");
  EXPECT_EQ(line_of("delta = 0.3\ndelta_kind = rational(1,4)\n"), "line 1:");
  EXPECT_EQ(line_of("phi = tan\n"), "line 1:");
}

TEST(ParseConfig, DuplicateLastWins) {
  auto c = parse_config("b = 2\nb = 3\n");
  EXPECT_EQ(c.system().b(), 3);
  ASSERT_EQ(c.warnings.size(), 1u);
  EXPECT_NE(c.warnings[0].find("duplicate key b"), std::string::npos);
}

TEST(ParseConfig, PhiForms) {
  EXPECT_EQ(parse_config("phi = const(2.5)\n").system().phi()(0.3), 2.5);
  EXPECT_EQ(parse_config("phi = zero\n").system().phi_sup(), 0.0);
  auto p = parse_config("phi_a0 = 1\nphi_cos = 0, 2\nphi_sin = 0.5\n").system();
  EXPECT_NEAR(p.phi()(0.1), 1 + 2 * std::cos(4 * M_PI * 0.1) + 0.5 * std::sin(2 * M_PI * 0.1), 1e-12);
}

TEST(ParseConfig, ListsAndGrids) {
  auto c = parse_config("xs = grid(4)\nn_list = 6..9\nq_list = 4, 5,6\n");
  EXPECT_EQ(c.reals("xs", {}), (std::vector<double>{0, 0.25, 0.5, 0.75}));
  EXPECT_EQ(c.ints("n_list", {}), (std::vector<int>{6, 7, 8, 9}));
  EXPECT_EQ(c.ints("q_list", {}), (std::vector<int>{4, 5, 6}));
}

TEST(ParseConfig, HashIgnoresThreadsAndOutput) {
  auto a = parse_config("b = 3\nthreads = 1\noutput_dir = a\n");
  auto b = parse_config("b = 3\nthreads = 4\noutput_dir = b\n");
  auto c = parse_config("b = 2\nthreads = 4\noutput_dir = b\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), c.hash());
}

TEST_F(CliTest, VerifySuiteOnZeroPhi) {
  auto r = run("verify-suite --config " + config(kZero) + " --out " + dir.string());
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out, "verify-suite OK alpha=0.000 dim=1.000\n");
}

TEST_F(CliTest, DimTableColumns) {
  auto cfg = config(std::string(kZero) + "[experiment]\ngamma_list = 0.3, 0.5, 0.7\nxs = 0.2\nn_hi = 6\n");
  auto r = run("dim-table --config " + cfg + " --seed 9 --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(r.out.rfind("dim-table OK ", 0), 0u);
  std::istringstream in(slurp(dir / "dim-table-9.csv"));
  std::string header, cols;
  std::getline(in, header);
  std::getline(in, cols);
  EXPECT_EQ(header.rfind("# config_hash=", 0), 0u);
  EXPECT_NE(header.find(" seed=9"), std::string::npos);
  EXPECT_EQ(cols, "gamma_abs,delta,predicted,estimated,method");
  int rows = 0;
  for (std::string l; std::getline(in, l);) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST_F(CliTest, ConservationTernaryResidualColumn) {
  auto cfg = config(std::string(kTernary) + "n = 8\nq_list = 3, 4\nxs = 0.1, 0.7\nthetas = 0.2, 0.9\n");
  auto r = run("conservation --config " + cfg + " --out " + dir.string());
  ASSERT_EQ(r.code, 0) << r.out;
  std::istringstream in(slurp(dir / "conservation-1.csv"));
  std::string l;
  std::getline(in, l);
  std::getline(in, l);
  EXPECT_EQ(l, "x,theta,n,q,alpha_hat,alpha_at_level,beta_hat,upsilon_hat,residual,corollary_consistent");
  int rows = 0;
  while (std::getline(in, l)) {
    ++rows;
    std::vector<std::string> f;
    std::stringstream ss(l);
    for (std::string t; std::getline(ss, t, ',');) f.push_back(t);
    ASSERT_EQ(f.size(), 10u);
    EXPECT_FALSE(f[8].empty());
    EXPECT_TRUE(std::isfinite(std::stod(f[8])));
  }
  EXPECT_EQ(rows, 4);
}

TEST_F(CliTest, ByteIdenticalAcrossThreadCounts) {
  auto cfg = config(std::string(kTernary) + "x = 0.3\nn_hi = 8\ncount = 200000\n");
  auto a = run("fiber-entropy --config " + cfg + " --threads 1 --out " + (dir / "t1").string());
  auto b = run("fiber-entropy --config " + cfg + " --threads 4 --out " + (dir / "t4").string());
  ASSERT_EQ(a.code, 0) << a.out;
  ASSERT_EQ(b.code, 0) << b.out;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(slurp(dir / "t1" / "fiber-entropy-1.measure"), slurp(dir / "t4" / "fiber-entropy-1.measure"));
  EXPECT_EQ(slurp(dir / "t1" / "fiber-entropy-1.csv"), slurp(dir / "t4" / "fiber-entropy-1.csv"));
}

TEST_F(CliTest, EnvThreadFallback) {
  auto cfg = config(std::string(kTernary) + "x = 0.3\nn_hi = 6\n");
  auto a = run("fiber-entropy --config " + cfg + " --out " + (dir / "a").string());
  std::string cmd = "SOLENOID_THREADS=3 " + cli() + " fiber-entropy --config " + cfg + " --out " + (dir / "c").string() + " > /dev/null 2>&1";
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_EQ(slurp(dir / "a" / "fiber-entropy-1.measure"), slurp(dir / "c" / "fiber-entropy-1.measure"));
}

TEST_F(CliTest, EveryOutputHasHeader) {
  auto cfg = config("[system]\nb = 2\ngamma_abs = 0.5\nphi = cos\n[experiment]\nn_list = 4..6\nt_max = 5\nk_max = 16\nquad = 16\nell = 3\n"
                    "orbit_n = 1000\nh_depth = 5\nxs = 0.1\nthetas = 0.3\nn = 6\nq = 3\nn_hi = 6\nbox_hi = 6\nx_count = 256\n"
                    "words_per_x = 256\nn2 = 3\nm = 2\ndepth = 14\n");
  for (const char* e : {"attractor", "fiber-entropy", "porosity", "projection-sweep", "conservation", "condition-h", "separation", "transversality",
                        "rotation"}) {
    auto r = run(std::string(e) + " --config " + cfg + " --seed 5 --out " + dir.string());
    EXPECT_EQ(r.code, 0) << e << ": " << r.out;
    EXPECT_EQ(r.out.rfind(std::string(e) + " OK ", 0), 0u) << r.out;
  }
  int files = 0;
  for (const auto& f : fs::directory_iterator(dir)) {
    if (f.path().extension() == ".conf") continue;
    ++files;
    auto text = slurp(f.path());
    EXPECT_EQ(text.rfind("# config_hash=", 0), 0u) << f.path();
    EXPECT_NE(text.substr(0, text.find('\n')).find(" seed=5"), std::string::npos) << f.path();
    EXPECT_NE(f.path().filename().string().find("-5."), std::string::npos) << f.path();
  }
  EXPECT_GE(files, 9);
}

TEST_F(CliTest, CertificateFormats) {
  auto cfg = config("[system]\nb = 2\ngamma_abs = 0.5\nphi = cos\n[experiment]\nn_list = 4..8\nt_max = 6\n");
  ASSERT_EQ(run("separation --config " + cfg + " --out " + dir.string()).code, 0);
  ASSERT_EQ(run("transversality --config " + cfg + " --out " + dir.string()).code, 0);
  std::istringstream sep(slurp(dir / "separation-1.sepcert"));
  std::string l;
  std::getline(sep, l);
  std::getline(sep, l);
  EXPECT_EQ(l, "SEPCERT v1");
  std::getline(sep, l);
  EXPECT_EQ(l, "n,nhat,threshold,min_gap,pass");
  std::istringstream tw(slurp(dir / "transversality-1.transwit"));
  std::getline(tw, l);
  std::getline(tw, l);
  EXPECT_EQ(l.rfind("TRANSWIT v1 ", 0), 0u);
}

TEST_F(CliTest, ErrorsExitNonZero) {
  auto bad = config("gama_abs = 0.5\n");
  auto r = run("verify-suite --config " + bad);
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("unknown key gama_abs"), std::string::npos) << r.out;
  auto b1 = config("b = 1\n", "b1.conf");
  r = run("verify-suite --config " + b1);
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("b must be ≥ 2"), std::string::npos) << r.out;
  EXPECT_NE(run("no-such-experiment --config " + bad).code, 0);
  EXPECT_NE(run("verify-suite --config " + (dir / "missing.conf").string()).code, 0);
  // module errors propagate with the module's message
  auto deep = config("[system]\nb = 2\n[experiment]\nh_depth = 12\n[budgets]\npair_budget = 10\n", "deep.conf");
  r = run("condition-h --config " + deep + " --out " + dir.string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.out.find("budget"), std::string::npos) << r.out;
}

TEST_F(CliTest, FlagsOverrideConfig) {
  auto cfg = config(std::string(kZero) + "[run]\nseed = 4\noutput_dir = " + (dir / "fromfile").string() + "\n");
  ASSERT_EQ(run("verify-suite --config " + cfg).code, 0);
  EXPECT_TRUE(fs::exists(dir / "fromfile" / "verify-suite-4.txt"));
  ASSERT_EQ(run("verify-suite --config " + cfg + " --seed 11 --out " + (dir / "flag").string()).code, 0);
  EXPECT_TRUE(fs::exists(dir / "flag" / "verify-suite-11.txt"));
}
