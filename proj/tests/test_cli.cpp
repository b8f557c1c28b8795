#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "hpnfft/hpnfft.hpp"
#include "support.hpp"

using namespace hpnfft;
using namespace testing_support;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(HPNFFT_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = ::pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = std::filesystem::temp_directory_path() /
           ("hpnfft_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    std::filesystem::create_directories(dir_);
  }
  void TearDown() override { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  }

  std::filesystem::path dir_;
};

}  // namespace

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("precision --bogus").code, 2);
  EXPECT_EQ(run("precision --dims 8,8 --points 10 --window hann").code, 2);
  EXPECT_EQ(run("precision --dims 7,8 --points 10").code, 2);
  EXPECT_EQ(run("precision --dims 8,8 --points 10 --m 4 --sigma 1.0").code, 2);
  EXPECT_EQ(run("precision --dims 8,8 --points 10 --m 0:2").code, 2);
  EXPECT_EQ(run("precision --dims 8,8 --points 10 --transport carrier-pigeon").code, 2);
  EXPECT_EQ(run("madelung --cells 1 --alpha 1.5 --mode fast").code, 2);
  EXPECT_EQ(run("madelung --cells 0 --alpha 1.5").code, 2);
  EXPECT_EQ(run("transform").code, 2);
  EXPECT_EQ(run("worker --rank 1").code, 2);
  EXPECT_EQ(run("worker --rank 1 --connect nonsense").code, 2);
}

TEST_F(CliTest, HelpExitsZero) {
  const auto r = run("--help");
  EXPECT_EQ(r.code, 0);
  for (const char* sub : {"precision", "perf", "madelung", "transform", "gen-points", "worker"}) {
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
  }
}

TEST_F(CliTest, PrecisionSingleRowToStdout) {
  const auto r = run("precision --dims 8,8 --points 100 --m 8:8 --window gaussian --seed 3");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "window,m,sigma,dims,points,seed,forward_error,adjoint_error");
  EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 2);
  EXPECT_NE(r.out.find("gaussian,8,2,8x8,100,3,"), std::string::npos);
}

TEST_F(CliTest, PrecisionIsByteReproducibleWithSidecar) {
  const std::string args = "precision --dims 8,8 --points 120 --m 2:4 --window gaussian,b_spline --seed 9 --out ";
  ASSERT_EQ(run(args + path("a.csv")).code, 0);
  ASSERT_EQ(run(args + path("b.csv")).code, 0);
  const auto a = slurp(path("a.csv"));
  EXPECT_EQ(a, slurp(path("b.csv")));
  EXPECT_EQ(std::count(a.begin(), a.end(), '\n'), 7);
  const auto meta = nlohmann::json::parse(slurp(path("a.csv") + ".meta.json"));
  EXPECT_EQ(meta["command"], "precision");
  EXPECT_EQ(meta["config"]["seed"], 9);
}

TEST_F(CliTest, OracleGuardIsResourceError) {
  EXPECT_EQ(run("precision --points 300000").code, 3);
}

TEST_F(CliTest, PerfSmallSweep) {
  const auto r = run("perf --dims 8,8,8 --sides 8 --workers 1,2 --repetitions 2 --m 2");
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(r.out.substr(0, r.out.find('\n')),
            "points,workers,window,m,sigma,dims,repetitions,median_seconds,speedup,raw_seconds");
  EXPECT_NE(r.out.find("\n512,1,kaiser_bessel,2,2,8x8x8,2,"), std::string::npos);
  EXPECT_EQ(run("perf --dims 8,8,8 --sides 1000000 --workers 1").code, 3);
}

TEST_F(CliTest, MadelungDirectAndDistributed) {
  const auto direct = run("madelung --cells 1 --alpha 1.5 --mode direct");
  ASSERT_EQ(direct.code, 0);
  EXPECT_NE(direct.out.find("fluorite,1,12,1.5,direct,"), std::string::npos);
  const auto last_field = [](const std::string& csv) {
    const auto row = csv.substr(csv.find('\n') + 1);
    return std::stod(row.substr(row.rfind(',') + 1));
  };
  EXPECT_NEAR(last_field(direct.out), 2.5194, 2e-3);

  const auto inproc = run("madelung --cells 1 --alpha 1.5 --mode nfft --workers 2");
  const auto tcp = run("madelung --cells 1 --alpha 1.5 --mode nfft --workers 2 --transport tcp --timeout 10000");
  ASSERT_EQ(inproc.code, 0);
  ASSERT_EQ(tcp.code, 0);
  EXPECT_NEAR(last_field(tcp.out), last_field(direct.out), 1e-6);
  EXPECT_NEAR(last_field(inproc.out), last_field(tcp.out), 1e-12);
}

TEST_F(CliTest, GenPointsRandomAndCrystal) {
  ASSERT_EQ(run("gen-points --dim 2 --points 50 --seed 4 --out " + path("r.ndpt")).code, 0);
  const auto file = read_points(path("r.ndpt"));
  EXPECT_EQ(file.points.dim(), 2u);
  EXPECT_EQ(file.points.size(), 50u);
  ASSERT_EQ(run("gen-points --crystal fluorite --cells 1 --out " + path("c.ndpt")).code, 0);
  EXPECT_EQ(std::filesystem::file_size(path("c.ndpt")), 18u + 12 * 5 * 8);
  const auto crystal = read_points(path("c.ndpt"));
  double net = 0;
  for (auto v : crystal.values) net += v.real();
  EXPECT_EQ(net, 0.0);
  EXPECT_EQ(run("gen-points --dim 2 --points 5").code, 2);
}

TEST_F(CliTest, TransformForwardMatchesLibraryOverBothTransports) {
  std::mt19937_64 rng(21);
  const auto p = random_points(rng, 3, 400);
  const auto v = random_values(rng, 400);
  write_points(path("in.ndpt"), p, v);
  const std::string base = "transform --in " + path("in.ndpt") + " --dims 8,8,8 --m 5 --window b_spline --workers 3 ";
  ASSERT_EQ(run(base + "--out " + path("inproc.csv")).code, 0);
  ASSERT_EQ(run(base + "--transport tcp --timeout 10000 --out " + path("tcp.csv")).code, 0);
  EXPECT_EQ(slurp(path("inproc.csv")), slurp(path("tcp.csv")));

  const auto is = make_index_set({8, 8, 8});
  const auto serial = nfft_forward(p, v, make_nfft_config(is, WindowKind::b_spline, 2.0, 5));
  const auto parsed = read_coefficient_csv(path("tcp.csv"), is);
  EXPECT_LT(relative_l2_error(parsed, serial), 1e-12);
}

TEST_F(CliTest, TransformAdjointRoundTrip) {
  std::mt19937_64 rng(22);
  const auto p = random_points(rng, 2, 300);
  write_points(path("in.ndpt"), p, SampleValues(300));
  const auto is = make_index_set({8, 6});
  const auto c = random_coeffs(rng, is);
  coefficient_report(c).write(path("coeffs.csv"));
  const std::string base = "transform --in " + path("in.ndpt") + " --dims 8,6 --m 6 --direction adjoint --coeffs " +
                           path("coeffs.csv") + " --workers 2 ";
  const auto inproc = run(base);
  const auto tcp = run(base + "--transport tcp --timeout 10000");
  ASSERT_EQ(inproc.code, 0);
  ASSERT_EQ(tcp.code, 0);
  EXPECT_EQ(inproc.out, tcp.out);
  EXPECT_EQ(inproc.out.substr(0, inproc.out.find('\n')), "index,re,im");
  const auto serial = nfft_adjoint(c, p, make_nfft_config(is, WindowKind::kaiser_bessel, 2.0, 6));
  std::istringstream lines(inproc.out);
  std::string line;
  std::getline(lines, line);
  std::size_t j = 0;
  while (std::getline(lines, line)) {
    const auto a = line.find(','), b = line.rfind(',');
    const Complex got(std::stod(line.substr(a + 1, b - a - 1)), std::stod(line.substr(b + 1)));
    EXPECT_EQ(got, serial[j]) << j;
    ++j;
  }
  EXPECT_EQ(j, 300u);
  EXPECT_EQ(run("transform --in " + path("in.ndpt") + " --dims 8,6 --direction adjoint").code, 2);
  EXPECT_EQ(run("transform --in " + path("in.ndpt") + " --dims 8,6,4").code, 2);
}

TEST_F(CliTest, CorruptInputIsNumericalError) {
  {
    std::ofstream f(path("bad.ndpt"), std::ios::binary);
    f << "NOPE and then some bytes";
  }
  EXPECT_EQ(run("transform --in " + path("bad.ndpt") + " --dims 8").code, 3);
  EXPECT_EQ(run("transform --in " + path("missing.ndpt") + " --dims 8").code, 3);
}

TEST_F(CliTest, CommunicationFailuresExitFour) {
  EXPECT_EQ(run("worker --connect 127.0.0.1:1 --rank 1 --timeout 300").code, 4);
  std::mt19937_64 rng(23);
  write_points(path("in.ndpt"), random_points(rng, 1, 10), random_values(rng, 10));
  EXPECT_EQ(run("transform --in " + path("in.ndpt") + " --dims 8 --workers 2 --transport tcp --no-spawn --timeout 300")
                .code,
            4);
}
