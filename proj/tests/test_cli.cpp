#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int status = -1;
  std::string out;
};

Result run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " \"" ANISOMESH_CLI "\" " + args + " 2>/dev/null";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (p == nullptr) return r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int raw = pclose(p);
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("anisomesh_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const std::string& body) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << body;
    return p;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, UsageErrors) {
  EXPECT_NE(run("").status, 0);
  EXPECT_NE(run("frobnicate").status, 0);
  EXPECT_NE(run("run /nonexistent/config.txt").status, 0);
  EXPECT_NE(run("verify --sweep bogus").status, 0);
}

TEST_F(Cli, RunWritesArtifactsDeterministically) {
  const std::string body = "# small run\nfield = tanh_layer\nmesh = grid 4 4\nstrategy = anisotropic\nlevels = 3\n"
                           "timestamps = false\noutput = " + (dir_ / "a").string() + "\n";
  const fs::path cfg = write_config("a.cfg", body);
  const Result r = run("run " + cfg.string());
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("anisotropic: 4 levels"), std::string::npos) << r.out;
  const fs::path conv = dir_ / "a" / "anisotropic" / "convergence.csv";
  ASSERT_TRUE(fs::exists(conv));
  const std::string first = slurp(conv);
  EXPECT_EQ(first.rfind("level,ndof,nelem,eta,l2_pointwise,l2_clement,wall_ms\n", 0), 0u);
  EXPECT_EQ(std::count(first.begin(), first.end(), '\n'), 5);
  for (const char* f : {"mesh.txt", "mesh.svg", "indicator.csv", "audit_elements.csv", "audit_pairs.csv"})
    EXPECT_TRUE(fs::exists(dir_ / "a" / "anisotropic" / "level_03" / f)) << f;

  // Same config, single thread: byte-identical output.
  ASSERT_EQ(run("run " + cfg.string(), "ANISOMESH_THREADS=1").status, 0);
  EXPECT_EQ(slurp(conv), first);
}

TEST_F(Cli, JsonConfigAndCompare) {
  const fs::path cfg = write_config(
      "b.json", "{\"field\": \"x1*x2^2\", \"mesh\": \"polygonal 4 4 0.3 5\", \"strategy\": \"compare\", "
                "\"levels\": 2, \"uniform_levels\": 1, \"interp\": false, \"artifacts\": false, \"timestamps\": false, "
                "\"output\": \"" + (dir_ / "b").string() + "\"}");
  const Result r = run("run " + cfg.string());
  ASSERT_EQ(r.status, 0) << r.out;
  const std::string cmp = slurp(dir_ / "b" / "comparison.csv");
  EXPECT_EQ(cmp.rfind("strategy,level,", 0), 0u);
  EXPECT_EQ(std::count(cmp.begin(), cmp.end(), '\n'), 1 + 2 + 3 + 3);
  EXPECT_FALSE(fs::exists(dir_ / "b" / "uniform" / "level_00"));
}

TEST_F(Cli, InvalidConfigFails) {
  EXPECT_EQ(run("run " + write_config("c.cfg", "levles = 3\n").string()).status, 1);
  EXPECT_EQ(run("run " + write_config("d.cfg", "strategy = random\n").string()).status, 1);
  EXPECT_EQ(run("run " + write_config("e.cfg", "field = sin(\n").string()).status, 1);
}

TEST_F(Cli, AuditAndRender) {
  const fs::path mesh = dir_ / "square.mesh";
  std::ofstream(mesh) << "polymesh 2 1\n4\n0 0 2\n1 0 2\n1 1 2\n0 1 2\n1\n4 0 1 2 3\n";
  const Result a = run("audit " + mesh.string());
  ASSERT_EQ(a.status, 0);
  EXPECT_NE(a.out.find("elements            1"), std::string::npos) << a.out;
  EXPECT_EQ(run("audit " + mesh.string() + " --sigma-max 1.5").status, 2);
  const Result e = run("audit " + mesh.string() + " --elements -");
  EXPECT_NE(e.out.find("element_id"), std::string::npos);

  std::ofstream(dir_ / "eta.csv") << "element_id,eta\n0,0.5\n";
  const Result s = run("render " + mesh.string() + " --field " + (dir_ / "eta.csv").string());
  ASSERT_EQ(s.status, 0);
  EXPECT_NE(s.out.find("<svg"), std::string::npos);
  EXPECT_NE(s.out.find("</svg>"), std::string::npos);
  // Wrong number of values.
  std::ofstream(dir_ / "bad.csv") << "element_id,eta\n0,0.5\n1,0.2\n";
  EXPECT_EQ(run("render " + mesh.string() + " --field " + (dir_ / "bad.csv").string()).status, 1);

  std::ofstream(dir_ / "broken.mesh") << "polymesh 2 1\n3\n0 0 2\n";
  EXPECT_EQ(run("audit " + (dir_ / "broken.mesh").string()).status, 1);
}

TEST_F(Cli, VerifySweeps) {
  const Result r = run("verify --sweep trace -o -");
  EXPECT_EQ(r.status, 0);
  EXPECT_EQ(r.out.rfind("name,context,ratio\n", 0), 0u);
  EXPECT_EQ(run("verify --sweep poincare").status, 0);
  EXPECT_EQ(run("verify --sweep h1").status, 0);
}
