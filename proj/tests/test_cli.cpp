#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "nahmflow/cli.hpp"
#include "nahmflow/io.hpp"

using namespace nahmflow;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nahmflow");
  std::ostringstream out, err;
  const int code = cli::main(args, out, err);
  return {code, out.str(), err.str()};
}

// Runs the installed binary through the shell; returns exit code and stdout.
Result run_binary(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " '" NAHMFLOW_CLI_PATH "' " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  std::string out;
  char buf[4096];
  std::size_t got = 0;
  while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, got);
  const int status = pclose(pipe);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out, ""};
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("nahmflow_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  std::string file(const std::string& name, const std::string& content) const {
    const fs::path p = path_ / name;
    std::ofstream(p) << content;
    return p.string();
  }
  std::string path(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("map on two points along x gives the identity frame") {
  TempDir dir;
  const std::string cfg = dir.file("two.json", R"({"points": [[1, 0, 0], [-1, 0, 0]]})");
  const Result r = run_cli({"map", cfg});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["n"] == 2);
  CHECK(j["labels"] == json::array({1, 2}));
  const CMatrix f = matrix_from_json(j["frame"], "frame");
  CHECK((f - CMatrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(j["diagnostics"]["converged"] == true);
  CHECK(j["config"]["eps"].get<double>() == doctest::Approx(0.02));
}

TEST_CASE("input errors exit with code 1 and name the problem") {
  TempDir dir;
  SUBCASE("malformed JSON") {
    const Result r = run_cli({"map", dir.file("bad.json", "{\"points\": [[1, 0, 0]")});
    CHECK(r.code == cli::kInputError);
    CHECK(r.err.find("invalid JSON") != std::string::npos);
  }
  SUBCASE("missing field") {
    const Result r = run_cli({"map", dir.file("nofield.json", R"({"pts": []})")});
    CHECK(r.code == cli::kInputError);
    CHECK(r.err.find("'points'") != std::string::npos);
  }
  SUBCASE("bad point") {
    const Result r = run_cli({"map", dir.file("badpt.json", R"({"points": [[1, 0], [0, 0, 1]]})")});
    CHECK(r.code == cli::kInputError);
    CHECK(r.err.find("points[0]") != std::string::npos);
  }
  SUBCASE("coincident points") {
    const Result r = run_cli({"map", dir.file("same.json", R"({"points": [[1, 2, 3], [1, 2, 3]]})")});
    CHECK(r.code == cli::kInputError);
    CHECK(r.err.find("configuration not regular") != std::string::npos);
  }
  SUBCASE("missing file") {
    const Result r = run_cli({"map", dir.path("absent.json")});
    CHECK(r.code == cli::kInputError);
    CHECK(r.err.find("cannot open") != std::string::npos);
  }
  SUBCASE("usage") {
    CHECK(run_cli({}).code == cli::kInputError);
    CHECK(run_cli({"frobnicate"}).code == cli::kInputError);
    CHECK(run_cli({"map", "--n", "3", "--eps", "-1"}).code == cli::kInputError);
    CHECK(run_cli({"map", "--n", "3", dir.file("x.json", "{}")}).code == cli::kInputError);
    CHECK(run_cli({"solve", "--n", "3", "--rho", "2,2"}).code == cli::kInputError);
  }
}

TEST_CASE("help exits cleanly") {
  const Result r = run_cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("verify") != std::string::npos);
  const Result s = run_cli({"verify", "--help"});
  CHECK(s.code == 0);
  CHECK(s.out.find("--threshold") != std::string::npos);
}

TEST_CASE("verify passes for two points and fails with a zero threshold") {
  TempDir dir;
  const std::string cfg = dir.file("two.json", R"({"points": [[0.3, -0.2, 0.5], [-0.4, 0.6, 0.1]]})");
  const Result ok = run_cli({"verify", cfg});
  CHECK(ok.code == cli::kOk);
  const json j = json::parse(ok.out);
  CHECK(j["passed"] == true);
  CHECK(j["checks"].size() == 6);

  const std::string report = dir.path("report.json");
  const Result strict = run_cli({"verify", cfg, "--threshold", "0", "--out", report});
  CHECK(strict.code == cli::kChecksFailed);
  CHECK(json::parse(slurp(report))["passed"] == false);
  CHECK(strict.out.find("FAIL") != std::string::npos);
}

TEST_CASE("oracle against the closed form") {
  TempDir dir;
  const std::string out = dir.path("oracle.json");
  const Result r = run_cli({"oracle", "--out", out});
  CHECK(r.code == 0);
  CHECK(r.out.find("max deviation") != std::string::npos);
  const json j = json::parse(slurp(out));
  CHECK(j["max_deviation"].get<double>() < 1e-6);
  CHECK(j["grad_phi_fd_error"].get<double>() < 1e-6);
  CHECK(run_cli({"oracle", "--d", "0"}).code == cli::kInputError);
}

TEST_CASE("solve and spectra") {
  TempDir dir;
  SUBCASE("trajectory CSV") {
    const std::string out = dir.path("traj.csv");
    const Result r = run_cli({"solve", "--n", "2", "--out", out});
    REQUIRE(r.code == 0);
    const json diag = json::parse(r.out);
    CHECK(diag["converged"] == true);
    const std::string csv = slurp(out);
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header.rfind("t,T1_11_re,T1_11_im", 0) == 0);
    CHECK(std::count(header.begin(), header.end(), ',') == 3 * 4 * 2);
    std::size_t rows = 0;
    for (std::string line; std::getline(lines, line);) ++rows;
    CHECK(rows == diag["nodes"].get<std::size_t>());
  }
  SUBCASE("spectra without a pole are constant") {
    const Result r = run_cli({"spectra", "--n", "3", "--rho", "zero"});
    REQUIRE(r.code == 0);
    std::istringstream lines(r.out);
    std::string header, first, line;
    std::getline(lines, header);
    CHECK(header == "t,c1_re,c1_im,c2_re,c2_im,c3_re,c3_im");
    std::getline(lines, first);
    const std::string first_values = first.substr(first.find(','));
    std::size_t rows = 1;
    while (std::getline(lines, line)) {
      CHECK(line.substr(line.find(',')) == first_values);
      ++rows;
    }
    CHECK(rows >= 16);
  }
  SUBCASE("spectra drift summary") {
    const std::string out = dir.path("invariants.csv");
    const Result r = run_cli({"spectra", "--n", "3", "--out", out});
    REQUIRE(r.code == 0);
    const json j = json::parse(r.out);
    CHECK(j["drift"].get<double>() < 1e-6);
    CHECK(j["mismatch"].get<double>() < 1e-6);
  }
}

TEST_CASE("slice on a regular three-point configuration") {
  const Result r = run_cli({"slice", "--n", "3", "--seed", "2"});
  REQUIRE(r.code == 0);
  const json j = json::parse(r.out);
  CHECK(j["dim"] == 3);
  CHECK(j["dim_formula"] == 3);
  CHECK(j["transversality"]["deficiency"] == 0);
  CHECK(j["intersection"]["points"].size() == 1);
  CHECK(j["intersection"]["points"][0]["local_dim"] == 0);
  CHECK(j["target_chi"].size() == 3);
}

TEST_CASE("non-convergence exits with code 2") {
  // Sixteen nodes cannot resolve the pole to this tolerance.
  const Result r = run_cli({"map", "--n", "3", "--grid", "16", "--L", "2", "--tol", "1e-14"});
  CHECK(r.code == cli::kNoConvergence);
  CHECK(r.err.find("no convergence") != std::string::npos);
}

TEST_CASE("binary: exit codes, determinism and the seed variable") {
  TempDir dir;
  const std::string a = dir.path("a.json"), b = dir.path("b.json");
  CHECK(run_binary("map --n 3 --seed 4 --out " + a).code == 0);
  CHECK(run_binary("map --n 3 --seed 4 --out " + b).code == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK_FALSE(fs::exists(a + ".tmp"));

  const Result env = run_binary("map --n 3", "NAHMFLOW_SEED=4");
  CHECK(env.code == 0);
  CHECK(env.out == slurp(a));
  const Result other = run_binary("map --n 3", "NAHMFLOW_SEED=5");
  CHECK(other.out != slurp(a));

  CHECK(run_binary("map " + dir.file("same.json", R"({"points": [[0, 0, 0], [0, 0, 0]]})")).code == 1);
  CHECK(run_binary("verify --n 2 --threshold 0").code == 3);
  CHECK(run_binary("oracle").code == 0);
}
