#include "nahmflow/cli.hpp"

#include <cstdlib>
#include <random>

#include <CLI11.hpp>

#include "nahmflow/io.hpp"
#include "nahmflow/linalg.hpp"

namespace nahmflow::cli {

namespace {

struct HelpRequested {
  std::string text;
};

Configuration load_configuration(const RunSpec& req) {
  if (req.random_n > 0) return Configuration::random(req.random_n, req.seed);
  if (req.input.empty()) throw InputError("input: give a configuration file or --n");
  return read_configuration(req.input);
}

SolverConfig solver_config(const RunSpec& req) {
  SolverConfig cfg = req.overrides;
  cfg.seed = req.seed;
  return cfg;
}

void emit(const RunSpec& req, const std::string& content, std::ostream& out) {
  if (req.out.empty()) {
    out << content;
  } else {
    write_atomic(req.out, content);
  }
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

int cmd_map(const RunSpec& req, std::ostream& out) {
  const Configuration c = load_configuration(req);
  const SolverConfig cfg = solver_config(req);
  const Flag f = berry_robbins_map(c, cfg);
  emit(req, dump(flag_to_json(f, cfg.resolve(c))), out);
  return kOk;
}

int cmd_solve(const RunSpec& req, std::ostream& out) {
  const Configuration c = load_configuration(req);
  const Partition rho = Partition::parse(req.rho, c.n());
  const NahmSolution s = solve_bvp(rho, c, solver_config(req));
  emit(req, trajectory_csv(s), out);
  if (!req.out.empty()) {
    json j = diagnostics_to_json(s.diagnostics);
    j["rho"] = rho.to_string();
    j["nodes"] = s.grid.size();
    j["config"] = config_to_json(s.cfg);
    out << dump(j);
  }
  return kOk;
}

int cmd_spectra(const RunSpec& req, std::ostream& out) {
  const Configuration c = load_configuration(req);
  const Partition rho = Partition::parse(req.rho, c.n());
  const NahmSolution s = solve_bvp(rho, c, solver_config(req));
  emit(req, spectra_csv(s), out);
  if (!req.out.empty()) {
    const SpectralDrift d = spectral_drift(s);
    json j = {{"drift", d.drift}, {"mismatch", d.mismatch}, {"config", config_to_json(s.cfg)}};
    out << dump(j);
  }
  return kOk;
}

CMatrix random_su2(std::uint64_t seed) {
  CMatrix a = random_unitary(2, seed);
  a /= std::sqrt(a.determinant());
  return a;
}

int cmd_verify(const RunSpec& req, std::ostream& out) {
  const Configuration c = load_configuration(req);
  const SolverConfig cfg = solver_config(req);
  std::mt19937_64 rng(req.seed);
  const int n = c.n();

  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) perm[static_cast<std::size_t>(k)] = k;
  std::shuffle(perm.begin(), perm.end(), rng);
  std::normal_distribution<double> g(0.0, 1.0);
  const Eigen::Vector3d shift = c.diameter() * Eigen::Vector3d(g(rng), g(rng), g(rng));

  const Flag base = berry_robbins_map(c, cfg);
  struct Check {
    std::string name;
    double distance;
    double threshold;
  };
  std::vector<Check> checks;
  auto thr = [&](double def) { return req.threshold ? *req.threshold : def; };

  checks.push_back({"permutation", check_permutation_equivariance(c, perm, cfg), thr(1e-5)});
  {
    const CMatrix a = random_su2(req.seed + 17);
    const CMatrix rho = represent_su2(a, irreducible_triple(n));
    const Flag moved = berry_robbins_map(c.rotated(rotation_of(a)), cfg);
    checks.push_back({"rotation", flag_distance(moved, act(rho, base)), thr(1e-4)});
  }
  checks.push_back({"scale", flag_distance(berry_robbins_map(c.scaled(2.0), cfg), base), thr(1e-5)});
  checks.push_back(
      {"translation", flag_distance(berry_robbins_map(c.translated(shift), cfg), base), thr(1e-5)});
  {
    double worst = 0.0;
    for (std::uint64_t k = 1; k <= 2; ++k) {
      SolverConfig other = cfg;
      other.seed = cfg.seed + 1000 * k;
      worst = std::max(worst, flag_distance(berry_robbins_map(c, other), base));
    }
    checks.push_back({"uniqueness", worst, thr(1e-6)});
  }
  {
    const Flag again = berry_robbins_map(c, cfg);
    const bool identical = again.frame == base.frame;
    checks.push_back({"determinism", identical ? 0.0 : 1.0, thr(1e-6)});
  }

  bool all = true;
  json arr = json::array();
  for (const auto& ch : checks) {
    const bool pass = ch.distance < ch.threshold;
    all = all && pass;
    arr.push_back({{"name", ch.name}, {"distance", ch.distance}, {"threshold", ch.threshold},
                   {"pass", pass}});
  }
  json rep = {{"n", n},
              {"checks", arr},
              {"passed", all},
              {"config", config_to_json(cfg.resolve(c))}};
  emit(req, dump(rep), out);
  if (!req.out.empty()) {
    for (const auto& ch : arr) {
      out << ch["name"].get<std::string>() << " " << ch["distance"].get<double>() << " "
          << (ch["pass"].get<bool>() ? "pass" : "FAIL") << "\n";
    }
  }
  return all ? kOk : kChecksFailed;
}

int cmd_slice(const RunSpec& req, std::ostream& out) {
  const Configuration c = load_configuration(req);
  const Partition rho = Partition::parse(req.rho, c.n());
  const SlodowySlice s = slodowy_slice(rho);
  const TransversalityReport t = transversality_check(s);
  const SliceIntersection r = orbit_slice_intersection(c, rho, req.seed);
  json j = slice_to_json(s, t);
  j["intersection"] = intersection_to_json(r);
  j["target_chi"] = json::array();
  const CVector target = poly_from_roots(c.beta_spectrum());
  for (Eigen::Index k = 0; k < target.size(); ++k) j["target_chi"].push_back({target(k).real(), target(k).imag()});
  j["config"] = config_to_json(solver_config(req).resolve(c));
  emit(req, dump(j), out);
  return kOk;
}

int cmd_oracle(const RunSpec& req, std::ostream& out) {
  if (!(req.d > 0.0)) throw InputError("--d: must be positive");
  const double d = req.d;
  const Configuration c({Eigen::Vector3d(d / 2, 0, 0), Eigen::Vector3d(-d / 2, 0, 0)});
  const SolverConfig cfg = solver_config(req);
  const NahmSolution s = solve_bvp(Partition::regular(2), c, cfg);
  const double t_max = 16.0 / d;
  double dev = 0.0;
  for (std::size_t m = 0; m < s.grid.size() && s.grid[m] <= t_max; ++m) {
    const Triple ex = su2_closed_form(d, s.grid[m]);
    const Triple t = s.T(m);
    for (int a = 0; a < 3; ++a) dev = std::max(dev, (ex[a].matrix() - t[a].matrix()).cwiseAbs().maxCoeff());
  }
  // Gradient-flow sanity: grad phi against central differences of phi.
  double fd = 0.0;
  for (int k = 0; k < 20; ++k) {
    const int n = 2 + k % 3;
    const Triple t = random_triple(n, req.seed * 131 + static_cast<std::uint64_t>(k));
    const Triple v = random_triple(n, req.seed * 137 + static_cast<std::uint64_t>(k));
    const double h = 1e-4;
    const double num = (phi(t + v * h) - phi(t - v * h)) / (2 * h);
    const double ana = inner(grad_phi(t), v);
    fd = std::max(fd, std::abs(num - ana) / std::abs(ana));
  }
  const bool pass = dev < 1e-6 && fd < 1e-6;
  json j = {{"d", d},
            {"t_max", t_max},
            {"max_deviation", dev},
            {"grad_phi_fd_error", fd},
            {"pass", pass},
            {"diagnostics", diagnostics_to_json(s.diagnostics)},
            {"config", config_to_json(s.cfg)}};
  if (!req.out.empty()) write_atomic(req.out, dump(j));
  out << "max deviation " << dev << "\n";
  out << "grad_phi finite-difference error " << fd << "\n";
  return pass ? kOk : kChecksFailed;
}

}  // namespace

std::uint64_t default_seed() {
  const char* env = std::getenv("NAHMFLOW_SEED");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (*end != '\0') return 1;
  return static_cast<std::uint64_t>(v);
}

RunSpec parse_args(const std::vector<std::string>& args) {
  RunSpec req;
  req.seed = default_seed();
  CLI::App app{"Nahm flow solver: configurations, flags and Slodowy slices", "nahmflow"};
  app.require_subcommand(1, 1);
  struct Common {
    std::string input;
    int n = 0;
    std::string rho = "regular";
    double eps = 0.0, L = 0.0, tol = 0.0;
    int grid = 0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out;
  };
  Common common;
  double threshold = -1.0;
  double d = 2.0;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"map", "Flag of a configuration (regular pole)"},
      {"solve", "Trajectory CSV for a pole type"},
      {"verify", "Equivariance suite for a configuration"},
      {"slice", "Slodowy slice report and orbit intersection"},
      {"oracle", "Compare with the closed-form two-point solution"},
      {"spectra", "Characteristic-polynomial invariants along the trajectory"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    if (name != "oracle") {
      sub->add_option("config", common.input, "Configuration JSON {\"points\": [[x,y,z],...]}");
      sub->add_option("--n", common.n, "Use a seeded random configuration of n points")
          ->check(CLI::Range(2, 64));
    }
    sub->add_option("--rho", common.rho, "Partition, e.g. 3,1 or regular/zero/subregular");
    sub->add_option("--eps", common.eps, "Inner truncation")->check(CLI::PositiveNumber);
    sub->add_option("--L", common.L, "Outer truncation")->check(CLI::PositiveNumber);
    sub->add_option("--grid", common.grid, "Node count")->check(CLI::Range(16, 1000000));
    sub->add_option("--tol", common.tol, "Collocation residual tolerance")->check(CLI::PositiveNumber);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { common.seed = v; common.seed_set = true; },
        "Seed (default: NAHMFLOW_SEED or 1)");
    sub->add_option("--out", common.out, "Output file (written atomically)");
    if (name == "verify") {
      sub->add_option("--threshold", threshold, "Replace every check threshold")
          ->check(CLI::NonNegativeNumber);
    }
    if (name == "oracle") sub->add_option("--d", d, "Distance between the two points");
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // program name
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested{app.help()};
  } catch (const CLI::ParseError& e) {
    throw InputError(std::string("usage: ") + e.what());
  }
  req.command = app.get_subcommands().front()->get_name();
  req.input = common.input;
  req.random_n = common.n;
  req.rho = common.rho;
  req.overrides.eps = common.eps;
  req.overrides.L = common.L;
  req.overrides.grid_size = common.grid;
  if (common.tol > 0.0) req.overrides.newton_tol = common.tol;
  if (common.seed_set) req.seed = common.seed;
  req.out = common.out;
  if (threshold >= 0.0) req.threshold = threshold;
  req.d = d;
  if (!req.input.empty() && req.random_n > 0) throw InputError("usage: give either a file or --n");
  return req;
}

int run(const RunSpec& req, std::ostream& out, std::ostream& err) {
  try {
    if (req.command == "map") return cmd_map(req, out);
    if (req.command == "solve") return cmd_solve(req, out);
    if (req.command == "verify") return cmd_verify(req, out);
    if (req.command == "slice") return cmd_slice(req, out);
    if (req.command == "oracle") return cmd_oracle(req, out);
    if (req.command == "spectra") return cmd_spectra(req, out);
    err << "error: unknown command '" << req.command << "'\n";
    return kInputError;
  } catch (const ConvergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kNoConvergence;
  } catch (const std::invalid_argument& e) {  // PreconditionError, DimensionError
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kNoConvergence;
  }
}

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunSpec req;
  try {
    req = parse_args(args);
  } catch (const HelpRequested& h) {
    out << h.text;
    return kOk;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return run(req, out, err);
}

}  // namespace nahmflow::cli
