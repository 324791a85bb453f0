#include "nahmflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nahmflow {

namespace {

// Shortest text that round-trips a double.
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

json matrix_to_json(const CMatrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real() + 0.0, m(r, c).imag() + 0.0});  // no negative zeros
    rows.push_back(row);
  }
  return rows;
}

CMatrix matrix_from_json(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) throw InputError(field + ": expected a non-empty array of rows");
  const std::size_t n = j.size();
  CMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t r = 0; r < n; ++r) {
    if (!j[r].is_array() || j[r].size() != static_cast<std::size_t>(m.cols())) {
      throw InputError(field + "[" + std::to_string(r) + "]: rows must have equal length");
    }
    for (std::size_t c = 0; c < j[r].size(); ++c) {
      const json& e = j[r][c];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        throw InputError(field + "[" + std::to_string(r) + "][" + std::to_string(c) +
                         "]: expected [re, im]");
      }
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          cplx(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

json config_to_json(const SolverConfig& cfg) {
  return {{"eps", cfg.eps},
          {"L", cfg.L},
          {"grid_size", cfg.grid_size},
          {"grading", cfg.grading},
          {"h_max", cfg.h_max},
          {"t_fast", cfg.t_fast},
          {"newton_tol", cfg.newton_tol},
          {"boundary_tol", cfg.boundary_tol},
          {"residual_tol", cfg.residual_tol},
          {"commute_tol", cfg.commute_tol},
          {"residue_factor", cfg.residue_factor},
          {"max_iter", cfg.max_iter},
          {"damping", cfg.damping},
          {"pole_weight", cfg.pole_weight},
          {"commutator_weight", cfg.commutator_weight},
          {"spectrum_weight", cfg.spectrum_weight},
          {"starts", cfg.starts},
          {"seed", cfg.seed}};
}

json diagnostics_to_json(const SolverDiagnostics& d) {
  return {{"residual_max", d.residual_max},
          {"commutator_L", d.commutator_L},
          {"residue_eps", d.residue_eps},
          {"eta", finite_or_null(d.eta)},
          {"iterations", d.iterations},
          {"converged", d.converged}};
}

json flag_to_json(const Flag& f, const SolverConfig& cfg) {
  json diag = diagnostics_to_json(f.diagnostics);
  diag["projection_distance"] = f.projection_distance;
  return {{"n", f.frame.rows()},
          {"frame", matrix_to_json(f.frame)},
          {"labels", f.labels},
          {"diagnostics", diag},
          {"config", config_to_json(cfg)}};
}

json slice_to_json(const SlodowySlice& s, const TransversalityReport& t) {
  json basis = json::array();
  for (const auto& z : s.zx_basis) basis.push_back(matrix_to_json(z));
  return {{"partition", s.partition.to_string()},
          {"n", s.partition.n()},
          {"H", matrix_to_json(s.sl2.H)},
          {"X", matrix_to_json(s.sl2.X)},
          {"Y", matrix_to_json(s.sl2.Y)},
          {"dim", s.dim},
          {"dim_formula", centralizer_dim_formula(s.partition)},
          {"zx_basis", basis},
          {"transversality", {{"rank", t.rank}, {"expected", t.expected}, {"deficiency", t.deficiency}}}};
}

json intersection_to_json(const SliceIntersection& r) {
  json pts = json::array();
  for (std::size_t k = 0; k < r.points.size(); ++k) {
    json coords = json::array();
    for (Eigen::Index q = 0; q < r.points[k].coords.size(); ++q) {
      coords.push_back({r.points[k].coords(q).real(), r.points[k].coords(q).imag()});
    }
    const CVector chi = chi_map(r.points[k]);
    json cj = json::array();
    for (Eigen::Index q = 0; q < chi.size(); ++q) cj.push_back({chi(q).real(), chi(q).imag()});
    pts.push_back({{"coords", coords},
                   {"matrix", matrix_to_json(r.points[k].matrix)},
                   {"chi", cj},
                   {"jacobian_rank", r.jacobian_ranks[k]},
                   {"local_dim", r.local_dims[k]}});
  }
  return {{"points", pts},
          {"expected_local_dim", r.expected_local_dim},
          {"starts", r.starts},
          {"converged_starts", r.converged_starts},
          {"max_residual", r.max_residual}};
}

Configuration configuration_from_json(const json& j) {
  if (!j.is_object()) throw InputError("input: top level must be an object");
  if (!j.contains("points")) throw InputError("input: field 'points' is missing");
  const json& pts = j.at("points");
  if (!pts.is_array()) throw InputError("points: expected an array of [x, y, z]");
  std::vector<Eigen::Vector3d> out;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const json& p = pts[k];
    if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() ||
        !p[2].is_number()) {
      throw InputError("points[" + std::to_string(k) + "]: expected [x, y, z] numbers");
    }
    out.emplace_back(p[0].get<double>(), p[1].get<double>(), p[2].get<double>());
  }
  return Configuration(std::move(out));
}

Configuration read_configuration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("input: cannot open '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError("input: invalid JSON in '" + path + "': " + e.what());
  }
  return configuration_from_json(j);
}

std::string trajectory_csv(const NahmSolution& s) {
  const int n = s.n();
  std::ostringstream os;
  os << "t";
  for (int i = 1; i <= 3; ++i) {
    for (int r = 1; r <= n; ++r) {
      for (int c = 1; c <= n; ++c) {
        os << ",T" << i << "_" << r << c << "_re,T" << i << "_" << r << c << "_im";
      }
    }
  }
  os << "\n";
  for (std::size_t m = 0; m < s.grid.size(); ++m) {
    const Triple t = s.T(m);
    os << num(s.grid[m]);
    for (int i = 0; i < 3; ++i) {
      for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
          os << "," << num(t[i].matrix()(r, c).real()) << "," << num(t[i].matrix()(r, c).imag());
        }
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string spectra_csv(const NahmSolution& s) {
  const std::vector<CVector> coeffs = spectral_invariants(s);
  const int n = s.n();
  std::ostringstream os;
  os << "t";
  for (int k = 1; k <= n; ++k) os << ",c" << k << "_re,c" << k << "_im";
  os << "\n";
  for (std::size_t m = 0; m < s.grid.size(); ++m) {
    os << num(s.grid[m]);
    for (int k = 0; k < n; ++k) os << "," << num(coeffs[m](k).real()) << "," << num(coeffs[m](k).imag());
    os << "\n";
  }
  return os.str();
}

void write_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("output: cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw InputError("output: write to '" + tmp.string() + "' failed");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw InputError("output: cannot move into '" + path + "': " + ec.message());
  }
}

}  // namespace nahmflow
