#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nahmflow/flag.hpp"
#include "nahmflow/slodowy.hpp"

namespace nahmflow {

/// Malformed input files; the message names the offending field.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using json = nlohmann::ordered_json;

/// Row-major array of [re, im] pairs.
json matrix_to_json(const CMatrix& m);
CMatrix matrix_from_json(const json& j, const std::string& field);

json config_to_json(const SolverConfig& cfg);
json diagnostics_to_json(const SolverDiagnostics& d);
json flag_to_json(const Flag& f, const SolverConfig& cfg);
json slice_to_json(const SlodowySlice& s, const TransversalityReport& t);
json intersection_to_json(const SliceIntersection& r);

/// {"points": [[x, y, z], ...]}
Configuration configuration_from_json(const json& j);
Configuration read_configuration(const std::string& path);

/// Header t,T1_11_re,T1_11_im,...,T3_nn_im; one row per node.
std::string trajectory_csv(const NahmSolution& s);

/// Header t,c1_re,c1_im,...,cn_im.
std::string spectra_csv(const NahmSolution& s);

/// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::string& path, const std::string& content);

}  // namespace nahmflow
