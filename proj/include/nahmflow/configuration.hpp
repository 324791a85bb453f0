#pragma once

#include <cstdint>
#include <vector>

#include "nahmflow/lie.hpp"

namespace nahmflow {

/// n labelled, pairwise distinct points in R^3 (n >= 2).
class Configuration {
 public:
  Configuration() = default;
  /// Throws PreconditionError("configuration not regular: ...") when two points
  /// are closer than `floor_rel` times the diameter.
  explicit Configuration(std::vector<Eigen::Vector3d> points, double floor_rel = 1e-8);

  /// Points drawn uniformly from the unit cube, rejecting near-coincidences.
  static Configuration random(int n, std::uint64_t seed, double min_separation = 0.2);

  const std::vector<Eigen::Vector3d>& points() const noexcept { return points_; }
  int n() const noexcept { return static_cast<int>(points_.size()); }
  double separation() const noexcept { return separation_; }
  double diameter() const noexcept { return diameter_; }
  Eigen::Vector3d centroid() const;

  /// result.points()[k] = points()[perm[k]] (0-based).
  Configuration permuted(const std::vector<int>& perm) const;
  Configuration rotated(const Eigen::Matrix3d& r) const;
  Configuration scaled(double s) const;
  Configuration translated(const Eigen::Vector3d& c) const;

  /// y_k + i z_k for each point.
  CVector beta_spectrum() const;

 private:
  std::vector<Eigen::Vector3d> points_;
  double separation_ = 0.0;
  double diameter_ = 0.0;
};

/// tau_a = i diag(a-th coordinates).
Triple config_to_tau(const Configuration& c);

}  // namespace nahmflow
