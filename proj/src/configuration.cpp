#include "nahmflow/configuration.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <random>

namespace nahmflow {

Configuration::Configuration(std::vector<Eigen::Vector3d> points, double floor_rel)
    : points_(std::move(points)) {
  if (points_.size() < 2) throw PreconditionError("configuration needs at least two points");
  for (const auto& p : points_) {
    if (!p.allFinite()) throw PreconditionError("configuration has a non-finite coordinate");
  }
  separation_ = std::numeric_limits<double>::infinity();
  diameter_ = 0.0;
  for (std::size_t a = 0; a < points_.size(); ++a) {
    for (std::size_t b = a + 1; b < points_.size(); ++b) {
      const double dist = (points_[a] - points_[b]).norm();
      separation_ = std::min(separation_, dist);
      diameter_ = std::max(diameter_, dist);
    }
  }
  if (!(separation_ > floor_rel * diameter_) || separation_ == 0.0) {
    char sep_text[32];
    std::snprintf(sep_text, sizeof sep_text, "%.3e", separation_);
    throw PreconditionError(std::string("configuration not regular: points coincide (separation ") +
                            sep_text + ")");
  }
}

Configuration Configuration::random(int n, std::uint64_t seed, double min_separation) {
  if (n < 2) throw PreconditionError("Configuration::random: n must be >= 2");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    std::vector<Eigen::Vector3d> pts;
    for (int k = 0; k < n; ++k) pts.emplace_back(u(rng), u(rng), u(rng));
    bool ok = true;
    for (int a = 0; a < n && ok; ++a) {
      for (int b = a + 1; b < n && ok; ++b) ok = (pts[a] - pts[b]).norm() >= min_separation;
    }
    if (ok) return Configuration(std::move(pts));
  }
  throw PreconditionError("Configuration::random: could not meet the separation floor");
}

Eigen::Vector3d Configuration::centroid() const {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : points_) c += p;
  return c / static_cast<double>(points_.size());
}

Configuration Configuration::permuted(const std::vector<int>& perm) const {
  if (perm.size() != points_.size()) throw DimensionError("permuted: wrong permutation length");
  std::vector<bool> seen(perm.size(), false);
  std::vector<Eigen::Vector3d> out;
  for (int k : perm) {
    if (k < 0 || k >= n() || seen[static_cast<std::size_t>(k)]) {
      throw PreconditionError("permuted: not a permutation");
    }
    seen[static_cast<std::size_t>(k)] = true;
    out.push_back(points_[static_cast<std::size_t>(k)]);
  }
  return Configuration(std::move(out));
}

Configuration Configuration::rotated(const Eigen::Matrix3d& r) const {
  std::vector<Eigen::Vector3d> out;
  for (const auto& p : points_) out.push_back(r * p);
  return Configuration(std::move(out));
}

Configuration Configuration::scaled(double s) const {
  if (!(s > 0.0)) throw PreconditionError("scaled: factor must be positive");
  std::vector<Eigen::Vector3d> out;
  for (const auto& p : points_) out.push_back(s * p);
  return Configuration(std::move(out));
}

Configuration Configuration::translated(const Eigen::Vector3d& c) const {
  std::vector<Eigen::Vector3d> out;
  for (const auto& p : points_) out.push_back(p + c);
  return Configuration(std::move(out));
}

CVector Configuration::beta_spectrum() const {
  CVector s(n());
  for (int k = 0; k < n(); ++k) s(k) = cplx(points_[static_cast<std::size_t>(k)](1), points_[static_cast<std::size_t>(k)](2));
  return s;
}

Triple config_to_tau(const Configuration& c) {
  const int n = c.n();
  std::array<CMatrix, 3> t;
  for (int a = 0; a < 3; ++a) {
    t[static_cast<std::size_t>(a)] = CMatrix::Zero(n, n);
    for (int k = 0; k < n; ++k) {
      t[static_cast<std::size_t>(a)](k, k) = cplx(0.0, c.points()[static_cast<std::size_t>(k)](a));
    }
  }
  return Triple(AntiHermitian(t[0]), AntiHermitian(t[1]), AntiHermitian(t[2]));
}

}  // namespace nahmflow
