#pragma once

#include <string>
#include <vector>

#include "nahmflow/lie.hpp"

namespace nahmflow {

/// Non-increasing list of positive parts; n = sum of parts.
class Partition {
 public:
  Partition() = default;
  /// Sorts the parts into non-increasing order; rejects empty or non-positive input.
  explicit Partition(std::vector<int> parts);

  static Partition regular(int n);     // [n]
  static Partition zero(int n);        // [1, ..., 1]
  static Partition subregular(int n);  // [n-1, 1], n >= 2

  /// "3,1" or one of the aliases "regular", "zero", "subregular" (needs n).
  static Partition parse(const std::string& text, int n = 0);

  const std::vector<int>& parts() const noexcept { return parts_; }
  int n() const noexcept { return n_; }
  bool is_regular() const noexcept { return parts_.size() == 1; }
  bool is_zero() const noexcept { return parts_.front() == 1; }

  std::vector<int> conjugate() const;
  std::string to_string() const;

  bool operator==(const Partition& o) const { return parts_ == o.parts_; }

 private:
  std::vector<int> parts_;
  int n_ = 0;
};

/// All partitions of n in reverse lexicographic order.
std::vector<Partition> partitions_of(int n);

/// Residue triple of a pole of type rho: sigma_i = [sigma_j, sigma_k].
struct SU2Triple {
  Triple sigma;
  Partition partition;
};

/// Image of the standard sl(2,C) basis: [H,X]=2X, [H,Y]=-2Y, [X,Y]=H.
struct SL2Data {
  CMatrix H;
  CMatrix X;
  CMatrix Y;
};

/// m-dimensional irreducible triple in the weight basis j, j-1, ..., -j:
/// sigma_1 = i J_z, sigma_2 = i J_y, sigma_3 = i J_x.
SU2Triple irreducible_triple(int m);

/// Block-diagonal sum of irreducible triples, one block per part.
SU2Triple rep_from_partition(const Partition& p);

/// H = -2i sigma_1, X = sigma_2 - i sigma_3, Y = -(sigma_2 + i sigma_3).
SL2Data complexify(const SU2Triple& t);

/// Orthonormal basis of {A in u(n) : [A, sigma_i] = 0 for all i}.
std::vector<AntiHermitian> centralizer_of_rep(const SU2Triple& t, double tol = 1e-10);

/// Largest entrywise |sigma_i - [sigma_j, sigma_k]| over cyclic (i,j,k).
double su2_relation_error(const Triple& sigma);

/// Largest entrywise error of the three sl(2) relations.
double sl2_relation_error(const SL2Data& d);

/// Representation of SU(2) on C^n through the given triple: exponentiates
/// sum_b theta_b sigma_b where A = exp(sum_b theta_b sigma_b^{(2)}).
CMatrix represent_su2(const CMatrix& a, const SU2Triple& t);

/// Rotation R(A) with A sigma_b A^{-1} = sum_c R_cb sigma_c on the 2x2 generators.
Eigen::Matrix3d rotation_of(const CMatrix& a);

/// Coordinates theta with A = exp(sum theta_b sigma_b) for A in SU(2).
Eigen::Vector3d su2_log(const CMatrix& a);

}  // namespace nahmflow
