#include "nahmflow/su2.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "nahmflow/linalg.hpp"

namespace nahmflow {

Partition::Partition(std::vector<int> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw PreconditionError("Partition: no parts");
  for (int p : parts_) {
    if (p < 1) throw PreconditionError("Partition: parts must be positive");
  }
  std::sort(parts_.begin(), parts_.end(), std::greater<>());
  n_ = std::accumulate(parts_.begin(), parts_.end(), 0);
}

Partition Partition::regular(int n) {
  if (n < 1) throw PreconditionError("Partition::regular: n must be positive");
  return Partition({n});
}

Partition Partition::zero(int n) {
  if (n < 1) throw PreconditionError("Partition::zero: n must be positive");
  return Partition(std::vector<int>(static_cast<std::size_t>(n), 1));
}

Partition Partition::subregular(int n) {
  if (n < 2) throw PreconditionError("Partition::subregular: needs n >= 2");
  return Partition({n - 1, 1});
}

Partition Partition::parse(const std::string& text, int n) {
  auto needs_n = [&](const char* alias) {
    if (n < 1) {
      throw PreconditionError(std::string("partition alias '") + alias +
                              "' needs the dimension n");
    }
  };
  if (text == "regular") {
    needs_n("regular");
    return regular(n);
  }
  if (text == "zero") {
    needs_n("zero");
    return zero(n);
  }
  if (text == "subregular") {
    needs_n("subregular");
    return subregular(n);
  }
  std::vector<int> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(item, &used);
    } catch (const std::exception&) {
      throw PreconditionError("partition: cannot parse '" + text + "'");
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size()) throw PreconditionError("partition: cannot parse '" + text + "'");
    parts.push_back(v);
  }
  Partition p(std::move(parts));
  if (n > 0 && p.n() != n) {
    throw PreconditionError("partition '" + text + "' does not sum to n=" + std::to_string(n));
  }
  return p;
}

std::vector<int> Partition::conjugate() const {
  std::vector<int> conj(static_cast<std::size_t>(parts_.front()), 0);
  for (int p : parts_) {
    for (int i = 0; i < p; ++i) ++conj[static_cast<std::size_t>(i)];
  }
  return conj;
}

std::string Partition::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(parts_[i]);
  }
  return s;
}

std::vector<Partition> partitions_of(int n) {
  std::vector<Partition> out;
  std::vector<int> cur;
  std::function<void(int, int)> rec = [&](int remaining, int max_part) {
    if (remaining == 0) {
      out.emplace_back(cur);
      return;
    }
    for (int p = std::min(remaining, max_part); p >= 1; --p) {
      cur.push_back(p);
      rec(remaining - p, p);
      cur.pop_back();
    }
  };
  rec(n, n);
  return out;
}

SU2Triple irreducible_triple(int m) {
  if (m < 1) throw PreconditionError("irreducible_triple: m must be >= 1");
  const double j = 0.5 * (m - 1);
  CMatrix jz = CMatrix::Zero(m, m);
  CMatrix jp = CMatrix::Zero(m, m);
  for (int k = 0; k < m; ++k) {
    const double w = j - k;
    jz(k, k) = w;
    if (k > 0) jp(k - 1, k) = std::sqrt(j * (j + 1.0) - w * (w + 1.0));
  }
  const CMatrix jm = jp.adjoint();
  const cplx i(0.0, 1.0);
  const CMatrix jx = 0.5 * (jp + jm);
  const CMatrix jy = (jp - jm) / (2.0 * i);
  return {Triple(AntiHermitian(i * jz), AntiHermitian(i * jy), AntiHermitian(i * jx)),
          Partition::regular(m)};
}

SU2Triple rep_from_partition(const Partition& p) {
  const int n = p.n();
  std::array<CMatrix, 3> s;
  for (auto& m : s) m = CMatrix::Zero(n, n);
  int offset = 0;
  for (int part : p.parts()) {
    const SU2Triple block = irreducible_triple(part);
    for (int a = 0; a < 3; ++a) {
      s[static_cast<std::size_t>(a)].block(offset, offset, part, part) = block.sigma[a].matrix();
    }
    offset += part;
  }
  return {Triple(AntiHermitian(s[0]), AntiHermitian(s[1]), AntiHermitian(s[2])), p};
}

SL2Data complexify(const SU2Triple& t) {
  const cplx i(0.0, 1.0);
  const CMatrix& s1 = t.sigma[0].matrix();
  const CMatrix& s2 = t.sigma[1].matrix();
  const CMatrix& s3 = t.sigma[2].matrix();
  return {-2.0 * i * s1, s2 - i * s3, -(s2 + i * s3)};
}

std::vector<AntiHermitian> centralizer_of_rep(const SU2Triple& t, double tol) {
  const int n = t.sigma.dim();
  const RMatrix basis = common_centralizer(
      {t.sigma[0].matrix(), t.sigma[1].matrix(), t.sigma[2].matrix()}, tol);
  std::vector<AntiHermitian> out;
  out.reserve(static_cast<std::size_t>(basis.cols()));
  for (Eigen::Index k = 0; k < basis.cols(); ++k) {
    out.emplace_back(u_from_coords(n, RVector(basis.col(k))));
  }
  return out;
}

double su2_relation_error(const Triple& sigma) {
  double err = 0.0;
  for (int i = 0; i < 3; ++i) {
    const CMatrix d = sigma[i].matrix() -
                      commutator(sigma[(i + 1) % 3].matrix(), sigma[(i + 2) % 3].matrix());
    err = std::max(err, d.cwiseAbs().maxCoeff());
  }
  return err;
}

double sl2_relation_error(const SL2Data& d) {
  const double e1 = (commutator(d.H, d.X) - 2.0 * d.X).cwiseAbs().maxCoeff();
  const double e2 = (commutator(d.H, d.Y) + 2.0 * d.Y).cwiseAbs().maxCoeff();
  const double e3 = (commutator(d.X, d.Y) - d.H).cwiseAbs().maxCoeff();
  return std::max({e1, e2, e3});
}

namespace {

void require_special_unitary(const CMatrix& a, const char* where) {
  if (a.rows() != 2 || a.cols() != 2) throw DimensionError(std::string(where) + ": need 2x2");
  if (!is_unitary(a, 1e-10) || std::abs(a.determinant() - 1.0) > 1e-10) {
    throw PreconditionError(std::string(where) + ": matrix is not special unitary");
  }
}

}  // namespace

Eigen::Vector3d su2_log(const CMatrix& a) {
  require_special_unitary(a, "su2_log");
  const SU2Triple gen = irreducible_triple(2);
  const double c = std::clamp(0.5 * a.trace().real(), -1.0, 1.0);
  const double angle = std::acos(c);
  CMatrix xi;
  if (std::sin(angle) < 1e-12 && c < 0.0) {
    xi = 2.0 * M_PI * gen.sigma[0].matrix();
  } else {
    const CMatrix p = 0.5 * (a - a.adjoint());
    xi = std::sin(angle) < 1e-12 ? p : CMatrix(p * (angle / std::sin(angle)));
  }
  const AntiHermitian x(xi);
  Eigen::Vector3d theta;
  for (int b = 0; b < 3; ++b) theta(b) = 2.0 * inner(gen.sigma[b], x);
  return theta;
}

Eigen::Matrix3d rotation_of(const CMatrix& a) {
  require_special_unitary(a, "rotation_of");
  const SU2Triple gen = irreducible_triple(2);
  Eigen::Matrix3d r;
  for (int b = 0; b < 3; ++b) {
    const AntiHermitian moved(a * gen.sigma[b].matrix() * a.adjoint());
    for (int c = 0; c < 3; ++c) r(c, b) = 2.0 * inner(gen.sigma[c], moved);
  }
  return r;
}

CMatrix represent_su2(const CMatrix& a, const SU2Triple& t) {
  const Eigen::Vector3d theta = su2_log(a);
  CMatrix x = CMatrix::Zero(t.sigma.dim(), t.sigma.dim());
  for (int b = 0; b < 3; ++b) x += theta(b) * t.sigma[b].matrix();
  return expm(x);
}

}  // namespace nahmflow
