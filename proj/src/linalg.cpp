#include "nahmflow/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SVD>

namespace nahmflow {

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

}  // namespace

int u_dim(int n) { return n * n; }

// Index layout: [0, n) diagonal; then for each a < b two entries.
CMatrix u_basis(int n, int index) {
  RVector c = RVector::Zero(u_dim(n));
  c(index) = 1.0;
  return u_from_coords(n, c);
}

void u_coords(const CMatrix& a, double* out) {
  const int n = static_cast<int>(a.rows());
  for (int k = 0; k < n; ++k) out[k] = a(k, k).imag();
  int p = n;
  for (int r = 0; r < n; ++r) {
    for (int c = r + 1; c < n; ++c) {
      // A_rc = (x + i y)/sqrt2 with A_cr = -conj(A_rc).
      out[p++] = std::sqrt(2.0) * a(r, c).real();
      out[p++] = std::sqrt(2.0) * a(r, c).imag();
    }
  }
}

RVector u_coords(const CMatrix& a) {
  RVector v(u_dim(static_cast<int>(a.rows())));
  u_coords(a, v.data());
  return v;
}

CMatrix u_from_coords(int n, const double* c) {
  CMatrix a = CMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k) a(k, k) = cplx(0.0, c[k]);
  int p = n;
  for (int r = 0; r < n; ++r) {
    for (int col = r + 1; col < n; ++col) {
      const cplx z(c[p] * kInvSqrt2, c[p + 1] * kInvSqrt2);
      a(r, col) = z;
      a(col, r) = -std::conj(z);
      p += 2;
    }
  }
  return a;
}

CMatrix u_from_coords(int n, const RVector& c) {
  if (c.size() != u_dim(n)) throw DimensionError("u_from_coords: wrong coordinate count");
  return u_from_coords(n, c.data());
}

RMatrix ad_matrix(const CMatrix& a) {
  const int n = static_cast<int>(a.rows());
  const int d = u_dim(n);
  RMatrix m(d, d);
  for (int k = 0; k < d; ++k) {
    const CMatrix e = u_basis(n, k);
    u_coords(a * e - e * a, m.col(k).data());
  }
  return m;
}

namespace {

template <class Mat>
int rank_from_svd(const Eigen::JacobiSVD<Mat>& svd, double tol) {
  const auto& s = svd.singularValues();
  if (s.size() == 0) return 0;
  const double thresh = tol * std::max(1.0, s(0));
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > thresh) ++r;
  }
  return r;
}

template <class Mat>
Mat null_space_impl(const Mat& m, double tol) {
  if (m.cols() == 0) return Mat(0, 0);
  // Pad to at least as many rows as columns so the full V is available.
  Mat a = m;
  if (a.rows() < a.cols()) {
    Mat padded = Mat::Zero(a.cols(), a.cols());
    padded.topRows(a.rows()) = a;
    a = padded;
  }
  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
  const int r = rank_from_svd(svd, tol);
  return svd.matrixV().rightCols(a.cols() - r);
}

}  // namespace

RMatrix null_space(const RMatrix& m, double tol) { return null_space_impl(m, tol); }
CMatrix null_space(const CMatrix& m, double tol) { return null_space_impl(m, tol); }

int numerical_rank(const RMatrix& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<RMatrix> svd(m);
  return rank_from_svd(svd, tol);
}

int numerical_rank(const CMatrix& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<CMatrix> svd(m);
  return rank_from_svd(svd, tol);
}

CVector charpoly(const CMatrix& a, std::vector<CMatrix>& adj_coeffs) {
  if (a.rows() != a.cols()) throw DimensionError("charpoly: matrix is not square");
  const int n = static_cast<int>(a.rows());
  CVector c(n);
  adj_coeffs.assign(static_cast<std::size_t>(n), CMatrix());
  CMatrix b = CMatrix::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    adj_coeffs[static_cast<std::size_t>(k - 1)] = b;
    const CMatrix ab = a * b;
    c(k - 1) = -ab.trace() / static_cast<double>(k);
    b = ab + c(k - 1) * CMatrix::Identity(n, n);
  }
  return c;
}

CVector charpoly(const CMatrix& a) {
  std::vector<CMatrix> scratch;
  return charpoly(a, scratch);
}

CVector poly_from_roots(const CVector& roots) {
  const Eigen::Index n = roots.size();
  // p holds coefficients of the monic product, p(0) = 1.
  CVector p = CVector::Zero(n + 1);
  p(0) = 1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = k + 1; j >= 1; --j) p(j) -= roots(k) * p(j - 1);
  }
  return p.tail(n);
}

CMatrix companion(const CVector& coeffs) {
  const int n = static_cast<int>(coeffs.size());
  CMatrix c = CMatrix::Zero(n, n);
  for (int k = 1; k < n; ++k) c(k, k - 1) = 1.0;
  for (int k = 0; k < n; ++k) c(k, n - 1) = -coeffs(n - 1 - k);
  return c;
}

RMatrix common_centralizer(const std::vector<CMatrix>& mats, double tol) {
  if (mats.empty()) throw DimensionError("common_centralizer: no matrices");
  const int n = static_cast<int>(mats.front().rows());
  const int d = u_dim(n);
  RMatrix stacked(d * static_cast<int>(mats.size()), d);
  for (std::size_t i = 0; i < mats.size(); ++i) {
    require_same_dim(n, static_cast<int>(mats[i].rows()), "common_centralizer");
    stacked.middleRows(static_cast<Eigen::Index>(i) * d, d) = ad_matrix(mats[i]);
  }
  return null_space(stacked, tol);
}

}  // namespace nahmflow
