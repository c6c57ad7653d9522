// Copyright 2026 The sepell Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
/**
 * @file qmat.hpp
 * Dense complex Hermitian operators on composite Hilbert spaces.
 *
 * Index convention: subsystem 0 is the slowest-varying (most significant)
 * index of the composite basis, i.e. |i_0 i_1 ... i_{m-1}> maps to
 * sum_k i_k * prod_{l>k} d_l.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sepell {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;
using Dims = std::vector<int>;

inline constexpr double kDefaultRankTol = 1e-10;
inline constexpr double kHermitianRejectTol = 1e-8;
inline constexpr double kPsdTol = 1e-10;

class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};
class DimensionError : public Error {
  using Error::Error;
};
class NotPositiveError : public Error {
  using Error::Error;
};
class ConvergenceError : public Error {
  using Error::Error;
};

inline long long dims_product(std::span<const int> dims) {
  long long p = 1;
  for (int d : dims) p *= d;
  return p;
}

/// Dense Hermitian matrix with an optional subsystem dimension list.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  /// Symmetrizes (X + X^dagger)/2. Rejects inputs whose anti-Hermitian part
  /// exceeds kHermitianRejectTol relative to max(1, |X|_F).
  explicit HermitianMatrix(CMatrix m, Dims dims = {}) : m_(std::move(m)), dims_(std::move(dims)) {
    if (m_.rows() != m_.cols()) throw DimensionError("HermitianMatrix: matrix is not square");
    const double scale = std::max(1.0, m_.norm());
    const double asym = (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
    if (m_.size() > 0 && asym > kHermitianRejectTol * scale)
      throw Error("HermitianMatrix: input is not Hermitian (asymmetry " + std::to_string(asym) + ")");
    m_ = (0.5 * (m_ + m_.adjoint())).eval();
    check_dims();
  }

  static HermitianMatrix zero(int d, Dims dims = {}) { return HermitianMatrix(CMatrix::Zero(d, d), std::move(dims)); }
  static HermitianMatrix identity(int d, Dims dims = {}) {
    return HermitianMatrix(CMatrix::Identity(d, d), std::move(dims));
  }
  static HermitianMatrix diagonal(std::span<const double> diag, Dims dims = {}) {
    CMatrix m = CMatrix::Zero(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return HermitianMatrix(std::move(m), std::move(dims));
  }
  /// |psi><psi| for a (not necessarily normalized) vector.
  static HermitianMatrix projector(const Eigen::VectorXcd& psi, Dims dims = {}) {
    return HermitianMatrix(psi * psi.adjoint(), std::move(dims));
  }

  int dim() const { return static_cast<int>(m_.rows()); }
  const Dims& dims() const { return dims_; }
  bool has_dims() const { return !dims_.empty(); }
  /// Subsystem dims, or {dim} when the operator carries no composite structure.
  Dims effective_dims() const { return dims_.empty() ? Dims{dim()} : dims_; }
  const CMatrix& matrix() const { return m_; }
  cplx operator()(int i, int j) const { return m_(i, j); }
  double trace() const { return m_.trace().real(); }

  HermitianMatrix with_dims(Dims dims) const { return HermitianMatrix(m_, std::move(dims), trusted{}); }

  friend HermitianMatrix operator+(const HermitianMatrix& a, const HermitianMatrix& b) {
    require_same_dim(a, b);
    return HermitianMatrix(a.m_ + b.m_, a.dims_.empty() ? b.dims_ : a.dims_, trusted{});
  }
  friend HermitianMatrix operator-(const HermitianMatrix& a, const HermitianMatrix& b) {
    require_same_dim(a, b);
    return HermitianMatrix(a.m_ - b.m_, a.dims_.empty() ? b.dims_ : a.dims_, trusted{});
  }
  friend HermitianMatrix operator*(double s, const HermitianMatrix& a) {
    return HermitianMatrix(s * a.m_, a.dims_, trusted{});
  }
  friend HermitianMatrix operator*(const HermitianMatrix& a, double s) { return s * a; }

 private:
  struct trusted {};
  HermitianMatrix(CMatrix m, Dims dims, trusted) : m_(std::move(m)), dims_(std::move(dims)) { check_dims(); }

  void check_dims() const {
    if (dims_.empty()) return;
    for (int d : dims_)
      if (d < 1) throw DimensionError("HermitianMatrix: subsystem dimension < 1");
    if (dims_product(dims_) != m_.rows())
      throw DimensionError("HermitianMatrix: product of dims does not match matrix dimension");
  }
  static void require_same_dim(const HermitianMatrix& a, const HermitianMatrix& b) {
    if (a.dim() != b.dim()) throw DimensionError("dimension mismatch");
  }

  CMatrix m_;
  Dims dims_;
};

struct EigenSystem {
  RVector eigenvalues;  // ascending
  CMatrix eigenvectors;  // columns
  int rank = 0;
  double rank_tol = kDefaultRankTol;

  double min() const { return eigenvalues(0); }
  double max() const { return eigenvalues(eigenvalues.size() - 1); }
};

/// Eigendecomposition via Householder tridiagonalization + implicit QL.
/// rank counts eigenvalues above rank_tol * max|lambda|.
inline EigenSystem eigh(const HermitianMatrix& h, double rank_tol = kDefaultRankTol) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h.matrix());
  if (es.info() != Eigen::Success) throw ConvergenceError("eigh: eigensolver did not converge");
  EigenSystem out{es.eigenvalues(), es.eigenvectors(), 0, rank_tol};
  const double scale = out.eigenvalues.size() ? out.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  for (Eigen::Index i = 0; i < out.eigenvalues.size(); ++i)
    if (out.eigenvalues(i) > rank_tol * scale) ++out.rank;
  return out;
}

inline double frobenius_norm(const HermitianMatrix& x) { return x.matrix().norm(); }

inline HermitianMatrix kron(const HermitianMatrix& a, const HermitianMatrix& b) {
  const int da = a.dim(), db = b.dim();
  CMatrix out(da * db, da * db);
  for (int i = 0; i < da; ++i)
    for (int j = 0; j < da; ++j) out.block(i * db, j * db, db, db) = a(i, j) * b.matrix();
  Dims dims = a.effective_dims();
  const Dims bd = b.effective_dims();
  dims.insert(dims.end(), bd.begin(), bd.end());
  return HermitianMatrix(std::move(out), std::move(dims));
}

namespace detail {

inline void check_subsystems(int dim, std::span<const int> dims, std::span<const int> subset, bool allow_empty) {
  if (dims.empty()) throw DimensionError("empty dimension list");
  if (dims_product(dims) != dim) throw DimensionError("dims inconsistent with matrix dimension");
  if (!allow_empty && subset.empty()) throw DimensionError("empty subsystem selection");
  std::vector<char> seen(dims.size(), 0);
  for (int s : subset) {
    if (s < 0 || s >= static_cast<int>(dims.size())) throw DimensionError("subsystem index out of range");
    if (seen[s]) throw DimensionError("duplicate subsystem index");
    seen[s] = 1;
  }
}

// Digits of a composite index, subsystem 0 most significant.
inline void to_digits(long long idx, std::span<const int> dims, std::span<int> digits) {
  for (int k = static_cast<int>(dims.size()) - 1; k >= 0; --k) {
    digits[k] = static_cast<int>(idx % dims[k]);
    idx /= dims[k];
  }
}

inline long long from_digits(std::span<const int> digits, std::span<const int> dims) {
  long long idx = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) idx = idx * dims[k] + digits[k];
  return idx;
}

}  // namespace detail

/// Trace out every subsystem not in `keep`. The kept subsystems appear in
/// ascending index order in the result.
inline HermitianMatrix partial_trace(const HermitianMatrix& rho, const Dims& dims, std::vector<int> keep) {
  detail::check_subsystems(rho.dim(), dims, keep, false);
  std::sort(keep.begin(), keep.end());
  const int m = static_cast<int>(dims.size());
  std::vector<int> rest;
  for (int i = 0; i < m; ++i)
    if (!std::binary_search(keep.begin(), keep.end(), i)) rest.push_back(i);
  Dims kd, rd;
  for (int i : keep) kd.push_back(dims[i]);
  for (int i : rest) rd.push_back(dims[i]);
  const long long nk = dims_product(kd), nr = dims_product(rd);

  // Map (kept index, rest index) -> composite index.
  std::vector<long long> index(nk * nr);
  std::vector<int> digits(m), kdig(kd.size()), rdig(rd.size());
  for (long long a = 0; a < nk; ++a) {
    detail::to_digits(a, kd, kdig);
    for (long long r = 0; r < nr; ++r) {
      detail::to_digits(r, rd, rdig);
      for (std::size_t k = 0; k < keep.size(); ++k) digits[keep[k]] = kdig[k];
      for (std::size_t k = 0; k < rest.size(); ++k) digits[rest[k]] = rdig[k];
      index[a * nr + r] = detail::from_digits(digits, dims);
    }
  }
  CMatrix out = CMatrix::Zero(nk, nk);
  const CMatrix& x = rho.matrix();
  for (long long a = 0; a < nk; ++a)
    for (long long b = 0; b < nk; ++b) {
      cplx s = 0.0;
      for (long long r = 0; r < nr; ++r) s += x(index[a * nr + r], index[b * nr + r]);
      out(a, b) = s;
    }
  return HermitianMatrix(std::move(out), kd);
}

/// Transpose the indices of the subsystems in `subset`.
inline HermitianMatrix partial_transpose(const HermitianMatrix& rho, const Dims& dims, const std::vector<int>& subset) {
  detail::check_subsystems(rho.dim(), dims, subset, true);
  const int m = static_cast<int>(dims.size());
  const long long n = rho.dim();
  std::vector<char> flip(m, 0);
  for (int s : subset) flip[s] = 1;
  CMatrix out(n, n);
  std::vector<int> ri(m), ci(m);
  const CMatrix& x = rho.matrix();
  for (long long r = 0; r < n; ++r) {
    detail::to_digits(r, dims, ri);
    for (long long c = 0; c < n; ++c) {
      detail::to_digits(c, dims, ci);
      std::vector<int> a = ri, b = ci;
      for (int k = 0; k < m; ++k)
        if (flip[k]) std::swap(a[k], b[k]);
      out(detail::from_digits(a, dims), detail::from_digits(b, dims)) = x(r, c);
    }
  }
  return HermitianMatrix(std::move(out), dims);
}

/// Reorder subsystems: subsystem perm[k] of the input becomes subsystem k of
/// the output.
inline HermitianMatrix permute_subsystems(const HermitianMatrix& rho, const Dims& dims, const std::vector<int>& perm) {
  detail::check_subsystems(rho.dim(), dims, perm, false);
  if (perm.size() != dims.size()) throw DimensionError("permutation length mismatch");
  const int m = static_cast<int>(dims.size());
  Dims out_dims(m);
  for (int k = 0; k < m; ++k) out_dims[k] = dims[perm[k]];
  const long long n = rho.dim();
  std::vector<long long> map(n);
  std::vector<int> in(m), outd(m);
  for (long long i = 0; i < n; ++i) {
    detail::to_digits(i, dims, in);
    for (int k = 0; k < m; ++k) outd[k] = in[perm[k]];
    map[i] = detail::from_digits(outd, out_dims);
  }
  CMatrix out(n, n);
  const CMatrix& x = rho.matrix();
  for (long long r = 0; r < n; ++r)
    for (long long c = 0; c < n; ++c) out(map[r], map[c]) = x(r, c);
  return HermitianMatrix(std::move(out), out_dims);
}

struct GeneralizedPower {
  HermitianMatrix power;      // A^{(-p)}
  int rank = 0;               // D_f
  HermitianMatrix projector;  // P_f
};

/// Inverse power restricted to the support of a PSD matrix; zero on its kernel.
inline GeneralizedPower gen_neg_power(const HermitianMatrix& a, double p, double rank_tol = kDefaultRankTol) {
  if (!(p > 0)) throw Error("gen_neg_power: exponent must be positive");
  const EigenSystem es = eigh(a, rank_tol);
  const double scale = std::max(1.0, frobenius_norm(a));
  if (es.eigenvalues.size() && es.min() < -1e-8 * scale)
    throw NotPositiveError("gen_neg_power: input is not positive semidefinite");
  const double cut = rank_tol * (es.eigenvalues.size() ? es.eigenvalues.cwiseAbs().maxCoeff() : 0.0);
  const int n = a.dim();
  RVector pw = RVector::Zero(n), pr = RVector::Zero(n);
  int rank = 0;
  for (int i = 0; i < n; ++i) {
    if (es.eigenvalues(i) > cut) {
      pw(i) = std::pow(es.eigenvalues(i), -p);
      pr(i) = 1.0;
      ++rank;
    }
  }
  const CMatrix& v = es.eigenvectors;
  return {HermitianMatrix(v * pw.asDiagonal() * v.adjoint(), a.dims()), rank,
          HermitianMatrix(v * pr.asDiagonal() * v.adjoint(), a.dims())};
}

inline HermitianMatrix project_full_rank(const HermitianMatrix& x, const HermitianMatrix& projector_f) {
  if (x.dim() != projector_f.dim()) throw DimensionError("project_full_rank: dimension mismatch");
  const CMatrix& p = projector_f.matrix();
  return HermitianMatrix(p * x.matrix() * p, x.dims());
}

/// rho_1 (x) ... (x) rho_m with every factor PSD.
class ProductState {
 public:
  ProductState() = default;
  explicit ProductState(std::vector<HermitianMatrix> factors) : factors_(std::move(factors)) {
    if (factors_.empty()) throw DimensionError("ProductState: no factors");
    for (const auto& f : factors_) {
      const EigenSystem es = eigh(f);
      const double scale = std::max(1.0, es.eigenvalues.cwiseAbs().maxCoeff());
      if (es.min() < -kPsdTol * scale) throw NotPositiveError("ProductState: factor is not positive semidefinite");
      dims_.push_back(f.dim());
    }
  }

  const std::vector<HermitianMatrix>& factors() const { return factors_; }
  const Dims& dims() const { return dims_; }
  int size() const { return static_cast<int>(factors_.size()); }
  long long dim() const { return dims_product(dims_); }

  HermitianMatrix assemble() const {
    HermitianMatrix out = factors_.front().with_dims({factors_.front().dim()});
    for (std::size_t i = 1; i < factors_.size(); ++i) out = kron(out, factors_[i].with_dims({}));
    return out.with_dims(dims_);
  }

 private:
  std::vector<HermitianMatrix> factors_;
  Dims dims_;
};

/// Kronecker product of plain matrices, subsystem order as given.
inline CMatrix kron_all(std::span<const CMatrix> ms) {
  CMatrix out = CMatrix::Ones(1, 1);
  for (const auto& b : ms) {
    CMatrix next(out.rows() * b.rows(), out.cols() * b.cols());
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j)
        next.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = out(i, j) * b;
    out = std::move(next);
  }
  return out;
}

}  // namespace sepell
