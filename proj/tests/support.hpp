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

// Random instance generators and brute-force oracles shared by the tests.
// Oracles deliberately avoid the library's index arithmetic.
#pragma once

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sepell/sepell.hpp"

namespace sepell::testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double normal() { return normal_(rng_); }

  CMatrix ginibre(int rows, int cols) {
    CMatrix g(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) g(r, c) = cplx(normal(), normal());
    return g;
  }

  HermitianMatrix hermitian(int d) {
    const CMatrix g = ginibre(d, d);
    return HermitianMatrix(0.5 * (g + g.adjoint()));
  }

  /// Unit-trace PSD matrix of the given rank (rank <= 0: full rank).
  HermitianMatrix density(int d, int rank = 0, Dims dims = {}) {
    if (rank <= 0) rank = d;
    const CMatrix g = ginibre(d, rank);
    CMatrix r = g * g.adjoint();
    r /= r.trace().real();
    return HermitianMatrix(0.5 * (r + r.adjoint()), std::move(dims));
  }

  CMatrix unitary(int d) {
    Eigen::HouseholderQR<CMatrix> qr(ginibre(d, d));
    CMatrix q = qr.householderQ();
    const CMatrix r = qr.matrixQR();
    for (int i = 0; i < d; ++i) q.col(i) *= std::polar(1.0, std::arg(r(i, i)));
    return q;
  }

  /// Random PSD product; each factor is rank deficient with probability p_def.
  ProductState product(const Dims& dims, double p_def = 0.0) {
    std::vector<HermitianMatrix> f;
    for (int d : dims) {
      const int rank = uniform() < p_def ? integer(1, d - 1) : d;
      f.push_back(density(d, rank));
    }
    return ProductState(std::move(f));
  }

  /// Random composite dims with product <= max_dim and at least two parts.
  Dims dims(long long max_dim = 16, int max_parts = 4) {
    for (;;) {
      const int m = integer(2, max_parts);
      Dims d;
      for (int i = 0; i < m; ++i) d.push_back(integer(2, 4));
      if (dims_product(d) <= max_dim) return d;
    }
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// Kronecker product of raw matrices, written out entrywise.
inline CMatrix kron_oracle(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Partial trace as sum_e V_e^dagger rho V_e, where V_e embeds the kept
/// subsystems and fixes every traced subsystem to a basis vector.
inline CMatrix partial_trace_oracle(const CMatrix& rho, const Dims& dims, const std::vector<int>& keep) {
  const int m = static_cast<int>(dims.size());
  std::vector<int> traced;
  for (int i = 0; i < m; ++i)
    if (std::find(keep.begin(), keep.end(), i) == keep.end()) traced.push_back(i);
  std::vector<int> e(traced.size(), 0);
  long long kept_dim = 1;
  for (int i : keep) kept_dim *= dims[i];
  CMatrix out = CMatrix::Zero(kept_dim, kept_dim);
  for (;;) {
    CMatrix v = CMatrix::Identity(1, 1);
    for (int i = 0, t = 0; i < m; ++i) {
      CMatrix piece;
      if (t < static_cast<int>(traced.size()) && traced[t] == i) {
        piece = CMatrix::Zero(dims[i], 1);
        piece(e[t], 0) = 1.0;
        ++t;
      } else {
        piece = CMatrix::Identity(dims[i], dims[i]);
      }
      v = kron_oracle(v, piece);
    }
    out += v.adjoint() * rho * v;
    int pos = static_cast<int>(traced.size()) - 1;
    while (pos >= 0 && ++e[pos] == dims[traced[pos]]) e[pos--] = 0;
    if (pos < 0) break;
  }
  return out;
}

/// Partial transpose via sum over matrix units: rho^{T_S} = sum (E_ab^T on S) ...
/// implemented by expanding rho in product operator bases of each subsystem.
inline CMatrix partial_transpose_oracle(const CMatrix& rho, const Dims& dims, const std::vector<int>& subset) {
  const long long n = dims_product(dims);
  CMatrix out = CMatrix::Zero(n, n);
  const int m = static_cast<int>(dims.size());
  std::vector<int> r(m), c(m);
  for (long long i = 0; i < n; ++i)
    for (long long j = 0; j < n; ++j) {
      // digits by repeated division (subsystem 0 slowest)
      long long a = i, b = j;
      for (int s = m - 1; s >= 0; --s) {
        r[s] = static_cast<int>(a % dims[s]);
        c[s] = static_cast<int>(b % dims[s]);
        a /= dims[s];
        b /= dims[s];
      }
      for (int s : subset) std::swap(r[s], c[s]);
      long long i2 = 0, j2 = 0;
      for (int s = 0; s < m; ++s) {
        i2 = i2 * dims[s] + r[s];
        j2 = j2 * dims[s] + c[s];
      }
      out(i2, j2) = rho(i, j);
    }
  return out;
}

inline bool is_ppt(const HermitianMatrix& rho, const Dims& dims, const std::vector<int>& subset, double tol = 1e-12) {
  const HermitianMatrix pt(partial_transpose_oracle(rho.matrix(), dims, subset));
  return eigh(pt).min() >= -tol;
}

inline HermitianMatrix bell_state() {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(4);
  psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
  return HermitianMatrix::projector(psi, {2, 2});
}

inline HermitianMatrix ghz_state(int m) {
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(1 << m);
  psi(0) = psi((1 << m) - 1) = 1.0 / std::sqrt(2.0);
  return HermitianMatrix::projector(psi, Dims(m, 2));
}

/// v |Phi+><Phi+| + (1 - v) I/4
inline HermitianMatrix werner_state(double v) {
  return HermitianMatrix(v * bell_state().matrix() + (1 - v) * CMatrix::Identity(4, 4) / 4.0, {2, 2});
}

}  // namespace sepell::testing
