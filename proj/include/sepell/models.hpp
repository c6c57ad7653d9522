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
 * @file models.hpp
 * Three-qubit X states under dephasing and transverse-field Ising chains.
 *
 * Conventions: Z|0> = +|0>, X has +1 off-diagonal entries, and site 0 is the
 * most significant bit of a computational basis index. The Ising
 * Hamiltonian is H = -sum_i (X_i X_{i+1} - h Z_i).
 */
#pragma once

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepell/qmat.hpp"

namespace sepell {

// ---------------------------------------------------------------- X states

struct XStateParams {
  std::array<double, 4> a{};
  std::array<double, 4> b{};
  std::array<cplx, 4> c{};

  /// Throws unless the parameters describe a unit-trace PSD X state.
  void validate() const {
    double tr = 0.0;
    for (int j = 0; j < 4; ++j) {
      if (!(a[j] >= 0) || !(b[j] >= 0)) throw Error("XStateParams: diagonal entries must be nonnegative");
      tr += a[j] + b[j];
    }
    if (std::abs(tr - 1.0) > 1e-12) throw Error("XStateParams: trace is " + std::to_string(tr) + ", expected 1");
    for (int j = 0; j < 4; ++j)
      if (std::norm(c[j]) > a[j] * b[j] * (1 + 1e-12) + 1e-300)
        throw NotPositiveError("XStateParams: |c_" + std::to_string(j + 1) + "|^2 > a_j b_j");
  }

  /// a = (1/8, 1/8, 1/32, 1/64), b = (1/8, 1/8, 7/32, 15/64),
  /// c = (1/12, 1/24, 1/24, 1/36).
  static XStateParams reference() {
    return {{1.0 / 8, 1.0 / 8, 1.0 / 32, 1.0 / 64},
            {1.0 / 8, 1.0 / 8, 7.0 / 32, 15.0 / 64},
            {cplx(1.0 / 12), cplx(1.0 / 24), cplx(1.0 / 24), cplx(1.0 / 36)}};
  }
};

/// Row j carries a_j at (j, j) and c_j at (j, 7-j); row 7-j carries b_j.
inline HermitianMatrix x_state(const XStateParams& p) {
  p.validate();
  CMatrix m = CMatrix::Zero(8, 8);
  for (int j = 0; j < 4; ++j) {
    m(j, j) = p.a[j];
    m(7 - j, 7 - j) = p.b[j];
    m(j, 7 - j) = p.c[j];
    m(7 - j, j) = std::conj(p.c[j]);
  }
  return HermitianMatrix(std::move(m), {2, 2, 2});
}

/// Independent single-qubit dephasing scales the anti-diagonal by (1-p)^{3/2}.
inline XStateParams dephase_x(const XStateParams& p, double strength) {
  if (!(strength >= 0.0 && strength <= 1.0)) throw Error("dephase_x: p must lie in [0, 1]");
  XStateParams out = p;
  const double f = std::pow(1.0 - strength, 1.5);
  for (auto& c : out.c) c *= f;
  return out;
}

/// Single-qubit marginals; they do not depend on c.
inline std::array<HermitianMatrix, 3> x_state_rdms(const XStateParams& p) {
  const auto& a = p.a;
  const auto& b = p.b;
  const std::array<double, 2> r1{a[0] + a[1] + a[2] + a[3], b[0] + b[1] + b[2] + b[3]};
  const std::array<double, 2> r2{a[0] + a[1] + b[2] + b[3], b[0] + b[1] + a[2] + a[3]};
  const std::array<double, 2> r3{a[0] + b[1] + a[2] + b[3], b[0] + a[1] + b[2] + a[3]};
  return {HermitianMatrix::diagonal(r1), HermitianMatrix::diagonal(r2), HermitianMatrix::diagonal(r3)};
}

// ------------------------------------------------------------ Ising chains

enum class Boundary { Open, Periodic };

struct IsingSpec {
  int length = 12;
  double field = 1.0;
  Boundary boundary = Boundary::Periodic;
  double temperature = 0.0;  // 0 selects the ground state
};

inline constexpr int kIsingMaxLength = 16;       // matrix-free routines
inline constexpr int kIsingDenseMaxLength = 12;  // full spectral decomposition
inline constexpr int kIsingMatrixMaxLength = 10;  // explicit complex matrix

namespace detail {

inline void check_ising(const IsingSpec& s, int cap) {
  if (s.length < 2) throw Error("IsingSpec: chain length must be >= 2");
  if (s.length > cap)
    throw Error("IsingSpec: chain length " + std::to_string(s.length) + " exceeds cap " + std::to_string(cap));
  if (!(s.temperature >= 0)) throw Error("IsingSpec: temperature must be nonnegative");
}

inline std::vector<std::pair<int, int>> ising_bonds(const IsingSpec& s) {
  std::vector<std::pair<int, int>> bonds;
  for (int i = 0; i + 1 < s.length; ++i) bonds.emplace_back(i, i + 1);
  if (s.boundary == Boundary::Periodic) bonds.emplace_back(s.length - 1, 0);
  return bonds;
}

inline std::uint64_t site_mask(int site, int length) { return std::uint64_t{1} << (length - 1 - site); }

inline double ising_diagonal(std::uint64_t state, const IsingSpec& s) {
  // +h Z_i summed: +h for each 0 bit, -h for each 1 bit.
  const int ones = std::popcount(state);
  return s.field * (s.length - 2 * ones);
}

}  // namespace detail

/// Matrix-free y = H x on the full 2^L space.
inline void apply_ising(const IsingSpec& s, std::span<const double> x, std::span<double> y) {
  const std::uint64_t n = std::uint64_t{1} << s.length;
  const auto bonds = detail::ising_bonds(s);
  std::vector<std::uint64_t> flips;
  for (auto [i, j] : bonds) flips.push_back(detail::site_mask(i, s.length) | detail::site_mask(j, s.length));
  for (std::uint64_t k = 0; k < n; ++k) {
    double acc = detail::ising_diagonal(k, s) * x[k];
    for (std::uint64_t f : flips) acc -= x[k ^ f];
    y[k] = acc;
  }
}

/// Dense H as a HermitianMatrix (L <= kIsingMatrixMaxLength).
inline HermitianMatrix ising_hamiltonian(const IsingSpec& s) {
  detail::check_ising(s, kIsingMatrixMaxLength);
  const int n = 1 << s.length;
  CMatrix h = CMatrix::Zero(n, n);
  for (auto [i, j] : detail::ising_bonds(s)) {
    const std::uint64_t f = detail::site_mask(i, s.length) | detail::site_mask(j, s.length);
    for (int k = 0; k < n; ++k) h(k ^ f, k) -= 1.0;
  }
  for (int k = 0; k < n; ++k) h(k, k) += detail::ising_diagonal(k, s);
  return HermitianMatrix(std::move(h), Dims(s.length, 2));
}

/// exp(-H/T)/Z from the spectral decomposition; T = 0 gives the normalized
/// projector onto the ground space.
inline HermitianMatrix gibbs_state(const HermitianMatrix& h, double temperature) {
  if (!(temperature >= 0)) throw Error("gibbs_state: temperature must be nonnegative");
  const EigenSystem es = eigh(h);
  const int n = h.dim();
  const double e0 = es.min();
  RVector w(n);
  if (temperature == 0.0) {
    const double tol = 1e-9 * std::max(1.0, std::abs(e0));
    for (int i = 0; i < n; ++i) w(i) = es.eigenvalues(i) - e0 <= tol ? 1.0 : 0.0;
  } else {
    for (int i = 0; i < n; ++i) w(i) = std::exp(-(es.eigenvalues(i) - e0) / temperature);
  }
  w /= w.sum();
  const CMatrix& v = es.eigenvectors;
  return HermitianMatrix(v * w.asDiagonal() * v.adjoint(), h.dims());
}

namespace detail {

// rho_{ab} += weight * sum_env psi[l, a, r] psi[l, b, r] for the contiguous
// block [first, first + count) of a length-L real state vector.
inline void accumulate_rdm(std::span<const double> psi, int length, int first, int count, double weight,
                           Eigen::MatrixXd& rho) {
  const std::uint64_t left = std::uint64_t{1} << first;
  const std::uint64_t mid = std::uint64_t{1} << count;
  const std::uint64_t right = std::uint64_t{1} << (length - first - count);
  for (std::uint64_t l = 0; l < left; ++l) {
    // Block for fixed l is mid x right, stored row-major: index (l*mid + a)*right + r.
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> blk(
        psi.data() + l * mid * right, mid, right);
    rho.noalias() += weight * blk * blk.transpose();
  }
}

inline std::vector<int> contiguous_sites(const std::vector<int>& sites, int length) {
  if (sites.empty()) throw Error("ising_rdm: empty site set");
  for (std::size_t k = 0; k < sites.size(); ++k) {
    if (sites[k] < 0 || sites[k] >= length) throw Error("ising_rdm: site outside chain");
    if (k && sites[k] != sites[k - 1] + 1) throw Error("ising_rdm: sites must be contiguous and ascending");
  }
  return sites;
}

}  // namespace detail

/// Lowest eigenpair of H by Lanczos with full reorthogonalization.
struct GroundState {
  double energy = 0.0;
  std::vector<double> vector;
  int iterations = 0;
};

inline GroundState ising_ground_state(const IsingSpec& s, int max_iter = 400, double tol = 1e-12) {
  detail::check_ising(s, kIsingMaxLength);
  const std::size_t n = std::size_t{1} << s.length;
  std::vector<std::vector<double>> basis;
  std::vector<double> alpha, beta;
  std::vector<double> v(n), w(n);
  // Deterministic start with overlap on every basis state.
  for (std::size_t k = 0; k < n; ++k) v[k] = 1.0 + 0.01 * std::sin(0.37 * double(k) + 0.1);
  double nv = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  for (auto& x : v) x /= nv;
  const int kmax = static_cast<int>(std::min<std::size_t>(max_iter, n));
  Eigen::VectorXd ritz;
  for (int it = 0; it < kmax; ++it) {
    basis.push_back(v);
    apply_ising(s, v, w);
    const double a = std::inner_product(w.begin(), w.end(), v.begin(), 0.0);
    alpha.push_back(a);
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& q : basis) {
        const double c = std::inner_product(w.begin(), w.end(), q.begin(), 0.0);
        for (std::size_t k = 0; k < n; ++k) w[k] -= c * q[k];
      }
    const double b = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    const int m = static_cast<int>(alpha.size());
    Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i) {
      t(i, i) = alpha[i];
      if (i + 1 < m) t(i, i + 1) = t(i + 1, i) = beta[i];
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
    const double e = es.eigenvalues()(0);
    const double residual = b * std::abs(es.eigenvectors()(m - 1, 0));
    ritz = es.eigenvectors().col(0);
    if (residual < tol * std::max(1.0, std::abs(e)) || b < 1e-14) break;
    beta.push_back(b);
    for (std::size_t k = 0; k < n; ++k) v[k] = w[k] / b;
  }
  GroundState g;
  g.iterations = static_cast<int>(alpha.size());
  g.vector.assign(n, 0.0);
  for (int i = 0; i < ritz.size(); ++i)
    for (std::size_t k = 0; k < n; ++k) g.vector[k] += ritz(i) * basis[i][k];
  const double norm = std::sqrt(std::inner_product(g.vector.begin(), g.vector.end(), g.vector.begin(), 0.0));
  for (auto& x : g.vector) x /= norm;
  std::vector<double> hv(n);
  apply_ising(s, g.vector, hv);
  g.energy = std::inner_product(hv.begin(), hv.end(), g.vector.begin(), 0.0);
  return g;
}

/// Reduced state of a single (pure) ground state on contiguous sites.
inline HermitianMatrix ground_state_rdm(const GroundState& g, int length, const std::vector<int>& sites) {
  detail::contiguous_sites(sites, length);
  if (g.vector.size() != (std::size_t{1} << length)) throw DimensionError("ground_state_rdm: length mismatch");
  const int count = static_cast<int>(sites.size());
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(1 << count, 1 << count);
  detail::accumulate_rdm(g.vector, length, sites.front(), count, 1.0, rho);
  return HermitianMatrix(rho.cast<cplx>(), Dims(count, 2));
}

/// Full spectrum of a chain, block diagonalized by the Z-parity prod_i Z_i.
/// Immutable after construction and reusable across temperatures.
class IsingEnsemble {
 public:
  explicit IsingEnsemble(IsingSpec spec) : spec_(spec) {
    detail::check_ising(spec_, kIsingDenseMaxLength);
    const std::uint64_t n = std::uint64_t{1} << spec_.length;
    const auto bonds = detail::ising_bonds(spec_);
    for (int parity = 0; parity < 2; ++parity) {
      Sector sec;
      std::vector<int> local(n, -1);
      for (std::uint64_t k = 0; k < n; ++k)
        if (std::popcount(k) % 2 == parity) {
          local[k] = static_cast<int>(sec.states.size());
          sec.states.push_back(k);
        }
      const int dim = static_cast<int>(sec.states.size());
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
      for (int i = 0; i < dim; ++i) {
        const std::uint64_t k = sec.states[i];
        h(i, i) += detail::ising_diagonal(k, spec_);
        for (auto [a, b] : bonds) {
          const std::uint64_t f = detail::site_mask(a, spec_.length) | detail::site_mask(b, spec_.length);
          h(local[k ^ f], i) -= 1.0;
        }
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
      if (es.info() != Eigen::Success) throw ConvergenceError("IsingEnsemble: eigensolver failed");
      sec.energies = es.eigenvalues();
      sec.vectors = es.eigenvectors();
      sectors_.push_back(std::move(sec));
    }
    ground_ = std::min(sectors_[0].energies(0), sectors_[1].energies(0));
  }

  const IsingSpec& spec() const { return spec_; }
  double ground_energy() const { return ground_; }

  std::vector<double> energies() const {
    std::vector<double> e;
    for (const auto& s : sectors_) e.insert(e.end(), s.energies.data(), s.energies.data() + s.energies.size());
    std::sort(e.begin(), e.end());
    return e;
  }

  /// Reduced state on contiguous `sites` at temperature T (T = 0: uniform
  /// mixture over the ground space).
  HermitianMatrix rdm(const std::vector<int>& sites, double temperature) const {
    if (!(temperature >= 0)) throw Error("IsingEnsemble::rdm: temperature must be nonnegative");
    detail::contiguous_sites(sites, spec_.length);
    const int count = static_cast<int>(sites.size());
    const std::uint64_t n = std::uint64_t{1} << spec_.length;
    Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(1 << count, 1 << count);
    const double tol = 1e-9 * std::max(1.0, std::abs(ground_));
    double z = 0.0;
    std::vector<double> full(n, 0.0);
    for (const auto& sec : sectors_) {
      for (Eigen::Index i = 0; i < sec.energies.size(); ++i) {
        const double de = sec.energies(i) - ground_;
        const double w = temperature == 0.0 ? (de <= tol ? 1.0 : 0.0) : std::exp(-de / temperature);
        if (w < 1e-30) continue;
        z += w;
        std::fill(full.begin(), full.end(), 0.0);
        for (std::size_t k = 0; k < sec.states.size(); ++k) full[sec.states[k]] = sec.vectors(k, i);
        detail::accumulate_rdm(full, spec_.length, sites.front(), count, w, rho);
      }
    }
    rho /= z;
    return HermitianMatrix(rho.cast<cplx>(), Dims(count, 2));
  }

 private:
  struct Sector {
    std::vector<std::uint64_t> states;
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors;
  };
  IsingSpec spec_;
  std::vector<Sector> sectors_;
  double ground_ = 0.0;
};

/// `count` adjacent sites centred in the chain.
inline std::vector<int> central_sites(int length, int count) {
  if (count < 1 || count > length) throw Error("central_sites: invalid site count");
  std::vector<int> s(count);
  std::iota(s.begin(), s.end(), (length - count) / 2);
  return s;
}

/// Reduced density matrix of the Gibbs (or ground) state on contiguous sites.
/// Ground states of chains longer than kIsingDenseMaxLength use Lanczos.
inline HermitianMatrix ising_rdm(const IsingSpec& s, const std::vector<int>& sites) {
  detail::check_ising(s, kIsingMaxLength);
  detail::contiguous_sites(sites, s.length);
  if (s.temperature == 0.0 && s.length > kIsingDenseMaxLength) return ground_state_rdm(ising_ground_state(s), s.length, sites);
  return IsingEnsemble(s).rdm(sites, s.temperature);
}

inline nlohmann::json to_json(const IsingSpec& s) {
  return {{"model", "ising"},
          {"length", s.length},
          {"field", s.field},
          {"boundary", s.boundary == Boundary::Periodic ? "periodic" : "open"},
          {"temperature", s.temperature}};
}

inline nlohmann::json to_json(const XStateParams& p) {
  nlohmann::json c = nlohmann::json::array();
  for (const auto& x : p.c) c.push_back({x.real(), x.imag()});
  return {{"model", "x-state"}, {"a", p.a}, {"b", p.b}, {"c", c}};
}

}  // namespace sepell
