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
 * @file detect.hpp
 * Reference-state search and the end-to-end certification pipeline.
 *
 * A separable reference K = sum_j w_j^2 (F_j1 (x) ... (x) F_jk) is
 * parameterized without constraints: each factor is a Gram product
 * F = G G^dagger of an unconstrained complex matrix G, and each weight is a
 * square. Positivity of every returned decomposition therefore holds by
 * construction.
 */
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sepell/criteria.hpp"
#include "sepell/decomposition.hpp"
#include "sepell/optim.hpp"
#include "sepell/qmat.hpp"
#include "sepell/qmat_io.hpp"

namespace sepell {

struct OptimizerConfig {
  int terms = 8;  // u
  int max_iters = 2000;
  int restarts = 4;
  std::uint64_t seed = 0;
  double step_tolerance = 1e-13;
  double distance_tolerance = 1e-9;
  int jobs = 1;

  void validate() const {
    if (terms < 1) throw Error("OptimizerConfig: terms must be >= 1");
    if (restarts < 1) throw Error("OptimizerConfig: restarts must be >= 1");
    if (max_iters < 1) throw Error("OptimizerConfig: max_iters must be >= 1");
    if (jobs < 1) throw Error("OptimizerConfig: jobs must be >= 1");
    if (!(step_tolerance > 0) || !(distance_tolerance > 0)) throw Error("OptimizerConfig: tolerances must be > 0");
  }
};

// ------------------------------------------------------------ references

/// Product of the block marginals of rho, each scaled to trace Tr(rho)^{1/k}.
inline ProductState natural_product_state(const HermitianMatrix& rho, const Dims& dims, const PartitionSpec& partition) {
  if (dims_product(dims) != rho.dim()) throw DimensionError("natural_product_state: dims inconsistent with rho");
  const int k = partition.size();
  const double tr = rho.trace();
  if (!(tr > 0)) throw Error("natural_product_state: trace must be positive");
  std::vector<HermitianMatrix> factors;
  for (const auto& block : partition.blocks()) {
    HermitianMatrix r = partial_trace(rho, dims, block);
    factors.push_back((std::pow(tr, 1.0 / k) / r.trace()) * r.with_dims({}));
  }
  return ProductState(std::move(factors));
}

inline ProductState natural_product_state(const HermitianMatrix& rho, const Dims& dims) {
  return natural_product_state(rho, dims, PartitionSpec::singletons(static_cast<int>(dims.size())));
}

/// Sum of |negative eigenvalues| of the partial transpose on the first block.
inline double negativity(const HermitianMatrix& rho, const Dims& dims, const PartitionSpec& bipartition) {
  if (bipartition.size() != 2) throw Error("negativity: partition must have exactly two blocks");
  if (bipartition.subsystems() != static_cast<int>(dims.size())) throw DimensionError("negativity: partition/dims mismatch");
  const EigenSystem es = eigh(partial_transpose(rho, dims, bipartition.blocks().front()));
  double s = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues.size(); ++i)
    if (es.eigenvalues(i) < 0) s -= es.eigenvalues(i);
  return s;
}

// ------------------------------------------------------- parameterization

namespace detail {

// Layout of the flat parameter vector: per term, [omega, Re G_1, Im G_1, ...].
struct TermLayout {
  PartitionSpec partition;
  Dims block_dims;
  std::vector<int> to_standard;  // block-order basis index -> standard index
  int offset = 0;
};

class Ansatz {
 public:
  Ansatz(Dims dims, std::vector<PartitionSpec> partitions) : dims_(std::move(dims)) {
    n_ = static_cast<int>(dims_product(dims_));
    int offset = 0;
    for (auto& p : partitions) {
      TermLayout t;
      t.partition = p;
      t.block_dims = p.block_dims(dims_);
      t.offset = offset;
      offset += 1;
      for (int d : t.block_dims) offset += 2 * d * d;
      // Identity on block order mapped back to standard order.
      const std::vector<int> order = p.order();
      Dims od;
      for (int i : order) od.push_back(dims_[i]);
      std::vector<int> digits(order.size()), std_digits(order.size());
      t.to_standard.resize(n_);
      for (int r = 0; r < n_; ++r) {
        detail::to_digits(r, od, digits);
        for (std::size_t k = 0; k < order.size(); ++k) std_digits[order[k]] = digits[k];
        t.to_standard[r] = static_cast<int>(detail::from_digits(std_digits, dims_));
      }
      terms_.push_back(std::move(t));
    }
    size_ = offset;
  }

  int size() const { return size_; }
  int terms() const { return static_cast<int>(terms_.size()); }
  int dim() const { return n_; }
  const TermLayout& layout(int j) const { return terms_[j]; }

  double weight(std::span<const double> x, int j) const {
    const double w = x[terms_[j].offset];
    return w * w;
  }

  CMatrix gauge(std::span<const double> x, int j, int s) const {
    const TermLayout& t = terms_[j];
    int off = t.offset + 1;
    for (int b = 0; b < s; ++b) off += 2 * t.block_dims[b] * t.block_dims[b];
    const int d = t.block_dims[s];
    CMatrix g(d, d);
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) g(r, c) = cplx(x[off + r * d + c], x[off + d * d + r * d + c]);
    return g;
  }

  void set_gauge(std::span<double> x, int j, int s, const CMatrix& g) const {
    const TermLayout& t = terms_[j];
    int off = t.offset + 1;
    for (int b = 0; b < s; ++b) off += 2 * t.block_dims[b] * t.block_dims[b];
    const int d = t.block_dims[s];
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        x[off + r * d + c] = g(r, c).real();
        x[off + d * d + r * d + c] = g(r, c).imag();
      }
  }

  void add_gauge_grad(std::span<double> grad, int j, int s, const CMatrix& gamma) const {
    const TermLayout& t = terms_[j];
    int off = t.offset + 1;
    for (int b = 0; b < s; ++b) off += 2 * t.block_dims[b] * t.block_dims[b];
    const int d = t.block_dims[s];
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        grad[off + r * d + c] += gamma(r, c).real();
        grad[off + d * d + r * d + c] += gamma(r, c).imag();
      }
  }

  std::vector<CMatrix> factors(std::span<const double> x, int j) const {
    std::vector<CMatrix> f;
    for (std::size_t s = 0; s < terms_[j].block_dims.size(); ++s) {
      const CMatrix g = gauge(x, j, static_cast<int>(s));
      f.push_back(g * g.adjoint());
    }
    return f;
  }

  CMatrix to_standard(const CMatrix& blk, int j) const {
    const auto& map = terms_[j].to_standard;
    CMatrix out(n_, n_);
    for (int r = 0; r < n_; ++r)
      for (int c = 0; c < n_; ++c) out(map[r], map[c]) = blk(r, c);
    return out;
  }

  CMatrix to_block(const CMatrix& std_op, int j) const {
    const auto& map = terms_[j].to_standard;
    CMatrix out(n_, n_);
    for (int r = 0; r < n_; ++r)
      for (int c = 0; c < n_; ++c) out(r, c) = std_op(map[r], map[c]);
    return out;
  }

  /// w_j^2 (x) F_js in standard order, without weight when `weighted` is false.
  CMatrix term(std::span<const double> x, int j, bool weighted = true) const {
    const std::vector<CMatrix> f = factors(x, j);
    CMatrix k = to_standard(kron_all(f), j);
    return weighted ? (weight(x, j) * k).eval() : k;
  }

  /// Env_s = Tr_{not s}[E (F_1 (x) .. I_s .. (x) F_k)] in block order.
  CMatrix environment(const CMatrix& e_blk, const std::vector<CMatrix>& f, const Dims& bd, int s) const {
    std::vector<CMatrix> q = f;
    q[s] = CMatrix::Identity(bd[s], bd[s]);
    const CMatrix prod = e_blk * kron_all(q);
    long long left = 1, right = 1;
    for (int b = 0; b < s; ++b) left *= bd[b];
    for (std::size_t b = s + 1; b < bd.size(); ++b) right *= bd[b];
    const int d = bd[s];
    CMatrix env = CMatrix::Zero(d, d);
    for (long long l = 0; l < left; ++l)
      for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) {
          cplx acc = 0.0;
          for (long long r = 0; r < right; ++r) acc += prod((l * d + a) * right + r, (l * d + b) * right + r);
          env(a, b) += acc;
        }
    return 0.5 * (env + env.adjoint());
  }

  /// Accumulates the gradient of Re Tr(E K_j) with respect to term j's
  /// parameters; E is Hermitian in standard order.
  void term_gradient(std::span<const double> x, int j, const CMatrix& e_std, std::span<double> grad) const {
    const TermLayout& t = terms_[j];
    const std::vector<CMatrix> f = factors(x, j);
    const CMatrix e_blk = to_block(e_std, j);
    const double om = x[t.offset];
    const CMatrix k_blk = kron_all(f);
    grad[t.offset] += 2.0 * om * (e_blk.cwiseProduct(k_blk.transpose())).sum().real();
    for (std::size_t s = 0; s < f.size(); ++s) {
      const CMatrix env = environment(e_blk, f, t.block_dims, static_cast<int>(s));
      add_gauge_grad(grad, j, static_cast<int>(s), 2.0 * om * om * env * gauge(x, j, static_cast<int>(s)));
    }
  }

  SeparableDecomposition decomposition(std::span<const double> x) const {
    std::vector<DecompositionTerm> out;
    for (int j = 0; j < terms(); ++j) {
      std::vector<HermitianMatrix> f;
      for (const auto& m : factors(x, j)) f.push_back(HermitianMatrix(m));
      out.push_back({weight(x, j), ProductState(std::move(f)), terms_[j].partition});
    }
    return SeparableDecomposition(dims_, std::move(out));
  }

  /// Seeds term j with the square roots of the natural block factors of rho.
  void seed_natural(std::span<double> x, int j, const HermitianMatrix& rho, double omega) const {
    const ProductState nat = natural_product_state(rho, dims_, terms_[j].partition);
    x[terms_[j].offset] = omega;
    for (int s = 0; s < nat.size(); ++s) {
      Eigen::SelfAdjointEigenSolver<CMatrix> es(nat.factors()[s].matrix());
      const RVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
      set_gauge(x, j, s, es.eigenvectors() * root.asDiagonal() * es.eigenvectors().adjoint());
    }
  }

 private:
  Dims dims_;
  int n_ = 0;
  int size_ = 0;
  std::vector<TermLayout> terms_;
};

/// |rho - K|_F^2 and its gradient.
inline double distance_objective(const Ansatz& a, const CMatrix& rho, std::span<const double> x, std::span<double> grad) {
  CMatrix k = CMatrix::Zero(a.dim(), a.dim());
  for (int j = 0; j < a.terms(); ++j) k += a.term(x, j);
  const CMatrix resid = k - rho;
  std::fill(grad.begin(), grad.end(), 0.0);
  const CMatrix e = 2.0 * resid;
  for (int j = 0; j < a.terms(); ++j) a.term_gradient(x, j, e, grad);
  return resid.squaredNorm();
}

/// Trace-form ratio Tr[(N A)^2] / Tr[N A]^2 with N = rho - sum_{j != p} K_j
/// and A = K_p^{-1}. Returns +inf outside the domain (Tr[N A] <= 0 or a
/// singular pivot factor).
inline double pivot_ratio_objective(const Ansatz& a, const CMatrix& rho, int pivot, std::span<const double> x,
                                    std::span<double> grad) {
  std::fill(grad.begin(), grad.end(), 0.0);
  const int n = a.dim();
  CMatrix nmat = rho;
  for (int j = 0; j < a.terms(); ++j)
    if (j != pivot) nmat -= a.term(x, j);

  const std::vector<CMatrix> f = a.factors(x, pivot);
  std::vector<CMatrix> finv;
  for (const auto& m : f) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m);
    const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(es.eigenvalues().size() - 1);
    if (!(lo > 1e-12 * hi)) return std::numeric_limits<double>::infinity();
    finv.push_back(es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint());
  }
  const CMatrix amat = a.to_standard(kron_all(finv), pivot);
  const CMatrix na = nmat * amat;
  const double t1 = na.trace().real();
  const double t2 = (na * na).trace().real();
  if (!(t1 > 0)) return std::numeric_limits<double>::infinity();
  const double ratio = t2 / (t1 * t1);

  // dR = Tr(dN X) + Tr(dA Y)
  const CMatrix xm = (2.0 / (t1 * t1)) * (amat * nmat * amat) - (2.0 * t2 / (t1 * t1 * t1)) * amat;
  const CMatrix ym = (2.0 / (t1 * t1)) * (nmat * amat * nmat) - (2.0 * t2 / (t1 * t1 * t1)) * nmat;
  const CMatrix xh = 0.5 * (xm + xm.adjoint());
  const CMatrix yh = 0.5 * (ym + ym.adjoint());
  for (int j = 0; j < a.terms(); ++j)
    if (j != pivot) a.term_gradient(x, j, -xh, grad);

  // d(F^{-1}) = -F^{-1} dF F^{-1}
  const TermLayout& t = a.layout(pivot);
  const CMatrix y_blk = a.to_block(yh, pivot);
  for (std::size_t s = 0; s < f.size(); ++s) {
    const CMatrix env = a.environment(y_blk, finv, t.block_dims, static_cast<int>(s));
    const CMatrix e_s = -(finv[s] * env * finv[s]);
    a.add_gauge_grad(grad, pivot, static_cast<int>(s), 2.0 * e_s * a.gauge(x, pivot, static_cast<int>(s)));
  }
  (void)n;
  return ratio;
}

inline std::vector<PartitionSpec> round_robin(const std::vector<PartitionSpec>& partitions, int terms) {
  std::vector<PartitionSpec> out;
  for (int j = 0; j < terms; ++j) out.push_back(partitions[j % partitions.size()]);
  return out;
}

inline std::uint64_t restart_seed(std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart), 0x5e9e11u};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (std::uint64_t{out[0]} << 32) | out[1];
}

inline void check_state(const HermitianMatrix& rho, const Dims& dims) {
  if (dims_product(dims) != rho.dim()) throw DimensionError("dims inconsistent with rho");
  if (std::abs(rho.trace() - 1.0) > 1e-8) throw Error("state must have unit trace");
  const EigenSystem es = eigh(rho);
  if (es.min() < -1e-8) throw NotPositiveError("state must be positive semidefinite");
}

/// Runs `count` independent tasks on up to `jobs` threads; results come
/// back in task order regardless of scheduling.
template <class T, class F>
std::vector<T> run_indexed(int count, int jobs, F&& task) {
  std::vector<T> out(count);
  jobs = std::max(1, std::min(jobs, count));
  if (jobs == 1) {
    for (int i = 0; i < count; ++i) out[i] = task(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  for (int w = 0; w < jobs; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          out[i] = task(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace detail

// ---------------------------------------------------- closest separable

struct ClosestResult {
  SeparableDecomposition decomposition;
  double distance = 0.0;          // |rho - K|_F
  double initial_distance = 0.0;  // natural-product start
  bool converged = false;
  int iterations = 0;
  int restart = -1;  // -1: the natural product itself was best
  std::vector<double> parameters;
};

/// Local minimization of |rho - K|_F over K with `cfg.terms` product terms
/// distributed round-robin over `partitions`; best of cfg.restarts.
inline ClosestResult closest_separable_state(const HermitianMatrix& rho, const Dims& dims,
                                             const std::vector<PartitionSpec>& partitions, const OptimizerConfig& cfg) {
  cfg.validate();
  if (partitions.empty()) throw Error("closest_separable_state: no partitions");
  detail::check_state(rho, dims);
  const detail::Ansatz ansatz(dims, detail::round_robin(partitions, cfg.terms));
  const CMatrix target = rho.matrix();
  const double omega0 = 1.0 / std::sqrt(double(cfg.terms));

  // Reference point: the natural product of the first partition.
  std::vector<double> nat(ansatz.size(), 0.0);
  ansatz.seed_natural(nat, 0, rho, 1.0);
  std::vector<double> scratch(ansatz.size());
  const double nat_dist = std::sqrt(detail::distance_objective(ansatz, target, nat, scratch));

  struct Run {
    Eigen::VectorXd x;
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
  };
  auto task = [&](int r) {
    std::mt19937_64 rng(detail::restart_seed(cfg.seed, r));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x0(ansatz.size());
    for (int j = 0; j < ansatz.terms(); ++j) ansatz.seed_natural(x0, j, rho, omega0);
    const double noise = 0.25 * std::pow(double(dims_product(dims)), -0.5);
    for (auto& v : x0) v += noise * normal(rng);
    LbfgsOptions opt;
    opt.max_iters = cfg.max_iters;
    opt.step_tolerance = cfg.step_tolerance;
    opt.target = cfg.distance_tolerance * cfg.distance_tolerance;
    const Objective obj = [&](std::span<const double> x, std::span<double> g) {
      return detail::distance_objective(ansatz, target, x, g);
    };
    LbfgsResult res = minimize_lbfgs(obj, Eigen::Map<Eigen::VectorXd>(x0.data(), x0.size()), opt);
    return Run{res.x, res.value, res.converged, res.iterations};
  };
  const std::vector<Run> runs = detail::run_indexed<Run>(cfg.restarts, cfg.jobs, task);

  int best = 0;
  for (int r = 1; r < cfg.restarts; ++r)
    if (runs[r].value < runs[best].value) best = r;
  ClosestResult out;
  out.initial_distance = nat_dist;
  if (std::sqrt(runs[best].value) <= nat_dist) {
    out.parameters.assign(runs[best].x.data(), runs[best].x.data() + runs[best].x.size());
    out.distance = std::sqrt(runs[best].value);
    out.converged = runs[best].converged;
    out.iterations = runs[best].iterations;
    out.restart = best;
  } else {
    out.parameters = nat;
    out.distance = nat_dist;
    out.converged = false;
  }
  out.decomposition = ansatz.decomposition(out.parameters);
  return out;
}

inline ClosestResult closest_separable_state(const HermitianMatrix& rho, const Dims& dims,
                                             const PartitionSpec& partition, const OptimizerConfig& cfg) {
  return closest_separable_state(rho, dims, std::vector<PartitionSpec>{partition}, cfg);
}

/// Descends the pivot's trace-form ratio directly, starting from `start`
/// with the pivot reseeded at its natural block product and the remaining
/// terms halved. The returned decomposition is re-checked independently by
/// the caller; the objective only steers the search.
inline SeparableDecomposition refine_pivot(const HermitianMatrix& rho, const Dims& dims,
                                           const std::vector<PartitionSpec>& term_partitions,
                                           std::span<const double> start, int pivot, const OptimizerConfig& cfg) {
  const detail::Ansatz ansatz(dims, term_partitions);
  std::vector<double> x(start.begin(), start.end());
  for (int j = 0; j < ansatz.terms(); ++j)
    if (j != pivot) x[ansatz.layout(j).offset] *= std::sqrt(0.5);
  ansatz.seed_natural(x, pivot, rho, 1.0);
  const CMatrix target = rho.matrix();
  LbfgsOptions opt;
  opt.max_iters = cfg.max_iters;
  opt.step_tolerance = cfg.step_tolerance;
  const Objective obj = [&](std::span<const double> p, std::span<double> g) {
    return detail::pivot_ratio_objective(ansatz, target, pivot, p, g);
  };
  const LbfgsResult res = minimize_lbfgs(obj, Eigen::Map<Eigen::VectorXd>(x.data(), x.size()), opt);
  return ansatz.decomposition(std::span<const double>(res.x.data(), res.x.size()));
}

// ------------------------------------------------------------ pipeline

struct StageRecord {
  std::string stage;
  CertificateOutcome outcome;
  std::optional<double> distance;
  std::optional<bool> converged;
};

struct CertificationReport {
  std::uint64_t digest = 0;
  Dims dims;
  int k = 0;
  std::vector<StageRecord> stages;
  Verdict verdict = Verdict::Inconclusive;
  std::optional<double> distance;  // geometric distance D attained
  std::vector<std::pair<std::string, double>> negativities;
  bool guard_tripped = false;
  double elapsed_seconds = 0.0;

  bool certified() const { return verdict == Verdict::CertifiedSeparable; }
};

inline nlohmann::json to_json(const CertificationReport& r, bool include_timing = false) {
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(r.digest));
  nlohmann::json j;
  j["digest"] = hex;
  j["dims"] = r.dims;
  j["k"] = r.k;
  j["verdict"] = to_string(r.verdict);
  j["distance"] = r.distance ? nlohmann::json(*r.distance) : nlohmann::json(nullptr);
  nlohmann::json neg = nlohmann::json::object();
  for (const auto& [label, v] : r.negativities) neg[label] = v;
  j["negativity"] = neg;
  j["soundness_guard_tripped"] = r.guard_tripped;
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& s : r.stages) {
    nlohmann::json e{{"stage", s.stage}, {"outcome", to_json(s.outcome)}};
    if (s.distance) e["distance"] = *s.distance;
    if (s.converged) e["converged"] = *s.converged;
    stages.push_back(e);
  }
  j["stages"] = stages;
  if (include_timing) j["elapsed_seconds"] = r.elapsed_seconds;
  return j;
}

inline constexpr double kNegativityGuardTol = 1e-10;

/// Natural-product trace criterion (k = m only), then distance minimization
/// with the neighborhood / k-separability criterion on the optimizer's K,
/// then pivot-margin refinement. Stops at the first certified stage. For
/// k = m a certificate is withdrawn if any bipartition is NPT.
inline CertificationReport certify(const HermitianMatrix& rho_in, const Dims& dims, int k, const OptimizerConfig& cfg,
                                   const CriterionOptions& copts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  cfg.validate();
  const HermitianMatrix rho = rho_in.with_dims(dims);
  detail::check_state(rho, dims);
  const int m = static_cast<int>(dims.size());
  if (m < 2) throw DimensionError("certify: need at least two subsystems");
  if (k < 2 || k > m) throw Error("certify: k must satisfy 2 <= k <= m");

  CertificationReport rep;
  rep.digest = matrix_digest(rho);
  rep.dims = dims;
  rep.k = k;
  double worst_negativity = 0.0;
  for (const auto& bp : all_partitions(m, 2)) {
    const double n = negativity(rho, dims, bp);
    rep.negativities.emplace_back(bp.label(), n);
    worst_negativity = std::max(worst_negativity, n);
  }

  auto finish = [&](CertificationReport& r) -> CertificationReport& {
    if (r.certified() && k == m && worst_negativity > kNegativityGuardTol) {
      r.verdict = Verdict::Inconclusive;
      r.guard_tripped = true;
    }
    r.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };

  if (k == m) {
    StageRecord s{"natural-product", trace_criterion(rho, natural_product_state(rho, dims), copts), {}, {}};
    rep.stages.push_back(s);
    if (s.outcome.certified()) {
      rep.verdict = Verdict::CertifiedSeparable;
      return finish(rep);
    }
  }

  const std::vector<PartitionSpec> partitions = k == m ? std::vector{PartitionSpec::singletons(m)} : all_partitions(m, k);
  const ClosestResult closest = closest_separable_state(rho, dims, partitions, cfg);
  rep.distance = closest.distance;
  {
    StageRecord s{"optimizer", k_separability_criterion(rho, closest.decomposition, k, std::nullopt, copts),
                  closest.distance, closest.converged};
    rep.stages.push_back(s);
    if (s.outcome.certified()) {
      rep.verdict = Verdict::CertifiedSeparable;
      return finish(rep);
    }
  }

  const std::vector<PartitionSpec> term_parts = detail::round_robin(partitions, cfg.terms);
  const int pivots = std::min<int>(cfg.terms, std::max<int>(cfg.restarts, partitions.size()));
  const auto refined = detail::run_indexed<CertificateOutcome>(pivots, cfg.jobs, [&](int p) {
    const SeparableDecomposition dec = refine_pivot(rho, dims, term_parts, closest.parameters, p, cfg);
    return k_separability_criterion(rho, dec, k, std::nullopt, copts);
  });
  for (int p = 0; p < pivots; ++p) {
    rep.stages.push_back({"refine-pivot-" + std::to_string(p), refined[p], {}, {}});
    if (refined[p].certified()) {
      rep.verdict = Verdict::CertifiedSeparable;
      break;
    }
  }
  return finish(rep);
}

// -------------------------------------------------------------- scans

struct ScanProbe {
  double param = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  double margin = 0.0;
  std::string criterion;
};

struct ScanResult {
  double threshold = 0.0;  // certified-side end of the final bracket
  bool certified_above = true;
  bool monotone = true;  // margins ordered consistently along the parameter
  std::vector<ScanProbe> probes;
};

class NoBracketError : public Error {
 public:
  NoBracketError(const std::string& what, std::vector<ScanProbe> probes) : Error(what), probes_(std::move(probes)) {}
  const std::vector<ScanProbe>& probes() const { return probes_; }

 private:
  std::vector<ScanProbe> probes_;
};

using StateFamily = std::function<HermitianMatrix(double)>;
using CriterionSelector = std::function<CertificateOutcome(const HermitianMatrix&)>;

/// Bisection on the verdict over [lo, hi]; the verdict is assumed monotone
/// in the parameter. Margin monotonicity is checked after the fact.
inline ScanResult threshold_scan(const StateFamily& family, double lo, double hi, const CriterionSelector& criterion,
                                 double bisect_tol) {
  if (!(hi > lo)) throw Error("threshold_scan: empty interval");
  if (!(bisect_tol > 0)) throw Error("threshold_scan: tolerance must be positive");
  ScanResult res;
  auto probe = [&](double p) {
    const CertificateOutcome o = criterion(family(p));
    res.probes.push_back({p, o.verdict, o.margin, o.criterion});
    return o.certified();
  };
  const bool at_lo = probe(lo);
  const bool at_hi = probe(hi);
  if (at_lo == at_hi)
    throw NoBracketError(std::string("threshold_scan: endpoints do not bracket (both ") +
                             (at_lo ? "certified" : "inconclusive") + ")",
                         res.probes);
  res.certified_above = at_hi;
  double a = lo, b = hi;  // verdict(a) = at_lo, verdict(b) = at_hi
  while (b - a > bisect_tol) {
    const double mid = 0.5 * (a + b);
    if (probe(mid) == at_hi)
      b = mid;
    else
      a = mid;
  }
  res.threshold = at_hi ? b : a;

  std::vector<ScanProbe> sorted = res.probes;
  std::sort(sorted.begin(), sorted.end(), [](const auto& x, const auto& y) { return x.param < y.param; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    const double d = sorted[i].margin - sorted[i - 1].margin;
    if (!std::isfinite(d)) continue;
    // Margins must fall toward the certified end.
    if ((res.certified_above && d > 1e-12) || (!res.certified_above && d < -1e-12)) res.monotone = false;
  }
  return res;
}

inline std::string scan_csv(const std::vector<ScanProbe>& probes) {
  std::string out = "param,verdict,margin,criterion\n";
  char buf[128];
  for (const auto& p : probes) {
    std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g,%s\n", p.param, to_string(p.verdict), p.margin, p.criterion.c_str());
    out += buf;
  }
  return out;
}

}  // namespace sepell
