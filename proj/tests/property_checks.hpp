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

// Randomized property sweeps shared by the unit suite and the acceptance
// binary. Each returns counts so callers can assert or report.
#pragma once

#include <string>

#include "support.hpp"

namespace sepell::testing {

struct SweepResult {
  int instances = 0;
  int violations = 0;
  int exercised = 0;  // instances where the premise held
  double worst = 0.0;  // largest deviation, where applicable
  std::string first_failure;

  bool ok() const { return violations == 0; }
  void fail(const std::string& what) {
    if (violations++ == 0) first_failure = what;
  }
};

/// Product reference with spectrum bounded away from zero.
inline ProductState well_conditioned_product(Gen& g, const Dims& dims) {
  std::vector<HermitianMatrix> f;
  for (int d : dims) {
    const double mix = g.uniform(0.2, 1.0);
    f.push_back(HermitianMatrix((1 - mix) * g.density(d).matrix() + mix * CMatrix::Identity(d, d) / double(d)));
  }
  return ProductState(std::move(f));
}

/// Unit-trace state at a log-uniform distance from the normalized center.
inline HermitianMatrix perturb(Gen& g, const HermitianMatrix& center, const Dims& dims) {
  const double eps = std::pow(10.0, g.uniform(-3.0, 0.0));
  const CMatrix m = (1 - eps) * center.matrix() / center.trace() + eps * g.density(center.dim()).matrix();
  return HermitianMatrix(m, dims);
}

/// Mixture of a random low-rank state with white noise.
inline HermitianMatrix noisy_state(Gen& g, const Dims& dims, int max_rank = 2) {
  const int n = static_cast<int>(dims_product(dims));
  const double w = g.uniform(0.0, 1.0);
  return HermitianMatrix(w * g.density(n, g.integer(1, max_rank)).matrix() + (1 - w) * CMatrix::Identity(n, n) / n,
                         dims);
}

// ball => ellipsoid; exercised counts ball certificates.
inline SweepResult sweep_ball_implies_ellipsoid(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const Dims dims = g.dims(16, 4);
    const ProductState p = well_conditioned_product(g, dims);
    const HermitianMatrix rho = perturb(g, p.assemble(), dims);
    if (!ball_criterion(rho, p).certified()) continue;
    ++r.exercised;
    if (!ellipsoid_criterion(rho, p).certified()) r.fail("instance " + std::to_string(t));
  }
  return r;
}

inline SweepResult sweep_ellipsoid_implies_trace(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const Dims dims = g.dims(16, 4);
    const ProductState p = well_conditioned_product(g, dims);
    const HermitianMatrix rho = perturb(g, p.assemble(), dims);
    if (!ellipsoid_criterion(rho, p).certified()) continue;
    ++r.exercised;
    if (!trace_criterion(rho, p).certified()) r.fail("instance " + std::to_string(t));
  }
  return r;
}

inline SweepResult sweep_trace_scale_invariance(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const Dims dims = g.dims(16, 4);
    const ProductState p = well_conditioned_product(g, dims);
    const HermitianMatrix rho = perturb(g, p.assemble(), dims);
    const double s = std::exp(g.uniform(-6, 6));
    const CertificateOutcome a = trace_criterion(rho, p), b = trace_criterion(s * rho, p);
    const double dev = std::abs(a.diag("trace_ratio") - b.diag("trace_ratio")) / a.diag("trace_ratio");
    r.worst = std::max(r.worst, dev);
    r.exercised += a.certified();
    if (a.verdict != b.verdict || dev > 1e-12) r.fail("instance " + std::to_string(t));
  }
  return r;
}

inline SweepResult sweep_local_unitary_invariance(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const Dims dims = g.dims(16, 4);
    const ProductState p = well_conditioned_product(g, dims);
    const HermitianMatrix rho = perturb(g, p.assemble(), dims);
    std::vector<CMatrix> us;
    std::vector<HermitianMatrix> rotated;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      us.push_back(g.unitary(dims[i]));
      rotated.push_back(HermitianMatrix(us.back() * p.factors()[i].matrix() * us.back().adjoint()));
    }
    const CMatrix u = kron_all(us);
    const HermitianMatrix rho_u(u * rho.matrix() * u.adjoint(), dims);
    const ProductState p_u(rotated);
    const CertificateOutcome e0 = ellipsoid_criterion(rho, p), e1 = ellipsoid_criterion(rho_u, p_u);
    const CertificateOutcome t0 = trace_criterion(rho, p), t1 = trace_criterion(rho_u, p_u);
    const double dev = std::max({std::abs(e0.diag("delta_norm") - e1.diag("delta_norm")), std::abs(e0.margin - e1.margin),
                                 std::abs(t0.diag("trace_ratio") - t1.diag("trace_ratio")), std::abs(t0.margin - t1.margin)});
    r.worst = std::max(r.worst, dev);
    ++r.exercised;
    if (dev > 1e-10) r.fail("instance " + std::to_string(t));
  }
  return r;
}

// exercised counts rank-deficient references.
inline SweepResult sweep_center_certification(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const Dims dims = g.dims(16, 4);
    const ProductState p = g.product(dims, 0.5);
    const HermitianMatrix center = p.assemble();
    r.exercised += eigh(center).rank < center.dim();
    const CertificateOutcome e = ellipsoid_criterion(center, p);
    // Whitening loses about eps * kappa, kappa the condition number on the support.
    double kappa = 1.0;
    for (const auto& f : p.factors()) {
      const EigenSystem es = eigh(f);
      kappa *= es.max() / es.eigenvalues(es.eigenvalues.size() - es.rank);
    }
    const double dev = std::abs(e.margin + c_m_bound(dims).value) / std::max(1.0, 1e-6 * kappa);
    r.worst = std::max(r.worst, dev);
    if (!e.certified() || dev > 1e-9 || !trace_criterion(center, p).certified()) r.fail("instance " + std::to_string(t));
  }
  return r;
}

inline bool certified_by_any(const HermitianMatrix& rho, const Dims& dims, Gen& g) {
  const ProductState nat = natural_product_state(rho, dims);
  const ProductState rnd = well_conditioned_product(g, dims);
  return ball_criterion(rho, nat).certified() || ellipsoid_criterion(rho, nat).certified() ||
         trace_criterion(rho, nat).certified() || ellipsoid_criterion(rho, rnd).certified() ||
         trace_criterion(rho, rnd).certified();
}

// Certified states must be PPT under every bipartition.
inline SweepResult sweep_soundness(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const Dims dims = g.dims(16, 4);
    const HermitianMatrix rho = noisy_state(g, dims);
    if (!certified_by_any(rho, dims, g)) continue;
    ++r.exercised;
    for (const auto& bp : all_partitions(static_cast<int>(dims.size()), 2))
      if (!is_ppt(rho, dims, bp.blocks().front())) r.fail("instance " + std::to_string(t) + " cut " + bp.label());
  }
  return r;
}

// Two qubits: PPT is equivalent to separability.
inline SweepResult sweep_two_qubit_soundness(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const HermitianMatrix rho = noisy_state(g, {2, 2}, 4);
    if (!certified_by_any(rho, {2, 2}, g)) continue;
    ++r.exercised;
    if (!is_ppt(rho, {2, 2}, {1})) r.fail("instance " + std::to_string(t));
  }
  return r;
}

// ------------------------------------------------------------ reductions

inline SweepResult sweep_maximally_mixed_reduction(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const Dims dims = g.dims(16, 4);
    const long long d = dims_product(dims);
    std::vector<HermitianMatrix> f;
    for (int di : dims) f.push_back(HermitianMatrix::identity(di) * (1.0 / di));
    const HermitianMatrix rho = noisy_state(g, dims, 4);
    const double c = c_m_bound(dims).value;
    const double want = rho.matrix().squaredNorm() - 1.0 / (d - c * c);
    const double dev = std::abs(trace_criterion(rho, ProductState(f)).margin - want);
    r.worst = std::max(r.worst, dev);
    ++r.exercised;
    if (dev > 1e-12) r.fail("instance " + std::to_string(t));
  }
  return r;
}

inline SeparableDecomposition random_decomposition(Gen& g, const Dims& dims, int terms, int k) {
  const auto parts = all_partitions(static_cast<int>(dims.size()), k);
  std::vector<DecompositionTerm> out;
  for (int j = 0; j < terms; ++j) {
    const PartitionSpec& p = parts[g.integer(0, static_cast<int>(parts.size()) - 1)];
    out.push_back({g.uniform(0.1, 1.0), g.product(p.block_dims(dims)), p});
  }
  return SeparableDecomposition(dims, std::move(out));
}

inline SweepResult sweep_single_term_neighborhood(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const Dims dims = g.dims(16, 4);
    const SeparableDecomposition dec = random_decomposition(g, dims, 1, static_cast<int>(dims.size()));
    const HermitianMatrix rho = perturb(g, dec.assembled(), dims);
    const CertificateOutcome a = neighborhood_criterion(rho, dec);
    const CertificateOutcome b = trace_criterion(rho, dec.terms()[0].product);
    const double dev = std::abs(a.margin - b.margin) / std::max(1.0, std::abs(b.margin));
    r.worst = std::max(r.worst, dev);
    r.exercised += b.certified();
    if (a.verdict != b.verdict || dev > 1e-12) r.fail("instance " + std::to_string(t));
  }
  return r;
}

inline SweepResult sweep_full_k_equals_neighborhood(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const Dims dims = g.dims(16, 4);
    const int m = static_cast<int>(dims.size());
    const SeparableDecomposition dec = random_decomposition(g, dims, g.integer(1, 4), m);
    const HermitianMatrix rho = perturb(g, dec.assembled(), dims);
    const CertificateOutcome a = k_separability_criterion(rho, dec, m), b = neighborhood_criterion(rho, dec);
    r.exercised += b.certified();
    if (a.verdict != b.verdict || a.margin != b.margin) r.fail("instance " + std::to_string(t));
  }
  return r;
}

// ---------------------------------------------------------- rank deficiency

/// Rank-deficient product with at least one deficient factor.
inline ProductState deficient_product(Gen& g, const Dims& dims) {
  for (;;) {
    ProductState p = g.product(dims, 0.6);
    if (eigh(p.assemble()).rank < p.dim()) return p;
  }
}

// Leaky states must be Inconclusive for ellipsoid and trace.
inline SweepResult sweep_support_leakage(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const Dims dims = g.dims(16, 4);
    const ProductState p = deficient_product(g, dims);
    // Mostly inside the support, with a small leak of random size.
    const GeneralizedPower gp = gen_neg_power(p.assemble(), 1.0);
    const HermitianMatrix inside = project_full_rank(g.density(static_cast<int>(p.dim())), gp.projector);
    const double leak = std::pow(10.0, g.uniform(-6.0, -1.0));
    const HermitianMatrix rho((1 - leak) * inside.matrix() / inside.trace() + leak * g.density(inside.dim()).matrix(), dims);
    const CertificateOutcome e = ellipsoid_criterion(rho, p), tr = trace_criterion(rho, p);
    if (!(e.diag("support_leakage") > 10 * e.diag("support_tol"))) continue;
    ++r.exercised;
    if (e.certified() || tr.certified()) r.fail("instance " + std::to_string(t));
  }
  return r;
}

// With zero leakage, compare against criteria evaluated on the compressed
// operators V^dagger rho V and V_i^dagger F_i V_i, V = (x)_i V_i the support
// isometries, using the c_m of the original dimensions.
inline SweepResult sweep_support_compression(int n, std::uint64_t seed) {
  Gen g(seed);
  SweepResult r;
  for (int t = 0; t < n; ++t, ++r.instances) {
    const Dims dims = g.dims(16, 4);
    const ProductState p = deficient_product(g, dims);
    std::vector<CMatrix> isos, compressed;
    for (const auto& f : p.factors()) {
      const EigenSystem es = eigh(f);
      const int rank = es.rank;
      const CMatrix v = es.eigenvectors.rightCols(rank);
      isos.push_back(v);
      compressed.push_back(v.adjoint() * f.matrix() * v);
    }
    const CMatrix v = kron_all(isos);
    const CMatrix pc = kron_all(compressed);
    const long long df = pc.rows();
    const CMatrix sigma = g.density(static_cast<int>(df)).matrix();
    const double eps = std::pow(10.0, g.uniform(-3.0, 0.0));
    const CMatrix inner = (1 - eps) * pc / pc.trace().real() + eps * sigma;
    const HermitianMatrix rho(v * inner * v.adjoint(), dims);

    Eigen::SelfAdjointEigenSolver<CMatrix> es(pc);
    const CMatrix s = es.operatorInverseSqrt();
    const double delta = (s * inner * s - CMatrix::Identity(df, df)).norm();
    const CMatrix ra = inner * pc.inverse();
    const double t1 = ra.trace().real();
    const double ratio = (ra * ra).trace().real() / (t1 * t1);
    const double c = c_m_bound(dims).value;
    const double trace_margin = df > c * c ? ratio - 1.0 / (df - c * c) : -ratio;

    const CertificateOutcome e = ellipsoid_criterion(rho, p), tr = trace_criterion(rho, p);
    // Agreement is relative once |margin| exceeds 1, far from any verdict boundary.
    const double dev = std::max({std::abs(e.margin - (delta - c)) / std::max(1.0, std::abs(delta - c)),
                                 std::abs(tr.margin - trace_margin) / std::max(1.0, std::abs(trace_margin)),
                                 std::abs(e.diag("rank") - double(df))});
    r.worst = std::max(r.worst, dev);
    r.exercised += e.certified() + tr.certified();
    const bool e_ok = e.certified() == (delta - c <= 0);
    const bool t_ok = std::abs(trace_margin) < 1e-9 || tr.certified() == (trace_margin <= 0);
    if (dev > 1e-9 || !e_ok || !t_ok) r.fail("instance " + std::to_string(t));
  }
  return r;
}

}  // namespace sepell::testing
