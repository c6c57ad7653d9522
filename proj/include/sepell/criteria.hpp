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
 * @file criteria.hpp
 * Sufficient separability certificates around product and separable
 * reference operators.
 *
 * Every criterion is a pure predicate that returns a CertificateOutcome.
 * The margin is "left-hand side minus right-hand side" of the defining
 * inequality, so margin <= 0 (together with any support condition) means
 * the input is certified. Inconclusive never implies entanglement.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "sepell/decomposition.hpp"
#include "sepell/qmat.hpp"

namespace sepell {

enum class CmSource { BipartiteExact, QubitBound, QuditBound, Baseline };

inline const char* to_string(CmSource s) {
  switch (s) {
    case CmSource::BipartiteExact: return "bipartite_exact";
    case CmSource::QubitBound: return "qubit_bound";
    case CmSource::QuditBound: return "qudit_bound";
    case CmSource::Baseline: return "baseline";
  }
  return "?";
}

/// Lower bound on the Frobenius radius (times D) of the separable ball
/// around the maximally mixed state.
struct CmBound {
  int m = 0;
  Dims dims;
  double value = 0.0;
  CmSource source = CmSource::Baseline;
};

inline CmBound c_m_bound(const Dims& dims) {
  const int m = static_cast<int>(dims.size());
  if (m < 2) throw DimensionError("c_m_bound: need at least two subsystems");
  for (int d : dims)
    if (d < 2) throw DimensionError("c_m_bound: subsystem dimension < 2");
  if (m == 2) return {m, dims, 1.0, CmSource::BipartiteExact};

  CmBound best{m, dims, std::pow(2.0, 1.0 - m / 2.0), CmSource::Baseline};
  const bool equal = std::all_of(dims.begin(), dims.end(), [&](int d) { return d == dims.front(); });
  if (!equal) return best;
  const double d = dims.front();
  if (dims.front() == 2) {
    const double v = std::sqrt(54.0 / 17.0) * std::pow(2.0 / 3.0, m / 2.0);
    if (v > best.value) best = {m, dims, v, CmSource::QubitBound};
  } else {
    // d^m / ((2d-1)^(m-2) (d^2-1) + 1), evaluated in log space for large m.
    const double log_den = (m - 2) * std::log(2 * d - 1) + std::log(d * d - 1);
    const double log_ratio = m * std::log(d) - (log_den + std::log1p(std::exp(-log_den)));
    const double v = std::exp(0.5 * log_ratio);
    if (v > best.value) best = {m, dims, v, CmSource::QuditBound};
  }
  return best;
}

/// Relative slack applied to margins before declaring a certificate, so that
/// states exactly on a boundary are not decided by rounding.
inline constexpr double kMarginRelTol = 1e-12;

enum class Verdict { CertifiedSeparable, Inconclusive };

inline const char* to_string(Verdict v) {
  return v == Verdict::CertifiedSeparable ? "CertifiedSeparable" : "Inconclusive";
}

struct CertificateOutcome {
  Verdict verdict = Verdict::Inconclusive;
  std::string criterion;
  double margin = 0.0;
  std::map<std::string, double> diagnostics;
  std::string note;  // set when the criterion could not be evaluated

  bool certified() const { return verdict == Verdict::CertifiedSeparable; }
  double diag(const std::string& key) const {
    auto it = diagnostics.find(key);
    return it == diagnostics.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
  }
};

inline nlohmann::json to_json(const CertificateOutcome& o) {
  nlohmann::json j;
  j["verdict"] = to_string(o.verdict);
  j["criterion"] = o.criterion;
  j["margin"] = std::isfinite(o.margin) ? nlohmann::json(o.margin) : nlohmann::json(nullptr);
  nlohmann::json d = nlohmann::json::object();
  for (const auto& [k, v] : o.diagnostics) d[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
  j["diagnostics"] = d;
  if (!o.note.empty()) j["note"] = o.note;
  return j;
}

struct CriterionOptions {
  double rank_tol = kDefaultRankTol;
  /// Absolute tolerance on the support leakage |X - P_f X P_f|_F; a negative
  /// value selects 1e-9 * |rho|_F.
  double support_tol = -1.0;

  double support_tolerance(const HermitianMatrix& rho) const {
    return support_tol >= 0 ? support_tol : 1e-9 * std::max(frobenius_norm(rho), 1e-300);
  }
};

namespace detail {

inline void check_compatible(const HermitianMatrix& rho, const ProductState& prod) {
  if (rho.dim() != prod.dim()) throw DimensionError("criterion: dimension mismatch between rho and product state");
  if (rho.has_dims() && rho.dims() != prod.dims())
    throw DimensionError("criterion: subsystem dims of rho and product state differ");
  if (prod.size() < 2) throw DimensionError("criterion: product state needs at least two factors");
}

// Whitened operator S x S with S = prod^{(-1/2)}, built factor by factor so
// the support of the product is exactly the product of factor supports.
struct Whitened {
  CMatrix b;          // S x S
  CMatrix projector;  // P_f
  int rank = 0;       // D_f
  double leakage = 0.0;
};

inline Whitened whiten(const HermitianMatrix& x, const ProductState& prod, double rank_tol) {
  std::vector<CMatrix> halves, projs;
  int rank = 1;
  for (const auto& f : prod.factors()) {
    GeneralizedPower g = gen_neg_power(f, 0.5, rank_tol);
    halves.push_back(g.power.matrix());
    projs.push_back(g.projector.matrix());
    rank *= g.rank;
  }
  const CMatrix s = kron_all(halves);
  const CMatrix p = kron_all(projs);
  Whitened w;
  w.b = s * x.matrix() * s;
  w.b = (0.5 * (w.b + w.b.adjoint())).eval();
  w.projector = p;
  w.rank = rank;
  w.leakage = (x.matrix() - p * x.matrix() * p).norm();
  return w;
}

// Scaling-optimized trace form: Tr[(X A)^2] / Tr[X A]^2 <= 1 / (D_f - c^2)
// with A = prod^{(-1)}.
inline CertificateOutcome trace_form(const HermitianMatrix& x, const ProductState& prod, double cm, double rank_tol,
                                     double support_tol, std::string name) {
  const Whitened w = whiten(x, prod, rank_tol);
  CertificateOutcome out;
  out.criterion = std::move(name);
  const double t1 = w.b.trace().real();
  const double t2 = w.b.squaredNorm();
  out.diagnostics["c_m"] = cm;
  out.diagnostics["rank"] = w.rank;
  out.diagnostics["support_leakage"] = w.leakage;
  out.diagnostics["support_tol"] = support_tol;
  if (!(t1 > 0) || w.rank == 0) {
    out.margin = std::numeric_limits<double>::infinity();
    out.note = "Tr[rho prod^(-1)] <= 0: optimal scaling undefined";
    out.diagnostics["trace_first"] = t1;
    return out;
  }
  const double ratio = t2 / (t1 * t1);
  const double gap = w.rank - cm * cm;
  out.diagnostics["trace_ratio"] = ratio;
  out.diagnostics["alpha"] = t1 / t2;
  // D_f <= c^2 makes the right-hand side unbounded: any operator with the
  // right support and positive trace weight passes.
  const double bound = gap > 0 ? 1.0 / gap : std::numeric_limits<double>::infinity();
  out.diagnostics["bound"] = bound;
  out.margin = gap > 0 ? ratio - bound : -ratio;
  if (out.margin <= kMarginRelTol * std::min(bound, 1.0) && w.leakage <= support_tol)
    out.verdict = Verdict::CertifiedSeparable;
  return out;
}

inline double product_lambda_min(const ProductState& prod) {
  double l = 1.0;
  for (const auto& f : prod.factors()) l *= std::max(0.0, eigh(f).min());
  return l;
}

}  // namespace detail

/// |prod^{(-1/2)} rho prod^{(-1/2)} - I_f|_F <= c_m, plus rho = P_f rho P_f when
/// the product is rank deficient.
inline CertificateOutcome ellipsoid_criterion(const HermitianMatrix& rho, const ProductState& prod,
                                              const CriterionOptions& opts = {}) {
  detail::check_compatible(rho, prod);
  const double cm = c_m_bound(prod.dims()).value;
  const detail::Whitened w = detail::whiten(rho, prod, opts.rank_tol);
  const double support_tol = opts.support_tolerance(rho);
  CertificateOutcome out;
  out.criterion = "ellipsoid";
  const double delta = (w.b - w.projector).norm();
  out.margin = delta - cm;
  out.diagnostics = {{"delta_norm", delta},         {"c_m", cm},
                     {"rank", double(w.rank)},     {"support_leakage", w.leakage},
                     {"support_tol", support_tol}, {"dim", double(prod.dim())}};
  if (out.margin <= kMarginRelTol * cm && w.leakage <= support_tol) out.verdict = Verdict::CertifiedSeparable;
  return out;
}

/// |rho - prod|_F <= c_m lambda_min(prod): the ball inscribed in the ellipsoid.
inline CertificateOutcome ball_criterion(const HermitianMatrix& rho, const ProductState& prod,
                                         const CriterionOptions& opts = {}) {
  detail::check_compatible(rho, prod);
  const double cm = c_m_bound(prod.dims()).value;
  CertificateOutcome out;
  out.criterion = "ball";
  const double lmin = detail::product_lambda_min(prod);
  const HermitianMatrix center = prod.assemble();
  const double dist = frobenius_norm(rho - center);
  double lmax = 1.0;
  for (const auto& f : prod.factors()) lmax *= eigh(f).max();
  out.diagnostics = {{"distance", dist}, {"c_m", cm}, {"lambda_min", lmin}, {"radius", cm * lmin}};
  out.margin = dist - cm * lmin;
  if (lmin <= opts.rank_tol * lmax) {
    out.note = "rank-deficient product state: ball radius is zero";
    out.diagnostics["rank_deficient"] = 1.0;
    return out;
  }
  if (out.margin <= kMarginRelTol * cm * lmin) out.verdict = Verdict::CertifiedSeparable;
  return out;
}

/// Tr[(rho A)^2] / Tr[rho A]^2 <= 1 / (D_f - c_m^2), A = prod^{(-1)}; the
/// rank-deficient form also requires rho = P_f rho P_f.
inline CertificateOutcome trace_criterion(const HermitianMatrix& rho, const ProductState& prod,
                                          const CriterionOptions& opts = {}) {
  detail::check_compatible(rho, prod);
  return detail::trace_form(rho, prod, c_m_bound(prod.dims()).value, opts.rank_tol, opts.support_tolerance(rho),
                            "trace");
}

/// Certificate around a (k-)separable reference K = sum_j w_j K_j: for some
/// pivot j, Delta + w_j K_j must satisfy the trace form around w_j K_j with
/// c_k taken from the pivot's block dimensions, where Delta = rho - K.
/// Pivots are tried in descending lambda_min(w_j K_j) order; the first
/// success wins, otherwise the smallest-margin attempt is returned.
inline CertificateOutcome k_separability_criterion(const HermitianMatrix& rho, const SeparableDecomposition& dec, int k,
                                                   std::optional<int> pivot = std::nullopt,
                                                   const CriterionOptions& opts = {}) {
  if (dec.size() == 0) throw Error("k_separability_criterion: empty decomposition");
  if (dec.block_count() != k) throw DimensionError("k_separability_criterion: block count does not match k");
  if (k < 2) throw DimensionError("k_separability_criterion: k must be >= 2");
  if (rho.dim() != dec.assembled().dim()) throw DimensionError("k_separability_criterion: dimension mismatch");
  const Dims& dims = dec.dims();
  const int m = static_cast<int>(dims.size());
  const std::string name = k == m ? "neighborhood" : (k == 2 ? "bisep" : "k-sep");

  std::vector<int> order;
  if (pivot) {
    if (*pivot < 0 || *pivot >= dec.size()) throw Error("k_separability_criterion: pivot out of range");
    order.push_back(*pivot);
  } else {
    std::vector<double> lmin(dec.size());
    for (int j = 0; j < dec.size(); ++j) {
      order.push_back(j);
      lmin[j] = dec.terms()[j].weight * detail::product_lambda_min(dec.terms()[j].product);
    }
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return lmin[a] > lmin[b]; });
  }

  const HermitianMatrix delta = rho.with_dims(dims) - dec.assembled();
  const double support_tol = opts.support_tolerance(rho);
  std::optional<CertificateOutcome> best;
  for (int j : order) {
    const auto& t = dec.terms()[j];
    if (!(t.weight > 0)) continue;
    std::vector<HermitianMatrix> f = t.product.factors();
    f[0] = t.weight * f[0];
    const ProductState weighted(std::move(f));
    const HermitianMatrix shifted = to_block_order(delta + dec.term(j), t.partition, dims);
    const double ck = c_m_bound(t.partition.block_dims(dims)).value;
    CertificateOutcome o = detail::trace_form(shifted, weighted, ck, opts.rank_tol, support_tol, name);
    o.diagnostics["pivot"] = j;
    o.diagnostics["delta_norm"] = frobenius_norm(delta);
    o.diagnostics["k"] = k;
    if (o.certified()) return o;
    // Attempts that violate the support condition rank behind all others.
    auto key = [&](const CertificateOutcome& c) {
      return c.diag("support_leakage") <= support_tol ? c.margin : std::numeric_limits<double>::infinity();
    };
    if (!best || key(o) < key(*best) || (key(o) == key(*best) && o.margin < best->margin)) best = std::move(o);
  }
  if (!best) {
    CertificateOutcome o;
    o.criterion = name;
    o.margin = std::numeric_limits<double>::infinity();
    o.note = "no term with positive weight";
    return o;
  }
  return *best;
}

/// Full separability (k = m) form of k_separability_criterion.
inline CertificateOutcome neighborhood_criterion(const HermitianMatrix& rho, const SeparableDecomposition& dec,
                                                 std::optional<int> pivot = std::nullopt,
                                                 const CriterionOptions& opts = {}) {
  const int m = static_cast<int>(dec.dims().size());
  if (dec.size() > 0 && dec.block_count() != m)
    throw DimensionError("neighborhood_criterion: terms must be products over all subsystems");
  return k_separability_criterion(rho, dec, m, pivot, opts);
}

}  // namespace sepell
