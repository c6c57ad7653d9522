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
 * @file decomposition.hpp
 * Partitions of subsystems and weighted sums of block-product operators.
 */
#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "sepell/qmat.hpp"

namespace sepell {

/// Disjoint nonempty blocks covering {0, ..., m-1}. Blocks are kept sorted
/// internally and ordered by their smallest element.
class PartitionSpec {
 public:
  PartitionSpec() = default;
  PartitionSpec(std::vector<std::vector<int>> blocks, int m) : blocks_(std::move(blocks)), m_(m) {
    if (m < 1) throw DimensionError("PartitionSpec: m < 1");
    std::vector<int> seen(m, 0);
    for (auto& b : blocks_) {
      if (b.empty()) throw DimensionError("PartitionSpec: empty block");
      std::sort(b.begin(), b.end());
      for (int i : b) {
        if (i < 0 || i >= m) throw DimensionError("PartitionSpec: index out of range");
        if (seen[i]++) throw DimensionError("PartitionSpec: blocks overlap");
      }
    }
    if (std::count(seen.begin(), seen.end(), 0)) throw DimensionError("PartitionSpec: blocks do not cover all subsystems");
    std::sort(blocks_.begin(), blocks_.end(), [](const auto& x, const auto& y) { return x.front() < y.front(); });
  }

  static PartitionSpec singletons(int m) {
    std::vector<std::vector<int>> b;
    for (int i = 0; i < m; ++i) b.push_back({i});
    return PartitionSpec(std::move(b), m);
  }

  /// {i} | rest
  static PartitionSpec cut(int i, int m) {
    std::vector<int> rest;
    for (int j = 0; j < m; ++j)
      if (j != i) rest.push_back(j);
    return PartitionSpec({{i}, rest}, m);
  }

  const std::vector<std::vector<int>>& blocks() const { return blocks_; }
  int size() const { return static_cast<int>(blocks_.size()); }
  int subsystems() const { return m_; }

  /// Subsystem order obtained by concatenating the blocks.
  std::vector<int> order() const {
    std::vector<int> o;
    for (const auto& b : blocks_) o.insert(o.end(), b.begin(), b.end());
    return o;
  }

  Dims block_dims(const Dims& dims) const {
    Dims out;
    for (const auto& b : blocks_) {
      long long p = 1;
      for (int i : b) p *= dims.at(i);
      out.push_back(static_cast<int>(p));
    }
    return out;
  }

  std::string label() const {
    std::string s;
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      if (k) s += "|";
      for (int i : blocks_[k]) s += std::to_string(i + 1);
    }
    return s;
  }

  friend bool operator==(const PartitionSpec& a, const PartitionSpec& b) {
    return a.m_ == b.m_ && a.blocks_ == b.blocks_;
  }

 private:
  std::vector<std::vector<int>> blocks_;
  int m_ = 0;
};

/// Every partition of m subsystems into exactly k blocks, in lexicographic
/// order of restricted-growth strings.
inline std::vector<PartitionSpec> all_partitions(int m, int k) {
  if (k < 1 || k > m) throw DimensionError("all_partitions: need 1 <= k <= m");
  std::vector<PartitionSpec> out;
  std::vector<int> a(m, 0);
  auto rec = [&](auto&& self, int i, int used) -> void {
    if (i == m) {
      if (used != k) return;
      std::vector<std::vector<int>> blocks(k);
      for (int j = 0; j < m; ++j) blocks[a[j]].push_back(j);
      out.emplace_back(std::move(blocks), m);
      return;
    }
    if (m - i < k - used) return;
    for (int b = 0; b <= std::min(used, k - 1); ++b) {
      a[i] = b;
      self(self, i + 1, std::max(used, b + 1));
    }
  };
  rec(rec, 0, 0);
  return out;
}

/// Map a block-ordered operator (factors in partition.order()) back to the
/// standard subsystem order.
inline HermitianMatrix from_block_order(const HermitianMatrix& x, const PartitionSpec& p, const Dims& dims) {
  const std::vector<int> order = p.order();
  Dims od;
  for (int i : order) od.push_back(dims[i]);
  std::vector<int> perm(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) perm[order[k]] = static_cast<int>(k);
  return permute_subsystems(x.with_dims(od), od, perm).with_dims(dims);
}

/// Standard subsystem order -> block order of p (subsystems grouped by block).
inline HermitianMatrix to_block_order(const HermitianMatrix& x, const PartitionSpec& p, const Dims& dims) {
  return permute_subsystems(x.with_dims(dims), dims, p.order()).with_dims(p.block_dims(dims));
}

struct DecompositionTerm {
  double weight = 1.0;
  ProductState product;  // one factor per block of `partition`
  PartitionSpec partition;
};

/// K = sum_j w_j K_j with each K_j a PSD product over its own partition.
class SeparableDecomposition {
 public:
  SeparableDecomposition() = default;
  SeparableDecomposition(Dims dims, std::vector<DecompositionTerm> terms) : dims_(std::move(dims)), terms_(std::move(terms)) {
    if (terms_.empty()) throw DimensionError("SeparableDecomposition: no terms");
    const int k = terms_.front().partition.size();
    for (const auto& t : terms_) {
      if (!(t.weight >= 0)) throw Error("SeparableDecomposition: negative weight");
      if (t.partition.subsystems() != static_cast<int>(dims_.size()))
        throw DimensionError("SeparableDecomposition: partition does not match dims");
      if (t.partition.size() != k) throw DimensionError("SeparableDecomposition: mixed block counts");
      if (t.product.dims() != t.partition.block_dims(dims_))
        throw DimensionError("SeparableDecomposition: factor dims do not match partition blocks");
    }
    const long long n = dims_product(dims_);
    CMatrix sum = CMatrix::Zero(n, n);
    for (std::size_t j = 0; j < terms_.size(); ++j) {
      cached_.push_back(term_operator(j));
      sum += cached_.back().matrix();
    }
    assembled_ = HermitianMatrix(std::move(sum), dims_);
  }

  const Dims& dims() const { return dims_; }
  const std::vector<DecompositionTerm>& terms() const { return terms_; }
  int size() const { return static_cast<int>(terms_.size()); }
  int block_count() const { return terms_.front().partition.size(); }
  const HermitianMatrix& assembled() const { return assembled_; }
  /// w_j K_j in the standard subsystem order.
  const HermitianMatrix& term(int j) const { return cached_.at(j); }

 private:
  HermitianMatrix term_operator(std::size_t j) const {
    const auto& t = terms_[j];
    return t.weight * from_block_order(t.product.assemble(), t.partition, dims_);
  }

  Dims dims_;
  std::vector<DecompositionTerm> terms_;
  std::vector<HermitianMatrix> cached_;
  HermitianMatrix assembled_;
};

}  // namespace sepell
