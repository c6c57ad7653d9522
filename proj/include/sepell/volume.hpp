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
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include <json.hpp>

#include "sepell/qmat.hpp"

namespace sepell {

/// Ellipsoid-to-ball volume ratio R around a product state, kept as log10
/// because R overflows doubles for realistic spectra.
struct VolumeReport {
  double log10_ratio = 0.0;
  double log10_ratio_normalized = 0.0;  // log10 R^(1 - 1/D^2)
  int dim = 0;
  std::vector<double> eigenvalues;  // descending
};

/// log10 R = D * sum_{i<D} log10(lambda_i / lambda_min).
inline VolumeReport log_volume_ratio(std::span<const double> eigenvalues) {
  if (eigenvalues.empty()) throw Error("log_volume_ratio: empty spectrum");
  VolumeReport r;
  r.eigenvalues.assign(eigenvalues.begin(), eigenvalues.end());
  for (double l : r.eigenvalues)
    if (!(l > 0)) throw NotPositiveError("log_volume_ratio: eigenvalues must be positive");
  std::sort(r.eigenvalues.begin(), r.eigenvalues.end(), std::greater<>());
  r.dim = static_cast<int>(r.eigenvalues.size());
  const double log_min = std::log10(r.eigenvalues.back());
  double s = 0.0;
  for (int i = 0; i + 1 < r.dim; ++i) s += std::log10(r.eigenvalues[i]) - log_min;
  r.log10_ratio = r.dim * s;
  r.log10_ratio_normalized = r.log10_ratio * (1.0 - 1.0 / (double(r.dim) * r.dim));
  return r;
}

/// Spectrum of rho_1 (x) ... (x) rho_m from the factor spectra.
inline std::vector<double> product_spectrum(const std::vector<std::vector<double>>& factor_spectra) {
  std::vector<double> out{1.0};
  for (const auto& f : factor_spectra) {
    std::vector<double> next;
    next.reserve(out.size() * f.size());
    for (double a : out)
      for (double b : f) next.push_back(a * b);
    out = std::move(next);
  }
  return out;
}

inline nlohmann::json to_json(const VolumeReport& v) {
  return {{"log10_ratio", v.log10_ratio},
          {"log10_ratio_normalized", v.log10_ratio_normalized},
          {"dim", v.dim},
          {"eigenvalues", v.eigenvalues}};
}

}  // namespace sepell
