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
 * @file qmat_io.hpp
 * Matrix exchange format:
 *
 *   {"dims": [2, 2, 2], "matrix": [[re, im], [re, im], ...]}
 *
 * `matrix` holds D*D entries in row-major order. The writer is
 * deterministic and prints every real with 17 significant digits, so
 * read -> write reproduces the input bytes of any file it wrote.
 */
#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "sepell/qmat.hpp"

namespace sepell {

class FormatError : public Error {
  using Error::Error;
};

namespace detail {
inline std::string fmt17(double x) {
  if (x == 0.0) x = 0.0;  // drop negative zero
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}
}  // namespace detail

inline std::string write_matrix(const HermitianMatrix& h) {
  std::string out = "{\"dims\": [";
  const Dims d = h.effective_dims();
  for (std::size_t i = 0; i < d.size(); ++i) out += (i ? ", " : "") + std::to_string(d[i]);
  out += "],\n \"matrix\": [\n";
  const int n = h.dim();
  for (int r = 0; r < n; ++r) {
    out += "  ";
    for (int c = 0; c < n; ++c) {
      out += "[" + detail::fmt17(h(r, c).real()) + ", " + detail::fmt17(h(r, c).imag()) + "]";
      if (r + 1 < n || c + 1 < n) out += c + 1 < n ? ", " : ",";
    }
    out += "\n";
  }
  out += " ]}\n";
  return out;
}

inline HermitianMatrix read_matrix(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("matrix file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("dims") || !j.contains("matrix"))
    throw FormatError("matrix file: missing 'dims' or 'matrix'");
  Dims dims;
  try {
    dims = j.at("dims").get<Dims>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError("matrix file: 'dims' must be an integer list");
  }
  if (dims.empty()) throw FormatError("matrix file: empty 'dims'");
  for (int d : dims)
    if (d < 1) throw FormatError("matrix file: nonpositive dimension");
  const long long n = dims_product(dims);
  const auto& m = j.at("matrix");
  if (!m.is_array() || static_cast<long long>(m.size()) != n * n)
    throw FormatError("matrix file: expected " + std::to_string(n * n) + " entries");
  CMatrix x(n, n);
  for (long long k = 0; k < n * n; ++k) {
    const auto& e = m[k];
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      throw FormatError("matrix file: entry " + std::to_string(k) + " is not a [re, im] pair");
    x(k / n, k % n) = cplx(e[0].get<double>(), e[1].get<double>());
  }
  try {
    return HermitianMatrix(std::move(x), dims);
  } catch (const Error& e) {
    throw FormatError(std::string("matrix file: ") + e.what());
  }
}

inline HermitianMatrix load_matrix(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return read_matrix(ss.str());
}

inline void save_matrix(const std::string& path, const HermitianMatrix& h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << write_matrix(h);
}

/// FNV-1a over the serialized matrix; stable across platforms.
inline std::uint64_t matrix_digest(const HermitianMatrix& h) {
  std::uint64_t x = 1469598103934665603ULL;
  for (unsigned char c : write_matrix(h)) {
    x ^= c;
    x *= 1099511628211ULL;
  }
  return x;
}

}  // namespace sepell
