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

#include <gtest/gtest.h>

#include "support.hpp"

namespace sepell {
namespace {

TEST(MatrixIo, RoundTripIsExactAndByteStable) {
  testing::Gen g(21);
  for (int t = 0; t < 100; ++t) {
    const Dims dims = g.dims(16, 3);
    const HermitianMatrix h = g.density(static_cast<int>(dims_product(dims)), 0, dims);
    const std::string text = write_matrix(h);
    const HermitianMatrix back = read_matrix(text);
    EXPECT_EQ(back.dims(), dims);
    EXPECT_EQ(back.matrix(), h.matrix());
    EXPECT_EQ(write_matrix(back), text);
    EXPECT_EQ(matrix_digest(back), matrix_digest(h));
  }
}

TEST(MatrixIo, LayoutIsRowMajorPairs) {
  CMatrix m(2, 2);
  m << 0.5, cplx(0, 0.25), cplx(0, -0.25), 0.5;
  const std::string text = write_matrix(HermitianMatrix(m, {2}));
  EXPECT_EQ(text, "{\"dims\": [2],\n \"matrix\": [\n  [0.5, 0], [0, 0.25],\n  [0, -0.25], [0.5, 0]\n ]}\n");
}

TEST(MatrixIo, MalformedInputs) {
  EXPECT_THROW(read_matrix("{\"dims\": [2], \"matrix\": [[1,0],[0,0],[0,0]"), FormatError);
  EXPECT_THROW(read_matrix("{\"dims\": [2], \"matrix\": [[1,0],[0,0],[0,0]]}"), FormatError);
  EXPECT_THROW(read_matrix("{\"matrix\": []}"), FormatError);
  EXPECT_THROW(read_matrix("{\"dims\": [2], \"matrix\": [[1,0],[1,0],[0,0],[0,0]]}"), FormatError);
  EXPECT_THROW(read_matrix("{\"dims\": [0], \"matrix\": []}"), FormatError);
  EXPECT_THROW(read_matrix("{\"dims\": [1], \"matrix\": [[1]]}"), FormatError);
  EXPECT_THROW(load_matrix("/nonexistent/file.json"), FormatError);
}

TEST(MatrixIo, DigestDistinguishesStates) {
  EXPECT_NE(matrix_digest(testing::bell_state()), matrix_digest(testing::werner_state(0.5)));
}

}  // namespace
}  // namespace sepell
