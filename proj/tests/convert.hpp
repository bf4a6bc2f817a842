// Copyright 2026 The PSGD Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "oracles.hpp"
#include <random>

#include "psgd/linalg.hpp"
#include "psgd/random.hpp"

namespace testing_util {

inline oracle::Mat to_mat(const psgd::Matrix& m) {
  oracle::Mat out = oracle::zeros(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

inline psgd::Matrix from_mat(const oracle::Mat& m) {
  psgd::Matrix out(m.size(), m[0].size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[0].size(); ++j) out(i, j) = m[i][j];
  return out;
}

inline psgd::Matrix random_matrix(std::size_t r, std::size_t c, psgd::Rng& rng, double scale = 1.0) {
  return psgd::Matrix::unvec(psgd::gaussian_vector(r * c, scale, rng), r, c);
}

// Well-conditioned random triangular matrix with diagonal in [1, 2).
inline psgd::Matrix random_triangular(std::size_t n, psgd::Triangle o, psgd::Rng& rng, double off = 0.3) {
  std::uniform_real_distribution<double> d(1.0, 2.0);
  std::normal_distribution<double> g(0.0, off);
  psgd::Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) m(i, j) = d(rng);
      else if ((o == psgd::Triangle::kUpper) == (j > i)) m(i, j) = g(rng);
    }
  return m;
}

inline psgd::Matrix random_symmetric(std::size_t n, psgd::Rng& rng) {
  psgd::Matrix a = random_matrix(n, n, rng);
  psgd::Matrix s = a + a.transpose();
  s *= 0.5;
  return s;
}

}  // namespace testing_util
