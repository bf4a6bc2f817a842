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

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psgd/linalg.hpp"

namespace psgd {

/// One named parameter tensor. Vectors are stored as (n, 1) matrices. Matrix
/// tensors are flattened column-major into the parameter vector.
struct TensorSpec {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 1;
  // Affine block acting on an input augmented with a trailing 1.
  bool augmented_input = false;

  std::size_t size() const { return rows * cols; }
  bool is_vector() const { return cols == 1; }
};

class ParamLayout {
 public:
  ParamLayout() = default;

  ParamLayout& add_vector(std::string name, std::size_t n);
  ParamLayout& add_matrix(std::string name, std::size_t rows, std::size_t cols,
                          bool augmented_input = false);

  const std::vector<TensorSpec>& tensors() const { return tensors_; }
  std::size_t tensor_count() const { return tensors_.size(); }
  std::size_t total_size() const { return total_; }
  std::size_t offset(std::size_t k) const { return offsets_.at(k); }
  std::optional<std::size_t> find(const std::string& name) const;

  std::span<const double> slice(std::span<const double> theta, std::size_t k) const;
  std::span<double> slice(std::span<double> theta, std::size_t k) const;

  Matrix unflatten(std::span<const double> theta, std::size_t k) const;
  std::vector<Matrix> unflatten(std::span<const double> theta) const;
  Vector flatten(std::span<const Matrix> tensors) const;

 private:
  std::vector<TensorSpec> tensors_;
  std::vector<std::size_t> offsets_;
  std::size_t total_ = 0;
};

}  // namespace psgd
