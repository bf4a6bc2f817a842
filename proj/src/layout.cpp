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

#include "psgd/layout.hpp"

#include <algorithm>

#include "psgd/errors.hpp"

namespace psgd {

using detail::require;

ParamLayout& ParamLayout::add_vector(std::string name, std::size_t n) {
  return add_matrix(std::move(name), n, 1, false);
}

ParamLayout& ParamLayout::add_matrix(std::string name, std::size_t rows, std::size_t cols,
                                     bool augmented_input) {
  require(rows > 0 && cols > 0, "ParamLayout: empty tensor '" + name + "'");
  require(!find(name), "ParamLayout: duplicate tensor name '" + name + "'");
  offsets_.push_back(total_);
  tensors_.push_back({std::move(name), rows, cols, augmented_input});
  total_ += rows * cols;
  return *this;
}

std::optional<std::size_t> ParamLayout::find(const std::string& name) const {
  auto it = std::find_if(tensors_.begin(), tensors_.end(),
                         [&](const TensorSpec& t) { return t.name == name; });
  if (it == tensors_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - tensors_.begin());
}

std::span<const double> ParamLayout::slice(std::span<const double> theta, std::size_t k) const {
  require(theta.size() == total_, "ParamLayout: parameter vector length mismatch");
  return theta.subspan(offsets_.at(k), tensors_.at(k).size());
}

std::span<double> ParamLayout::slice(std::span<double> theta, std::size_t k) const {
  require(theta.size() == total_, "ParamLayout: parameter vector length mismatch");
  return theta.subspan(offsets_.at(k), tensors_.at(k).size());
}

Matrix ParamLayout::unflatten(std::span<const double> theta, std::size_t k) const {
  return Matrix::unvec(slice(theta, k), tensors_[k].rows, tensors_[k].cols);
}

std::vector<Matrix> ParamLayout::unflatten(std::span<const double> theta) const {
  std::vector<Matrix> out;
  out.reserve(tensors_.size());
  for (std::size_t k = 0; k < tensors_.size(); ++k) out.push_back(unflatten(theta, k));
  return out;
}

Vector ParamLayout::flatten(std::span<const Matrix> tensors) const {
  require(tensors.size() == tensors_.size(), "ParamLayout: tensor count mismatch");
  Vector theta;
  theta.reserve(total_);
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    require(tensors[k].rows() == tensors_[k].rows && tensors[k].cols() == tensors_[k].cols,
            "ParamLayout: shape mismatch for '" + tensors_[k].name + "'");
    const Vector v = tensors[k].vec();
    theta.insert(theta.end(), v.begin(), v.end());
  }
  return theta;
}

}  // namespace psgd
