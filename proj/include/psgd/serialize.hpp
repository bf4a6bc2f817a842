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
#include <span>
#include <string>
#include <vector>

#include "psgd/preconditioner.hpp"

namespace psgd {

// Flat little-endian checkpoint record for a preconditioner. Layout is
// documented in the README.
std::vector<std::byte> serialize(const DirectSumPrecond& p);
DirectSumPrecond deserialize(std::span<const std::byte> bytes);

void save_checkpoint(const std::string& path, const DirectSumPrecond& p);
DirectSumPrecond load_checkpoint(const std::string& path);

}  // namespace psgd
