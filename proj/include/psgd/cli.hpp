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
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "psgd/optimizer.hpp"
#include "psgd/problems.hpp"

namespace psgd {

struct ProblemOptions {
  std::string name = "quad";
  std::vector<double> hdiag{1.0, 100.0};
  double noise = 0.0;
  std::size_t hidden = 4;
  std::size_t seq_len = 8;
  std::size_t batch = 1;
};

std::unique_ptr<Problem> build_problem(const ProblemOptions& opts);

// Per-problem defaults for values the user did not set.
struct RunDefaults {
  double mu = 0.1;
  double precond_mu = 0.01;
  std::optional<double> clip_omega;
};
RunDefaults defaults_for(const Problem& problem);

// Environment variable that overrides the default output directory.
inline constexpr const char* kOutDirEnv = "PSGD_OUT_DIR";

// Entry point of the psgd executable. Returns the process exit status.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace psgd
