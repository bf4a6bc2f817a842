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

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "psgd/optimizer.hpp"

namespace psgd {

inline constexpr const char* kTraceHeader = "iter,train_loss,grad_norm,precond_grad_norm,clipped,wall_ns";
inline constexpr double kDefaultSmoothing = 0.99;

// "# <comment>" line, the header, then one row per TraceRow. Reals use 17
// significant digits.
void write_trace_csv(std::ostream& out, const std::string& comment, std::span<const TraceRow> rows);
// Writes to a temporary next to `path` and renames it into place.
void write_trace_file(const std::string& path, const std::string& comment,
                      std::span<const TraceRow> rows);
std::vector<TraceRow> read_trace_csv(std::istream& in);

struct RunSummary {
  std::uint64_t iters = 0;
  double final_loss = 0.0;
  double best_loss = 0.0;
  double smoothed_final_loss = 0.0;  // EMA of the raw losses
  bool diverged = false;
};

RunSummary summarize(std::span<const TraceRow> rows, bool diverged,
                     double smoothing = kDefaultSmoothing);

// Replaces the file contents atomically.
void write_text_file(const std::string& path, const std::string& text);

}  // namespace psgd
