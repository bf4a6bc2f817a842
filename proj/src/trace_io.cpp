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

#include "psgd/trace_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "psgd/errors.hpp"

namespace psgd {

namespace {

std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_real(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

}  // namespace

void write_trace_csv(std::ostream& out, const std::string& comment, std::span<const TraceRow> rows) {
  out << "# " << comment << '\n' << kTraceHeader << '\n';
  for (const TraceRow& r : rows) {
    out << r.iter << ',' << format_real(r.train_loss) << ',' << format_real(r.grad_norm) << ','
        << format_real(r.precond_grad_norm) << ',' << (r.clipped ? 1 : 0) << ',' << r.wall_ns << '\n';
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    if (!out) throw std::runtime_error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void write_trace_file(const std::string& path, const std::string& comment,
                      std::span<const TraceRow> rows) {
  std::ostringstream os;
  write_trace_csv(os, comment, rows);
  write_text_file(path, os.str());
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::vector<TraceRow> rows;
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      detail::require(line == kTraceHeader, "trace: unexpected header '" + line + "'");
      header = true;
      continue;
    }
    std::istringstream ls(line);
    std::string f[6];
    for (std::string& field : f) std::getline(ls, field, ',');
    TraceRow r;
    try {
      r.iter = std::stoull(f[0]);
      r.train_loss = parse_real(f[1]);
      r.grad_norm = parse_real(f[2]);
      r.precond_grad_norm = parse_real(f[3]);
      r.clipped = f[4] == "1";
      r.wall_ns = std::stoll(f[5]);
    } catch (const std::logic_error&) {
      throw ContractViolation("trace: malformed row '" + line + "'");
    }
    rows.push_back(r);
  }
  detail::require(header, "trace: missing header");
  return rows;
}

RunSummary summarize(std::span<const TraceRow> rows, bool diverged, double smoothing) {
  detail::require(smoothing >= 0.0 && smoothing < 1.0, "summarize: smoothing must be in [0, 1)");
  RunSummary s;
  s.diverged = diverged;
  s.best_loss = std::numeric_limits<double>::infinity();
  s.final_loss = std::numeric_limits<double>::quiet_NaN();
  s.smoothed_final_loss = std::numeric_limits<double>::quiet_NaN();
  bool first = true;
  for (const TraceRow& r : rows) {
    if (!std::isfinite(r.train_loss)) continue;
    s.iters = r.iter;
    s.final_loss = r.train_loss;
    s.best_loss = std::min(s.best_loss, r.train_loss);
    s.smoothed_final_loss =
        first ? r.train_loss : smoothing * s.smoothed_final_loss + (1.0 - smoothing) * r.train_loss;
    first = false;
  }
  return s;
}

}  // namespace psgd
