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

#include "psgd/serialize.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "psgd/errors.hpp"

namespace psgd {

namespace {

constexpr char kMagic[8] = {'P', 'S', 'G', 'D', 'P', 'R', 'E', 'C'};
constexpr std::uint32_t kVersion = 1;

enum Tag : std::uint32_t { kTagDense = 1, kTagDiag = 2, kTagSplu = 3, kTagKron = 4, kTagScan = 5 };

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void f64s(std::span<const double> v) {
    for (double x : v) f64(x);
  }
  void bytes(const char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out_.push_back(static_cast<std::byte>(p[i]));
  }
  // Triangle packed row by row.
  void triangle(const TriangularMatrix& t) {
    const std::size_t n = t.dim();
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = t.orientation() == Triangle::kUpper ? i : 0;
      const std::size_t hi = t.orientation() == Triangle::kUpper ? n : i + 1;
      for (std::size_t j = lo; j < hi; ++j) f64(t(i, j));
    }
  }
  std::vector<std::byte> take() { return std::move(out_); }

 private:
  void put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
  }
  std::vector<std::byte> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::byte> in) : in_(in) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  Vector f64s(std::size_t n) {
    need(n * 8);
    Vector v(n);
    for (double& x : v) x = f64();
    return v;
  }
  Matrix matrix(std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) m(i, j) = f64();
    return m;
  }
  TriangularMatrix triangle(std::size_t n, Triangle orientation) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = orientation == Triangle::kUpper ? i : 0;
      const std::size_t hi = orientation == Triangle::kUpper ? n : i + 1;
      for (std::size_t j = lo; j < hi; ++j) m(i, j) = f64();
    }
    return TriangularMatrix(std::move(m), orientation);
  }
  std::string string(std::size_t n) {
    need(n);
    std::string s(n, '\0');
    std::memcpy(s.data(), in_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  // Guards against absurd sizes in corrupt headers.
  std::size_t count(std::size_t max) {
    const std::uint64_t v = u64();
    if (v > max) throw ContractViolation("checkpoint: size field out of range");
    return static_cast<std::size_t>(v);
  }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ContractViolation("checkpoint: truncated record");
  }
  std::uint64_t get(int width) {
    need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i)
      v |= static_cast<std::uint64_t>(std::to_integer<unsigned>(in_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::byte> in_;
  std::size_t pos_ = 0;
};

void write_block(Writer& w, const BlockPrecond& block) {
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DensePrecond>) {
          w.u32(kTagDense);
          w.u64(p.dim());
          w.triangle(p.q());
        } else if constexpr (std::is_same_v<T, DiagPrecond>) {
          w.u32(kTagDiag);
          w.u64(p.dim());
          w.f64s(p.q());
        } else if constexpr (std::is_same_v<T, SpluPrecond>) {
          w.u32(kTagSplu);
          w.u64(p.dim());
          w.u64(p.order());
          const auto& f = p.factors();
          w.triangle(f.l1);
          w.f64s(f.l2.data());
          w.f64s(f.l3);
          w.triangle(f.u1);
          w.f64s(f.u2.data());
          w.f64s(f.u3);
        } else if constexpr (std::is_same_v<T, KronPrecond>) {
          w.u32(kTagKron);
          w.u64(p.rows());
          w.u64(p.cols());
          w.triangle(p.q1());
          w.triangle(p.q2());
        } else {
          w.u32(kTagScan);
          w.u64(p.rows());
          w.u64(p.cols());
          w.f64s(p.q1());
          w.f64s(p.d2());
          w.f64s(p.c2());
        }
      },
      block);
}

BlockPrecond read_block(Reader& r) {
  constexpr std::size_t kMaxDim = std::size_t{1} << 32;
  const std::uint32_t tag = r.u32();
  switch (tag) {
    case kTagDense: {
      const std::size_t n = r.count(1 << 16);
      return DensePrecond(r.triangle(n, Triangle::kUpper));
    }
    case kTagDiag: {
      const std::size_t n = r.count(kMaxDim);
      return DiagPrecond(r.f64s(n));
    }
    case kTagSplu: {
      const std::size_t n = r.count(kMaxDim);
      const std::size_t k = r.count(n);
      SpluPrecond::Factors f;
      f.l1 = r.triangle(k, Triangle::kLower);
      f.l2 = r.matrix(n - k, k);
      f.l3 = r.f64s(n - k);
      f.u1 = r.triangle(k, Triangle::kUpper);
      f.u2 = r.matrix(k, n - k);
      f.u3 = r.f64s(n - k);
      return SpluPrecond(std::move(f));
    }
    case kTagKron: {
      const std::size_t m = r.count(1 << 16);
      const std::size_t n = r.count(1 << 16);
      TriangularMatrix q1 = r.triangle(m, Triangle::kUpper);
      TriangularMatrix q2 = r.triangle(n, Triangle::kUpper);
      return KronPrecond(std::move(q1), std::move(q2));
    }
    case kTagScan: {
      const std::size_t m = r.count(kMaxDim);
      const std::size_t n = r.count(kMaxDim);
      if (n == 0) throw ContractViolation("checkpoint: empty SCAN block");
      Vector q1 = r.f64s(m);
      Vector d2 = r.f64s(n);
      Vector c2 = r.f64s(n - 1);
      return ScanPrecond(std::move(q1), std::move(d2), std::move(c2));
    }
    default:
      throw ContractViolation("checkpoint: unknown variant tag " + std::to_string(tag));
  }
}

}  // namespace

std::vector<std::byte> serialize(const DirectSumPrecond& p) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u64(p.dim());
  w.u32(static_cast<std::uint32_t>(p.blocks().size()));
  for (const PrecondBlock& b : p.blocks()) {
    w.u32(static_cast<std::uint32_t>(b.name.size()));
    w.bytes(b.name.data(), b.name.size());
    w.u64(b.offset);
    w.u64(b.size);
    write_block(w, b.precond);
  }
  return w.take();
}

DirectSumPrecond deserialize(std::span<const std::byte> bytes) {
  Reader r(bytes);
  if (r.string(sizeof kMagic) != std::string(kMagic, sizeof kMagic))
    throw ContractViolation("checkpoint: bad magic");
  if (r.u32() != kVersion) throw ContractViolation("checkpoint: unsupported version");
  const std::size_t total = r.count(std::size_t{1} << 40);
  const std::uint32_t nblocks = r.u32();
  std::vector<PrecondBlock> blocks;
  for (std::uint32_t k = 0; k < nblocks; ++k) {
    std::string name = r.string(r.u32());
    const std::size_t offset = r.count(total);
    const std::size_t size = r.count(total);
    blocks.push_back({std::move(name), offset, size, read_block(r)});
  }
  if (!r.done()) throw ContractViolation("checkpoint: trailing bytes");
  return DirectSumPrecond(std::move(blocks), total);
}

void save_checkpoint(const std::string& path, const DirectSumPrecond& p) {
  const std::vector<std::byte> bytes = serialize(p);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

DirectSumPrecond load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  const std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(std::as_bytes(std::span<const char>(raw)));
}

}  // namespace psgd
