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

#include "psgd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "psgd/errors.hpp"
#include "psgd/random.hpp"

namespace psgd {

using detail::require;

Vector BoundEvaluator::hvp(std::span<const double>, std::span<const double>) const {
  throw CapabilityError("this problem has no exact Hessian-vector product");
}

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericEvaluationError(std::string(what) + " is not finite");
}

void require_finite(std::span<const double> v, const char* what) {
  if (!all_finite(v)) throw NumericEvaluationError(std::string(what) + " is not finite");
}

void require_length(std::span<const double> v, std::size_t n, const char* what) {
  require(v.size() == n, std::string(what) + ": expected length " + std::to_string(n) + ", got " +
                             std::to_string(v.size()));
}

double sigmoid(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// ---------------------------------------------------------------- quadratic

class QuadraticBatch final : public BoundEvaluator {
 public:
  QuadraticBatch(Matrix h, Vector b) : h_(std::move(h)), b_(std::move(b)) {}

  double loss(std::span<const double> theta) const override {
    require_length(theta, b_.size(), "quadratic loss");
    const Vector ht = matvec(h_, theta);
    const double f = dot(b_, theta) + 0.5 * dot(theta, ht);
    require_finite(f, "quadratic loss");
    return f;
  }

  Vector grad(std::span<const double> theta) const override {
    require_length(theta, b_.size(), "quadratic grad");
    Vector g = matvec(h_, theta);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += b_[i];
    require_finite(g, "quadratic gradient");
    return g;
  }

  bool has_hvp() const override { return true; }

  Vector hvp(std::span<const double> theta, std::span<const double> v) const override {
    require_length(theta, b_.size(), "quadratic hvp");
    require_length(v, b_.size(), "quadratic hvp");
    return matvec(h_, v);
  }

 private:
  Matrix h_;
  Vector b_;
};

class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(Matrix h, Vector b, double noise, ParamLayout layout)
      : h_(std::move(h)), b_(std::move(b)), noise_(noise), layout_(std::move(layout)) {}

  std::string name() const override { return "quad"; }
  const ParamLayout& layout() const override { return layout_; }

  std::unique_ptr<BoundEvaluator> bind_batch(std::uint64_t batch_seed) const override {
    if (noise_ == 0.0) return std::make_unique<QuadraticBatch>(h_, b_);
    Rng rng = make_rng(batch_seed, 1);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::size_t n = b_.size();
    Matrix h = h_;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const double s = noise_ * normal(rng);
        h(i, j) += s;
        if (j != i) h(j, i) += s;
      }
    }
    Vector b = b_;
    for (double& x : b) x += noise_ * normal(rng);
    return std::make_unique<QuadraticBatch>(std::move(h), std::move(b));
  }

  Vector initial_theta(std::uint64_t seed) const override {
    Rng rng = make_rng(seed, 2);
    return gaussian_vector(b_.size(), 1.0, rng);
  }

  bool has_exact_hvp() const override { return true; }
  std::optional<QuadraticTruth> ground_truth() const override { return QuadraticTruth{h_, b_}; }

 private:
  Matrix h_;
  Vector b_;
  double noise_;
  ParamLayout layout_;
};

// --------------------------------------------------------------- rosenbrock

class RosenbrockBatch final : public BoundEvaluator {
 public:
  double loss(std::span<const double> t) const override {
    require_length(t, 2, "rosenbrock loss");
    const double a = t[1] - t[0] * t[0];
    const double b = 1.0 - t[0];
    const double f = 100.0 * a * a + b * b;
    require_finite(f, "rosenbrock loss");
    return f;
  }

  Vector grad(std::span<const double> t) const override {
    require_length(t, 2, "rosenbrock grad");
    const double a = t[1] - t[0] * t[0];
    Vector g{-400.0 * t[0] * a - 2.0 * (1.0 - t[0]), 200.0 * a};
    require_finite(g, "rosenbrock gradient");
    return g;
  }

  bool has_hvp() const override { return true; }

  Vector hvp(std::span<const double> t, std::span<const double> v) const override {
    require_length(t, 2, "rosenbrock hvp");
    require_length(v, 2, "rosenbrock hvp");
    const double hxx = 1200.0 * t[0] * t[0] - 400.0 * t[1] + 2.0;
    const double hxy = -400.0 * t[0];
    return {hxx * v[0] + hxy * v[1], hxy * v[0] + 200.0 * v[1]};
  }
};

class RosenbrockProblem final : public Problem {
 public:
  RosenbrockProblem() { layout_.add_vector("xy", 2); }

  std::string name() const override { return "rosenbrock"; }
  const ParamLayout& layout() const override { return layout_; }
  std::unique_ptr<BoundEvaluator> bind_batch(std::uint64_t) const override {
    return std::make_unique<RosenbrockBatch>();
  }
  Vector initial_theta(std::uint64_t) const override { return {-1.0, 1.0}; }
  bool has_exact_hvp() const override { return true; }

 private:
  ParamLayout layout_;
};

// ------------------------------------------------------------------ XOR MLP

// Inputs are the XOR corners in {0, 1}^2, labels in {0, 1}.
constexpr double kXorInputs[4][2] = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
constexpr double kXorLabels[4] = {0, 1, 1, 0};

class XorBatch final : public BoundEvaluator {
 public:
  explicit XorBatch(std::size_t hidden) : h_(hidden) {}

  double loss(std::span<const double> theta) const override {
    require_length(theta, size(), "xor loss");
    double total = 0.0;
    Vector hid(h_);
    for (int s = 0; s < 4; ++s) {
      const double z = forward(theta, s, hid);
      total += softplus(z) - kXorLabels[s] * z;
    }
    require_finite(total, "xor loss");
    return total / 4.0;
  }

  Vector grad(std::span<const double> theta) const override {
    require_length(theta, size(), "xor grad");
    Vector g(size(), 0.0);
    Vector hid(h_);
    const double* w2 = theta.data() + 3 * h_;
    double* g1 = g.data();
    double* g2 = g.data() + 3 * h_;
    for (int s = 0; s < 4; ++s) {
      const double z = forward(theta, s, hid);
      const double dz = sigmoid(z) - kXorLabels[s];
      const double x[3] = {kXorInputs[s][0], kXorInputs[s][1], 1.0};
      for (std::size_t i = 0; i < h_; ++i) {
        g2[i] += dz * hid[i];
        const double du = w2[i] * dz * (1.0 - hid[i] * hid[i]);
        for (std::size_t j = 0; j < 3; ++j) g1[j * h_ + i] += du * x[j];
      }
      g2[h_] += dz;
    }
    for (double& v : g) v /= 4.0;
    require_finite(g, "xor gradient");
    return g;
  }

  bool has_hvp() const override { return true; }

  Vector hvp(std::span<const double> theta, std::span<const double> v) const override {
    require_length(theta, size(), "xor hvp");
    require_length(v, size(), "xor hvp");
    Vector out(size(), 0.0);
    Vector hid(h_), rh(h_);
    const double* w2 = theta.data() + 3 * h_;
    const double* v1 = v.data();
    const double* v2 = v.data() + 3 * h_;
    double* r1 = out.data();
    double* r2 = out.data() + 3 * h_;
    for (int s = 0; s < 4; ++s) {
      const double z = forward(theta, s, hid);
      const double sg = sigmoid(z);
      const double dz = sg - kXorLabels[s];
      const double x[3] = {kXorInputs[s][0], kXorInputs[s][1], 1.0};

      double rz = v2[h_];
      for (std::size_t i = 0; i < h_; ++i) {
        double ru = 0.0;
        for (std::size_t j = 0; j < 3; ++j) ru += v1[j * h_ + i] * x[j];
        rh[i] = (1.0 - hid[i] * hid[i]) * ru;
        rz += v2[i] * hid[i] + w2[i] * rh[i];
      }
      const double rdz = sg * (1.0 - sg) * rz;

      for (std::size_t i = 0; i < h_; ++i) {
        r2[i] += rdz * hid[i] + dz * rh[i];
        const double dh = w2[i] * dz;
        const double rdh = v2[i] * dz + w2[i] * rdz;
        const double rdu = rdh * (1.0 - hid[i] * hid[i]) - 2.0 * dh * hid[i] * rh[i];
        for (std::size_t j = 0; j < 3; ++j) r1[j * h_ + i] += rdu * x[j];
      }
      r2[h_] += rdz;
    }
    for (double& o : out) o /= 4.0;
    require_finite(out, "xor hvp");
    return out;
  }

 private:
  std::size_t size() const { return 3 * h_ + h_ + 1; }

  // Fills the hidden activations for sample s and returns the logit.
  double forward(std::span<const double> theta, int s, Vector& hid) const {
    const double x[3] = {kXorInputs[s][0], kXorInputs[s][1], 1.0};
    const double* w2 = theta.data() + 3 * h_;
    double z = w2[h_];
    for (std::size_t i = 0; i < h_; ++i) {
      double u = 0.0;
      for (std::size_t j = 0; j < 3; ++j) u += theta[j * h_ + i] * x[j];
      hid[i] = std::tanh(u);
      z += w2[i] * hid[i];
    }
    return z;
  }

  std::size_t h_;
};

class XorProblem final : public Problem {
 public:
  explicit XorProblem(std::size_t hidden) : hidden_(hidden) {
    layout_.add_matrix("w1", hidden, 3, true).add_matrix("w2", 1, hidden + 1, true);
  }

  std::string name() const override { return "xor"; }
  const ParamLayout& layout() const override { return layout_; }
  std::unique_ptr<BoundEvaluator> bind_batch(std::uint64_t) const override {
    return std::make_unique<XorBatch>(hidden_);
  }

  Vector initial_theta(std::uint64_t seed) const override {
    Rng rng = make_rng(seed, 3);
    Vector theta = gaussian_vector(3 * hidden_, 1.0 / std::sqrt(3.0), rng);
    const Vector w2 = gaussian_vector(hidden_ + 1, 1.0 / std::sqrt(hidden_ + 1.0), rng);
    theta.insert(theta.end(), w2.begin(), w2.end());
    return theta;
  }

  bool has_exact_hvp() const override { return true; }

 private:
  std::size_t hidden_;
  ParamLayout layout_;
};

// ------------------------------------------------------------- addition RNN

struct AdditionSequence {
  Vector values;
  std::size_t first = 0;
  std::size_t second = 0;
  double target = 0.0;
};

class AdditionBatch final : public BoundEvaluator {
 public:
  AdditionBatch(std::size_t hidden, std::vector<AdditionSequence> seqs)
      : h_(hidden), seqs_(std::move(seqs)) {}

  double loss(std::span<const double> theta) const override {
    require_length(theta, size(), "addition loss");
    double total = 0.0;
    std::vector<Vector> states;
    for (const AdditionSequence& seq : seqs_) {
      const double e = run(theta, seq, states) - seq.target;
      total += e * e;
    }
    total /= static_cast<double>(seqs_.size());
    require_finite(total, "addition loss");
    return total;
  }

  Vector grad(std::span<const double> theta) const override {
    require_length(theta, size(), "addition grad");
    const std::size_t in = h_ + 3;
    const double* w = theta.data();
    const double* vout = theta.data() + h_ * in;
    Vector g(size(), 0.0);
    double* gw = g.data();
    double* gv = g.data() + h_ * in;
    std::vector<Vector> states;
    Vector dh(h_), da(h_);
    const double scale = 2.0 / static_cast<double>(seqs_.size());
    for (const AdditionSequence& seq : seqs_) {
      const double dy = scale * (run(theta, seq, states) - seq.target);
      const Vector& last = states.back();
      for (std::size_t i = 0; i < h_; ++i) {
        gv[i] += dy * last[i];
        dh[i] = vout[i] * dy;
      }
      gv[h_] += dy;
      for (std::size_t t = seq.values.size(); t-- > 0;) {
        const Vector& cur = states[t + 1];
        const Vector& prev = states[t];
        for (std::size_t i = 0; i < h_; ++i) da[i] = dh[i] * (1.0 - cur[i] * cur[i]);
        const double x[3] = {seq.values[t], marker(seq, t), 1.0};
        for (std::size_t i = 0; i < h_; ++i) {
          for (std::size_t j = 0; j < h_; ++j) gw[j * h_ + i] += da[i] * prev[j];
          for (std::size_t j = 0; j < 3; ++j) gw[(h_ + j) * h_ + i] += da[i] * x[j];
        }
        for (std::size_t j = 0; j < h_; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < h_; ++i) acc += w[j * h_ + i] * da[i];
          dh[j] = acc;
        }
      }
    }
    require_finite(g, "addition gradient");
    return g;
  }

 private:
  std::size_t size() const { return h_ * (h_ + 3) + h_ + 1; }

  static double marker(const AdditionSequence& seq, std::size_t t) {
    return t == seq.first || t == seq.second ? 1.0 : 0.0;
  }

  // Forward pass; states[0] = 0 and states[t + 1] is the state after step t.
  double run(std::span<const double> theta, const AdditionSequence& seq,
             std::vector<Vector>& states) const {
    const double* w = theta.data();
    const double* vout = theta.data() + h_ * (h_ + 3);
    states.assign(seq.values.size() + 1, Vector(h_, 0.0));
    for (std::size_t t = 0; t < seq.values.size(); ++t) {
      const Vector& prev = states[t];
      Vector& cur = states[t + 1];
      const double x[3] = {seq.values[t], marker(seq, t), 1.0};
      for (std::size_t i = 0; i < h_; ++i) {
        double a = 0.0;
        for (std::size_t j = 0; j < h_; ++j) a += w[j * h_ + i] * prev[j];
        for (std::size_t j = 0; j < 3; ++j) a += w[(h_ + j) * h_ + i] * x[j];
        cur[i] = std::tanh(a);
      }
    }
    double y = vout[h_];
    for (std::size_t i = 0; i < h_; ++i) y += vout[i] * states.back()[i];
    return y;
  }

  std::size_t h_;
  std::vector<AdditionSequence> seqs_;
};

class AdditionProblem final : public Problem {
 public:
  AdditionProblem(std::size_t seq_len, std::size_t hidden, std::size_t batch)
      : seq_len_(seq_len), hidden_(hidden), batch_(batch) {
    layout_.add_matrix("w", hidden, hidden + 3, true).add_matrix("v", 1, hidden + 1, true);
  }

  std::string name() const override { return "addition"; }
  const ParamLayout& layout() const override { return layout_; }

  // One marked value in each half of the sequence.
  std::unique_ptr<BoundEvaluator> bind_batch(std::uint64_t batch_seed) const override {
    Rng rng = make_rng(batch_seed, 4);
    std::uniform_real_distribution<double> value(0.0, 1.0);
    const std::size_t half = seq_len_ / 2;
    std::uniform_int_distribution<std::size_t> first(0, half - 1);
    std::uniform_int_distribution<std::size_t> second(half, seq_len_ - 1);
    std::vector<AdditionSequence> seqs(batch_);
    for (AdditionSequence& s : seqs) {
      s.values.resize(seq_len_);
      for (double& x : s.values) x = value(rng);
      s.first = first(rng);
      s.second = second(rng);
      s.target = 0.5 * (s.values[s.first] + s.values[s.second]);
    }
    return std::make_unique<AdditionBatch>(hidden_, std::move(seqs));
  }

  Vector initial_theta(std::uint64_t seed) const override {
    Rng rng = make_rng(seed, 5);
    Vector theta = gaussian_vector(hidden_ * (hidden_ + 3), 1.0 / std::sqrt(hidden_ + 3.0), rng);
    const Vector v = gaussian_vector(hidden_ + 1, 1.0 / std::sqrt(hidden_ + 1.0), rng);
    theta.insert(theta.end(), v.begin(), v.end());
    return theta;
  }

  bool has_exact_hvp() const override { return false; }

 private:
  std::size_t seq_len_;
  std::size_t hidden_;
  std::size_t batch_;
  ParamLayout layout_;
};

}  // namespace

std::unique_ptr<Problem> make_quadratic(Matrix h, Vector b, double noise_scale,
                                        std::optional<ParamLayout> layout) {
  require(h.square(), "make_quadratic: H must be square");
  require(b.size() == h.rows(), "make_quadratic: b length must match H");
  require(noise_scale >= 0.0 && std::isfinite(noise_scale), "make_quadratic: noise_scale must be >= 0");
  if (!h.all_finite() || !all_finite(b)) throw NumericInputError("make_quadratic: non-finite input");
  const double scale = std::max(h.frobenius_norm(), 1.0);
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = i + 1; j < h.cols(); ++j)
      require(std::abs(h(i, j) - h(j, i)) <= 1e-12 * scale, "make_quadratic: H must be symmetric");
  ParamLayout lay = layout ? std::move(*layout) : ParamLayout().add_vector("theta", b.size());
  require(lay.total_size() == b.size(), "make_quadratic: layout size must match H");
  return std::make_unique<QuadraticProblem>(std::move(h), std::move(b), noise_scale, std::move(lay));
}

std::unique_ptr<Problem> make_rosenbrock() { return std::make_unique<RosenbrockProblem>(); }

std::unique_ptr<Problem> make_xor_mlp(std::size_t hidden) {
  require(hidden >= 2, "make_xor_mlp: hidden must be >= 2");
  return std::make_unique<XorProblem>(hidden);
}

std::unique_ptr<Problem> make_addition_rnn(std::size_t seq_len, std::size_t hidden,
                                           std::size_t batch_size) {
  require(seq_len >= 4, "make_addition_rnn: seq_len must be >= 4");
  require(hidden >= 1, "make_addition_rnn: hidden must be >= 1");
  require(batch_size >= 1, "make_addition_rnn: batch_size must be >= 1");
  return std::make_unique<AdditionProblem>(seq_len, hidden, batch_size);
}

double gradient_check(const BoundEvaluator& eval, std::span<const double> theta, double h) {
  require(h > 0.0, "gradient_check: step must be positive");
  const Vector g = eval.grad(theta);
  Vector x(theta.begin(), theta.end());
  Vector fd(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + h;
    const double fp = eval.loss(x);
    x[i] = orig - h;
    const double fm = eval.loss(x);
    x[i] = orig;
    fd[i] = (fp - fm) / (2.0 * h);
  }
  Vector diff(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) diff[i] = g[i] - fd[i];
  return norm2(diff) / std::max({norm2(g), norm2(fd), 1e-8});
}

}  // namespace psgd
