// include/tandem/nn.hpp

// Copyright 2026  The tandem-opt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tandem/types.hpp"

namespace tandem {

enum class Activation { kTanh, kRelu };

inline const char* to_string(Activation a) { return a == Activation::kTanh ? "tanh" : "relu"; }

inline Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw Error("unknown activation '" + s + "'");
}

/*
  Scorer is a small fully connected network mapping an input vector to one
  raw score.  Hidden layers use the configured activation, the output layer
  is linear.

  Parameters live in one flat buffer.  Layer l occupies
      W_l : n_out x n_in, row-major
      b_l : n_out
  in that order, layer after layer.  GradientTape mirrors this layout.
*/
class Scorer {
 public:
  Scorer() = default;

  /// All parameters zero.
  Scorer(std::vector<std::size_t> layer_sizes, Activation act, std::uint64_t seed = 0)
      : sizes_(std::move(layer_sizes)), act_(act), seed_(seed) {
    if (sizes_.size() < 2) throw Error("scorer needs at least an input and an output layer");
    if (sizes_.back() != 1) throw Error("scorer output dimension must be 1");
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      if (sizes_[l] == 0) throw Error("layer sizes must be positive");
      offsets_.push_back(n);
      n += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
    }
    params_.assign(n, 0.0);
  }

  /// Uniform init in [-1/sqrt(n_in), 1/sqrt(n_in)] per layer.
  static Scorer random(std::vector<std::size_t> layer_sizes, Activation act, std::uint64_t seed) {
    Scorer s(std::move(layer_sizes), act, seed);
    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l < s.num_layers(); ++l) {
      double bound = 1.0 / std::sqrt(static_cast<double>(s.sizes_[l]));
      std::uniform_real_distribution<double> u(-bound, bound);
      auto w = s.layer_params(l);
      for (auto& v : w) v = u(rng);
    }
    return s;
  }

  std::size_t input_size() const { return sizes_.front(); }
  std::size_t num_layers() const { return sizes_.size() - 1; }
  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  Activation activation() const { return act_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t num_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  /// Bumped by every parameter update; forward caches record it.
  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

  std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }
  std::size_t bias_offset(std::size_t l) const { return offsets_[l] + sizes_[l] * sizes_[l + 1]; }

  bool operator==(const Scorer& o) const {
    return sizes_ == o.sizes_ && act_ == o.act_ && params_ == o.params_;
  }

 private:
  std::span<double> layer_params(std::size_t l) {
    std::size_t n = sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
    return std::span<double>(params_).subspan(offsets_[l], n);
  }

  std::vector<std::size_t> sizes_;
  Activation act_ = Activation::kTanh;
  std::uint64_t seed_ = 0;
  std::vector<double> params_;
  std::vector<std::size_t> offsets_;
  std::uint64_t version_ = 0;
};

/// Gradient buffer aligned with a Scorer's flat parameters.
class GradientTape {
 public:
  GradientTape() = default;
  explicit GradientTape(const Scorer& s) : grad_(s.num_params(), 0.0) {}

  std::span<double> grad() { return grad_; }
  std::span<const double> grad() const { return grad_; }
  std::size_t size() const { return grad_.size(); }
  void zero() { std::fill(grad_.begin(), grad_.end(), 0.0); }

 private:
  std::vector<double> grad_;
};

struct ForwardCache {
  std::uint64_t version = 0;
  std::size_t num_params = 0;
  // acts[0] is the input; acts[l] the output of hidden layer l (post-activation).
  std::vector<std::vector<double>> acts;
  double score = 0;
};

inline double activate(Activation a, double z) { return a == Activation::kTanh ? std::tanh(z) : (z > 0 ? z : 0.0); }

// Derivative expressed through the activation output y.
inline double activate_grad(Activation a, double y) {
  return a == Activation::kTanh ? 1.0 - y * y : (y > 0 ? 1.0 : 0.0);
}

inline double forward(const Scorer& s, std::span<const double> x, ForwardCache* cache = nullptr) {
  if (x.size() != s.input_size()) throw Error("scorer input dimension mismatch");
  for (double v : x)
    if (!std::isfinite(v)) throw Error("non-finite scorer input");
  std::vector<std::vector<double>> acts;
  acts.emplace_back(x.begin(), x.end());
  const auto& sizes = s.layer_sizes();
  const auto p = s.params();
  for (std::size_t l = 0; l < s.num_layers(); ++l) {
    const std::size_t n_in = sizes[l], n_out = sizes[l + 1];
    const double* w = p.data() + s.weight_offset(l);
    const double* b = p.data() + s.bias_offset(l);
    const auto& in = acts.back();
    std::vector<double> out(n_out);
    const bool hidden = l + 1 < s.num_layers();
    for (std::size_t o = 0; o < n_out; ++o) {
      double z = b[o];
      for (std::size_t i = 0; i < n_in; ++i) z += w[o * n_in + i] * in[i];
      out[o] = hidden ? activate(s.activation(), z) : z;
    }
    acts.push_back(std::move(out));
  }
  double score = acts.back()[0];
  if (cache) {
    cache->version = s.version();
    cache->num_params = s.num_params();
    cache->acts = std::move(acts);
    cache->score = score;
  }
  return score;
}

/// Accumulates upstream * d(score)/d(param) into the tape and returns
/// upstream * d(score)/d(input).
inline std::vector<double> backward(const Scorer& s, const ForwardCache& cache, double upstream,
                                    GradientTape& tape) {
  if (cache.version != s.version() || cache.num_params != s.num_params() ||
      cache.acts.size() != s.num_layers() + 1)
    throw Error("stale or mismatched forward cache");
  if (tape.size() != s.num_params()) throw Error("gradient tape shape mismatch");
  const auto& sizes = s.layer_sizes();
  const auto p = s.params();
  auto g = tape.grad();
  std::vector<double> delta{upstream};  // d(loss)/d(pre-activation) of current layer
  for (std::size_t l = s.num_layers(); l-- > 0;) {
    const std::size_t n_in = sizes[l], n_out = sizes[l + 1];
    const double* w = p.data() + s.weight_offset(l);
    double* gw = g.data() + s.weight_offset(l);
    double* gb = g.data() + s.bias_offset(l);
    const auto& in = cache.acts[l];
    std::vector<double> d_in(n_in, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      gb[o] += d;
      for (std::size_t i = 0; i < n_in; ++i) {
        gw[o * n_in + i] += d * in[i];
        d_in[i] += d * w[o * n_in + i];
      }
    }
    if (l > 0)
      for (std::size_t i = 0; i < n_in; ++i) d_in[i] *= activate_grad(s.activation(), in[i]);
    delta = std::move(d_in);
  }
  return delta;
}

enum class StepDirection { kAscent, kDescent };

/// params <- params +/- lr * grad, then zero the tape.  A non-finite gradient
/// leaves the parameters untouched and throws.
inline void sgd_step(Scorer& s, GradientTape& tape, double lr, StepDirection dir) {
  if (tape.size() != s.num_params()) throw Error("gradient tape shape mismatch");
  auto g = tape.grad();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!std::isfinite(g[i])) throw Error("non-finite gradient at parameter " + std::to_string(i));
  const double sign = dir == StepDirection::kAscent ? 1.0 : -1.0;
  auto p = s.params();
  for (std::size_t i = 0; i < g.size(); ++i) p[i] += sign * lr * g[i];
  s.touch();
  tape.zero();
}

/// Relative disagreement between two gradient entries.  Entries below
/// `floor` in magnitude are compared on an absolute scale of `floor`.
inline double relative_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central-difference check of an analytic gradient of f over the vector x.
/// f reads x (which is perturbed in place and restored).
inline double max_relative_error(std::span<double> x, const std::function<double()>& f,
                                 std::span<const double> analytic, double eps, double floor = 1e-6) {
  if (analytic.size() != x.size()) throw Error("gradient size mismatch");
  double worst = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = x[i];
    x[i] = orig + eps;
    const double fp = f();
    x[i] = orig - eps;
    const double fm = f();
    x[i] = orig;
    const double numeric = (fp - fm) / (2 * eps);
    worst = std::max(worst, relative_error(numeric, analytic[i], floor));
  }
  return worst;
}

/// Loss over a scorer.  When `tape` is non-null the loss must also accumulate
/// its analytic gradient into it.
using ScorerLoss = std::function<double(const Scorer&, GradientTape*)>;

/// Worst relative error between backward() gradients and central differences.
inline double finite_diff_check(Scorer& s, const ScorerLoss& loss, double eps = 1e-5, double floor = 1e-6) {
  GradientTape tape(s);
  loss(s, &tape);
  std::vector<double> analytic(tape.grad().begin(), tape.grad().end());
  return max_relative_error(
      s.params(), [&] { return loss(s, nullptr); }, analytic, eps, floor);
}

inline nlohmann::ordered_json to_json(const Scorer& s) {
  nlohmann::ordered_json j;
  j["layer_sizes"] = s.layer_sizes();
  j["activation"] = to_string(s.activation());
  j["seed"] = s.seed();
  j["params"] = std::vector<double>(s.params().begin(), s.params().end());
  return j;
}

inline Scorer scorer_from_json(const nlohmann::ordered_json& j) {
  Scorer s(j.at("layer_sizes").get<std::vector<std::size_t>>(), parse_activation(j.at("activation").get<std::string>()),
           j.value("seed", std::uint64_t{0}));
  auto p = j.at("params").get<std::vector<double>>();
  if (p.size() != s.num_params()) throw Error("checkpoint parameter count mismatch");
  if (!all_finite(p)) throw Error("checkpoint contains non-finite parameters");
  std::copy(p.begin(), p.end(), s.params().begin());
  return s;
}

}  // namespace tandem
