// tests/test_nn.cc

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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tandem/nn.hpp"
#include "tandem/tandem_train.hpp"

using namespace tandem;

namespace {

// Straightforward re-implementation of an MLP forward pass.
double reference_forward(const Scorer& s, std::vector<double> x) {
  const auto& sz = s.layer_sizes();
  auto p = s.params();
  std::size_t off = 0;
  for (std::size_t l = 0; l + 1 < sz.size(); ++l) {
    std::vector<double> y(sz[l + 1]);
    for (std::size_t o = 0; o < sz[l + 1]; ++o) {
      double z = p[off + sz[l] * sz[l + 1] + o];
      for (std::size_t i = 0; i < sz[l]; ++i) z += p[off + o * sz[l] + i] * x[i];
      bool hidden = l + 2 < sz.size();
      y[o] = !hidden ? z : s.activation() == Activation::kTanh ? std::tanh(z) : std::max(z, 0.0);
    }
    off += sz[l] * sz[l + 1] + sz[l + 1];
    x = y;
  }
  return x[0];
}

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

}  // namespace

TEST(Scorer, ParameterCount) {
  Scorer s({8, 16, 1}, Activation::kTanh);
  EXPECT_EQ(s.num_params(), 8u * 16 + 16 + 16 + 1);
  EXPECT_THROW(Scorer({8, 2}, Activation::kTanh), Error);
  EXPECT_THROW(Scorer({8}, Activation::kTanh), Error);
}

TEST(Scorer, RandomInitWithinBoundsAndSeeded) {
  auto a = Scorer::random({4, 9, 1}, Activation::kTanh, 5);
  auto b = Scorer::random({4, 9, 1}, Activation::kTanh, 5);
  auto c = Scorer::random({4, 9, 1}, Activation::kTanh, 6);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == c);
  auto p = a.params();
  for (std::size_t i = 0; i < a.bias_offset(0) + 9; ++i) EXPECT_LE(std::abs(p[i]), 0.5);
  for (std::size_t i = a.weight_offset(1); i < a.num_params(); ++i) EXPECT_LE(std::abs(p[i]), 1.0 / 3);
}

TEST(Forward, Examples) {
  Scorer z({3, 5, 1}, Activation::kTanh);
  EXPECT_EQ(forward(z, std::vector<double>{1, -2, 3}), 0.0);
  Scorer lin({2, 1}, Activation::kTanh);
  lin.params()[0] = 1;
  lin.params()[1] = 2;
  EXPECT_EQ(forward(lin, std::vector<double>{3, 4}), 11.0);
  std::mt19937_64 rng(1);
  for (auto act : {Activation::kTanh, Activation::kRelu}) {
    auto s = Scorer::random({5, 7, 1}, act, 3);
    for (int k = 0; k < 20; ++k) {
      auto x = random_vec(5, rng);
      EXPECT_NEAR(forward(s, x), reference_forward(s, x), 1e-14);
    }
  }
}

TEST(Forward, RejectsBadInput) {
  Scorer s({2, 1}, Activation::kTanh);
  EXPECT_THROW(forward(s, std::vector<double>{1}), Error);
  EXPECT_THROW(forward(s, std::vector<double>{1, NAN}), Error);
}

TEST(Backward, ZeroUpstreamAndLinearGradient) {
  auto s = Scorer::random({3, 4, 1}, Activation::kTanh, 1);
  ForwardCache c;
  forward(s, std::vector<double>{1, 2, 3}, &c);
  GradientTape t(s);
  backward(s, c, 0.0, t);
  for (double g : t.grad()) EXPECT_EQ(g, 0.0);

  Scorer lin({3, 1}, Activation::kTanh);
  std::vector<double> x{0.5, -1.5, 2.0};
  forward(lin, x, &c);
  GradientTape tl(lin);
  backward(lin, c, 1.0, tl);
  for (int j = 0; j < 3; ++j) EXPECT_EQ(tl.grad()[j], x[j]);
  EXPECT_EQ(tl.grad()[3], 1.0);
}

TEST(Backward, StaleCacheRejected) {
  auto s = Scorer::random({2, 3, 1}, Activation::kTanh, 1);
  ForwardCache c;
  forward(s, std::vector<double>{1, 2}, &c);
  GradientTape t(s);
  sgd_step(s, t, 0.1, StepDirection::kDescent);
  EXPECT_THROW(backward(s, c, 1.0, t), Error);
  auto other = Scorer::random({2, 4, 1}, Activation::kTanh, 1);
  ForwardCache c2;
  forward(other, std::vector<double>{1, 2}, &c2);
  EXPECT_THROW(backward(s, c2, 1.0, t), Error);
}

TEST(Backward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  for (auto act : {Activation::kTanh, Activation::kRelu}) {
    for (int k = 0; k < 10; ++k) {
      auto s = Scorer::random({4, 6, 5, 1}, act, 100 + k);
      auto x = random_vec(4, rng);
      const double up = g(rng);
      ScorerLoss loss = [&](const Scorer& sc, GradientTape* tape) {
        ForwardCache c;
        double y = forward(sc, x, tape ? &c : nullptr);
        if (tape) backward(sc, c, up, *tape);
        return up * y;
      };
      EXPECT_LE(finite_diff_check(s, loss, 1e-5), 1e-5) << to_string(act) << " instance " << k;
    }
  }
}

TEST(Backward, InputGradient) {
  auto s = Scorer::random({3, 5, 1}, Activation::kTanh, 9);
  std::vector<double> x{0.3, -0.2, 0.9};
  ForwardCache c;
  forward(s, x, &c);
  GradientTape t(s);
  auto gx = backward(s, c, 1.0, t);
  double worst = max_relative_error(x, [&] { return forward(s, x); }, gx, 1e-6);
  EXPECT_LE(worst, 1e-6);
}

TEST(SgdStep, Examples) {
  Scorer s({1, 1}, Activation::kTanh);
  s.params()[0] = 1.0;
  GradientTape t(s);
  t.grad()[0] = 2.0;
  sgd_step(s, t, 0.1, StepDirection::kAscent);
  EXPECT_DOUBLE_EQ(s.params()[0], 1.2);
  EXPECT_EQ(t.grad()[0], 0.0);  // zeroed

  auto r = Scorer::random({3, 4, 1}, Activation::kTanh, 2);
  auto before = r;
  GradientTape tr(r);
  tr.grad()[3] = 5;
  sgd_step(r, tr, 0.0, StepDirection::kDescent);
  EXPECT_TRUE(std::equal(r.params().begin(), r.params().end(), before.params().begin()));
}

TEST(SgdStep, NonFiniteGradientAbortsAndNamesParameter) {
  auto s = Scorer::random({2, 2, 1}, Activation::kTanh, 2);
  auto before = s;
  GradientTape t(s);
  t.grad()[4] = NAN;
  try {
    sgd_step(s, t, 0.1, StepDirection::kAscent);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("parameter 4"), std::string::npos);
  }
  EXPECT_TRUE(s == before);
}

TEST(SgdStep, TwoStepsEqualOneSummedStepForLinearModel) {
  Scorer a({3, 1}, Activation::kTanh), b({3, 1}, Activation::kTanh);
  std::vector<double> g1{1, -2, 0.5, 3}, g2{-0.25, 4, 1, -1};
  GradientTape ta(a), tb(b);
  std::copy(g1.begin(), g1.end(), ta.grad().begin());
  sgd_step(a, ta, 0.5, StepDirection::kDescent);
  std::copy(g2.begin(), g2.end(), ta.grad().begin());
  sgd_step(a, ta, 0.5, StepDirection::kDescent);
  for (int i = 0; i < 4; ++i) tb.grad()[i] = g1[i] + g2[i];
  sgd_step(b, tb, 0.5, StepDirection::kDescent);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(a.params()[i], b.params()[i]);
}

TEST(FiniteDiffCheck, QuadraticIsExact) {
  Scorer s({1, 1}, Activation::kTanh);
  s.params()[0] = 0.7;
  ScorerLoss loss = [](const Scorer& sc, GradientTape* tape) {
    double w = sc.params()[0];
    if (tape) tape->grad()[0] += 2 * w;
    return w * w;
  };
  EXPECT_LT(finite_diff_check(s, loss, 1e-5), 1e-8);
}

TEST(FiniteDiffCheck, CrossEntropy) {
  std::mt19937_64 rng(4);
  std::vector<Trial> trials;
  for (int i = 0; i < 12; ++i)
    trials.push_back(make_trial("t" + std::to_string(i), random_vec(3, rng), random_vec(2, rng),
                                i % 3 == 0 ? TrialLabel::target() : i % 3 == 1 ? TrialLabel::nontarget()
                                                                               : TrialLabel::spoof("A"),
                                3, 2));
  std::vector<const Trial*> batch;
  for (auto& t : trials) batch.push_back(&t);
  for (int k = 0; k < 5; ++k) {
    auto sa = Scorer::random({3, 5, 1}, Activation::kTanh, 10 + k);
    auto sc = Scorer::random({2, 5, 1}, Activation::kTanh, 20 + k);
    EXPECT_LE(finite_diff_check(sa, [&](const Scorer& s, GradientTape* t) { return bce_loss(s, batch, pick_asv, t); }),
              1e-4);
    EXPECT_LE(finite_diff_check(sc, [&](const Scorer& s, GradientTape* t) { return bce_loss(s, batch, pick_cm, t); }),
              1e-4);
  }
}

TEST(Scorer, JsonRoundTripIsExact) {
  auto s = Scorer::random({6, 16, 1}, Activation::kRelu, 77);
  auto j = nlohmann::ordered_json::parse(to_json(s).dump());
  auto back = scorer_from_json(j);
  EXPECT_TRUE(back == s);
  EXPECT_EQ(back.seed(), 77u);
  j["params"][0] = 1.0;
  j["params"].erase(j["params"].size() - 1);
  EXPECT_THROW(scorer_from_json(j), Error);
}

TEST(Determinism, SameSeedSameScoresAndGradients) {
  std::mt19937_64 rng(2);
  auto x = random_vec(5, rng);
  auto a = Scorer::random({5, 8, 1}, Activation::kTanh, 3), b = Scorer::random({5, 8, 1}, Activation::kTanh, 3);
  ForwardCache ca, cb;
  EXPECT_EQ(forward(a, x, &ca), forward(b, x, &cb));
  GradientTape ta(a), tb(b);
  backward(a, ca, 0.3, ta);
  backward(b, cb, 0.3, tb);
  EXPECT_TRUE(std::equal(ta.grad().begin(), ta.grad().end(), tb.grad().begin()));
}
