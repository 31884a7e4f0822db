// tests/test_metrics.cc

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

#include "oracles.hpp"
#include "tandem/metrics.hpp"

using namespace tandem;

namespace {

std::vector<LabeledScore> labeled(std::vector<double> pos, std::vector<double> neg) {
  std::vector<LabeledScore> out;
  for (double v : pos) out.push_back({v, true});
  for (double v : neg) out.push_back({v, false});
  return out;
}

ScoreSet six_trials() {
  return ScoreSet({
      {"t1", TrialLabel::target(), 2.0, 1.0},
      {"t2", TrialLabel::target(), -0.5, 0.8},
      {"t3", TrialLabel::target(), 1.0, -1.0},
      {"n1", TrialLabel::nontarget(), 0.5, 0.5},
      {"n2", TrialLabel::nontarget(), -1.0, 2.0},
      {"s1", TrialLabel::spoof("A01"), 1.5, 0.2},
  });
}

}  // namespace

TEST(HardRates, Examples) {
  auto r = hard_rates(labeled({2, 3}, {-2, -3}), 0);
  EXPECT_EQ(r.p_miss, 0);
  EXPECT_EQ(r.p_fa, 0);
  r = hard_rates(labeled({1}, {1}), 1);
  EXPECT_EQ(r.p_miss, 1);
  EXPECT_EQ(r.p_fa, 0);
  r = hard_rates(labeled({0.1, 0.9, 0.5}, {0.2, 0.6}), 0.55);
  EXPECT_DOUBLE_EQ(r.p_miss, 2.0 / 3);
  EXPECT_DOUBLE_EQ(r.p_fa, 0.5);
  EXPECT_THROW(hard_rates(labeled({}, {1}), 0), Error);
  EXPECT_THROW(hard_rates(labeled({1}, {}), 0), Error);
}

TEST(HardRates, StepFunctionMonotoneInThreshold) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    auto s = oracle::random_scores(rng, 60);
    std::vector<double> v;
    for (auto& x : s) v.push_back(x.score);
    auto taus = candidate_thresholds(v);
    double pm = -1, pf = 2;
    for (double t : taus) {
      auto r = hard_rates(s, t);
      EXPECT_GE(r.p_miss, pm);
      EXPECT_LE(r.p_fa, pf);
      pm = r.p_miss;
      pf = r.p_fa;
    }
  }
}

TEST(CandidateThresholds, OnePerPartition) {
  auto t = candidate_thresholds({3, 1, 2, 2, 1});
  std::vector<double> want{0, 1, 2, 3};
  EXPECT_EQ(t, want);
  EXPECT_TRUE(candidate_thresholds({}).empty());
}

TEST(Eer, Examples) {
  EXPECT_EQ(eer(labeled({1, 2, 3}, {-1, -2, -3})).eer, 0);
  EXPECT_EQ(eer(labeled({0, 1}, {0, 1})).eer, 0.5);
  auto s = labeled({0.8, 0.4, 0.6}, {0.5, 0.2, 0.1});
  auto r = eer(s);
  EXPECT_NEAR(r.eer, 1.0 / 3, 1e-15);
  EXPECT_NEAR(r.eer, oracle::eer(s).eer, 1e-15);
}

TEST(Eer, MatchesExhaustiveSweep) {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 300; ++k) {
    auto s = oracle::random_scores(rng);
    auto r = eer(s);
    auto o = oracle::eer(s);
    EXPECT_NEAR(r.eer, o.eer, 1e-12);
    // The reported rates are the rates at the reported threshold.
    auto h = hard_rates(s, r.threshold);
    EXPECT_EQ(h.p_miss, r.p_miss);
    EXPECT_EQ(h.p_fa, r.p_fa);
  }
}

TEST(Eer, GapBoundedByOneStepWithoutTies) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> n(2, 200), coin(0, 1);
  for (int k = 0; k < 300; ++k) {
    std::vector<LabeledScore> s;
    const int m = n(rng);
    std::size_t np = 0;
    for (int i = 0; i < m; ++i) {
      bool pos = i == 0 ? true : i == 1 ? false : coin(rng);
      np += pos;
      s.push_back({g(rng) + pos, pos});
    }
    auto r = eer(s);
    EXPECT_LE(std::abs(r.p_miss - r.p_fa), 1.0 / std::min(np, s.size() - np) + 1e-15);
  }
}

TEST(Eer, InvariantUnderIncreasingMap) {
  std::mt19937_64 rng(12);
  for (int k = 0; k < 50; ++k) {
    auto s = oracle::random_scores(rng);
    auto t = s;
    for (auto& x : t) x.score = std::exp(x.score / 2) * 3 - 1;
    EXPECT_EQ(eer(s).eer, eer(t).eer);
  }
}

TEST(Dcf, Examples) {
  EXPECT_EQ(dcf(0, 0, 1, 10, 0.9), 0);
  EXPECT_DOUBLE_EQ(dcf(1, 0, 1, 10, 0.9), 0.9);
  EXPECT_DOUBLE_EQ(dcf(0.5, 0.5, 1, 10, 0.5), 2.75);
}

TEST(TandemRates, TrivialGates) {
  auto s = six_trials();
  auto r = tandem_error_rates(s, -100, -100);
  EXPECT_EQ(r.p_a, 0);
  EXPECT_EQ(r.p_d, 0);
  EXPECT_EQ(r.p_b, 1);
  EXPECT_EQ(r.p_c, 1);
  r = tandem_error_rates(s, -100, 100);
  EXPECT_EQ(r.p_d, 1);
  EXPECT_EQ(r.p_a, 0);
  EXPECT_EQ(r.p_b, 0);
  EXPECT_EQ(r.p_c, 0);
}

TEST(TandemRates, SixTrialHandCount) {
  auto s = six_trials();
  // tau_cm = 0.6: t1, t2 pass CM; t3 rejected.  tau_asv = 0: t2 rejected by ASV.
  auto r = tandem_error_rates(s, 0.0, 0.6);
  EXPECT_DOUBLE_EQ(r.p_d, 1.0 / 3);
  EXPECT_DOUBLE_EQ(r.p_a, 1.0 / 3);
  EXPECT_EQ(r.p_b, 0.0);  // n1 fails CM, n2 fails ASV
  EXPECT_EQ(r.p_c, 0.0);  // s1 fails CM
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2, 2.5);
  for (int k = 0; k < 200; ++k) {
    double ta = u(rng), tc = u(rng);
    auto a = tandem_error_rates(s, ta, tc);
    auto o = oracle::tandem_rates(s, ta, tc);
    EXPECT_EQ(a.p_a, o.p_a);
    EXPECT_EQ(a.p_b, o.p_b);
    EXPECT_EQ(a.p_c, o.p_c);
    EXPECT_EQ(a.p_d, o.p_d);
  }
}

TEST(TandemRates, MissingClass) {
  ScoreSet s({{"a", TrialLabel::target(), 1, 1}, {"b", TrialLabel::nontarget(), 0, 0}});
  EXPECT_THROW(tandem_error_rates(s, 0, 0), Error);
}

TEST(Tdcf, Examples) {
  TandemCostParams p;
  EXPECT_EQ(tdcf({0, 0, 0, 0}, p), 0);
  EXPECT_DOUBLE_EQ(tdcf({0, 0, 0, 1}, p), 0.9405);
}

TEST(Tdcf, ReducesToDcfWithOneNegativeClass) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int k = 0; k < 200; ++k) {
    double rho_tar = u(rng), split = u(rng), c_miss = 0.1 + u(rng), c_fa = 0.1 + 5 * u(rng);
    TandemCostParams p{c_miss, c_fa, c_fa, rho_tar, (1 - rho_tar) * split, (1 - rho_tar) * (1 - split)};
    // Perfect CM, so both negative classes share one false-accept rate.
    double p_miss = u(rng), p_fa = u(rng);
    ErrorRates r{p_miss, p_fa, p_fa, 0.0};
    EXPECT_NEAR(tdcf(r, p), dcf(p_miss, p_fa, c_miss, c_fa, rho_tar), 1e-12);
  }
}

TEST(MinNormTdcf, PerfectSystemsGiveZero) {
  ScoreSet s({{"t", TrialLabel::target(), 5, 5}, {"n", TrialLabel::nontarget(), -5, 5}, {"s", TrialLabel::spoof("A"), 5, -5}});
  EXPECT_EQ(min_norm_tdcf(s, {}).value, 0);
}

TEST(MinNormTdcf, UselessCmGivesOne) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<ScoreEntry> e;
  for (int i = 0; i < 30; ++i) {
    double c = g(rng);
    // Each CM score is shared by one trial of every class.
    e.push_back({"t" + std::to_string(i), TrialLabel::target(), g(rng) + 2, c});
    e.push_back({"n" + std::to_string(i), TrialLabel::nontarget(), g(rng) - 2, c});
    e.push_back({"s" + std::to_string(i), TrialLabel::spoof("A"), g(rng) + 2, c});
  }
  ScoreSet s(std::move(e));
  EXPECT_NEAR(min_norm_tdcf(s, {}).value, 1.0, 1e-12);
  EXPECT_NEAR(oracle::min_norm_tdcf(s, {}), 1.0, 1e-12);
}

TEST(MinNormTdcf, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 300; ++k) {
    auto s = oracle::random_score_set(rng, 60);
    auto r = min_norm_tdcf(s, {});
    EXPECT_NEAR(r.value, oracle::min_norm_tdcf(s, {}), 1e-12);
    // The reported threshold realises the reported value.
    auto at = tandem_error_rates(s, r.tau_asv, r.tau_cm_star);
    if (r.normalizer > 0) EXPECT_NEAR(tdcf(at, {}) / r.normalizer, r.value, 1e-12);
  }
}

TEST(MinNormTdcf, InvariantUnderIncreasingMaps) {
  std::mt19937_64 rng(22);
  for (int k = 0; k < 50; ++k) {
    auto s = oracle::random_score_set(rng, 120);
    std::vector<ScoreEntry> e = s.entries();
    for (auto& x : e) x.cm_score = std::atan(x.cm_score) * 7 + 1;
    EXPECT_EQ(min_norm_tdcf(s, {}).value, min_norm_tdcf(ScoreSet(e), {}).value);
    for (auto& x : e) x.asv_score = x.asv_score * x.asv_score * x.asv_score;
    EXPECT_EQ(min_norm_tdcf(s, {}).value, min_norm_tdcf(ScoreSet(e), {}).value);
  }
}

TEST(MinNormTdcf, UnnormalisedOptionReturnsRawCost) {
  std::mt19937_64 rng(23);
  auto s = oracle::random_score_set(rng, 80);
  auto n = min_norm_tdcf(s, {}, TdcfNormalization::kBestTrivialCm);
  auto raw = min_norm_tdcf(s, {}, TdcfNormalization::kNone);
  EXPECT_NEAR(raw.value, n.value * n.normalizer, 1e-12);
}

TEST(PerAttack, ComposesWithFilteredEer) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  std::vector<ScoreEntry> e;
  for (int i = 0; i < 40; ++i) {
    e.push_back({"t" + std::to_string(i), TrialLabel::target(), g(rng) + 2, g(rng) + 2});
    e.push_back({"n" + std::to_string(i), TrialLabel::nontarget(), g(rng), g(rng) + 2});
    for (int a = 1; a <= 3; ++a)
      e.push_back({"s" + std::to_string(a) + "_" + std::to_string(i), TrialLabel::spoof("A" + std::to_string(a)),
                   g(rng) + a, g(rng) + 2 - a});
  }
  ScoreSet s(e);
  auto br = per_attack_breakdown(s);
  ASSERT_EQ(br.cm_eer.size(), 3u);
  for (int a = 1; a <= 3; ++a) {
    std::string id = "A" + std::to_string(a);
    std::vector<LabeledScore> cm, asv;
    for (auto& x : e) {
      if (x.label.attack_id() && *x.label.attack_id() != id) continue;
      cm.push_back({x.cm_score, !x.label.attack_id()});
      if (x.label.trial_class() != TrialClass::kNontarget) asv.push_back({x.asv_score, !x.label.attack_id()});
    }
    EXPECT_NEAR(br.cm_eer[id], oracle::eer(cm).eer, 1e-12);
    EXPECT_NEAR(br.asv_eer[id], oracle::eer(asv).eer, 1e-12);
  }
}

TEST(PerAttack, SeparatedAttackHasZeroCmEer) {
  ScoreSet s({{"t", TrialLabel::target(), 1, 1}, {"n", TrialLabel::nontarget(), 0, 2},
              {"s", TrialLabel::spoof("A"), 1, -3}, {"s2", TrialLabel::spoof("A"), 1, -4}});
  EXPECT_EQ(per_attack_breakdown(s).cm_eer["A"], 0);
}

TEST(PerAttack, IndistinguishableAsvNearHalf) {
  std::mt19937_64 rng(33);
  std::normal_distribution<double> g;
  std::vector<ScoreEntry> e;
  for (int i = 0; i < 4000; ++i) {
    e.push_back({"t" + std::to_string(i), TrialLabel::target(), g(rng), 1});
    e.push_back({"s" + std::to_string(i), TrialLabel::spoof("A"), g(rng), 0});
  }
  e.push_back({"n", TrialLabel::nontarget(), 0, 0});
  EXPECT_NEAR(per_attack_breakdown(ScoreSet(e)).asv_eer["A"], 0.5, 0.03);
}

TEST(CrossTask, Examples) {
  ScoreSet s({{"t", TrialLabel::target(), 1, 0}, {"n", TrialLabel::nontarget(), 1, 0}, {"s", TrialLabel::spoof("A"), -1, 0}});
  EXPECT_EQ(cross_task_eer(s), 0);
  std::mt19937_64 rng(41);
  for (int k = 0; k < 30; ++k) {
    auto r = oracle::random_score_set(rng);
    std::vector<LabeledScore> relabeled;
    for (auto& x : r.entries()) relabeled.push_back({x.asv_score, x.label.cm() == CmLabel::kBonafide});
    EXPECT_NEAR(cross_task_eer(r), oracle::eer(relabeled).eer, 1e-12);
  }
}

TEST(CrossTask, IndependentScoresNearHalf) {
  std::mt19937_64 rng(42);
  std::normal_distribution<double> g;
  std::vector<ScoreEntry> e;
  for (int i = 0; i < 3000; ++i) {
    e.push_back({"t" + std::to_string(i), TrialLabel::target(), g(rng), 0});
    e.push_back({"s" + std::to_string(i), TrialLabel::spoof("A"), g(rng), 0});
  }
  EXPECT_NEAR(cross_task_eer(ScoreSet(e)), 0.5, 0.03);
}

TEST(FilterAttacks, Counts) {
  std::vector<ScoreEntry> e{{"t", TrialLabel::target(), 0, 0},
                            {"n", TrialLabel::nontarget(), 0, 0},
                            {"a", TrialLabel::spoof("A16"), 0, 0},
                            {"b", TrialLabel::spoof("A17"), 0, 0},
                            {"c", TrialLabel::spoof("A17"), 0, 0}};
  ScoreSet s(e);
  EXPECT_EQ(filter_attacks(s, {}).size(), 5u);
  auto f = filter_attacks(s, {"A17"});
  EXPECT_EQ(f.size(), 3u);
  EXPECT_EQ(f.count(TrialClass::kSpoof), 1u);
  EXPECT_EQ(f.count(TrialClass::kTarget), 1u);
  auto none = filter_attacks(s, {"A16", "A17"});
  EXPECT_EQ(none.count(TrialClass::kSpoof), 0u);
  EXPECT_EQ(none.size(), 2u);
  try {
    compute_report(none, {});
    FAIL();
  } catch (const Error& err) {
    EXPECT_STREQ(err.what(), "missing spoof class");
  }
}

TEST(MetricReport, JsonRoundTripAndKeyOrder) {
  std::mt19937_64 rng(51);
  auto s = oracle::random_score_set(rng, 150);
  auto r = compute_report(s, {});
  auto j = to_json(r);
  std::vector<std::string> keys;
  for (auto& [k, v] : j.items()) keys.push_back(k);
  std::vector<std::string> want{"asv_eer",        "cm_eer",         "min_norm_tdcf",    "tau_cm_star",
                                "tau_asv",        "cross_task_eer", "per_attack_cm_eer", "per_attack_asv_eer"};
  EXPECT_EQ(keys, want);
  auto back = metric_report_from_json(nlohmann::ordered_json::parse(j.dump()));
  EXPECT_EQ(back.min_norm_tdcf, r.min_norm_tdcf);
  EXPECT_EQ(back.per_attack_cm_eer, r.per_attack_cm_eer);
  EXPECT_EQ(back.tau_cm_star, r.tau_cm_star);
}
