// include/tandem/metrics.hpp

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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "tandem/types.hpp"

namespace tandem {

// Decision convention used throughout: a detector accepts iff score > tau.
// A score exactly equal to tau is a reject.

struct MissFa {
  double p_miss;
  double p_fa;
};

inline void require_both_classes(std::span<const LabeledScore> scores) {
  bool pos = false, neg = false;
  for (const auto& s : scores) (s.positive ? pos : neg) = true;
  if (!pos) throw Error("empty positive class");
  if (!neg) throw Error("empty negative class");
}

inline MissFa hard_rates(std::span<const LabeledScore> scores, double tau) {
  require_both_classes(scores);
  std::size_t n_pos = 0, n_neg = 0, miss = 0, fa = 0;
  for (const auto& s : scores) {
    if (s.positive) {
      ++n_pos;
      miss += s.score <= tau;
    } else {
      ++n_neg;
      fa += s.score > tau;
    }
  }
  return {static_cast<double>(miss) / n_pos, static_cast<double>(fa) / n_neg};
}

/// Candidate thresholds for a sweep: one below the minimum, then every
/// distinct value.  With ties rejected, a threshold sitting on a value rejects
/// it and everything below, so every accept/reject partition of `values` is
/// realised by exactly one candidate.  Placing thresholds on observed values
/// rather than between them keeps decisions on trials outside the swept list
/// invariant under any increasing transform of the scores.
inline std::vector<double> candidate_thresholds(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  std::vector<double> out;
  if (values.empty()) return out;
  out.reserve(values.size() + 1);
  out.push_back(values.front() - 1.0);
  out.insert(out.end(), values.begin(), values.end());
  return out;
}

struct EerResult {
  double eer;
  double threshold;
  double p_miss;
  double p_fa;
};

/// Equal error rate by an exact sweep over candidate thresholds.  Picks the
/// threshold minimising |p_miss - p_fa| (smallest one on ties) and reports
/// the mean of the two rates there.  No ROC interpolation.
inline EerResult eer(std::span<const LabeledScore> scores) {
  require_both_classes(scores);
  struct Item {
    double score;
    bool positive;
  };
  std::vector<Item> items;
  items.reserve(scores.size());
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : scores) {
    items.push_back({s.score, s.positive});
    (s.positive ? n_pos : n_neg)++;
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

  // Sweep upward; at each candidate everything at or below it is rejected.
  std::size_t miss = 0, fa = n_neg;
  auto rates = [&] { return MissFa{static_cast<double>(miss) / n_pos, static_cast<double>(fa) / n_neg}; };

  MissFa r = rates();
  double best_tau = items.front().score - 1.0;
  double best_gap = std::abs(r.p_miss - r.p_fa);
  MissFa best = r;
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].score == items[i].score) {
      if (items[j].positive)
        ++miss;
      else
        --fa;
      ++j;
    }
    const double tau = items[i].score;
    r = rates();
    double gap = std::abs(r.p_miss - r.p_fa);
    if (gap < best_gap) {
      best_gap = gap;
      best_tau = tau;
      best = r;
    }
    i = j;
  }
  return {(best.p_miss + best.p_fa) / 2, best_tau, best.p_miss, best.p_fa};
}

/// Single-detector detection cost.
inline double dcf(double p_miss, double p_fa, double c_miss, double c_fa, double rho_tar) {
  return rho_tar * c_miss * p_miss + (1.0 - rho_tar) * c_fa * p_fa;
}

/// Joint-count tandem error rates at fixed thresholds.  All three classes required.
inline ErrorRates tandem_error_rates(const ScoreSet& s, double tau_asv, double tau_cm) {
  s.require_all_classes();
  std::size_t n_tar = 0, n_non = 0, n_spf = 0;
  std::size_t a = 0, b = 0, c = 0, d = 0;
  for (const auto& e : s.entries()) {
    bool cm_acc = e.cm_score > tau_cm;
    bool asv_acc = e.asv_score > tau_asv;
    switch (e.label.trial_class()) {
      case TrialClass::kTarget:
        ++n_tar;
        d += !cm_acc;
        a += cm_acc && !asv_acc;
        break;
      case TrialClass::kNontarget:
        ++n_non;
        b += cm_acc && asv_acc;
        break;
      case TrialClass::kSpoof:
        ++n_spf;
        c += cm_acc && asv_acc;
        break;
    }
  }
  return {static_cast<double>(a) / n_tar, static_cast<double>(b) / n_non, static_cast<double>(c) / n_spf,
          static_cast<double>(d) / n_tar};
}

inline double tdcf(const ErrorRates& r, const TandemCostParams& p) {
  return p.c_miss * p.rho_tar * (r.p_a + r.p_d) + p.c_fa * p.rho_non * r.p_b + p.c_fa_spoof * p.rho_spoof * r.p_c;
}

/// How the minimum t-DCF is normalised.
enum class TdcfNormalization {
  kBestTrivialCm,  // divide by min(t-DCF of accept-all CM, t-DCF of reject-all CM)
  kNone,
};

inline std::vector<LabeledScore> asv_bonafide_scores(const ScoreSet& s) {
  std::vector<LabeledScore> out;
  for (const auto& e : s.entries()) {
    auto c = e.label.trial_class();
    if (c != TrialClass::kSpoof) out.push_back({e.asv_score, c == TrialClass::kTarget});
  }
  return out;
}

inline std::vector<LabeledScore> cm_scores(const ScoreSet& s) {
  std::vector<LabeledScore> out;
  out.reserve(s.size());
  for (const auto& e : s.entries()) out.push_back({e.cm_score, e.label.cm() == CmLabel::kBonafide});
  return out;
}

struct MinTdcfResult {
  double value;        // minimum (normalised) t-DCF
  double tau_cm_star;  // achieving CM threshold
  double tau_asv;      // ASV threshold, fixed at the ASV EER point
  double normalizer;
  ErrorRates rates;    // error rates at the optimum
};

/// ASV-constrained minimum normalised t-DCF.  The ASV threshold is fixed at its
/// target-vs-nontarget EER point; the CM threshold sweeps every candidate.
inline MinTdcfResult min_norm_tdcf(const ScoreSet& s, const TandemCostParams& p,
                                   TdcfNormalization norm = TdcfNormalization::kBestTrivialCm) {
  s.require_all_classes();
  const auto asv = asv_bonafide_scores(s);
  double tau_asv = eer(asv).threshold;
  // The accept-all sentinel sits below the bonafide scores only; push it
  // below the spoof scores as well so that it accepts every trial.
  double lowest = tau_asv;
  for (const auto& e : s.entries()) lowest = std::min(lowest, e.asv_score - 1.0);
  if (std::none_of(asv.begin(), asv.end(), [&](const LabeledScore& x) { return x.score <= tau_asv; }))
    tau_asv = lowest;

  struct Item {
    double cm;
    TrialClass cls;
    bool asv_acc;
  };
  std::vector<Item> items;
  items.reserve(s.size());
  std::size_t n_tar = 0, n_non = 0, n_spf = 0;
  for (const auto& e : s.entries()) {
    auto c = e.label.trial_class();
    items.push_back({e.cm_score, c, e.asv_score > tau_asv});
    n_tar += c == TrialClass::kTarget;
    n_non += c == TrialClass::kNontarget;
    n_spf += c == TrialClass::kSpoof;
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.cm < b.cm; });

  // Counts of CM-accepted trials, starting with the CM accepting everything.
  std::size_t tar_rej = 0, tar_acc_asv_rej = 0, non_both = 0, spf_both = 0;
  for (const auto& it : items) {
    if (it.cls == TrialClass::kTarget) tar_acc_asv_rej += !it.asv_acc;
    if (it.cls == TrialClass::kNontarget) non_both += it.asv_acc;
    if (it.cls == TrialClass::kSpoof) spf_both += it.asv_acc;
  }
  auto rates = [&] {
    return ErrorRates{static_cast<double>(tar_acc_asv_rej) / n_tar, static_cast<double>(non_both) / n_non,
                      static_cast<double>(spf_both) / n_spf, static_cast<double>(tar_rej) / n_tar};
  };

  const ErrorRates accept_all = rates();
  const ErrorRates reject_all{0.0, 0.0, 0.0, 1.0};
  double normalizer = 1.0;
  if (norm == TdcfNormalization::kBestTrivialCm) normalizer = std::min(tdcf(accept_all, p), tdcf(reject_all, p));

  double best_tau = items.front().cm - 1.0;
  ErrorRates best_rates = accept_all;
  double best = tdcf(accept_all, p);
  for (std::size_t i = 0; i < items.size();) {
    std::size_t j = i;
    while (j < items.size() && items[j].cm == items[i].cm) {
      const auto& it = items[j];
      switch (it.cls) {
        case TrialClass::kTarget:
          ++tar_rej;
          tar_acc_asv_rej -= !it.asv_acc;
          break;
        case TrialClass::kNontarget:
          non_both -= it.asv_acc;
          break;
        case TrialClass::kSpoof:
          spf_both -= it.asv_acc;
          break;
      }
      ++j;
    }
    const double tau = items[i].cm;
    ErrorRates r = rates();
    double v = tdcf(r, p);
    if (v < best) {
      best = v;
      best_tau = tau;
      best_rates = r;
    }
    i = j;
  }
  // A zero normaliser means the trivial gate is already perfect.
  double value = normalizer > 0 ? best / normalizer : 0.0;
  return {value, best_tau, tau_asv, normalizer, best_rates};
}

/// Per-attack EERs: CM separates all bonafide from that attack's spoofs, ASV
/// separates target bonafide from that attack's spoofs.  Attacks without
/// trials do not appear.
struct AttackBreakdown {
  std::map<std::string, double> cm_eer;
  std::map<std::string, double> asv_eer;
};

inline AttackBreakdown per_attack_breakdown(const ScoreSet& s) {
  std::set<std::string> attacks;
  for (const auto& e : s.entries())
    if (e.label.attack_id()) attacks.insert(*e.label.attack_id());
  AttackBreakdown out;
  for (const auto& attack : attacks) {
    std::vector<LabeledScore> cm, asv;
    for (const auto& e : s.entries()) {
      auto c = e.label.trial_class();
      if (c == TrialClass::kSpoof) {
        if (*e.label.attack_id() != attack) continue;
        cm.push_back({e.cm_score, false});
        asv.push_back({e.asv_score, false});
      } else {
        cm.push_back({e.cm_score, true});
        if (c == TrialClass::kTarget) asv.push_back({e.asv_score, true});
      }
    }
    bool have_bona = std::any_of(cm.begin(), cm.end(), [](auto& x) { return x.positive; });
    if (!have_bona) throw Error("per-attack breakdown needs bonafide trials");
    out.cm_eer[attack] = eer(cm).eer;
    if (std::any_of(asv.begin(), asv.end(), [](auto& x) { return x.positive; })) out.asv_eer[attack] = eer(asv).eer;
  }
  return out;
}

/// EER of the ASV score on the CM task (bonafide positive, spoof negative).
inline double cross_task_eer(const ScoreSet& s) {
  std::vector<LabeledScore> v;
  v.reserve(s.size());
  for (const auto& e : s.entries()) v.push_back({e.asv_score, e.label.cm() == CmLabel::kBonafide});
  return eer(v).eer;
}

inline ScoreSet filter_attacks(const ScoreSet& s, const std::set<std::string>& excluded) {
  std::vector<ScoreEntry> kept;
  for (const auto& e : s.entries())
    if (!e.label.attack_id() || !excluded.count(*e.label.attack_id())) kept.push_back(e);
  return ScoreSet(std::move(kept));
}

struct MetricReport {
  double asv_eer = 0;
  double cm_eer = 0;
  double min_norm_tdcf = 0;
  double tau_cm_star = 0;
  double tau_asv = 0;
  double cross_task_eer = 0;
  std::map<std::string, double> per_attack_cm_eer;
  std::map<std::string, double> per_attack_asv_eer;
};

inline MetricReport compute_report(const ScoreSet& s, const TandemCostParams& p,
                                   TdcfNormalization norm = TdcfNormalization::kBestTrivialCm) {
  s.require_all_classes();
  MetricReport r;
  r.asv_eer = eer(asv_bonafide_scores(s)).eer;
  r.cm_eer = eer(cm_scores(s)).eer;
  auto m = min_norm_tdcf(s, p, norm);
  r.min_norm_tdcf = m.value;
  r.tau_cm_star = m.tau_cm_star;
  r.tau_asv = m.tau_asv;
  r.cross_task_eer = cross_task_eer(s);
  auto br = per_attack_breakdown(s);
  r.per_attack_cm_eer = std::move(br.cm_eer);
  r.per_attack_asv_eer = std::move(br.asv_eer);
  return r;
}

inline nlohmann::ordered_json to_json(const MetricReport& r) {
  nlohmann::ordered_json j;
  j["asv_eer"] = r.asv_eer;
  j["cm_eer"] = r.cm_eer;
  j["min_norm_tdcf"] = r.min_norm_tdcf;
  j["tau_cm_star"] = r.tau_cm_star;
  j["tau_asv"] = r.tau_asv;
  j["cross_task_eer"] = r.cross_task_eer;
  j["per_attack_cm_eer"] = r.per_attack_cm_eer;
  j["per_attack_asv_eer"] = r.per_attack_asv_eer;
  return j;
}

inline MetricReport metric_report_from_json(const nlohmann::ordered_json& j) {
  MetricReport r;
  r.asv_eer = j.at("asv_eer").get<double>();
  r.cm_eer = j.at("cm_eer").get<double>();
  r.min_norm_tdcf = j.at("min_norm_tdcf").get<double>();
  r.tau_cm_star = j.at("tau_cm_star").get<double>();
  r.tau_asv = j.at("tau_asv").get<double>();
  r.cross_task_eer = j.value("cross_task_eer", 0.0);
  r.per_attack_cm_eer = j.at("per_attack_cm_eer").get<std::map<std::string, double>>();
  r.per_attack_asv_eer = j.at("per_attack_asv_eer").get<std::map<std::string, double>>();
  return r;
}

}  // namespace tandem
