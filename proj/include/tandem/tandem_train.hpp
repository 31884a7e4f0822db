// include/tandem/tandem_train.hpp

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
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "tandem/calibration.hpp"
#include "tandem/metrics.hpp"
#include "tandem/nn.hpp"
#include "tandem/soft_tdcf.hpp"
#include "tandem/types.hpp"

namespace tandem {

using Rng = std::mt19937_64;

// Accept probabilities are kept inside this interval before any log is taken.
inline constexpr double kMinProb = 1e-6;
inline constexpr double kMaxProb = 1.0 - 1e-6;

/// One subsystem: a scorer plus an optional calibration head.  Without the
/// head the accept probability is sigmoid(raw score); with it,
/// sigmoid(a * raw + b + prior_log_odds).
struct Policy {
  Scorer scorer;
  std::optional<Calibrator> calibration;

  double logit(double raw) const { return calibration ? calibration->llr(raw) + calibration->prior_log_odds : raw; }
  double dlogit_draw() const { return calibration ? calibration->a : 1.0; }
  double accept_probability(double raw) const { return sigmoid(logit(raw)); }
};

struct PolicyPair {
  Policy asv;
  Policy cm;
};

struct ActionSample {
  Decision action;
  double prob_of_action;
};

inline double clamp_prob(double p) { return std::clamp(p, kMinProb, kMaxProb); }

/// ACCEPT iff u <= p_accept for u ~ U[0,1).  Out-of-range probabilities are clamped.
inline ActionSample sample_action(double p_accept, Rng& rng) {
  const double p = clamp_prob(p_accept);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const double u = U(rng);
  return u <= p ? ActionSample{Decision::kAccept, p} : ActionSample{Decision::kReject, 1.0 - p};
}

struct TandemAction {
  Decision action;
  double probability;
};

/// The tandem accepts only if both subsystems accept.
inline TandemAction tandem_action_probability(Decision a_asv, Decision a_cm, double p_asv, double p_cm) {
  const bool accept = a_asv == Decision::kAccept && a_cm == Decision::kAccept;
  const double both = p_asv * p_cm;
  return accept ? TandemAction{Decision::kAccept, both} : TandemAction{Decision::kReject, 1.0 - both};
}

enum class RewardKind { kPlusMinusOne, kTdcfSingle };

struct RewardSpec {
  RewardKind kind = RewardKind::kPlusMinusOne;
  TandemCostParams cost;
};

/// Per-trial reward.  For the t-DCF reward an error costs its prior-weighted
/// cost and a correct decision costs nothing.
inline double reward(const RewardSpec& spec, Decision a_tandem, const TrialLabel& label) {
  const bool correct = a_tandem == tandem_ground_truth(label);
  if (spec.kind == RewardKind::kPlusMinusOne) return correct ? 1.0 : -1.0;
  if (correct) return 0.0;
  const auto& p = spec.cost;
  switch (label.trial_class()) {
    case TrialClass::kTarget:
      return -p.c_miss * p.rho_tar;
    case TrialClass::kNontarget:
      return -p.c_fa * p.rho_non;
    case TrialClass::kSpoof:
      return -p.c_fa_spoof * p.rho_spoof;
  }
  return 0.0;
}

struct TrainConfig {
  double lr = 1e-4;
  std::size_t batch_size = 64;
  std::size_t epochs = 5;
  bool balanced = true;
  std::uint64_t seed = 0;
  bool reward_baseline = false;     // subtract the batch-mean reward
  bool update_calibration = false;  // let PG steps move (a, b) too
  double soft_temperature = 1.0;
};

/// Records which trials ever contributed to a parameter update.
struct TrialAudit {
  std::unordered_set<std::string> updated_ids;
  std::size_t updates = 0;
  void note(std::span<const Trial* const> batch) {
    for (const Trial* t : batch) updated_ids.insert(t->id);
    ++updates;
  }
};

/// Minibatch source.  Balanced mode draws the class uniformly and then a trial
/// of that class, with replacement.  Otherwise it walks a fresh shuffle.
class BatchSampler {
 public:
  BatchSampler(std::span<const Trial> data, bool balanced) : data_(data), balanced_(balanced) {
    if (data.empty()) throw Error("empty training set");
    for (const auto& t : data) pools_[static_cast<int>(t.label.trial_class())].push_back(&t);
    if (balanced)
      for (const auto& p : pools_)
        if (p.empty()) throw Error("balanced sampling needs all three trial classes");
  }

  std::size_t batches_per_epoch(std::size_t batch_size) const { return (data_.size() + batch_size - 1) / batch_size; }

  void start_epoch(Rng& rng) {
    if (balanced_) return;
    order_.clear();
    for (const auto& t : data_) order_.push_back(&t);
    std::shuffle(order_.begin(), order_.end(), rng);
    cursor_ = 0;
  }

  std::vector<const Trial*> next(std::size_t batch_size, Rng& rng) {
    std::vector<const Trial*> out;
    out.reserve(batch_size);
    if (balanced_) {
      std::uniform_int_distribution<int> cls(0, 2);
      for (std::size_t i = 0; i < batch_size; ++i) {
        const auto& pool = pools_[cls(rng)];
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        out.push_back(pool[pick(rng)]);
      }
    } else {
      while (out.size() < batch_size && cursor_ < order_.size()) out.push_back(order_[cursor_++]);
    }
    return out;
  }

 private:
  std::span<const Trial> data_;
  bool balanced_;
  std::array<std::vector<const Trial*>, 3> pools_;
  std::vector<const Trial*> order_;
  std::size_t cursor_ = 0;
};

/// Sampled decisions of one trial, frozen for the surrogate.
struct TrialActions {
  Decision asv;
  Decision cm;
  double reward;
};

struct PolicyGrads {
  GradientTape asv;
  GradientTape cm;
  double asv_a = 0, asv_b = 0, cm_a = 0, cm_b = 0;  // calibration head gradients

  explicit PolicyGrads(const PolicyPair& pair) : asv(pair.asv.scorer), cm(pair.cm.scorer) {}
};

namespace detail {

// d log p(action) / d logit for a clamped Bernoulli policy, where p = sigmoid(logit).
inline double clamped_prob_grad(double logit) {
  const double s = sigmoid(logit);
  return (s < kMinProb || s > kMaxProb) ? 0.0 : s * (1 - s);
}

inline void add_head_grad(const Policy& pol, double raw, double d_logit, double& g_a, double& g_b) {
  if (!pol.calibration) return;
  g_a += d_logit * raw;
  g_b += d_logit;
}

}  // namespace detail

/// Policy-gradient surrogate  (1/B) sum_i r_i log p_tandem,i  at frozen actions.
/// With `grads`, accumulates its gradient w.r.t. all policy parameters.
inline double pg_surrogate(const PolicyPair& pair, std::span<const Trial* const> batch,
                           std::span<const TrialActions> actions, PolicyGrads* grads) {
  if (batch.size() != actions.size()) throw Error("batch/action size mismatch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double total = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Trial& t = *batch[i];
    const auto& act = actions[i];
    ForwardCache ca, cc;
    const double raw_a = forward(pair.asv.scorer, t.x_asv, grads ? &ca : nullptr);
    const double raw_c = forward(pair.cm.scorer, t.x_cm, grads ? &cc : nullptr);
    const double za = pair.asv.logit(raw_a), zc = pair.cm.logit(raw_c);
    const double pa = clamp_prob(sigmoid(za)), pc = clamp_prob(sigmoid(zc));
    const TandemAction ta = tandem_action_probability(act.asv, act.cm, pa, pc);
    total += inv_b * std::log(ta.probability) * act.reward;
    if (!grads || act.reward == 0.0) continue;

    // d log p_tandem / d p_asv and / d p_cm
    double dl_pa, dl_pc;
    if (ta.action == Decision::kAccept) {
      dl_pa = 1.0 / pa;
      dl_pc = 1.0 / pc;
    } else {
      dl_pa = -pc / ta.probability;
      dl_pc = -pa / ta.probability;
    }
    const double scale = inv_b * act.reward;
    const double dza = scale * dl_pa * detail::clamped_prob_grad(za);
    const double dzc = scale * dl_pc * detail::clamped_prob_grad(zc);
    backward(pair.asv.scorer, ca, dza * pair.asv.dlogit_draw(), grads->asv);
    backward(pair.cm.scorer, cc, dzc * pair.cm.dlogit_draw(), grads->cm);
    detail::add_head_grad(pair.asv, raw_a, dza, grads->asv_a, grads->asv_b);
    detail::add_head_grad(pair.cm, raw_c, dzc, grads->cm_a, grads->cm_b);
  }
  return total;
}

/// Samples both subsystem actions for every trial in the batch and scores them.
inline std::vector<TrialActions> sample_tandem_actions(const PolicyPair& pair, std::span<const Trial* const> batch,
                                                       const RewardSpec& spec, Rng& rng) {
  std::vector<TrialActions> out;
  out.reserve(batch.size());
  for (const Trial* t : batch) {
    const double pa = pair.asv.accept_probability(forward(pair.asv.scorer, t->x_asv));
    const double pc = pair.cm.accept_probability(forward(pair.cm.scorer, t->x_cm));
    const auto sa = sample_action(pa, rng);
    const auto sc = sample_action(pc, rng);
    const auto ta = tandem_action_probability(sa.action, sc.action, pa, pc);
    out.push_back({sa.action, sc.action, reward(spec, ta.action, t->label)});
  }
  return out;
}

/// Per-batch telemetry or per-epoch evaluation row.  Missing metrics are NaN.
struct TelemetryRow {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::string split;
  double asv_eer = std::numeric_limits<double>::quiet_NaN();
  double cm_eer = std::numeric_limits<double>::quiet_NaN();
  double min_norm_tdcf = std::numeric_limits<double>::quiet_NaN();
  double train_loss = std::numeric_limits<double>::quiet_NaN();
};

/// Mutable state threaded through one training run.
struct TrainContext {
  Rng rng;
  std::size_t step = 0;
  std::size_t epoch = 0;
  TrialAudit* audit = nullptr;

  explicit TrainContext(std::uint64_t seed) : rng(seed) {}
};

inline void apply_head_step(Policy& pol, double g_a, double g_b, double lr) {
  if (!pol.calibration) return;
  if (!std::isfinite(g_a) || !std::isfinite(g_b)) throw Error("non-finite calibration gradient");
  pol.calibration->a += lr * g_a;
  pol.calibration->b += lr * g_b;
}

/// One epoch of REINFORCE over `data`: sample, reward, one ascent step per minibatch.
inline std::vector<TelemetryRow> reinforce_epoch(PolicyPair& pair, std::span<const Trial> data,
                                                 const RewardSpec& spec, const TrainConfig& cfg, TrainContext& ctx) {
  if (spec.kind == RewardKind::kTdcfSingle) require_valid(spec.cost);
  BatchSampler sampler(data, cfg.balanced);
  sampler.start_epoch(ctx.rng);
  std::vector<TelemetryRow> rows;
  const std::size_t n_batches = sampler.batches_per_epoch(cfg.batch_size);
  for (std::size_t bi = 0; bi < n_batches; ++bi) {
    auto batch = sampler.next(cfg.batch_size, ctx.rng);
    if (batch.empty()) break;
    auto actions = sample_tandem_actions(pair, batch, spec, ctx.rng);
    if (cfg.reward_baseline) {
      double mean = 0;
      for (const auto& a : actions) mean += a.reward / actions.size();
      for (auto& a : actions) a.reward -= mean;
    }
    PolicyGrads g(pair);
    const double surrogate = pg_surrogate(pair, batch, actions, &g);
    if (!std::isfinite(surrogate)) throw Error("non-finite policy-gradient surrogate at step " + std::to_string(ctx.step));
    sgd_step(pair.asv.scorer, g.asv, cfg.lr, StepDirection::kAscent);
    sgd_step(pair.cm.scorer, g.cm, cfg.lr, StepDirection::kAscent);
    if (cfg.update_calibration) {
      apply_head_step(pair.asv, g.asv_a, g.asv_b, cfg.lr);
      apply_head_step(pair.cm, g.cm_a, g.cm_b, cfg.lr);
    }
    if (ctx.audit) ctx.audit->note(batch);
    ++ctx.step;
    TelemetryRow row;
    row.step = ctx.step;
    row.epoch = ctx.epoch;
    row.split = "train";
    row.train_loss = -surrogate;
    rows.push_back(row);
  }
  return rows;
}

/// Binary cross-entropy on a raw logit and its derivative.
struct BceTerm {
  double loss;
  double d_score;
};

inline BceTerm bce(double score, bool positive) {
  return positive ? BceTerm{softplus(-score), sigmoid(score) - 1.0} : BceTerm{softplus(score), sigmoid(score)};
}

/// Mean cross-entropy of one scorer over selected trials.  `pick` chooses the
/// input and label for each trial, returning false to skip it.
template <typename Pick>
double bce_loss(const Scorer& s, std::span<const Trial* const> batch, Pick pick, GradientTape* tape) {
  std::size_t n = 0;
  for (const Trial* t : batch) {
    std::span<const double> x;
    bool pos;
    n += pick(*t, x, pos);
  }
  if (n == 0) return 0.0;
  double total = 0;
  for (const Trial* t : batch) {
    std::span<const double> x;
    bool pos;
    if (!pick(*t, x, pos)) continue;
    ForwardCache c;
    const double sc = forward(s, x, tape ? &c : nullptr);
    const auto term = bce(sc, pos);
    total += term.loss / n;
    if (tape) backward(s, c, term.d_score / n, *tape);
  }
  return total;
}

/// ASV task: target vs nontarget on bonafide trials only.
inline bool pick_asv(const Trial& t, std::span<const double>& x, bool& positive) {
  if (t.label.cm() == CmLabel::kSpoof) return false;
  x = t.x_asv;
  positive = t.label.asv() == AsvLabel::kTarget;
  return true;
}

/// CM task: bonafide vs spoof.
inline bool pick_cm(const Trial& t, std::span<const double>& x, bool& positive) {
  x = t.x_cm;
  positive = t.label.cm() == CmLabel::kBonafide;
  return true;
}

/// Separate (non-tandem) cross-entropy finetuning of both subsystems.
inline std::vector<TelemetryRow> finetune_epoch(PolicyPair& pair, std::span<const Trial> data,
                                                const TrainConfig& cfg, TrainContext& ctx) {
  BatchSampler sampler(data, cfg.balanced);
  sampler.start_epoch(ctx.rng);
  std::vector<TelemetryRow> rows;
  const std::size_t n_batches = sampler.batches_per_epoch(cfg.batch_size);
  for (std::size_t bi = 0; bi < n_batches; ++bi) {
    auto batch = sampler.next(cfg.batch_size, ctx.rng);
    if (batch.empty()) break;
    GradientTape ga(pair.asv.scorer), gc(pair.cm.scorer);
    const double la = bce_loss(pair.asv.scorer, batch, pick_asv, &ga);
    const double lc = bce_loss(pair.cm.scorer, batch, pick_cm, &gc);
    if (!std::isfinite(la + lc)) throw Error("non-finite cross-entropy at step " + std::to_string(ctx.step));
    sgd_step(pair.asv.scorer, ga, cfg.lr, StepDirection::kDescent);
    sgd_step(pair.cm.scorer, gc, cfg.lr, StepDirection::kDescent);
    if (ctx.audit) ctx.audit->note(batch);
    ++ctx.step;
    TelemetryRow row;
    row.step = ctx.step;
    row.epoch = ctx.epoch;
    row.split = "train";
    row.train_loss = la + lc;
    rows.push_back(row);
  }
  return rows;
}

/// One epoch of soft t-DCF minimisation.
inline std::vector<TelemetryRow> soft_tdcf_epoch(PolicyPair& pair, SoftThresholds& taus, std::span<const Trial> data,
                                                 const TandemCostParams& p, const TrainConfig& cfg,
                                                 TrainContext& ctx) {
  BatchSampler sampler(data, cfg.balanced);
  sampler.start_epoch(ctx.rng);
  std::vector<TelemetryRow> rows;
  const std::size_t n_batches = sampler.batches_per_epoch(cfg.batch_size);
  for (std::size_t bi = 0; bi < n_batches; ++bi) {
    auto batch = sampler.next(cfg.batch_size, ctx.rng);
    if (batch.empty()) break;
    std::size_t n[3] = {0, 0, 0};
    for (const Trial* t : batch) ++n[static_cast<int>(t->label.trial_class())];
    if (!n[0] || !n[1] || !n[2]) continue;  // a tiny unbalanced batch may miss a class
    const double loss = soft_tdcf_train_step(pair.asv.scorer, pair.cm.scorer, taus, batch, p, cfg.lr,
                                             cfg.soft_temperature);
    if (ctx.audit) ctx.audit->note(batch);
    ++ctx.step;
    TelemetryRow row;
    row.step = ctx.step;
    row.epoch = ctx.epoch;
    row.split = "train";
    row.train_loss = loss;
    rows.push_back(row);
  }
  return rows;
}

enum class Method { kFinetune, kReinforce, kReinforceCalib, kReinforceTdcf, kReinforceCalibTdcf, kSoftTdcf };

inline constexpr std::array<Method, 6> kAllMethods = {Method::kFinetune,      Method::kReinforce,
                                                     Method::kReinforceCalib, Method::kReinforceTdcf,
                                                     Method::kReinforceCalibTdcf, Method::kSoftTdcf};

inline const char* to_string(Method m) {
  switch (m) {
    case Method::kFinetune: return "FINETUNE";
    case Method::kReinforce: return "REINFORCE";
    case Method::kReinforceCalib: return "REINFORCE_CALIB";
    case Method::kReinforceTdcf: return "REINFORCE_TDCF";
    case Method::kReinforceCalibTdcf: return "REINFORCE_CALIB_TDCF";
    case Method::kSoftTdcf: return "SOFT_TDCF";
  }
  return "?";
}

inline std::string method_names() {
  std::string s;
  for (auto m : kAllMethods) s += (s.empty() ? "" : ", ") + std::string(to_string(m));
  return s;
}

inline Method parse_method(const std::string& name) {
  for (auto m : kAllMethods)
    if (name == to_string(m)) return m;
  throw Error("unknown method '" + name + "'; valid methods: " + method_names());
}

inline bool uses_calibration(Method m) { return m == Method::kReinforceCalib || m == Method::kReinforceCalibTdcf; }

/// Scores every trial with the raw outputs of both scorers.
inline ScoreSet score_trials(const PolicyPair& pair, std::span<const Trial> trials) {
  std::vector<ScoreEntry> entries;
  entries.reserve(trials.size());
  for (const auto& t : trials)
    entries.push_back({t.id, t.label, forward(pair.asv.scorer, t.x_asv), forward(pair.cm.scorer, t.x_cm)});
  return ScoreSet(std::move(entries));
}

/// Fits calibration heads on pretraining-side scores.  ASV priors are the
/// target/nontarget priors renormalised; CM priors are bonafide
/// (target + nontarget) vs spoof.
inline void attach_calibrators(PolicyPair& pair, std::span<const Trial> calib_data, const TandemCostParams& p) {
  ScoreSet s = score_trials(pair, calib_data);
  const double asv_pos = p.rho_tar / (p.rho_tar + p.rho_non);
  pair.asv.calibration = train_calibrator(asv_bonafide_scores(s), asv_pos, 1.0 - asv_pos);
  const double cm_pos = p.rho_tar + p.rho_non;
  pair.cm.calibration = train_calibrator(cm_scores(s), cm_pos, 1.0 - cm_pos);
}

/// Data a run trains and evaluates on.  Only `dev` is ever used for updates.
struct Splits {
  std::vector<Trial> train;  // pretraining side; used only to fit calibrators
  std::vector<Trial> dev;
  std::vector<Trial> eval;
  std::set<std::string> excluded_attacks;  // also evaluate eval without these
};

struct RunRecord {
  std::string method;
  std::uint64_t seed = 0;
  std::vector<TelemetryRow> rows;
  std::map<std::string, MetricReport> initial;
  std::map<std::string, MetricReport> final;
  nlohmann::ordered_json config;
  std::optional<SoftThresholds> soft_thresholds;
};

struct RunOutput {
  RunRecord record;
  PolicyPair pair;
};

inline TelemetryRow eval_row(const MetricReport& r, std::size_t step, std::size_t epoch, const std::string& split) {
  TelemetryRow row;
  row.step = step;
  row.epoch = epoch;
  row.split = split;
  row.asv_eer = r.asv_eer;
  row.cm_eer = r.cm_eer;
  row.min_norm_tdcf = r.min_norm_tdcf;
  return row;
}

/// Dispatches one of the six tandem optimisation methods, evaluating dev,
/// eval and (when attacks are excluded) filtered eval before training and
/// after every epoch.
inline RunOutput run_method(Method method, const PolicyPair& pretrained, const Splits& splits, const TrainConfig& cfg,
                            const TandemCostParams& p, TrialAudit* audit = nullptr,
                            TdcfNormalization norm = TdcfNormalization::kBestTrivialCm) {
  require_valid(p);
  RunOutput out;
  out.pair = pretrained;
  auto& rec = out.record;
  rec.method = to_string(method);
  rec.seed = cfg.seed;

  auto evaluate_all = [&](std::size_t step, std::size_t epoch, std::map<std::string, MetricReport>& dst) {
    dst.clear();
    dst["dev"] = compute_report(score_trials(out.pair, splits.dev), p, norm);
    ScoreSet eval_scores = score_trials(out.pair, splits.eval);
    dst["eval"] = compute_report(eval_scores, p, norm);
    if (!splits.excluded_attacks.empty())
      dst["eval_filtered"] = compute_report(filter_attacks(eval_scores, splits.excluded_attacks), p, norm);
    for (const auto& [name, rep] : dst) rec.rows.push_back(eval_row(rep, step, epoch, name));
  };

  TrainContext ctx(cfg.seed);
  ctx.audit = audit;
  evaluate_all(0, 0, rec.initial);
  rec.final = rec.initial;

  if (uses_calibration(method)) attach_calibrators(out.pair, splits.train, p);

  SoftThresholds taus;
  if (method == Method::kSoftTdcf) {
    ScoreSet dev_scores = score_trials(out.pair, splits.dev);
    taus.tau_asv = eer(asv_bonafide_scores(dev_scores)).threshold;
    taus.tau_cm = eer(cm_scores(dev_scores)).threshold;
  }

  RewardSpec spec;
  spec.cost = p;
  spec.kind = (method == Method::kReinforceTdcf || method == Method::kReinforceCalibTdcf) ? RewardKind::kTdcfSingle
                                                                                        : RewardKind::kPlusMinusOne;
  for (std::size_t e = 1; e <= cfg.epochs; ++e) {
    ctx.epoch = e;
    std::vector<TelemetryRow> rows;
    switch (method) {
      case Method::kFinetune:
        rows = finetune_epoch(out.pair, splits.dev, cfg, ctx);
        break;
      case Method::kSoftTdcf:
        rows = soft_tdcf_epoch(out.pair, taus, splits.dev, p, cfg, ctx);
        break;
      default:
        rows = reinforce_epoch(out.pair, splits.dev, spec, cfg, ctx);
        break;
    }
    rec.rows.insert(rec.rows.end(), rows.begin(), rows.end());
    evaluate_all(ctx.step, e, rec.final);
  }
  if (method == Method::kSoftTdcf) rec.soft_thresholds = taus;
  return out;
}

// ---- checkpoints ----

inline nlohmann::ordered_json to_json(const Policy& pol) {
  auto j = to_json(pol.scorer);
  if (pol.calibration) j["calibration"] = to_json(*pol.calibration);
  return j;
}

inline Policy policy_from_json(const nlohmann::ordered_json& j) {
  Policy pol{scorer_from_json(j), std::nullopt};
  if (j.contains("calibration")) pol.calibration = calibrator_from_json(j.at("calibration"));
  return pol;
}

inline nlohmann::ordered_json to_json(const PolicyPair& pair, const std::optional<SoftThresholds>& taus = {}) {
  nlohmann::ordered_json j;
  j["format"] = "tandem-policy-pair";
  j["version"] = 1;
  j["asv"] = to_json(pair.asv);
  j["cm"] = to_json(pair.cm);
  if (taus) j["soft_thresholds"] = {{"tau_asv", taus->tau_asv}, {"tau_cm", taus->tau_cm}};
  return j;
}

inline PolicyPair policy_pair_from_json(const nlohmann::ordered_json& j) {
  if (j.value("format", std::string()) != "tandem-policy-pair") throw Error("not a policy-pair checkpoint");
  return {policy_from_json(j.at("asv")), policy_from_json(j.at("cm"))};
}

}  // namespace tandem
