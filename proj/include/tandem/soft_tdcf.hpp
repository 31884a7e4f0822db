// include/tandem/soft_tdcf.hpp

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
#include <span>
#include <vector>

#include "tandem/calibration.hpp"
#include "tandem/metrics.hpp"
#include "tandem/nn.hpp"
#include "tandem/types.hpp"

namespace tandem {

/// Trainable decision thresholds of the two subsystems.
struct SoftThresholds {
  double tau_asv = 0;
  double tau_cm = 0;
};

/// Sigmoid-smoothed miss and false-accept rates.
inline MissFa soft_rates(std::span<const LabeledScore> scores, double tau, double temperature = 1.0) {
  require_both_classes(scores);
  double miss = 0, fa = 0;
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : scores) {
    if (s.positive) {
      miss += sigmoid((tau - s.score) / temperature);
      ++n_pos;
    } else {
      fa += sigmoid((s.score - tau) / temperature);
      ++n_neg;
    }
  }
  return {miss / n_pos, fa / n_neg};
}

struct SoftTrialScores {
  TrialClass cls;
  double asv;
  double cm;
};

struct SoftTdcfResult {
  double loss = 0;
  ErrorRates rates;             // soft p_a .. p_d
  std::vector<double> d_asv;    // d loss / d asv score, per trial
  std::vector<double> d_cm;     // d loss / d cm score, per trial
  double d_tau_asv = 0;
  double d_tau_cm = 0;
};

/// Soft t-DCF: every indicator of the joint-count error rates is replaced by
/// a sigmoid of the signed distance to the threshold, and joint events by the
/// product of the two subsystem sigmoids.  With u = sigma((cm - tau_cm)/T) and
/// v = sigma((asv - tau_asv)/T):
///   target:    p_d += 1 - u,  p_a += u (1 - v)
///   nontarget: p_b += u v
///   spoof:     p_c += u v
inline SoftTdcfResult soft_tdcf_loss(std::span<const SoftTrialScores> batch, const SoftThresholds& taus,
                                     const TandemCostParams& p, double temperature = 1.0) {
  std::size_t n[3] = {0, 0, 0};
  for (const auto& t : batch) ++n[static_cast<int>(t.cls)];
  if (n[0] == 0) throw Error("missing target class");
  if (n[1] == 0) throw Error("missing nontarget class");
  if (n[2] == 0) throw Error("missing spoof class");

  const double w_miss = p.c_miss * p.rho_tar / n[0];
  const double w_fa = p.c_fa * p.rho_non / n[1];
  const double w_spoof = p.c_fa_spoof * p.rho_spoof / n[2];

  SoftTdcfResult r;
  r.d_asv.assign(batch.size(), 0.0);
  r.d_cm.assign(batch.size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& t = batch[i];
    const double u = sigmoid((t.cm - taus.tau_cm) / temperature);
    const double v = sigmoid((t.asv - taus.tau_asv) / temperature);
    const double du = u * (1 - u) / temperature;  // du/dcm
    const double dv = v * (1 - v) / temperature;  // dv/dasv
    switch (t.cls) {
      case TrialClass::kTarget:
        r.rates.p_d += (1 - u) / n[0];
        r.rates.p_a += u * (1 - v) / n[0];
        // p_a + p_d = 1 - u v per trial
        r.d_cm[i] = -w_miss * v * du;
        r.d_asv[i] = -w_miss * u * dv;
        break;
      case TrialClass::kNontarget:
        r.rates.p_b += u * v / n[1];
        r.d_cm[i] = w_fa * v * du;
        r.d_asv[i] = w_fa * u * dv;
        break;
      case TrialClass::kSpoof:
        r.rates.p_c += u * v / n[2];
        r.d_cm[i] = w_spoof * v * du;
        r.d_asv[i] = w_spoof * u * dv;
        break;
    }
    // Everything depends on (score - tau).
    r.d_tau_asv -= r.d_asv[i];
    r.d_tau_cm -= r.d_cm[i];
  }
  r.loss = tdcf(r.rates, p);
  return r;
}

/// One descent step of both scorers and both thresholds on the soft t-DCF of
/// `batch`.  Returns the loss before the step.
inline double soft_tdcf_train_step(Scorer& asv, Scorer& cm, SoftThresholds& taus, std::span<const Trial* const> batch,
                                   const TandemCostParams& p, double lr, double temperature = 1.0) {
  std::vector<ForwardCache> asv_cache(batch.size()), cm_cache(batch.size());
  std::vector<SoftTrialScores> scores;
  scores.reserve(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Trial& t = *batch[i];
    double sa = forward(asv, t.x_asv, &asv_cache[i]);
    double sc = forward(cm, t.x_cm, &cm_cache[i]);
    scores.push_back({t.label.trial_class(), sa, sc});
  }
  SoftTdcfResult r = soft_tdcf_loss(scores, taus, p, temperature);
  if (!std::isfinite(r.loss)) throw Error("non-finite soft t-DCF loss");
  GradientTape g_asv(asv), g_cm(cm);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    backward(asv, asv_cache[i], r.d_asv[i], g_asv);
    backward(cm, cm_cache[i], r.d_cm[i], g_cm);
  }
  if (!std::isfinite(r.d_tau_asv) || !std::isfinite(r.d_tau_cm)) throw Error("non-finite threshold gradient");
  sgd_step(asv, g_asv, lr, StepDirection::kDescent);
  sgd_step(cm, g_cm, lr, StepDirection::kDescent);
  taus.tau_asv -= lr * r.d_tau_asv;
  taus.tau_cm -= lr * r.d_tau_cm;
  return r.loss;
}

}  // namespace tandem
