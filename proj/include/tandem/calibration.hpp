// include/tandem/calibration.hpp

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
#include <sstream>

#include "json.hpp"
#include "tandem/types.hpp"

namespace tandem {

inline double sigmoid(double s) {
  if (s >= 0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

/// Affine score-to-LLR map plus the prior log-odds used at decision time.
struct Calibrator {
  double a = 1.0;
  double b = 0.0;
  double prior_log_odds = 0.0;

  double llr(double raw) const { return a * raw + b; }
  /// Raw-score threshold equivalent to accept_probability > 0.5.
  double raw_threshold() const { return -(b + prior_log_odds) / a; }
};

/// Posterior probability of the accept hypothesis.
inline double accept_probability(const Calibrator& c, double raw_score) {
  return sigmoid(c.llr(raw_score) + c.prior_log_odds);
}

/// Value and derivatives of the prior-weighted logistic calibration loss
///   p_pos/|P| sum_P softplus(-(a s + b + o)) + p_neg/|N| sum_N softplus(a s + b + o)
/// with o = log(p_pos / p_neg).
struct CalibrationLoss {
  double value = 0;
  double d_a = 0, d_b = 0;
  double h_aa = 0, h_ab = 0, h_bb = 0;
};

inline CalibrationLoss calibration_loss(std::span<const LabeledScore> scores, double a, double b, double p_pos) {
  std::size_t n_pos = 0, n_neg = 0;
  for (const auto& s : scores) (s.positive ? n_pos : n_neg)++;
  if (n_pos == 0 || n_neg == 0) throw Error("calibration needs both classes");
  const double offset = std::log(p_pos / (1.0 - p_pos));
  const double w_pos = p_pos / n_pos, w_neg = (1.0 - p_pos) / n_neg;
  CalibrationLoss L;
  for (const auto& s : scores) {
    const double z = a * s.score + b + offset;
    const double w = s.positive ? w_pos : w_neg;
    const double sz = sigmoid(z);
    // d/dz of softplus(-z) is sz - 1; of softplus(z) is sz.
    const double dz = s.positive ? sz - 1.0 : sz;
    L.value += w * (s.positive ? softplus(-z) : softplus(z));
    L.d_a += w * dz * s.score;
    L.d_b += w * dz;
    const double h = w * sz * (1.0 - sz);
    L.h_aa += h * s.score * s.score;
    L.h_ab += h * s.score;
    L.h_bb += h;
  }
  return L;
}

struct CalibratorFit {
  Calibrator calibrator;
  double loss;
  double grad_norm;
  int iterations;
};

/// Fits (a, b) by damped Newton iterations with backtracking until the
/// gradient norm falls below `tol` or `max_iter` is reached.  A fit with
/// a <= 0 means the scores are anti-oriented and is rejected.
inline CalibratorFit train_calibrator_detailed(std::span<const LabeledScore> scores, double p_pos, double p_neg,
                                               double tol = 1e-6, int max_iter = 10000) {
  if (!(p_pos > 0 && p_neg > 0) || std::abs(p_pos + p_neg - 1.0) > 1e-9)
    throw Error("calibration priors must be positive and sum to 1");
  for (const auto& s : scores)
    if (!std::isfinite(s.score)) throw Error("non-finite calibration score");
  double a = 1.0, b = 0.0;
  CalibrationLoss L = calibration_loss(scores, a, b, p_pos);
  int it = 0;
  double gnorm = std::hypot(L.d_a, L.d_b);
  for (; it < max_iter && gnorm >= tol; ++it) {
    const double det = L.h_aa * L.h_bb - L.h_ab * L.h_ab;
    double step_a, step_b;
    if (det > 1e-300 && L.h_aa > 0) {
      step_a = -(L.h_bb * L.d_a - L.h_ab * L.d_b) / det;
      step_b = -(-L.h_ab * L.d_a + L.h_aa * L.d_b) / det;
    } else {
      step_a = -L.d_a;
      step_b = -L.d_b;
    }
    double t = 1.0;
    const double slope = L.d_a * step_a + L.d_b * step_b;
    CalibrationLoss next;
    for (int ls = 0; ls < 60; ++ls, t *= 0.5) {
      next = calibration_loss(scores, a + t * step_a, b + t * step_b, p_pos);
      if (next.value <= L.value + 1e-4 * t * slope) break;
    }
    if (!(next.value <= L.value)) break;  // no further progress representable
    a += t * step_a;
    b += t * step_b;
    L = next;
    gnorm = std::hypot(L.d_a, L.d_b);
  }
  if (gnorm >= tol) {
    std::ostringstream os;
    os << "calibration did not converge: gradient norm " << gnorm << " after " << it << " iterations";
    throw Error(os.str());
  }
  if (!(a > 0)) {
    std::ostringstream os;
    os << "calibration produced non-positive scale a=" << a << " (scores anti-oriented)";
    throw Error(os.str());
  }
  return {{a, b, std::log(p_pos / p_neg)}, L.value, gnorm, it};
}

inline Calibrator train_calibrator(std::span<const LabeledScore> scores, double p_pos, double p_neg) {
  return train_calibrator_detailed(scores, p_pos, p_neg).calibrator;
}

inline nlohmann::ordered_json to_json(const Calibrator& c) {
  return {{"a", c.a}, {"b", c.b}, {"prior_log_odds", c.prior_log_odds}};
}

inline Calibrator calibrator_from_json(const nlohmann::ordered_json& j) {
  Calibrator c{j.at("a").get<double>(), j.at("b").get<double>(), j.at("prior_log_odds").get<double>()};
  if (!std::isfinite(c.a) || !std::isfinite(c.b) || !std::isfinite(c.prior_log_odds))
    throw Error("non-finite calibration parameters");
  return c;
}

}  // namespace tandem
