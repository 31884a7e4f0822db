// include/tandem/types.hpp

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
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

namespace tandem {

/// Every recoverable failure in the library is reported with this type.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

enum class AsvLabel { kTarget, kNontarget };
enum class CmLabel { kBonafide, kSpoof };
enum class Decision { kReject, kAccept };

inline const char* to_string(AsvLabel l) { return l == AsvLabel::kTarget ? "target" : "nontarget"; }
inline const char* to_string(CmLabel l) { return l == CmLabel::kBonafide ? "bonafide" : "spoof"; }
inline const char* to_string(Decision d) { return d == Decision::kAccept ? "accept" : "reject"; }

/// The three trial classes a tandem system can encounter. Nontarget spoofs
/// are not representable.
enum class TrialClass { kTarget, kNontarget, kSpoof };

/// Ground truth for one trial.  A spoof always claims the target identity
/// and always carries an attack id; a bonafide trial never does.
class TrialLabel {
 public:
  static TrialLabel target() { return TrialLabel(AsvLabel::kTarget, CmLabel::kBonafide, std::nullopt); }
  static TrialLabel nontarget() { return TrialLabel(AsvLabel::kNontarget, CmLabel::kBonafide, std::nullopt); }
  static TrialLabel spoof(std::string attack_id) {
    return TrialLabel(AsvLabel::kTarget, CmLabel::kSpoof, std::move(attack_id));
  }

  /// Validating constructor for labels read from files.
  TrialLabel(AsvLabel asv, CmLabel cm, std::optional<std::string> attack_id)
      : asv_(asv), cm_(cm), attack_id_(std::move(attack_id)) {
    if (cm_ == CmLabel::kSpoof && asv_ != AsvLabel::kTarget)
      throw Error("spoof trials must carry asv_label=target");
    if ((cm_ == CmLabel::kSpoof) != attack_id_.has_value())
      throw Error("attack_id must be present exactly for spoof trials");
    if (attack_id_ && (attack_id_->empty() || *attack_id_ == "-"))
      throw Error("attack_id must be a non-empty token other than '-'");
  }

  AsvLabel asv() const { return asv_; }
  CmLabel cm() const { return cm_; }
  const std::optional<std::string>& attack_id() const { return attack_id_; }

  TrialClass trial_class() const {
    if (cm_ == CmLabel::kSpoof) return TrialClass::kSpoof;
    return asv_ == AsvLabel::kTarget ? TrialClass::kTarget : TrialClass::kNontarget;
  }

  bool operator==(const TrialLabel&) const = default;

 private:
  AsvLabel asv_;
  CmLabel cm_;
  std::optional<std::string> attack_id_;
};

/// Accept iff the trial is a genuine target.
inline Decision tandem_ground_truth(const TrialLabel& label) {
  return (label.asv() == AsvLabel::kTarget && label.cm() == CmLabel::kBonafide) ? Decision::kAccept
                                                                                : Decision::kReject;
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

struct Trial {
  std::string id;
  std::vector<double> x_asv;
  std::vector<double> x_cm;
  TrialLabel label;

  /// Throws if feature sizes do not match the configured dims or any entry is non-finite.
  void validate(std::size_t d_asv, std::size_t d_cm) const {
    if (x_asv.size() != d_asv || x_cm.size() != d_cm) {
      std::ostringstream os;
      os << "trial " << id << ": feature dims (" << x_asv.size() << "," << x_cm.size()
         << ") != expected (" << d_asv << "," << d_cm << ")";
      throw Error(os.str());
    }
    if (!all_finite(x_asv) || !all_finite(x_cm)) throw Error("trial " + id + ": non-finite feature");
  }
};

inline Trial make_trial(std::string id, std::vector<double> x_asv, std::vector<double> x_cm, TrialLabel label,
                        std::size_t d_asv, std::size_t d_cm) {
  Trial t{std::move(id), std::move(x_asv), std::move(x_cm), std::move(label)};
  t.validate(d_asv, d_cm);
  return t;
}

/// Costs and priors of the tandem detection cost function.
struct TandemCostParams {
  double c_miss = 1.0;
  double c_fa = 10.0;
  double c_fa_spoof = 10.0;
  double rho_tar = 0.9405;
  double rho_non = 0.0095;
  double rho_spoof = 0.05;

  /// Largest cost a single trial can incur.
  double max_single_cost() const {
    return std::max({c_miss * rho_tar, c_fa * rho_non, c_fa_spoof * rho_spoof});
  }
};

/// Returns an empty optional when valid, otherwise a description of the first violated invariant.
inline std::optional<std::string> validate_cost_params(const TandemCostParams& p) {
  for (double c : {p.c_miss, p.c_fa, p.c_fa_spoof}) {
    if (!std::isfinite(c)) return "non-finite cost";
    if (c < 0) return "negative cost";
    if (c == 0) return "zero cost";
  }
  for (double r : {p.rho_tar, p.rho_non, p.rho_spoof})
    if (!(r >= 0.0 && r <= 1.0)) return "prior out of range [0,1]";
  double sum = p.rho_tar + p.rho_non + p.rho_spoof;
  if (std::abs(sum - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "priors sum to " << sum;
    return os.str();
  }
  return std::nullopt;
}

inline void require_valid(const TandemCostParams& p) {
  if (auto err = validate_cost_params(p)) throw Error("invalid cost params: " + *err);
}

struct ScoreEntry {
  std::string trial_id;
  TrialLabel label;
  double asv_score;
  double cm_score;
};

/// Aligned per-trial scores of both subsystems.
class ScoreSet {
 public:
  ScoreSet() = default;
  explicit ScoreSet(std::vector<ScoreEntry> entries) : entries_(std::move(entries)) {
    std::unordered_set<std::string> seen;
    for (const auto& e : entries_) {
      if (!std::isfinite(e.asv_score) || !std::isfinite(e.cm_score))
        throw Error("non-finite score for trial " + e.trial_id);
      if (!seen.insert(e.trial_id).second) throw Error("duplicate trial id " + e.trial_id);
    }
  }

  const std::vector<ScoreEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  std::size_t count(TrialClass c) const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.label.trial_class() == c;
    return n;
  }

  /// Throws unless all three trial classes are present.
  void require_all_classes() const {
    if (count(TrialClass::kTarget) == 0) throw Error("missing target class");
    if (count(TrialClass::kNontarget) == 0) throw Error("missing nontarget class");
    if (count(TrialClass::kSpoof) == 0) throw Error("missing spoof class");
  }

 private:
  std::vector<ScoreEntry> entries_;
};

/// Rates of the four tandem error events.
///   a: target accepted by CM, rejected by ASV
///   b: nontarget accepted by both
///   c: spoof accepted by both
///   d: target rejected by CM
struct ErrorRates {
  double p_a = 0;
  double p_b = 0;
  double p_c = 0;
  double p_d = 0;
};

/// A (score, is_positive) pair, the input of every single-detector metric.
struct LabeledScore {
  double score;
  bool positive;
};

}  // namespace tandem
