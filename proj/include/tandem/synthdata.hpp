// include/tandem/synthdata.hpp

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
#include <cstdint>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "tandem/nn.hpp"
#include "tandem/tandem_train.hpp"
#include "tandem/types.hpp"

namespace tandem {

enum class AttackSplit { kSeen, kUnseen, kOutlier };

inline const char* to_string(AttackSplit s) {
  switch (s) {
    case AttackSplit::kSeen: return "seen";
    case AttackSplit::kUnseen: return "unseen";
    case AttackSplit::kOutlier: return "outlier";
  }
  return "?";
}

inline AttackSplit parse_attack_split(const std::string& s) {
  if (s == "seen") return AttackSplit::kSeen;
  if (s == "unseen") return AttackSplit::kUnseen;
  if (s == "outlier") return AttackSplit::kOutlier;
  throw Error("unknown attack split '" + s + "' (expected seen, unseen or outlier)");
}

struct AttackSpec {
  std::string attack_id;
  double asv_effectiveness = 0.8;  // 1: spoof embeddings sit on the target speaker
  double cm_detectability = 0.8;   // 0: spoof CM features equal bonafide ones
  AttackSplit split = AttackSplit::kSeen;
};

enum class SplitName { kTrain, kDev, kEval };

inline const char* to_string(SplitName s) {
  switch (s) {
    case SplitName::kTrain: return "train";
    case SplitName::kDev: return "dev";
    case SplitName::kEval: return "eval";
  }
  return "?";
}

/// Per-split sizes.
struct SplitSizes {
  std::size_t speakers = 10;
  std::size_t trials_per_class = 667;
};

/// Three seen, four unseen and two outlier attacks.
inline std::vector<AttackSpec> default_attacks() {
  return {
      {"A01", 0.80, 0.90, AttackSplit::kSeen},    {"A02", 0.70, 0.80, AttackSplit::kSeen},
      {"A03", 0.85, 0.75, AttackSplit::kSeen},    {"A04", 0.80, 0.85, AttackSplit::kUnseen},
      {"A05", 0.75, 0.70, AttackSplit::kUnseen},  {"A06", 0.85, 0.80, AttackSplit::kUnseen},
      {"A07", 0.90, 0.65, AttackSplit::kUnseen},  {"A08", 0.20, 0.10, AttackSplit::kOutlier},
      {"A09", 0.25, 0.15, AttackSplit::kOutlier},
  };
}

struct WorldConfig {
  std::uint64_t seed = 1;
  std::size_t d_asv = 8;
  std::size_t d_cm = 8;
  SplitSizes train{40, 667};
  SplitSizes dev{10, 667};
  SplitSizes eval{30, 667};
  double speaker_scale = 1.0;      // std of speaker means
  double utterance_noise = 0.4;    // within-speaker std
  double cm_noise = 1.0;           // bonafide CM feature std
  double cm_shift_scale = 8.0;     // spoof mean offset at cm_detectability = 1
  double attack_spread = 0.1;      // attack direction deviation from the shared spoof direction
  // Extra noise on the upper half of the feature dims in dev and eval only,
  // a channel mismatch between pretraining data and deployment data.
  double channel_noise_asv = 0.5;
  double channel_noise_cm = 1.5;
  std::vector<AttackSpec> attacks = default_attacks();
};

inline void validate(const WorldConfig& c) {
  if (c.d_asv == 0 || c.d_cm == 0) throw Error("feature dims must be positive");
  for (const auto* s : {&c.train, &c.dev, &c.eval}) {
    if (s->speakers < 2) throw Error("each split needs at least 2 speakers");
    if (s->trials_per_class == 0) throw Error("trials_per_class must be positive");
  }
  for (double v : {c.speaker_scale, c.utterance_noise, c.cm_noise, c.cm_shift_scale, c.attack_spread,
                   c.channel_noise_asv, c.channel_noise_cm})
    if (!(v >= 0) || !std::isfinite(v)) throw Error("noise and scale parameters must be finite and non-negative");
  if (c.attacks.empty()) throw Error("attack list is empty");
  std::set<std::string> ids;
  bool seen = false, held_out = false;
  for (const auto& a : c.attacks) {
    if (a.attack_id.empty() || a.attack_id == "-") throw Error("invalid attack id");
    if (!ids.insert(a.attack_id).second) throw Error("duplicate attack id " + a.attack_id);
    if (!(a.asv_effectiveness >= 0 && a.asv_effectiveness <= 1)) throw Error(a.attack_id + ": asv_effectiveness not in [0,1]");
    if (!(a.cm_detectability >= 0 && a.cm_detectability <= 1)) throw Error(a.attack_id + ": cm_detectability not in [0,1]");
    (a.split == AttackSplit::kSeen ? seen : held_out) = true;
  }
  if (!seen) throw Error("no seen attacks: train and dev would have no spoofs");
  if (!held_out) throw Error("no unseen or outlier attacks: eval would have no spoofs");
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

/// Seeded generator for a named purpose; independent streams per purpose.
inline Rng derive_rng(std::uint64_t seed, const std::string& purpose) {
  const std::uint64_t h = fnv1a(purpose);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return Rng(seq);
}

struct SplitData {
  SplitName name;
  std::vector<Trial> trials;
  std::vector<std::string> speakers;
  std::vector<std::string> attack_ids;  // attacks present in this split
};

struct World {
  WorldConfig config;
  SplitData train, dev, eval;
  std::vector<double> spoof_direction;                // shared unit direction
  std::vector<std::vector<double>> attack_offsets;    // CM mean shift per attack, aligned with config.attacks

  const SplitData& split(SplitName s) const { return s == SplitName::kTrain ? train : s == SplitName::kDev ? dev : eval; }
};

/// Per-dim CM noise std in a split.
inline std::vector<double> cm_noise_std(const WorldConfig& c, SplitName s) {
  std::vector<double> sd(c.d_cm, c.cm_noise);
  if (s != SplitName::kTrain)
    for (std::size_t d = c.d_cm / 2; d < c.d_cm; ++d) sd[d] = std::hypot(c.cm_noise, c.channel_noise_cm);
  return sd;
}

/// Bayes-optimal bonafide-vs-attack LLR for the CM features of a split.
inline double bayes_cm_llr(const World& w, std::size_t attack_index, SplitName s, std::span<const double> x) {
  const auto sd = cm_noise_std(w.config, s);
  const auto& m = w.attack_offsets.at(attack_index);
  double llr = 0;
  for (std::size_t d = 0; d < x.size(); ++d) llr += ((x[d] - m[d]) * (x[d] - m[d]) - x[d] * x[d]) / (2 * sd[d] * sd[d]);
  return llr;
}

/// Analytic Bayes EER of bonafide vs one attack: Phi(-delta/2), delta the Mahalanobis distance.
inline double bayes_cm_eer(const World& w, std::size_t attack_index, SplitName s) {
  const auto sd = cm_noise_std(w.config, s);
  const auto& m = w.attack_offsets.at(attack_index);
  double d2 = 0;
  for (std::size_t d = 0; d < m.size(); ++d) d2 += m[d] * m[d] / (sd[d] * sd[d]);
  return 0.5 * std::erfc(std::sqrt(d2) / 2 / std::sqrt(2.0));
}

namespace detail {

inline std::vector<double> gaussian_vec(std::size_t n, double sd, Rng& rng) {
  std::normal_distribution<double> N(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = sd * N(rng);
  return v;
}

inline void normalize(std::vector<double>& v) {
  double n = 0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0)
    for (auto& x : v) x /= n;
}

inline SplitData make_split(const World& w, SplitName name, const SplitSizes& sizes, std::size_t& speaker_counter) {
  const auto& c = w.config;
  Rng rng = derive_rng(c.seed, std::string("split/") + to_string(name));
  SplitData out;
  out.name = name;

  std::vector<std::vector<double>> means;
  for (std::size_t i = 0; i < sizes.speakers; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "spk%04zu", speaker_counter++);
    out.speakers.push_back(buf);
    means.push_back(gaussian_vec(c.d_asv, c.speaker_scale, rng));
  }
  std::vector<std::size_t> attacks;
  for (std::size_t k = 0; k < c.attacks.size(); ++k) {
    bool seen = c.attacks[k].split == AttackSplit::kSeen;
    if ((name == SplitName::kEval) != seen) {
      attacks.push_back(k);
      out.attack_ids.push_back(c.attacks[k].attack_id);
    }
  }

  const bool shifted = name != SplitName::kTrain;
  std::normal_distribution<double> N(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick_spk(0, sizes.speakers - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0, sizes.speakers - 2);

  auto utterance = [&](const std::vector<double>& center) {
    std::vector<double> e(c.d_asv);
    for (std::size_t d = 0; d < c.d_asv; ++d) {
      double ch = N(rng) * c.channel_noise_asv;
      e[d] = center[d] + c.utterance_noise * N(rng) + ((shifted && d >= c.d_asv / 2) ? ch : 0.0);
    }
    return e;
  };
  const auto cm_sd = cm_noise_std(c, name);
  auto cm_features = [&](const std::vector<double>* offset) {
    std::vector<double> x(c.d_cm);
    for (std::size_t d = 0; d < c.d_cm; ++d) x[d] = cm_sd[d] * N(rng) + (offset ? (*offset)[d] : 0.0);
    return x;
  };
  auto abs_diff = [](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = std::abs(a[i] - b[i]);
    return d;
  };
  auto other_speaker = [&](std::size_t s) {
    std::size_t o = pick_other(rng);
    return o >= s ? o + 1 : o;
  };

  struct Pending {
    std::vector<double> x_asv, x_cm;
    TrialLabel label;
  };
  std::vector<Pending> pending;
  const std::size_t n = sizes.trials_per_class;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t s = pick_spk(rng);
    auto enroll = utterance(means[s]);
    auto test = utterance(means[s]);
    pending.push_back({abs_diff(enroll, test), cm_features(nullptr), TrialLabel::target()});
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t s = pick_spk(rng);
    std::size_t o = other_speaker(s);
    auto enroll = utterance(means[s]);
    auto test = utterance(means[o]);
    pending.push_back({abs_diff(enroll, test), cm_features(nullptr), TrialLabel::nontarget()});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = attacks[i % attacks.size()];
    const auto& spec = c.attacks[k];
    std::size_t s = pick_spk(rng);
    std::size_t src = other_speaker(s);
    auto enroll = utterance(means[s]);
    std::vector<double> center(c.d_asv);
    for (std::size_t d = 0; d < c.d_asv; ++d)
      center[d] = means[s][d] + (1.0 - spec.asv_effectiveness) * (means[src][d] - means[s][d]);
    auto test = utterance(center);
    pending.push_back({abs_diff(enroll, test), cm_features(&w.attack_offsets[k]), TrialLabel::spoof(spec.attack_id)});
  }
  std::shuffle(pending.begin(), pending.end(), rng);
  for (std::size_t i = 0; i < pending.size(); ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s_%06zu", to_string(name), i);
    out.trials.push_back(make_trial(buf, std::move(pending[i].x_asv), std::move(pending[i].x_cm),
                                    std::move(pending[i].label), c.d_asv, c.d_cm));
  }
  return out;
}

}  // namespace detail

/// Builds train/dev/eval with disjoint speaker pools.  Seen attacks appear in
/// train and dev, unseen and outlier attacks only in eval.
inline World generate_world(const WorldConfig& cfg) {
  validate(cfg);
  World w;
  w.config = cfg;
  Rng rng = derive_rng(cfg.seed, "attacks");
  w.spoof_direction = detail::gaussian_vec(cfg.d_cm, 1.0, rng);
  detail::normalize(w.spoof_direction);
  for (const auto& a : cfg.attacks) {
    Rng ar = derive_rng(cfg.seed, "attack/" + a.attack_id);
    auto dev = detail::gaussian_vec(cfg.d_cm, cfg.attack_spread, ar);
    std::vector<double> dir(cfg.d_cm);
    for (std::size_t d = 0; d < cfg.d_cm; ++d) dir[d] = w.spoof_direction[d] + dev[d];
    detail::normalize(dir);
    for (auto& v : dir) v *= a.cm_detectability * cfg.cm_shift_scale;
    w.attack_offsets.push_back(std::move(dir));
  }
  std::size_t counter = 0;
  w.train = detail::make_split(w, SplitName::kTrain, cfg.train, counter);
  w.dev = detail::make_split(w, SplitName::kDev, cfg.dev, counter);
  w.eval = detail::make_split(w, SplitName::kEval, cfg.eval, counter);
  return w;
}

inline std::set<std::string> outlier_attacks(const WorldConfig& c) {
  std::set<std::string> out;
  for (const auto& a : c.attacks)
    if (a.split == AttackSplit::kOutlier) out.insert(a.attack_id);
  return out;
}

struct PretrainConfig {
  std::size_t hidden = 16;
  Activation activation = Activation::kTanh;
  double lr = 0.05;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 200;
  double plateau_tol = 1e-4;  // stop when relative epoch-loss improvement drops below this
  std::uint64_t seed = 7;
};

struct PretrainStats {
  std::size_t epochs = 0;
  double final_loss = 0;
};

/// Trains one scorer with mini-batch SGD on cross-entropy until the full-set
/// loss plateaus or max_epochs is reached.
template <typename Pick>
PretrainStats pretrain_scorer(Scorer& s, std::span<const Trial> data, Pick pick, const PretrainConfig& cfg, Rng& rng) {
  std::vector<const Trial*> items;
  for (const auto& t : data) {
    std::span<const double> x;
    bool pos;
    if (pick(t, x, pos)) items.push_back(&t);
  }
  if (items.empty()) throw Error("no pretraining data for scorer");
  auto full_loss = [&] { return bce_loss(s, items, pick, nullptr); };
  double prev = full_loss();
  PretrainStats st;
  st.final_loss = prev;
  for (std::size_t e = 0; e < cfg.max_epochs; ++e) {
    std::shuffle(items.begin(), items.end(), rng);
    for (std::size_t i = 0; i < items.size(); i += cfg.batch_size) {
      std::span<const Trial* const> batch(items.data() + i, std::min(cfg.batch_size, items.size() - i));
      GradientTape g(s);
      bce_loss(s, batch, pick, &g);
      sgd_step(s, g, cfg.lr, StepDirection::kDescent);
    }
    const double cur = full_loss();
    if (!std::isfinite(cur)) throw Error("pretraining diverged (non-finite loss)");
    st.epochs = e + 1;
    st.final_loss = cur;
    if (prev > 0 && (prev - cur) / prev < cfg.plateau_tol) break;
    prev = cur;
  }
  return st;
}

struct PretrainResult {
  PolicyPair pair;
  PretrainStats asv, cm;
};

/// Separate pretraining: the ASV scorer sees only x_asv and target/nontarget
/// labels of bonafide trials, the CM scorer only x_cm and bonafide/spoof labels.
inline PretrainResult pretrain_pair_detailed(std::span<const Trial> train, const PretrainConfig& cfg) {
  if (train.empty()) throw Error("empty pretraining set");
  const std::size_t d_asv = train.front().x_asv.size(), d_cm = train.front().x_cm.size();
  PretrainResult r;
  r.pair.asv.scorer = Scorer::random({d_asv, cfg.hidden, 1}, cfg.activation, cfg.seed * 2 + 1);
  r.pair.cm.scorer = Scorer::random({d_cm, cfg.hidden, 1}, cfg.activation, cfg.seed * 2 + 2);
  Rng ra = derive_rng(cfg.seed, "pretrain/asv");
  Rng rc = derive_rng(cfg.seed, "pretrain/cm");
  r.asv = pretrain_scorer(r.pair.asv.scorer, train, pick_asv, cfg, ra);
  r.cm = pretrain_scorer(r.pair.cm.scorer, train, pick_cm, cfg, rc);
  return r;
}

inline PolicyPair pretrain_pair(std::span<const Trial> train, const PretrainConfig& cfg) {
  return pretrain_pair_detailed(train, cfg).pair;
}

}  // namespace tandem
