// include/tandem/harness.hpp

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
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tandem/io.hpp"
#include "tandem/metrics.hpp"
#include "tandem/synthdata.hpp"
#include "tandem/tandem_train.hpp"
#include "tandem/types.hpp"

namespace tandem {

inline constexpr int kConfigSchemaVersion = 1;

/// Training settings of the synthetic benchmark.  The optimiser defaults of
/// TrainConfig are tuned for large pretrained systems; the small MLPs here
/// need a bigger step to move within a desk-scale budget.
inline TrainConfig benchmark_train_config() {
  TrainConfig c;
  c.lr = 0.2;
  c.epochs = 10;
  return c;
}

/// Everything a pipeline run depends on.
struct HarnessConfig {
  WorldConfig world;
  PretrainConfig pretrain;
  TrainConfig train = benchmark_train_config();
  std::size_t seeds = 3;
  TandemCostParams cost;
  TdcfNormalization normalization = TdcfNormalization::kBestTrivialCm;
};

inline const char* to_string(TdcfNormalization n) {
  return n == TdcfNormalization::kBestTrivialCm ? "best_trivial_cm" : "none";
}

inline TdcfNormalization parse_normalization(const std::string& s) {
  if (s == "best_trivial_cm") return TdcfNormalization::kBestTrivialCm;
  if (s == "none") return TdcfNormalization::kNone;
  throw Error("unknown normalization '" + s + "' (expected best_trivial_cm or none)");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::uint64_t parse_uint(const std::string& v, const std::string& key) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw Error(key + ": expected a non-negative integer, got '" + v + "'");
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw Error(key + ": integer out of range '" + v + "'");
  }
}

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(key + ": expected true or false, got '" + v + "'");
}

struct ConfigField {
  std::string key;
  std::function<nlohmann::ordered_json(const HarnessConfig&)> get;
  std::function<void(HarnessConfig&, const std::string&)> set;
};

template <typename Ref>
ConfigField real_field(std::string key, Ref ref) {
  return {key, [ref](const HarnessConfig& c) { return nlohmann::ordered_json(ref(const_cast<HarnessConfig&>(c))); },
          [ref, key](HarnessConfig& c, const std::string& v) { ref(c) = parse_real(v, key); }};
}

template <typename Ref>
ConfigField uint_field(std::string key, Ref ref) {
  return {key, [ref](const HarnessConfig& c) { return nlohmann::ordered_json(ref(const_cast<HarnessConfig&>(c))); },
          [ref, key](HarnessConfig& c, const std::string& v) {
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(parse_uint(v, key));
          }};
}

template <typename Ref>
ConfigField bool_field(std::string key, Ref ref) {
  return {key, [ref](const HarnessConfig& c) { return nlohmann::ordered_json(ref(const_cast<HarnessConfig&>(c))); },
          [ref, key](HarnessConfig& c, const std::string& v) { ref(c) = parse_bool(v, key); }};
}

// clang-format off
inline const std::vector<ConfigField>& config_fields() {
  using C = HarnessConfig;
  static const std::vector<ConfigField> fields = {
    uint_field("world.seed", [](C& c) -> auto& { return c.world.seed; }),
    uint_field("world.d_asv", [](C& c) -> auto& { return c.world.d_asv; }),
    uint_field("world.d_cm", [](C& c) -> auto& { return c.world.d_cm; }),
    uint_field("world.train_speakers", [](C& c) -> auto& { return c.world.train.speakers; }),
    uint_field("world.train_trials_per_class", [](C& c) -> auto& { return c.world.train.trials_per_class; }),
    uint_field("world.dev_speakers", [](C& c) -> auto& { return c.world.dev.speakers; }),
    uint_field("world.dev_trials_per_class", [](C& c) -> auto& { return c.world.dev.trials_per_class; }),
    uint_field("world.eval_speakers", [](C& c) -> auto& { return c.world.eval.speakers; }),
    uint_field("world.eval_trials_per_class", [](C& c) -> auto& { return c.world.eval.trials_per_class; }),
    real_field("world.speaker_scale", [](C& c) -> auto& { return c.world.speaker_scale; }),
    real_field("world.utterance_noise", [](C& c) -> auto& { return c.world.utterance_noise; }),
    real_field("world.cm_noise", [](C& c) -> auto& { return c.world.cm_noise; }),
    real_field("world.cm_shift_scale", [](C& c) -> auto& { return c.world.cm_shift_scale; }),
    real_field("world.attack_spread", [](C& c) -> auto& { return c.world.attack_spread; }),
    real_field("world.channel_noise_asv", [](C& c) -> auto& { return c.world.channel_noise_asv; }),
    real_field("world.channel_noise_cm", [](C& c) -> auto& { return c.world.channel_noise_cm; }),
    uint_field("pretrain.hidden", [](C& c) -> auto& { return c.pretrain.hidden; }),
    {"pretrain.activation",
     [](const C& c) { return nlohmann::ordered_json(to_string(c.pretrain.activation)); },
     [](C& c, const std::string& v) { c.pretrain.activation = parse_activation(v); }},
    real_field("pretrain.lr", [](C& c) -> auto& { return c.pretrain.lr; }),
    uint_field("pretrain.batch_size", [](C& c) -> auto& { return c.pretrain.batch_size; }),
    uint_field("pretrain.max_epochs", [](C& c) -> auto& { return c.pretrain.max_epochs; }),
    real_field("pretrain.plateau_tol", [](C& c) -> auto& { return c.pretrain.plateau_tol; }),
    uint_field("pretrain.seed", [](C& c) -> auto& { return c.pretrain.seed; }),
    real_field("train.lr", [](C& c) -> auto& { return c.train.lr; }),
    uint_field("train.batch_size", [](C& c) -> auto& { return c.train.batch_size; }),
    uint_field("train.epochs", [](C& c) -> auto& { return c.train.epochs; }),
    bool_field("train.balanced", [](C& c) -> auto& { return c.train.balanced; }),
    bool_field("train.reward_baseline", [](C& c) -> auto& { return c.train.reward_baseline; }),
    bool_field("train.update_calibration", [](C& c) -> auto& { return c.train.update_calibration; }),
    real_field("train.soft_temperature", [](C& c) -> auto& { return c.train.soft_temperature; }),
    uint_field("train.seeds", [](C& c) -> auto& { return c.seeds; }),
    real_field("cost.c_miss", [](C& c) -> auto& { return c.cost.c_miss; }),
    real_field("cost.c_fa", [](C& c) -> auto& { return c.cost.c_fa; }),
    real_field("cost.c_fa_spoof", [](C& c) -> auto& { return c.cost.c_fa_spoof; }),
    real_field("cost.rho_tar", [](C& c) -> auto& { return c.cost.rho_tar; }),
    real_field("cost.rho_non", [](C& c) -> auto& { return c.cost.rho_non; }),
    real_field("cost.rho_spoof", [](C& c) -> auto& { return c.cost.rho_spoof; }),
    {"metric.normalization",
     [](const C& c) { return nlohmann::ordered_json(to_string(c.normalization)); },
     [](C& c, const std::string& v) { c.normalization = parse_normalization(v); }},
  };
  return fields;
}
// clang-format on

inline AttackSpec parse_attack_line(const std::string& v) {
  auto f = split_ws(v);
  if (f.size() != 4) throw Error("attack: expected 'ID split asv_effectiveness cm_detectability', got '" + v + "'");
  return {f[0], parse_real(f[2], "attack " + f[0]), parse_real(f[3], "attack " + f[0]), parse_attack_split(f[1])};
}

inline std::string attack_line(const AttackSpec& a) {
  return a.attack_id + " " + to_string(a.split) + " " + format_real(a.asv_effectiveness) + " " +
         format_real(a.cm_detectability);
}

}  // namespace detail

inline void validate(const HarnessConfig& c) {
  validate(c.world);
  require_valid(c.cost);
  if (!(c.train.lr >= 0) || !std::isfinite(c.train.lr)) throw Error("train.lr must be finite and non-negative");
  if (c.train.batch_size == 0) throw Error("train.batch_size must be positive");
  if (!(c.train.soft_temperature > 0) || !std::isfinite(c.train.soft_temperature))
    throw Error("train.soft_temperature must be positive");
  if (c.seeds == 0) throw Error("train.seeds must be positive");
  if (c.pretrain.hidden == 0) throw Error("pretrain.hidden must be positive");
  if (c.pretrain.batch_size == 0) throw Error("pretrain.batch_size must be positive");
  if (!(c.pretrain.lr > 0) || !std::isfinite(c.pretrain.lr)) throw Error("pretrain.lr must be positive");
}

/*
  Config files are flat "key = value" lines; '#' starts a comment.  The first
  key must be schema_version.  Repeated "attack = ID split eff det" lines
  replace the default attack list.  Unset keys keep their defaults.
*/
inline HarnessConfig parse_config(std::istream& is, const std::string& name = "config") {
  HarnessConfig c;
  std::map<std::string, const detail::ConfigField*> fields;
  for (const auto& f : detail::config_fields()) fields.emplace(f.key, &f);
  std::set<std::string> seen;
  std::vector<AttackSpec> attacks;
  bool have_version = false;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    const std::string at = name + ":" + std::to_string(n) + ": ";
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(at + "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    try {
      if (key == "schema_version") {
        if (detail::parse_uint(value, key) != kConfigSchemaVersion)
          throw Error("unsupported schema_version " + value + " (this build reads " +
                      std::to_string(kConfigSchemaVersion) + ")");
        have_version = true;
        continue;
      }
      if (!have_version) throw Error("schema_version must come first");
      if (key == "attack") {
        attacks.push_back(detail::parse_attack_line(value));
        continue;
      }
      auto it = fields.find(key);
      if (it == fields.end()) throw Error("unknown key '" + key + "'");
      if (!seen.insert(key).second) throw Error("duplicate key '" + key + "'");
      it->second->set(c, value);
    } catch (const Error& e) {
      throw Error(at + e.what());
    }
  }
  if (!have_version) throw Error(name + ": missing schema_version");
  if (!attacks.empty()) c.world.attacks = std::move(attacks);
  validate(c);
  return c;
}

inline HarnessConfig load_config(const std::filesystem::path& p) {
  auto is = open_in(p);
  return parse_config(is, p.string());
}

/// Canonical text form; parse_config(to_text(c)) == c.
inline std::string to_text(const HarnessConfig& c) {
  std::ostringstream os;
  os << "schema_version = " << kConfigSchemaVersion << '\n';
  for (const auto& f : detail::config_fields()) {
    auto v = f.get(c);
    os << f.key << " = ";
    if (v.is_number_float())
      os << format_real(v.get<double>());
    else if (v.is_string())
      os << v.get<std::string>();
    else
      os << v.dump();
    os << '\n';
  }
  for (const auto& a : c.world.attacks) os << "attack = " << detail::attack_line(a) << '\n';
  return os.str();
}

/// Flat JSON snapshot with the same keys as the text form.
inline nlohmann::ordered_json to_json(const HarnessConfig& c) {
  nlohmann::ordered_json j;
  j["schema_version"] = kConfigSchemaVersion;
  for (const auto& f : detail::config_fields()) j[f.key] = f.get(c);
  auto& att = j["attack"] = nlohmann::ordered_json::array();
  for (const auto& a : c.world.attacks) att.push_back(detail::attack_line(a));
  return j;
}

inline HarnessConfig config_from_json(const nlohmann::ordered_json& j) {
  std::ostringstream os;
  for (const auto& [k, v] : j.items()) {
    if (k == "attack") {
      for (const auto& a : v) os << "attack = " << a.get<std::string>() << '\n';
      continue;
    }
    os << k << " = ";
    if (v.is_number_float())
      os << format_real(v.get<double>());
    else if (v.is_string())
      os << v.get<std::string>();
    else
      os << v.dump();
    os << '\n';
  }
  std::istringstream is(os.str());
  return parse_config(is, "config snapshot");
}

// ---- data directories ----

inline const char* kSplitNames[] = {"train", "dev", "eval"};

struct DataSet {
  HarnessConfig config;
  std::vector<Trial> train, dev, eval;

  const std::vector<Trial>& split(const std::string& name) const {
    if (name == "train") return train;
    if (name == "dev") return dev;
    if (name == "eval") return eval;
    throw Error("unknown split '" + name + "' (expected train, dev or eval)");
  }
};

/// Lists regular files under `dir` (except manifest.json) with size and
/// FNV-1a hash, plus the config snapshot.  No timestamps.
inline nlohmann::ordered_json make_manifest(const std::filesystem::path& dir, const nlohmann::ordered_json& config) {
  namespace fs = std::filesystem;
  std::vector<std::string> paths;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) {
      auto rel = fs::relative(e.path(), dir).generic_string();
      if (rel != "manifest.json") paths.push_back(rel);
    }
  std::sort(paths.begin(), paths.end());
  nlohmann::ordered_json m;
  auto& files = m["files"] = nlohmann::ordered_json::array();
  for (const auto& p : paths) {
    const std::string content = read_file(dir / p);
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a(content)));
    files.push_back({{"path", p}, {"bytes", content.size()}, {"fnv1a64", hex}});
  }
  m["config"] = config;
  return m;
}

inline void write_manifest(const std::filesystem::path& dir, const nlohmann::ordered_json& config) {
  write_json(dir / "manifest.json", make_manifest(dir, config));
}

inline void write_split(const std::filesystem::path& dir, const std::string& name, const std::vector<Trial>& trials) {
  std::ostringstream proto, feats;
  write_protocol(proto, trials);
  write_features(feats, trials);
  write_file(dir / (name + ".protocol"), proto.str());
  write_file(dir / (name + ".features"), feats.str());
}

inline std::vector<ProtocolEntry> load_protocol(const std::filesystem::path& dir, const std::string& name) {
  const auto path = dir / (name + ".protocol");
  auto is = open_in(path);
  return read_protocol(is, path.string());
}

/// Reads a directory written by gen_data.  `config` overrides the stored
/// config.txt when given.
inline DataSet load_data(const std::filesystem::path& dir, const std::optional<HarnessConfig>& config = std::nullopt) {
  DataSet d;
  d.config = config ? *config : load_config(dir / "config.txt");
  const auto& w = d.config.world;
  for (const char* name : kSplitNames) {
    const auto fpath = dir / (std::string(name) + ".features");
    auto is = open_in(fpath);
    auto trials = read_features(is, load_protocol(dir, name), w.d_asv, w.d_cm, fpath.string());
    (std::string(name) == "train" ? d.train : std::string(name) == "dev" ? d.dev : d.eval) = std::move(trials);
  }
  return d;
}

inline void require_compatible(const PolicyPair& pair, const WorldConfig& w) {
  if (pair.asv.scorer.input_size() != w.d_asv || pair.cm.scorer.input_size() != w.d_cm)
    throw Error("checkpoint input dims (asv " + std::to_string(pair.asv.scorer.input_size()) + ", cm " +
                std::to_string(pair.cm.scorer.input_size()) + ") do not match data dims (asv " +
                std::to_string(w.d_asv) + ", cm " + std::to_string(w.d_cm) + ")");
}

inline PolicyPair load_checkpoint(const std::filesystem::path& p) {
  try {
    return policy_pair_from_json(read_json(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

/// Parses a comma-separated attack list; empty means none.
inline std::set<std::string> parse_attack_list(const std::string& s) {
  std::set<std::string> out;
  std::string tok;
  std::istringstream is(s);
  while (std::getline(is, tok, ','))
    if (auto t = detail::trim(tok); !t.empty()) out.insert(t);
  return out;
}

// ---- run records ----

inline std::string csv_real(double v) { return std::isnan(v) ? "" : format_real(v); }

inline std::string run_csv(const RunRecord& r) {
  std::ostringstream os;
  os << "step,epoch,method,seed,split,asv_eer,cm_eer,min_norm_tdcf,train_loss\n";
  for (const auto& row : r.rows)
    os << row.step << ',' << row.epoch << ',' << r.method << ',' << r.seed << ',' << row.split << ','
       << csv_real(row.asv_eer) << ',' << csv_real(row.cm_eer) << ',' << csv_real(row.min_norm_tdcf) << ','
       << csv_real(row.train_loss) << '\n';
  return os.str();
}

inline nlohmann::ordered_json reports_json(const std::map<std::string, MetricReport>& m) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [k, v] : m) j[k] = to_json(v);
  return j;
}

inline nlohmann::ordered_json run_json(const RunRecord& r, std::size_t seed_count,
                                       const std::set<std::string>& excluded) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  j["seed"] = r.seed;
  j["seed_count"] = seed_count;
  j["excluded_attacks"] = excluded;
  j["config"] = r.config;
  j["initial"] = reports_json(r.initial);
  j["final"] = reports_json(r.final);
  if (r.soft_thresholds)
    j["soft_thresholds"] = {{"tau_asv", r.soft_thresholds->tau_asv}, {"tau_cm", r.soft_thresholds->tau_cm}};
  return j;
}

/// Parsed run.json plus the evaluation rows of the matching run.csv.
struct LoadedRun {
  std::filesystem::path dir;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t seed_count = 0;
  nlohmann::ordered_json config;
  nlohmann::ordered_json excluded;
  std::map<std::string, MetricReport> initial, final;
  std::vector<TelemetryRow> eval_rows;
};

inline std::vector<TelemetryRow> read_eval_rows(const std::filesystem::path& csv) {
  auto is = open_in(csv);
  std::string line;
  std::getline(is, line);
  if (detail::trim(line) != "step,epoch,method,seed,split,asv_eer,cm_eer,min_norm_tdcf,train_loss")
    throw Error(csv.string() + ": unexpected header");
  std::vector<TelemetryRow> rows;
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::string tok;
    std::istringstream ls(line);
    while (std::getline(ls, tok, ',')) f.push_back(tok);
    if (f.size() == 8) f.emplace_back();  // trailing empty train_loss
    if (f.size() != 9) throw Error(csv.string() + ": malformed row '" + line + "'");
    if (f[4] == "train") continue;
    TelemetryRow r;
    r.step = detail::parse_uint(f[0], "step");
    r.epoch = detail::parse_uint(f[1], "epoch");
    r.split = f[4];
    r.asv_eer = parse_real(f[5], csv.string());
    r.cm_eer = parse_real(f[6], csv.string());
    r.min_norm_tdcf = parse_real(f[7], csv.string());
    rows.push_back(r);
  }
  return rows;
}

inline LoadedRun load_run(const std::filesystem::path& dir) {
  auto j = read_json(dir / "run.json");
  LoadedRun r;
  try {
    r.dir = dir;
    r.method = j.at("method").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.seed_count = j.at("seed_count").get<std::size_t>();
    r.config = j.at("config");
    r.excluded = j.at("excluded_attacks");
    for (const auto& [k, v] : j.at("initial").items()) r.initial[k] = metric_report_from_json(v);
    for (const auto& [k, v] : j.at("final").items()) r.final[k] = metric_report_from_json(v);
  } catch (const nlohmann::json::exception& e) {
    throw Error((dir / "run.json").string() + ": " + e.what());
  }
  r.eval_rows = read_eval_rows(dir / "run.csv");
  return r;
}

// ---- report ----

struct MeanStd {
  double mean = 0;
  double std = 0;
};

/// Mean and sample standard deviation.  Identical values give exactly
/// (value, 0).
inline MeanStd mean_std(const std::vector<double>& v) {
  MeanStd m;
  if (v.empty()) return m;
  if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); })) return {v.front(), 0.0};
  for (double x : v) m.mean += x;
  m.mean /= v.size();
  if (v.size() > 1) {
    double ss = 0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / (v.size() - 1));
  }
  return m;
}

inline std::vector<std::string> report_splits(const std::map<std::string, MetricReport>& m) {
  std::vector<std::string> out;
  for (const char* s : {"dev", "eval", "eval_filtered"})
    if (m.count(s)) out.push_back(s);
  return out;
}

/// Per method and split: mean and std of the final metrics over runs.  The
/// INITIAL rows average the pretrained evaluation of every run.
inline std::string comparison_csv(const std::vector<LoadedRun>& runs) {
  std::ostringstream os;
  os << "method,split,n_runs,asv_eer_mean,asv_eer_std,cm_eer_mean,cm_eer_std,min_norm_tdcf_mean,min_norm_tdcf_std\n";
  auto emit = [&](const std::string& method, const std::string& split,
                  const std::vector<const MetricReport*>& reps) {
    std::vector<double> a, c, t;
    for (const auto* r : reps) {
      a.push_back(r->asv_eer);
      c.push_back(r->cm_eer);
      t.push_back(r->min_norm_tdcf);
    }
    auto ma = mean_std(a), mc = mean_std(c), mt = mean_std(t);
    os << method << ',' << split << ',' << reps.size() << ',' << format_real(ma.mean) << ',' << format_real(ma.std)
       << ',' << format_real(mc.mean) << ',' << format_real(mc.std) << ',' << format_real(mt.mean) << ','
       << format_real(mt.std) << '\n';
  };
  const auto splits = report_splits(runs.front().final);
  for (const auto& split : splits) {
    std::vector<const MetricReport*> reps;
    for (const auto& r : runs) reps.push_back(&r.initial.at(split));
    emit("INITIAL", split, reps);
  }
  for (Method m : kAllMethods) {
    for (const auto& split : splits) {
      std::vector<const MetricReport*> reps;
      for (const auto& r : runs)
        if (r.method == to_string(m)) reps.push_back(&r.final.at(split));
      if (!reps.empty()) emit(to_string(m), split, reps);
    }
  }
  return os.str();
}

/// Change of each metric relative to step 0 of the same run and split,
/// averaged over runs, one row per (method, split, epoch).
inline std::string learning_curve_csv(const std::vector<LoadedRun>& runs) {
  struct Acc {
    std::size_t step = 0;
    std::vector<double> a, c, t;
  };
  std::ostringstream os;
  os << "method,split,epoch,step,n_runs,d_asv_eer_mean,d_asv_eer_std,d_cm_eer_mean,d_cm_eer_std,"
        "d_min_norm_tdcf_mean,d_min_norm_tdcf_std\n";
  for (Method m : kAllMethods) {
    std::map<std::pair<std::string, std::size_t>, Acc> acc;
    for (const auto& r : runs) {
      if (r.method != to_string(m)) continue;
      std::map<std::string, const TelemetryRow*> base;
      for (const auto& row : r.eval_rows)
        if (row.epoch == 0) base[row.split] = &row;
      for (const auto& row : r.eval_rows) {
        auto b = base.find(row.split);
        if (b == base.end()) throw Error(r.dir.string() + ": no step-0 evaluation for split " + row.split);
        auto& x = acc[{row.split, row.epoch}];
        x.step = row.step;
        x.a.push_back(row.asv_eer - b->second->asv_eer);
        x.c.push_back(row.cm_eer - b->second->cm_eer);
        x.t.push_back(row.min_norm_tdcf - b->second->min_norm_tdcf);
      }
    }
    for (const auto& split : {"dev", "eval", "eval_filtered"}) {
      for (const auto& [key, x] : acc) {
        if (key.first != split) continue;
        auto ma = mean_std(x.a), mc = mean_std(x.c), mt = mean_std(x.t);
        os << to_string(m) << ',' << split << ',' << key.second << ',' << x.step << ',' << x.a.size() << ','
           << format_real(ma.mean) << ',' << format_real(ma.std) << ',' << format_real(mc.mean) << ','
           << format_real(mc.std) << ',' << format_real(mt.mean) << ',' << format_real(mt.std) << '\n';
      }
    }
  }
  return os.str();
}

/// Finds every run.json under `dir`, sorted by path.
inline std::vector<LoadedRun> find_runs(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw Error("runs directory " + dir.string() + " does not exist");
  std::vector<fs::path> dirs;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "run.json") dirs.push_back(e.path().parent_path());
  std::sort(dirs.begin(), dirs.end());
  std::vector<LoadedRun> runs;
  for (const auto& d : dirs) runs.push_back(load_run(d));
  if (runs.empty()) throw Error("no run.json found under " + dir.string());
  return runs;
}

/// Refuses to aggregate runs that were produced under different settings.
inline void require_consistent(const std::vector<LoadedRun>& runs) {
  const auto& ref = runs.front();
  for (const auto& r : runs) {
    if (r.config != ref.config)
      throw Error("inconsistent configs across runs: " + ref.dir.string() + " vs " + r.dir.string());
    if (r.excluded != ref.excluded)
      throw Error("inconsistent excluded attacks across runs: " + ref.dir.string() + " vs " + r.dir.string());
    if (report_splits(r.final) != report_splits(ref.final))
      throw Error("inconsistent evaluated splits across runs: " + ref.dir.string() + " vs " + r.dir.string());
  }
}

// ---- subcommands ----

inline std::string split_summary(const std::string& name, const std::vector<Trial>& trials) {
  std::size_t n[3] = {0, 0, 0};
  std::set<std::string> attacks;
  for (const auto& t : trials) {
    ++n[static_cast<int>(t.label.trial_class())];
    if (t.label.attack_id()) attacks.insert(*t.label.attack_id());
  }
  std::ostringstream os;
  os << name << ": " << trials.size() << " trials (target " << n[0] << ", nontarget " << n[1] << ", spoof " << n[2]
     << "), attacks";
  for (const auto& a : attacks) os << ' ' << a;
  return os.str();
}

inline void gen_data(const HarnessConfig& cfg, const std::filesystem::path& out, std::ostream& log) {
  validate(cfg);
  World w = generate_world(cfg.world);
  write_file(out / "config.txt", to_text(cfg));
  for (const SplitData* s : {&w.train, &w.dev, &w.eval}) {
    write_split(out, to_string(s->name), s->trials);
    log << split_summary(to_string(s->name), s->trials) << '\n';
  }
  write_manifest(out, to_json(cfg));
}

inline std::map<std::string, MetricReport> evaluate_splits(const PolicyPair& pair, const DataSet& d) {
  std::map<std::string, MetricReport> out;
  const auto& p = d.config.cost;
  out["dev"] = compute_report(score_trials(pair, d.dev), p, d.config.normalization);
  ScoreSet eval_scores = score_trials(pair, d.eval);
  out["eval"] = compute_report(eval_scores, p, d.config.normalization);
  auto excl = outlier_attacks(d.config.world);
  if (!excl.empty())
    out["eval_filtered"] = compute_report(filter_attacks(eval_scores, excl), p, d.config.normalization);
  return out;
}

inline std::string report_line(const std::string& split, const MetricReport& r) {
  std::ostringstream os;
  os << split << ": asv_eer " << format_real(r.asv_eer) << "  cm_eer " << format_real(r.cm_eer) << "  min_norm_tdcf "
     << format_real(r.min_norm_tdcf);
  return os.str();
}

inline void pretrain(const DataSet& d, const std::filesystem::path& ckpt, std::ostream& log) {
  auto res = pretrain_pair_detailed(d.train, d.config.pretrain);
  log << "asv: " << res.asv.epochs << " epochs, loss " << format_real(res.asv.final_loss) << '\n';
  log << "cm: " << res.cm.epochs << " epochs, loss " << format_real(res.cm.final_loss) << '\n';
  write_json(ckpt, to_json(res.pair));
  for (const auto& [split, rep] : evaluate_splits(res.pair, d)) log << "initial " << report_line(split, rep) << '\n';
}

/// Runs `method` for seeds 1..seed_count, one directory per seed.
inline void train_tandem(Method method, const PolicyPair& pretrained, const DataSet& d, std::size_t seed_count,
                         const std::set<std::string>& excluded, const std::filesystem::path& out, std::ostream& log) {
  require_compatible(pretrained, d.config.world);
  if (seed_count == 0) throw Error("--seeds must be positive");
  Splits splits{d.train, d.dev, d.eval, excluded};
  const auto snapshot = to_json(d.config);
  for (std::size_t s = 1; s <= seed_count; ++s) {
    TrainConfig tc = d.config.train;
    tc.seed = s;
    auto res = run_method(method, pretrained, splits, tc, d.config.cost, nullptr, d.config.normalization);
    res.record.config = snapshot;
    const auto dir = out / ("seed_" + std::to_string(s));
    write_file(dir / "run.csv", run_csv(res.record));
    write_json(dir / "run.json", run_json(res.record, seed_count, excluded));
    write_json(dir / "final.ckpt.json", to_json(res.pair, res.record.soft_thresholds));
    log << to_string(method) << " seed " << s;
    for (const auto& [split, rep] : res.record.final)
      log << "  " << split << " min_norm_tdcf " << format_real(res.record.initial.at(split).min_norm_tdcf) << " -> "
          << format_real(rep.min_norm_tdcf);
    log << '\n';
  }
  write_manifest(out, snapshot);
}

/// Scores one split, writes the score file next to `out_json` and returns
/// the report document.
inline nlohmann::ordered_json evaluate(const PolicyPair& pair, const DataSet& d, const std::string& split,
                                       const std::set<std::string>& excluded, const std::filesystem::path& out_json) {
  require_compatible(pair, d.config.world);
  ScoreSet s = filter_attacks(score_trials(pair, d.split(split)), excluded);
  auto scores_path = out_json;
  scores_path.replace_extension(".scores");
  std::ostringstream os;
  write_scores(os, s);
  MetricReport rep = compute_report(s, d.config.cost, d.config.normalization);
  write_file(scores_path, os.str());
  nlohmann::ordered_json j;
  j["split"] = split;
  j["excluded_attacks"] = excluded;
  j["scores_file"] = scores_path.filename().string();
  j["report"] = to_json(rep);
  write_json(out_json, j);
  return j;
}

inline void report(const std::filesystem::path& runs_dir, const std::filesystem::path& out, std::ostream& log) {
  auto runs = find_runs(runs_dir);
  require_consistent(runs);
  std::map<std::string, std::size_t> per_method;
  for (const auto& r : runs) ++per_method[r.method];
  for (const auto& [m, n] : per_method) {
    parse_method(m);
    const std::size_t want = runs.front().seed_count;
    if (n != want)
      log << "warning: " << m << " has " << n << " runs but the runs were launched with --seeds " << want << '\n';
  }
  write_file(out / "comparison.csv", comparison_csv(runs));
  write_file(out / "learning_curve.csv", learning_curve_csv(runs));
  write_manifest(out, runs.front().config);
  log << "aggregated " << runs.size() << " runs of " << per_method.size() << " methods\n";
}

}  // namespace tandem
