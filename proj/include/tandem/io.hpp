// include/tandem/io.hpp

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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tandem/types.hpp"

/*
  Plain-text trial formats, one record per line, single-space separated:

    protocol:  trial_id asv_label cm_label attack_id     ("-" when bonafide)
    features:  trial_id x_asv[0] .. x_asv[d_asv-1] x_cm[0] .. x_cm[d_cm-1]
    scores:    trial_id asv_score cm_score

  Labels are spelled target/nontarget and bonafide/spoof.  Reals are written
  with 17 significant digits so that files round-trip exactly.
*/

namespace tandem {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline AsvLabel parse_asv_label(const std::string& s) {
  if (s == "target") return AsvLabel::kTarget;
  if (s == "nontarget") return AsvLabel::kNontarget;
  throw Error("bad asv label '" + s + "'");
}

inline CmLabel parse_cm_label(const std::string& s) {
  if (s == "bonafide") return CmLabel::kBonafide;
  if (s == "spoof") return CmLabel::kSpoof;
  throw Error("bad cm label '" + s + "'");
}

inline double parse_real(const std::string& tok, const std::string& where) {
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(tok, &used);
  } catch (const std::exception&) {
    throw Error(where + ": not a number '" + tok + "'");
  }
  if (used != tok.size() || !std::isfinite(v)) throw Error(where + ": bad real '" + tok + "'");
  return v;
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream is(line);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline std::string where(const std::string& file, std::size_t line_no) {
  return file + ":" + std::to_string(line_no);
}

}  // namespace detail

struct ProtocolEntry {
  std::string trial_id;
  TrialLabel label;
};

inline void write_protocol(std::ostream& os, const std::vector<Trial>& trials) {
  for (const auto& t : trials)
    os << t.id << ' ' << to_string(t.label.asv()) << ' ' << to_string(t.label.cm()) << ' '
       << t.label.attack_id().value_or("-") << '\n';
}

inline std::vector<ProtocolEntry> read_protocol(std::istream& is, const std::string& name = "protocol") {
  std::vector<ProtocolEntry> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    auto f = detail::split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 4) throw Error(detail::where(name, n) + ": expected 4 fields, got " + std::to_string(f.size()));
    std::optional<std::string> attack;
    if (f[3] != "-") attack = f[3];
    try {
      out.push_back({f[0], TrialLabel(parse_asv_label(f[1]), parse_cm_label(f[2]), attack)});
    } catch (const Error& e) {
      throw Error(detail::where(name, n) + ": " + e.what());
    }
  }
  return out;
}

inline void write_features(std::ostream& os, const std::vector<Trial>& trials) {
  for (const auto& t : trials) {
    os << t.id;
    for (double v : t.x_asv) os << ' ' << format_real(v);
    for (double v : t.x_cm) os << ' ' << format_real(v);
    os << '\n';
  }
}

/// Reads a features file and joins it with `protocol` by trial id.  Every
/// protocol trial must have exactly one feature row of d_asv + d_cm reals.
inline std::vector<Trial> read_features(std::istream& is, const std::vector<ProtocolEntry>& protocol, std::size_t d_asv,
                                        std::size_t d_cm, const std::string& name = "features") {
  std::unordered_map<std::string, std::vector<double>> rows;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    auto f = detail::split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 1 + d_asv + d_cm)
      throw Error(detail::where(name, n) + ": expected " + std::to_string(1 + d_asv + d_cm) + " fields, got " +
                  std::to_string(f.size()));
    std::vector<double> x;
    for (std::size_t i = 1; i < f.size(); ++i) x.push_back(parse_real(f[i], detail::where(name, n)));
    if (!rows.emplace(f[0], std::move(x)).second) throw Error(detail::where(name, n) + ": duplicate trial " + f[0]);
  }
  if (rows.size() != protocol.size())
    throw Error(name + ": " + std::to_string(rows.size()) + " feature rows for " + std::to_string(protocol.size()) +
                " protocol trials");
  std::vector<Trial> trials;
  trials.reserve(protocol.size());
  for (const auto& p : protocol) {
    auto it = rows.find(p.trial_id);
    if (it == rows.end()) throw Error(name + ": no features for trial " + p.trial_id);
    std::vector<double> x_asv(it->second.begin(), it->second.begin() + d_asv);
    std::vector<double> x_cm(it->second.begin() + d_asv, it->second.end());
    trials.push_back(make_trial(p.trial_id, std::move(x_asv), std::move(x_cm), p.label, d_asv, d_cm));
  }
  return trials;
}

inline void write_scores(std::ostream& os, const ScoreSet& s) {
  for (const auto& e : s.entries())
    os << e.trial_id << ' ' << format_real(e.asv_score) << ' ' << format_real(e.cm_score) << '\n';
}

/// Reads a score file and attaches labels from `protocol`.  Trials missing
/// from the protocol are an error; protocol trials without scores are not.
inline ScoreSet read_scores(std::istream& is, const std::vector<ProtocolEntry>& protocol,
                            const std::string& name = "scores") {
  std::unordered_map<std::string, const TrialLabel*> labels;
  for (const auto& p : protocol) labels.emplace(p.trial_id, &p.label);
  std::vector<ScoreEntry> entries;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    auto f = detail::split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 3) throw Error(detail::where(name, n) + ": expected 3 fields, got " + std::to_string(f.size()));
    auto it = labels.find(f[0]);
    if (it == labels.end()) throw Error(detail::where(name, n) + ": trial " + f[0] + " not in protocol");
    entries.push_back({f[0], *it->second, parse_real(f[1], detail::where(name, n)),
                       parse_real(f[2], detail::where(name, n))});
  }
  return ScoreSet(std::move(entries));
}

// ---- file helpers ----

inline std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw Error("cannot open " + p.string() + " for reading");
  return is;
}

inline std::string read_file(const std::filesystem::path& p) {
  auto is = open_in(p);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Writes `content` to `p`, creating parent directories.
inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::error_code ec;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path(), ec);
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open " + p.string() + " for writing");
  os << content;
  os.close();
  if (!os) throw Error("write to " + p.string() + " failed");
}

inline nlohmann::ordered_json read_json(const std::filesystem::path& p) {
  try {
    return nlohmann::ordered_json::parse(read_file(p));
  } catch (const nlohmann::json::exception& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& p, const nlohmann::ordered_json& j) {
  write_file(p, j.dump(2) + "\n");
}

}  // namespace tandem
