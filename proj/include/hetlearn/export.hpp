// Copyright 2026 The hetlearn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef HETLEARN_EXPORT_HPP_
#define HETLEARN_EXPORT_HPP_

#include <array>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "hetlearn/errors.hpp"
#include "hetlearn/sim_harness.hpp"

namespace hetlearn {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<std::string_view, 11> kTraceColumns = {
    "k",        "state",    "agent", "v_est_mean",   "v_est_std", "v_star",
    "bound_lo", "bound_hi", "delta", "tracking_err", "lyapunov"};

// Shortest decimal string that parses back to the same double.
inline std::string FormatDouble(double x) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

inline double ParseDouble(std::string_view s) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw StructuralError("not a number: '" + std::string(s) + "'");
  }
  return x;
}

namespace detail {

inline std::string Field(const std::optional<double>& v) { return v ? FormatDouble(*v) : ""; }

inline std::optional<double> OptionalField(std::string_view s) {
  if (s.empty()) return std::nullopt;
  return ParseDouble(s);
}

inline std::vector<std::string_view> SplitCsvLine(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::ofstream OpenForWrite(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

inline void FinishWrite(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace detail

inline std::string TraceCsvHeader() {
  std::string h;
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i) {
    if (i) h += ',';
    h += kTraceColumns[i];
  }
  return h;
}

inline std::string TraceCsvLine(const TraceRow& r) {
  std::string line = std::to_string(r.k);
  line += ',';
  if (r.state) line += std::to_string(*r.state);
  line += ',' + std::to_string(r.agent);
  line += ',' + FormatDouble(r.v_est_mean);
  for (const auto* f : {&r.v_est_std, &r.v_star, &r.bound_lo, &r.bound_hi, &r.delta,
                        &r.tracking_err, &r.lyapunov}) {
    line += ',' + detail::Field(*f);
  }
  return line;
}

inline std::string TraceCsv(const std::vector<TraceRow>& rows) {
  std::string out = TraceCsvHeader() + '\n';
  for (const auto& r : rows) out += TraceCsvLine(r) + '\n';
  return out;
}

inline std::vector<TraceRow> ParseTraceCsv(std::string_view text) {
  std::vector<TraceRow> rows;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (header) {
      if (line != TraceCsvHeader()) throw StructuralError("unexpected CSV header");
      header = false;
      continue;
    }
    const auto f = detail::SplitCsvLine(line);
    if (f.size() != kTraceColumns.size()) throw StructuralError("CSV row has wrong field count");
    TraceRow r;
    r.k = static_cast<std::int64_t>(ParseDouble(f[0]));
    if (!f[1].empty()) r.state = static_cast<int>(ParseDouble(f[1]));
    r.agent = static_cast<int>(ParseDouble(f[2]));
    r.v_est_mean = ParseDouble(f[3]);
    r.v_est_std = detail::OptionalField(f[4]);
    r.v_star = detail::OptionalField(f[5]);
    r.bound_lo = detail::OptionalField(f[6]);
    r.bound_hi = detail::OptionalField(f[7]);
    r.delta = detail::OptionalField(f[8]);
    r.tracking_err = detail::OptionalField(f[9]);
    r.lyapunov = detail::OptionalField(f[10]);
    rows.push_back(r);
  }
  return rows;
}

inline void WriteTraceCsv(const std::vector<TraceRow>& rows, const std::string& path) {
  auto out = detail::OpenForWrite(path);
  out << TraceCsv(rows);
  detail::FinishWrite(out, path);
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<TraceRow> ReadTraceCsv(const std::string& path) {
  return ParseTraceCsv(ReadFile(path));
}

// JSON mirrors the CSV: {"columns": [...], "rows": [[...], ...]} with null for
// empty fields.
inline nlohmann::json RowsToJson(const std::vector<TraceRow>& rows) {
  nlohmann::json arr = nlohmann::json::array();
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  for (const auto& r : rows) {
    arr.push_back({r.k, r.state ? nlohmann::json(*r.state) : nlohmann::json(), r.agent,
                   r.v_est_mean, opt(r.v_est_std), opt(r.v_star), opt(r.bound_lo),
                   opt(r.bound_hi), opt(r.delta), opt(r.tracking_err), opt(r.lyapunov)});
  }
  nlohmann::json cols = nlohmann::json::array();
  for (auto c : kTraceColumns) cols.push_back(std::string(c));
  return {{"columns", cols}, {"rows", arr}};
}

inline std::vector<TraceRow> RowsFromJson(const nlohmann::json& j) {
  std::vector<TraceRow> rows;
  auto opt = [](const nlohmann::json& v) {
    return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
  };
  for (const auto& a : j.at("rows")) {
    if (a.size() != kTraceColumns.size()) throw StructuralError("JSON row has wrong length");
    TraceRow r;
    r.k = a[0].get<std::int64_t>();
    if (!a[1].is_null()) r.state = a[1].get<int>();
    r.agent = a[2].get<int>();
    r.v_est_mean = a[3].get<double>();
    r.v_est_std = opt(a[4]);
    r.v_star = opt(a[5]);
    r.bound_lo = opt(a[6]);
    r.bound_hi = opt(a[7]);
    r.delta = opt(a[8]);
    r.tracking_err = opt(a[9]);
    r.lyapunov = opt(a[10]);
    rows.push_back(r);
  }
  return rows;
}

inline nlohmann::json AggregateToJson(const Aggregate& agg) {
  nlohmann::json j = RowsToJson(agg.rows);
  j["name"] = agg.name;
  j["n_trials"] = agg.n_trials;
  j["stochastic"] = agg.stochastic;
  j["labels"] = agg.labels;
  j["step_ratio"] = {{"raw", agg.ratio.defined ? nlohmann::json(agg.ratio.raw) : nlohmann::json()},
                     {"d", agg.ratio.defined ? nlohmann::json(agg.ratio.d) : nlohmann::json()}};
  j["band"] = agg.band ? nlohmann::json(*agg.band) : nlohmann::json();
  return j;
}

inline Aggregate AggregateFromJson(const nlohmann::json& j) {
  Aggregate agg;
  agg.rows = RowsFromJson(j);
  agg.name = j.value("name", std::string());
  agg.n_trials = j.value("n_trials", 0);
  agg.stochastic = j.value("stochastic", false);
  if (j.contains("labels")) agg.labels = j["labels"].get<std::array<std::string, 2>>();
  if (j.contains("step_ratio") && !j["step_ratio"]["d"].is_null()) {
    agg.ratio.raw = j["step_ratio"]["raw"].get<double>();
    agg.ratio.d = j["step_ratio"]["d"].get<double>();
    agg.ratio.weights = agg.ratio.raw <= 1.0 ? std::array<double, 2>{1.0, agg.ratio.d}
                                             : std::array<double, 2>{agg.ratio.d, 1.0};
  } else {
    agg.ratio.defined = false;
    agg.ratio.d = 0.0;
  }
  if (j.contains("band") && !j["band"].is_null()) agg.band = j["band"].get<double>();
  return agg;
}

inline nlohmann::json TraceToJson(const TrialTrace& t) {
  nlohmann::json j = RowsToJson(t.rows);
  j["trial_id"] = t.trial_id;
  return j;
}

inline TrialTrace TraceFromJson(const nlohmann::json& j) {
  TrialTrace t;
  t.trial_id = j.value("trial_id", 0);
  t.rows = RowsFromJson(j);
  return t;
}

inline void WriteJson(const nlohmann::json& j, const std::string& path) {
  auto out = detail::OpenForWrite(path);
  out << j.dump(2) << '\n';
  detail::FinishWrite(out, path);
}

inline nlohmann::json ReadJson(const std::string& path) {
  const std::string text = ReadFile(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw StructuralError(path + ": " + e.what());
  }
}

// run.json: resolved scenario plus run-level constants.
inline nlohmann::json RunSummaryJson(const ScenarioConfig& cfg, const Aggregate& agg) {
  nlohmann::json j = ScenarioToJson(cfg);
  j["labels"] = agg.labels;
  j["step_ratio"] = AggregateToJson(agg)["step_ratio"];
  j["band"] = agg.band ? nlohmann::json(*agg.band) : nlohmann::json();
  j["seed_derivation"] =
      "trial seed = DeriveSeed(base_seed, trial_id); streams: environment = "
      "DeriveSeed(trial seed, 0), agent i = DeriveSeed(trial seed, i)";
  return j;
}

}  // namespace hetlearn

#endif  // HETLEARN_EXPORT_HPP_
