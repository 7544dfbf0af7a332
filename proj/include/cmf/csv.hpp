#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cmf/error.hpp"
#include "cmf/simulation.hpp"
#include "cmf/tracker_types.hpp"

namespace cmf {

/// Comment lines written ahead of every CSV ("# " is prepended).
using CsvHeader = std::vector<std::string>;

namespace csv {

inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Writes to a sibling temporary file and renames it over the target, so a
/// reader never sees a half-written file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(Errc::io_error, "cannot open " + tmp.string() + " for writing");
    os << content;
    os.flush();
    if (!os) throw Error(Errc::io_error, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(Errc::io_error, "cannot rename " + tmp.string() + ": " + ec.message());
}

inline void put_header(std::ostringstream& os, const CsvHeader& header) {
  for (const auto& line : header) os << "# " << line << '\n';
}

inline std::vector<std::string> split(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, sep)) out.push_back(cell);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(Errc::parse_error, where + ": not a number: '" + s + "'");
  }
}

struct Table {
  std::vector<std::string> comments;  // without the leading "# "
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw Error(Errc::parse_error, "missing column '" + name + "'");
  }

  /// Value of a "key = value" comment line, if present.
  std::optional<std::string> comment_value(const std::string& key) const {
    for (const auto& c : comments) {
      const auto eq = c.find('=');
      if (eq == std::string::npos) continue;
      auto k = c.substr(0, eq);
      while (!k.empty() && k.back() == ' ') k.pop_back();
      if (k != key) continue;
      auto v = c.substr(eq + 1);
      while (!v.empty() && v.front() == ' ') v.erase(v.begin());
      return v;
    }
    return std::nullopt;
  }
};

inline Table read_table(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(Errc::io_error, "cannot open " + path.string());
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      t.comments.push_back(line.size() > 2 && line[1] == ' ' ? line.substr(2) : line.substr(1));
      continue;
    }
    auto cells = split(line);
    if (t.columns.empty()) {
      t.columns = std::move(cells);
      continue;
    }
    if (cells.size() != t.columns.size())
      throw Error(Errc::parse_error, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                         std::to_string(t.columns.size()) + " fields");
    t.rows.push_back(std::move(cells));
  }
  if (t.columns.empty()) throw Error(Errc::parse_error, path.string() + ": no header row");
  return t;
}

}  // namespace csv

inline const char* kEstimateColumns =
    "sample,time_s,truth_amp_v,truth_freq_hz,truth_phase_deg,est_amp_v,est_freq_hz,est_phase_deg,valid";
inline const char* kRecordColumns = "sample,time_s,x1_v,x2_v,truth_amp_v,truth_freq_hz,truth_phase_deg";

/// Estimate CSV: one row per sample, est_amp_v being the mean of the two
/// channel amplitudes.
inline std::string format_estimates(const std::vector<TrackerEstimate>& est, const TruthSeries& truth,
                                    const CsvHeader& header) {
  if (est.size() != truth.size()) throw Error(Errc::invalid_argument, "estimate and truth lengths differ");
  std::ostringstream os;
  csv::put_header(os, header);
  os << kEstimateColumns << '\n';
  for (std::size_t i = 0; i < est.size(); ++i) {
    const auto& e = est[i];
    os << i << ',' << csv::num(static_cast<double>(i) / truth.sample_rate_hz) << ','
       << csv::num(truth.amplitude_v[i]) << ',' << csv::num(truth.frequency_hz[i]) << ','
       << csv::num(truth.phase_diff_deg[i]) << ',' << csv::num(0.5 * (e.amplitude1_v + e.amplitude2_v)) << ','
       << csv::num(e.frequency_hz) << ',' << csv::num(e.phase_diff_deg) << ',' << (e.valid ? 1 : 0) << '\n';
  }
  return os.str();
}

inline std::string format_record(const SensorRecord& rec, const CsvHeader& header) {
  std::ostringstream os;
  csv::put_header(os, header);
  os << "# sample_rate_hz = " << csv::num(rec.truth.sample_rate_hz) << '\n';
  os << kRecordColumns << '\n';
  const auto& t = rec.truth;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    os << i << ',' << csv::num(static_cast<double>(i) / t.sample_rate_hz) << ',' << csv::num(rec.x1[i]) << ','
       << csv::num(rec.x2[i]) << ',' << csv::num(t.amplitude_v[i]) << ',' << csv::num(t.frequency_hz[i]) << ','
       << csv::num(t.phase_diff_deg[i]) << '\n';
  }
  return os.str();
}

inline SensorRecord read_record(const std::filesystem::path& path) {
  const auto t = csv::read_table(path);
  const std::size_t cx1 = t.column("x1_v"), cx2 = t.column("x2_v"), ca = t.column("truth_amp_v"),
                    cf = t.column("truth_freq_hz"), cp = t.column("truth_phase_deg"), ct = t.column("time_s");
  SensorRecord rec;
  const auto where = path.string();
  for (const auto& r : t.rows) {
    rec.x1.push_back(csv::parse_double(r[cx1], where));
    rec.x2.push_back(csv::parse_double(r[cx2], where));
    rec.truth.amplitude_v.push_back(csv::parse_double(r[ca], where));
    rec.truth.frequency_hz.push_back(csv::parse_double(r[cf], where));
    rec.truth.phase_diff_deg.push_back(csv::parse_double(r[cp], where));
  }
  if (rec.x1.empty()) throw Error(Errc::parse_error, where + ": no samples");
  if (auto fs = t.comment_value("sample_rate_hz")) {
    rec.truth.sample_rate_hz = csv::parse_double(*fs, where);
  } else if (t.rows.size() > 1) {
    rec.truth.sample_rate_hz = 1.0 / csv::parse_double(t.rows[1][ct], where);
  }
  if (!(rec.truth.sample_rate_hz > 0.0)) throw Error(Errc::parse_error, where + ": bad sample rate");
  for (std::size_t i = 0; i < rec.size(); ++i)
    if (!std::isfinite(rec.x1[i]) || !std::isfinite(rec.x2[i]))
      throw Error(Errc::non_finite_input, where + ": non-finite sample at row " + std::to_string(i));
  return rec;
}

/// Estimate CSV back into estimates plus the truth columns. Both channel
/// amplitudes are set to the stored mean.
inline std::pair<std::vector<TrackerEstimate>, TruthSeries> read_estimates(const std::filesystem::path& path) {
  const auto t = csv::read_table(path);
  const std::size_t ct = t.column("time_s"), ta = t.column("truth_amp_v"), tf = t.column("truth_freq_hz"),
                    tp = t.column("truth_phase_deg"), ea = t.column("est_amp_v"), ef = t.column("est_freq_hz"),
                    ep = t.column("est_phase_deg"), ev = t.column("valid");
  const auto where = path.string();
  std::vector<TrackerEstimate> est;
  TruthSeries truth;
  for (const auto& r : t.rows) {
    TrackerEstimate e;
    e.sample_index = static_cast<std::int64_t>(est.size());
    e.amplitude1_v = e.amplitude2_v = csv::parse_double(r[ea], where);
    e.frequency_hz = csv::parse_double(r[ef], where);
    e.phase_diff_deg = csv::parse_double(r[ep], where);
    e.valid = r[ev] == "1";
    est.push_back(e);
    truth.amplitude_v.push_back(csv::parse_double(r[ta], where));
    truth.frequency_hz.push_back(csv::parse_double(r[tf], where));
    truth.phase_diff_deg.push_back(csv::parse_double(r[tp], where));
  }
  if (t.rows.size() > 1) truth.sample_rate_hz = 1.0 / csv::parse_double(t.rows[1][ct], where);
  return {std::move(est), std::move(truth)};
}

}  // namespace cmf
