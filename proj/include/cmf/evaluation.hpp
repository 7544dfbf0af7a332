#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "cmf/error.hpp"
#include "cmf/simulation.hpp"
#include "cmf/tracker.hpp"

namespace cmf {

struct RmseResult {
  double amplitude_v = 0.0;
  double frequency_hz = 0.0;
  double phase_deg = 0.0;
  std::size_t samples = 0;
};

/// Root mean squared error over valid estimates with index >= skip. The
/// amplitude estimate is the mean of the two channel amplitudes.
inline RmseResult rmse(std::span<const TrackerEstimate> est, const TruthSeries& truth, std::size_t skip) {
  if (est.size() != truth.size()) throw Error(Errc::invalid_argument, "estimate and truth lengths differ");
  if (skip >= est.size()) throw Error(Errc::invalid_argument, "skip must be below the series length");
  double sa = 0.0, sf = 0.0, sp = 0.0;
  std::size_t n = 0;
  for (std::size_t i = skip; i < est.size(); ++i) {
    if (!est[i].valid) continue;
    const double da = 0.5 * (est[i].amplitude1_v + est[i].amplitude2_v) - truth.amplitude_v[i];
    const double df = est[i].frequency_hz - truth.frequency_hz[i];
    const double dp = est[i].phase_diff_deg - truth.phase_diff_deg[i];
    sa += da * da;
    sf += df * df;
    sp += dp * dp;
    ++n;
  }
  if (n == 0) throw Error(Errc::no_valid_samples, "no valid estimates after the transient skip");
  const double inv = 1.0 / static_cast<double>(n);
  return {std::sqrt(sa * inv), std::sqrt(sf * inv), std::sqrt(sp * inv), n};
}

namespace detail {

// Normalized cross-correlation of mean-removed a[i] and b[i + lag].
inline double xcorr_at(std::span<const double> a, std::span<const double> b, long lag) {
  const long n = static_cast<long>(a.size());
  const long i0 = std::max(0L, -lag), i1 = std::min(n, n - lag);
  if (i1 - i0 < 2) return 0.0;
  double ma = 0.0, mb = 0.0;
  for (long i = i0; i < i1; ++i) {
    ma += a[static_cast<std::size_t>(i)];
    mb += b[static_cast<std::size_t>(i + lag)];
  }
  ma /= static_cast<double>(i1 - i0);
  mb /= static_cast<double>(i1 - i0);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (long i = i0; i < i1; ++i) {
    const double x = a[static_cast<std::size_t>(i)] - ma;
    const double y = b[static_cast<std::size_t>(i + lag)] - mb;
    sab += x * y;
    saa += x * x;
    sbb += y * y;
  }
  if (saa <= 0.0 || sbb <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sab / std::sqrt(saa * sbb);
}

}  // namespace detail

/// Lag (in samples) of b relative to a that maximizes the normalized
/// cross-correlation, refined by a parabola through the peak and its
/// neighbours. Positive when b lags a. Throws ambiguous-peak for flat
/// traces, plateaus, or a maximum on the edge of the search window.
inline double correlation_lag(std::span<const double> a, std::span<const double> b, long max_lag) {
  if (a.size() != b.size()) throw Error(Errc::invalid_argument, "trace lengths differ");
  if (max_lag < 1) throw Error(Errc::invalid_argument, "max lag must be >= 1");
  if (a.size() < static_cast<std::size_t>(10 * max_lag))
    throw Error(Errc::invalid_argument, "series overlap must be at least 10x the maximum lag");
  std::vector<double> r(static_cast<std::size_t>(2 * max_lag + 1));
  for (long l = -max_lag; l <= max_lag; ++l) {
    r[static_cast<std::size_t>(l + max_lag)] = detail::xcorr_at(a, b, l);
    if (std::isnan(r[static_cast<std::size_t>(l + max_lag)]))
      throw Error(Errc::ambiguous_peak, "trace has no variation");
  }
  const auto best = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
  if (best == 0 || best + 1 == r.size())
    throw Error(Errc::ambiguous_peak, "correlation maximum on the edge of the search window");
  const double y0 = r[best - 1], y1 = r[best], y2 = r[best + 1];
  const double tol = 1e-12 * std::max(1.0, std::abs(y1));
  if (y1 - y0 <= tol || y1 - y2 <= tol) throw Error(Errc::ambiguous_peak, "correlation plateau");
  const double denom = y0 - 2.0 * y1 + y2;
  const double offset = denom != 0.0 ? 0.5 * (y0 - y2) / denom : 0.0;
  return static_cast<double>(static_cast<long>(best) - max_lag) + offset;
}

struct DelayResult {
  double delay_ms = 0.0;
  // Per parameter (amplitude, frequency, phase); empty when the truth trace is flat.
  std::array<std::optional<double>, 3> per_parameter_ms;
};

/// Tracking delay: cross-correlation lag per parameter, averaged over the
/// parameters whose truth varies. Invalid estimates hold the last valid value.
inline DelayResult tracking_delay(std::span<const TrackerEstimate> est, const TruthSeries& truth, double max_lag_ms,
                                  std::size_t skip = 0) {
  if (est.size() != truth.size()) throw Error(Errc::invalid_argument, "estimate and truth lengths differ");
  if (skip >= est.size()) throw Error(Errc::invalid_argument, "skip must be below the series length");
  const double fs = truth.sample_rate_hz;
  const auto max_lag = static_cast<long>(std::ceil(max_lag_ms * 1e-3 * fs));
  const std::size_t n = est.size() - skip;

  std::size_t first_valid = skip;
  while (first_valid < est.size() && !est[first_valid].valid) ++first_valid;
  if (first_valid == est.size()) throw Error(Errc::no_valid_samples, "no valid estimates");

  std::array<std::vector<double>, 3> e, t;
  for (auto& v : e) v.resize(n);
  for (auto& v : t) v.resize(n);
  TrackerEstimate hold = est[first_valid];
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = est[skip + i];
    if (s.valid) hold = s;
    e[0][i] = 0.5 * (hold.amplitude1_v + hold.amplitude2_v);
    e[1][i] = hold.frequency_hz;
    e[2][i] = hold.phase_diff_deg;
    t[0][i] = truth.amplitude_v[skip + i];
    t[1][i] = truth.frequency_hz[skip + i];
    t[2][i] = truth.phase_diff_deg[skip + i];
  }

  DelayResult out;
  double sum = 0.0;
  int used = 0;
  for (int k = 0; k < 3; ++k) {
    const auto [lo, hi] = std::minmax_element(t[k].begin(), t[k].end());
    if (!(*hi > *lo)) continue;
    const double lag = correlation_lag(t[k], e[k], max_lag);
    out.per_parameter_ms[static_cast<std::size_t>(k)] = lag / fs * 1e3;
    sum += lag / fs * 1e3;
    ++used;
  }
  if (used == 0) throw Error(Errc::ambiguous_peak, "truth is constant; delay undefined");
  out.delay_ms = sum / used;
  return out;
}

/// 10 log10(signal power / noise power), noise being the record minus its
/// noise-free resynthesis. +inf when the record is noise-free.
inline double measure_snr(const SensorRecord& rec) {
  SensorRecord clean;
  clean.truth = rec.truth;
  synthesize(clean, rec.phase_mode);
  if (clean.size() != rec.size()) throw Error(Errc::invalid_argument, "record and truth lengths differ");
  double ps = 0.0, pn = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    const double n1 = rec.x1[i] - clean.x1[i];
    const double n2 = rec.x2[i] - clean.x2[i];
    ps += clean.x1[i] * clean.x1[i] + clean.x2[i] * clean.x2[i];
    pn += n1 * n1 + n2 * n2;
  }
  if (pn == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(ps / pn);
}

/// Hann-weighted time average. Suppresses sinusoidal ripple in a
/// steady-state trace far better than a plain mean when the ripple period
/// does not divide the window.
inline double steady_mean(std::span<const double> v) {
  if (v.size() < 2) throw Error(Errc::invalid_argument, "steady_mean needs at least 2 samples");
  const double n = static_cast<double>(v.size());
  double sw = 0.0, s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5) / n);
    sw += w;
    s += w * v[i];
  }
  return s / sw;
}

struct ComplexityAudit {
  double additions_per_sample = 0.0;
  double multiplications_per_sample = 0.0;
  std::uint64_t static_storage_bytes = 0;
  std::size_t samples = 0;
};

/// Per-sample arithmetic averaged over a steady tone at the center frequency.
inline ComplexityAudit audit_complexity(const TrackerConfig& cfg, std::size_t samples = 4000) {
  if (samples < 1000) throw Error(Errc::invalid_argument, "audit needs at least 1000 samples");
  const auto rec = tone_generate(cfg.sample_rate_hz, samples, cfg.center_freq_hz, 0.1, 2.0);
  auto tracker = make_tracker(cfg);
  std::uint64_t prev_a = 0, prev_m = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    tracker->step(rec.x1[i], rec.x2[i]);
    const auto& c = tracker->counters();
    if (c.additions < prev_a || c.multiplications < prev_m)
      throw Error(Errc::invalid_argument, "operation counters decreased");
    prev_a = c.additions;
    prev_m = c.multiplications;
  }
  ComplexityAudit out;
  out.samples = samples;
  out.additions_per_sample = static_cast<double>(tracker->counters().additions) / static_cast<double>(samples);
  out.multiplications_per_sample = static_cast<double>(tracker->counters().multiplications) / static_cast<double>(samples);
  out.static_storage_bytes = tracker->static_storage_bytes();
  return out;
}

struct EvaluationReport {
  std::string method;
  double rmse_amplitude_v = 0.0;
  double rmse_frequency_hz = 0.0;
  double rmse_phase_deg = 0.0;
  std::optional<double> tracking_delay_ms;
  std::size_t samples_scored = 0;
  std::size_t transient_skipped = 0;
  ComplexityAudit ops;
};

namespace detail {
inline std::string fmt(double v, const char* f = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}
}  // namespace detail

inline void write_report_csv(std::ostream& os, const std::vector<EvaluationReport>& rows) {
  os << "method,rmse_amp_v,rmse_freq_hz,rmse_phase_deg,tracking_delay_ms,samples_scored,transient_skipped,"
        "additions_per_sample,multiplications_per_sample,static_storage_bytes\n";
  for (const auto& r : rows) {
    os << r.method << ',' << detail::fmt(r.rmse_amplitude_v) << ',' << detail::fmt(r.rmse_frequency_hz) << ','
       << detail::fmt(r.rmse_phase_deg) << ',' << (r.tracking_delay_ms ? detail::fmt(*r.tracking_delay_ms) : "")
       << ',' << r.samples_scored << ',' << r.transient_skipped << ',' << detail::fmt(r.ops.additions_per_sample)
       << ',' << detail::fmt(r.ops.multiplications_per_sample) << ',' << r.ops.static_storage_bytes << '\n';
  }
}

/// Aligned text table: RMSE block, delay row, complexity block.
inline void write_report_table(std::ostream& os, const std::vector<EvaluationReport>& rows) {
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %12s %12s %12s %10s %9s %9s %9s\n", "method", "amp (V)", "freq (Hz)",
                "phase (deg)", "delay(ms)", "adds/smp", "mults/smp", "bytes");
  os << line;
  for (const auto& r : rows) {
    const std::string delay = r.tracking_delay_ms ? detail::fmt(*r.tracking_delay_ms, "%.2f") : "-";
    std::snprintf(line, sizeof line, "%-10s %12.4e %12.4e %12.4e %10s %9.1f %9.1f %9llu\n", r.method.c_str(),
                  r.rmse_amplitude_v, r.rmse_frequency_hz, r.rmse_phase_deg, delay.c_str(),
                  r.ops.additions_per_sample, r.ops.multiplications_per_sample,
                  static_cast<unsigned long long>(r.ops.static_storage_bytes));
    os << line;
  }
}

}  // namespace cmf
