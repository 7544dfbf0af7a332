#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cmf/analytic.hpp"
#include "cmf/error.hpp"
#include "cmf/filter_design.hpp"
#include "cmf/op_counter.hpp"

namespace cmf {

enum class Method { cbf, cnf, cbf_cnf, hilbert, anf_dtft };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::cbf: return "cbf";
    case Method::cnf: return "cnf";
    case Method::cbf_cnf: return "cbf-cnf";
    case Method::hilbert: return "hilbert";
    case Method::anf_dtft: return "anf-dtft";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::cbf, Method::cnf, Method::cbf_cnf, Method::hilbert, Method::anf_dtft})
    if (s == to_string(m)) return m;
  if (s == "dtft-anf" || s == "dtft") return Method::anf_dtft;
  if (s == "ht") return Method::hilbert;
  throw Error(Errc::invalid_argument, "unknown method '" + s + "'");
}

struct TrackerEstimate {
  double amplitude1_v = 0.0;
  double amplitude2_v = 0.0;
  double frequency_hz = 0.0;
  double phase_diff_deg = 0.0;
  std::int64_t sample_index = 0;
  bool valid = false;
};

enum class DtftWindow { rectangular, hann };

struct AnfParams {
  double rho = 0.9;
  double lambda = 0.9;
  double p0 = 100.0;
  std::optional<double> initial_freq_hz;  // defaults to the tracker's center frequency
};

struct TrackerConfig {
  Method method = Method::cbf;
  double sample_rate_hz = 2000.0;
  double center_freq_hz = 92.5;
  // Capture band; estimates outside it are reported invalid.
  double band_min_hz = 60.0;
  double band_max_hz = 120.0;
  int freq_span_samples = 8;
  std::optional<int> warmup_samples;
  bool gain_compensation = true;
  // Realize each filter as a cascade of first-order complex sections.
  bool factored_sections = false;
  // Signed notch frequencies; when nonempty they replace the single CNF notch.
  std::vector<double> comb_notches_hz;

  std::optional<PrototypeFilter> cbf_prototype;          // default: bundled 5th-order elliptic
  std::optional<PrototypeFilter> cnf_prototype;          // default: bundled 4th-order elliptic high-pass
  std::optional<PrototypeFilter> cascade_cbf_prototype;  // default: bundled 3rd-order elliptic

  int hilbert_length = 49;
  std::vector<double> hilbert_taps;  // overrides the built-in design when nonempty

  int dtft_window_length = 128;
  DtftWindow dtft_window = DtftWindow::hann;
  AnfParams anf;
  bool anf_mean_input = false;

  void validate() const {
    if (!(sample_rate_hz > 0.0)) throw Error(Errc::invalid_argument, "sample rate must be positive");
    if (!(band_min_hz < band_max_hz) || band_min_hz <= 0.0 || band_max_hz >= sample_rate_hz / 2.0)
      throw Error(Errc::invalid_argument, "band must satisfy 0 < min < max < fs/2");
    if (!(center_freq_hz > 0.0 && center_freq_hz < sample_rate_hz / 2.0))
      throw Error(Errc::invalid_argument, "center frequency must lie in (0, fs/2)");
    if (freq_span_samples < 1) throw Error(Errc::invalid_argument, "frequency span must be >= 1");
    if (freq_span_samples * 2.0 * band_max_hz / sample_rate_hz >= 1.0)
      throw Error(Errc::invalid_argument, "frequency span too long: phase step would wrap within the band");
    if (warmup_samples && *warmup_samples < 0) throw Error(Errc::invalid_argument, "warmup must be >= 0");
    if (dtft_window_length < 4 || dtft_window_length % 2 != 0)
      throw Error(Errc::invalid_argument, "DTFT window length must be even and >= 4");
    if (!(anf.rho > 0.0 && anf.rho < 1.0) || !(anf.lambda > 0.0 && anf.lambda < 1.0) || !(anf.p0 > 0.0))
      throw Error(Errc::invalid_argument, "ANF needs rho, lambda in (0,1) and P0 > 0");
  }

  double center_rad() const { return 2.0 * std::numbers::pi * center_freq_hz / sample_rate_hz; }
};

inline const TrackerConfig& validated(const TrackerConfig& cfg) {
  cfg.validate();
  return cfg;
}

/// Streaming two-sensor tracker. Single owner; not safe for concurrent use.
class Tracker {
 public:
  virtual ~Tracker() = default;
  virtual TrackerEstimate step(double x1, double x2) = 0;
  virtual int warmup_samples() const = 0;
  virtual std::uint64_t static_storage_bytes() const = 0;
  virtual std::string name() const = 0;

  const OpCounters& counters() const noexcept { return ops_; }
  void reset_counters() noexcept {
    ops_.additions = 0;
    ops_.multiplications = 0;
  }

 protected:
  OpCounters ops_;
};

/// |H| sampled every 1 Hz over the capture band, linearly interpolated.
class GainTable {
 public:
  GainTable() = default;
  GainTable(const std::function<double(double)>& gain_at_hz, double f_min, double f_max) {
    first_hz_ = std::floor(f_min);
    const auto n = static_cast<std::size_t>(std::ceil(f_max) - first_hz_) + 1;
    values_.resize(n);
    for (std::size_t i = 0; i < n; ++i) values_[i] = gain_at_hz(first_hz_ + static_cast<double>(i));
  }

  bool empty() const noexcept { return values_.empty(); }

  double operator()(double f_hz, OpCounters* c = nullptr) const {
    if (values_.empty()) return 1.0;
    double pos = f_hz - first_hz_;
    ops::add(c);
    pos = std::clamp(pos, 0.0, static_cast<double>(values_.size() - 1));
    const auto i = std::min(static_cast<std::size_t>(pos), values_.size() - 2);
    const double t = pos - static_cast<double>(i);
    ops::add(c, 3);
    ops::mul(c);
    return values_[i] + t * (values_[i + 1] - values_[i]);
  }

  std::uint64_t storage_bytes() const noexcept { return ops::kRealBytes * (values_.size() + 1); }

 private:
  double first_hz_ = 0.0;
  std::vector<double> values_;
};

/// Turns a stream of analytic pairs into estimates: phase difference from
/// z1 conj(z2), frequency from the phase advance over K samples, amplitude
/// from |z| / gain.
class SpanExtractor {
 public:
  SpanExtractor(int span, double sample_rate_hz, double band_min_hz, double band_max_hz)
      : span_(span), fs_(sample_rate_hz), band_min_(band_min_hz), band_max_(band_max_hz),
        ring_(static_cast<std::size_t>(span)) {}

  TrackerEstimate extract(const AnalyticPair& now, std::int64_t index, bool warm, const GainTable& gain,
                          OpCounters* c) {
    TrackerEstimate est;
    est.sample_index = index;
    const AnalyticPair past = ring_[head_];
    ring_[head_] = now;
    head_ = (head_ + 1) % ring_.size();
    const bool have_past = filled_ >= span_;
    if (!have_past) ++filled_;

    const double n1 = std::norm(now.z1);
    const double n2 = std::norm(now.z2);
    ops::norm(c, 2);
    const double m1 = std::sqrt(n1);
    const double m2 = std::sqrt(n2);
    ops::transcendental(c, 2);
    if (!(m1 >= 1e-12 && m2 >= 1e-12) || !have_past) return est;

    const auto cross = now.z1 * std::conj(now.z2);
    ops::cmul(c);
    est.phase_diff_deg = rad_to_deg(std::arg(cross));
    ops::mul(c);

    const auto advance = now.z1 * std::conj(past.z1) + now.z2 * std::conj(past.z2);
    ops::cmul(c, 2);
    ops::cadd(c);
    if (advance == std::complex<double>(0.0)) return est;
    est.frequency_hz = std::arg(advance) * fs_ / (2.0 * std::numbers::pi * span_);
    ops::mul(c);

    const double g = gain.empty() ? 1.0 : gain(est.frequency_hz, c);
    const double safe = g > 0.0 ? g : 1.0;
    est.amplitude1_v = m1 / safe;
    est.amplitude2_v = m2 / safe;
    ops::mul(c, 2);

    est.valid = warm && est.frequency_hz >= band_min_ && est.frequency_hz <= band_max_ &&
                std::isfinite(est.amplitude1_v) && std::isfinite(est.amplitude2_v);
    return est;
  }

  std::uint64_t storage_bytes() const noexcept { return ops::kComplexBytes * 2 * ring_.size(); }

 private:
  int span_;
  double fs_;
  double band_min_;
  double band_max_;
  std::vector<AnalyticPair> ring_;
  std::size_t head_ = 0;
  int filled_ = 0;
};

}  // namespace cmf
