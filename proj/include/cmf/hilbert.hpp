#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "cmf/error.hpp"
#include "cmf/tracker_types.hpp"

namespace cmf {

/// Type III Hilbert transformer: Hamming-windowed ideal response
/// h[c+k] = 2/(pi k) for odd k, zero for even k, antisymmetric about c.
inline std::vector<double> design_hilbert_fir(int length) {
  if (length < 7 || length % 2 == 0) throw Error(Errc::invalid_length, "Hilbert length must be odd and >= 7");
  const int c = length / 2;
  std::vector<double> h(static_cast<std::size_t>(length), 0.0);
  for (int k = 1; k <= c; k += 2) {
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * (c + k) / (length - 1));
    const double v = 2.0 / (std::numbers::pi * k) * w;
    h[static_cast<std::size_t>(c + k)] = v;
    h[static_cast<std::size_t>(c - k)] = -v;
  }
  return h;
}

/// Zero-phase amplitude of an antisymmetric FIR: j H(w) e^{jwc} = 2 sum h[c+k] sin(wk).
/// Close to +1 across the passband for positive w.
inline double hilbert_amplitude(const std::vector<double>& taps, double omega_rad) {
  const std::size_t c = taps.size() / 2;
  double a = 0.0;
  for (std::size_t k = 1; k <= c; ++k) a += 2.0 * taps[c + k] * std::sin(omega_rad * static_cast<double>(k));
  return a;
}

/// Analytic signal as (input delayed by the FIR's center) + j (FIR output);
/// the same extraction as the complex-filter trackers follows.
class HilbertTracker final : public Tracker {
 public:
  explicit HilbertTracker(const TrackerConfig& cfg)
      : cfg_(validated(cfg)),
        taps_(cfg.hilbert_taps.empty() ? design_hilbert_fir(cfg.hilbert_length) : cfg.hilbert_taps),
        extractor_(cfg.freq_span_samples, cfg.sample_rate_hz, cfg.band_min_hz, cfg.band_max_hz) {
    const std::size_t n = taps_.size();
    if (n < 7 || n % 2 == 0) throw Error(Errc::invalid_length, "Hilbert length must be odd and >= 7");
    for (std::size_t i = 0; i < n; ++i)
      if (std::abs(taps_[i] + taps_[n - 1 - i]) > 1e-12)
        throw Error(Errc::invalid_argument, "Hilbert taps must be antisymmetric");
    center_ = n / 2;
    line1_.assign(n, 0.0);
    line2_.assign(n, 0.0);
    warmup_ = cfg_.warmup_samples.value_or(static_cast<int>(5 * center_) + cfg_.freq_span_samples);
    if (cfg_.gain_compensation) {
      // Positive-frequency gain of x_d + j Hx is (1 + A(w)) / 2; the
      // analytic signal is not doubled here, so the tone amplitude maps to |z|.
      const double fs = cfg_.sample_rate_hz;
      gain_ = GainTable(
          [&](double f) { return 0.5 * (1.0 + hilbert_amplitude(taps_, 2.0 * std::numbers::pi * f / fs)); },
          cfg_.band_min_hz, cfg_.band_max_hz);
    }
    ops_.static_storage_bytes = static_storage_bytes();
  }

  TrackerEstimate step(double x1, double x2) override {
    if (!std::isfinite(x1) || !std::isfinite(x2))
      throw Error(Errc::non_finite_input, "sensor sample is not finite");
    last_ = {push(line1_, x1), push(line2_, x2)};
    head_ = (head_ + 1) % taps_.size();
    const bool warm = index_ >= warmup_;
    auto est = extractor_.extract(last_, index_, warm, gain_, &ops_);
    ++index_;
    return est;
  }

  int warmup_samples() const override { return warmup_; }

  std::uint64_t static_storage_bytes() const override {
    return ops::kRealBytes * (taps_.size() + line1_.size() + line2_.size()) + extractor_.storage_bytes() +
           gain_.storage_bytes();
  }

  std::string name() const override { return to_string(Method::hilbert); }
  const std::vector<double>& taps() const noexcept { return taps_; }
  // (x(n - c), FIR output) per channel for the latest sample.
  const AnalyticPair& last_analytic() const noexcept { return last_; }

 private:
  // Writes x at head_ and returns (x(n - c), sum h[k] x(n - k)). Generic
  // convolution over every tap.
  std::complex<double> push(std::vector<double>& line, double x) {
    const std::size_t n = taps_.size();
    line[head_] = x;
    double acc = 0.0;
    std::size_t idx = head_;
    for (std::size_t k = 0; k < n; ++k) {
      acc += taps_[k] * line[idx];
      idx = idx == 0 ? n - 1 : idx - 1;
    }
    ops::mul(&ops_, n);
    ops::add(&ops_, n - 1);
    const double delayed = line[(head_ + n - center_) % n];
    return {delayed, acc};
  }

  TrackerConfig cfg_;
  std::vector<double> taps_;
  SpanExtractor extractor_;
  GainTable gain_;
  std::vector<double> line1_;
  std::vector<double> line2_;
  AnalyticPair last_;
  std::size_t center_ = 0;
  std::size_t head_ = 0;
  int warmup_ = 0;
  std::int64_t index_ = 0;
};

}  // namespace cmf
