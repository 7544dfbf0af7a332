#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "cmf/filter_design.hpp"
#include "cmf/iir.hpp"
#include "cmf/tracker_types.hpp"

namespace cmf {

/// Cascade of CNF sections, one per signed notch frequency. Each section is
/// the high-pass prototype rotated so its stopband sits on the notch.
inline FilterChain build_comb_cnf(const std::vector<double>& notches_hz, const PrototypeFilter& prototype,
                                  double band_min_hz, double band_max_hz) {
  const double fs = prototype.sample_rate_hz();
  FilterChain chain;
  for (double f : notches_hz) {
    if (!(std::abs(f) < fs / 2.0)) throw Error(Errc::invalid_argument, "notch must satisfy |f| < fs/2");
    if (f >= band_min_hz - 5.0 && f <= band_max_hz + 5.0)
      throw Error(Errc::notch_in_tracking_band, "notch at " + std::to_string(f) + " Hz is within 5 Hz of the tracking band");
    chain.push_back(FilterState(complex_shift(prototype, 2.0 * std::numbers::pi * f / fs)));
  }
  return chain;
}

namespace detail {

inline void check_rate(const PrototypeFilter& p, double fs) {
  if (std::abs(p.sample_rate_hz() - fs) > 1e-9 * fs)
    throw Error(Errc::invalid_argument, "prototype '" + p.label() + "' was designed for a different sample rate");
}

// The first stage also doubles its numerator: a real tone of amplitude A
// leaves A/2 on the positive side, so the doubled chain yields |z| = A|H|.
inline FilterChain scaled_for_analytic(const FilterChain& chain) {
  FilterChain out;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    auto coeffs = chain.stage(i).coefficients();
    if (i == 0)
      for (auto& b : coeffs.numerator) b *= 2.0;
    out.push_back(FilterState(std::move(coeffs)));
  }
  return out;
}

}  // namespace detail

/// Unscaled filter chain for a CBF / CNF / CBF-CNF configuration.
inline FilterChain build_complex_chain(const TrackerConfig& cfg) {
  const double theta = cfg.center_rad();
  const double fs = cfg.sample_rate_hz;
  auto cnf_stage = [&](FilterChain& chain) {
    const auto proto = cfg.cnf_prototype.value_or(bundled::cnf_elliptic4());
    detail::check_rate(proto, fs);
    if (cfg.comb_notches_hz.empty()) {
      chain.push_back(FilterState(complex_shift(proto, -theta)));
    } else {
      auto comb = build_comb_cnf(cfg.comb_notches_hz, proto, cfg.band_min_hz, cfg.band_max_hz);
      for (std::size_t i = 0; i < comb.size(); ++i) chain.push_back(comb.stage(i));
    }
  };

  FilterChain chain;
  switch (cfg.method) {
    case Method::cbf: {
      const auto proto = cfg.cbf_prototype.value_or(bundled::cbf_elliptic5());
      detail::check_rate(proto, fs);
      chain.push_back(FilterState(complex_shift(proto, theta)));
      break;
    }
    case Method::cnf:
      cnf_stage(chain);
      break;
    case Method::cbf_cnf: {
      const auto proto = cfg.cascade_cbf_prototype.value_or(bundled::cascade_cbf_elliptic3());
      detail::check_rate(proto, fs);
      chain.push_back(FilterState(complex_shift(proto, theta)));
      cnf_stage(chain);
      break;
    }
    default:
      throw Error(Errc::invalid_argument, "not a complex-filter method");
  }
  if (!cfg.factored_sections) return chain;
  FilterChain factored;
  for (std::size_t i = 0; i < chain.size(); ++i)
    for (auto& s : factor_sections(chain.stage(i).coefficients())) factored.push_back(FilterState(std::move(s)));
  return factored;
}

/// Five group delays at the center, or the time for the slowest pole to ring
/// down by 80 dB, whichever is longer. The lightly damped notch poles of the
/// CNF outlast its ~2-sample group delay by two orders of magnitude.
inline int default_warmup(const FilterChain& chain, double center_rad) {
  double r_max = 0.0;
  for (std::size_t i = 0; i < chain.size(); ++i)
    for (const auto& p : poles(chain.stage(i).coefficients())) r_max = std::max(r_max, std::abs(p));
  const double ring = r_max > 0.0 ? std::log(1e-4) / std::log(r_max) : 0.0;
  const double gd = 5.0 * std::max(0.0, chain.group_delay_samples(center_rad));
  return static_cast<int>(std::ceil(std::max(gd, ring)));
}

class ComplexTracker final : public Tracker {
 public:
  explicit ComplexTracker(const TrackerConfig& cfg)
      : cfg_(validated(cfg)),
        extractor_(cfg.freq_span_samples, cfg.sample_rate_hz, cfg.band_min_hz, cfg.band_max_hz) {
    const FilterChain unscaled = build_complex_chain(cfg_);
    ch1_ = detail::scaled_for_analytic(unscaled);
    ch2_ = ch1_;
    const double theta = cfg_.center_rad();
    warmup_ = cfg_.warmup_samples.value_or(default_warmup(unscaled, theta) + cfg_.freq_span_samples);
    if (cfg_.gain_compensation) {
      const double fs = cfg_.sample_rate_hz;
      gain_ = GainTable([&](double f) { return std::abs(unscaled.response(2.0 * std::numbers::pi * f / fs)); },
                        cfg_.band_min_hz, cfg_.band_max_hz);
    }
    ops_.static_storage_bytes = static_storage_bytes();
  }

  TrackerEstimate step(double x1, double x2) override {
    if (!std::isfinite(x1) || !std::isfinite(x2))
      throw Error(Errc::non_finite_input, "sensor sample is not finite");
    const AnalyticPair pair{ch1_.step(x1, &ops_), ch2_.step(x2, &ops_)};
    const bool warm = index_ >= warmup_;
    auto est = extractor_.extract(pair, index_, warm, gain_, &ops_);
    ++index_;
    return est;
  }

  int warmup_samples() const override { return warmup_; }

  std::uint64_t static_storage_bytes() const override {
    // Coefficients are shared by both channels; count them once.
    std::uint64_t coeff_bytes = 0, state_bytes = 0;
    for (std::size_t i = 0; i < ch1_.size(); ++i) {
      const auto& s = ch1_.stage(i);
      coeff_bytes += ops::kComplexBytes * (s.coefficients().numerator.size() + s.coefficients().denominator.size() - 1);
      state_bytes += ops::kComplexBytes * s.delay_line().size();
    }
    return coeff_bytes + 2 * state_bytes + extractor_.storage_bytes() + gain_.storage_bytes();
  }

  std::string name() const override { return to_string(cfg_.method); }

  const FilterChain& chain() const noexcept { return ch1_; }

 private:
  TrackerConfig cfg_;
  FilterChain ch1_;
  FilterChain ch2_;
  SpanExtractor extractor_;
  GainTable gain_;
  int warmup_ = 0;
  std::int64_t index_ = 0;
};

}  // namespace cmf
