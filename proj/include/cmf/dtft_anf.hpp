#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "cmf/anf.hpp"
#include "cmf/sliding_dtft.hpp"
#include "cmf/tracker_types.hpp"

namespace cmf {

/// Frequency from the adaptive notch on channel 1 (or the channel mean);
/// amplitude and phase difference from sliding DTFTs at the notch frequency.
class DtftAnfTracker final : public Tracker {
 public:
  explicit DtftAnfTracker(const TrackerConfig& cfg)
      : cfg_(validated(cfg)),
        anf_(AnfState::make(2.0 * std::numbers::pi * cfg.anf.initial_freq_hz.value_or(cfg.center_freq_hz) /
                                cfg.sample_rate_hz,
                            cfg.anf.rho, cfg.anf.lambda, cfg.anf.p0)),
        d1_(cfg.dtft_window_length, cfg.dtft_window),
        d2_(cfg.dtft_window_length, cfg.dtft_window) {
    warmup_ = cfg_.warmup_samples.value_or(cfg_.dtft_window_length + 200);
    ops_.static_storage_bytes = static_storage_bytes();
  }

  TrackerEstimate step(double x1, double x2) override {
    if (!std::isfinite(x1) || !std::isfinite(x2))
      throw Error(Errc::non_finite_input, "sensor sample is not finite");
    double drive = x1;
    if (cfg_.anf_mean_input) {
      drive = 0.5 * (x1 + x2);
      ops::add(&ops_);
      ops::mul(&ops_);
    }
    const auto out = anf_step(anf_, drive, &ops_);
    d1_.update(x1, out.omega_hat, &ops_);
    d2_.update(x2, out.omega_hat, &ops_);

    TrackerEstimate est;
    est.sample_index = index_++;
    if (!d1_.primed()) return est;
    est.frequency_hz = out.omega_hat * cfg_.sample_rate_hz / (2.0 * std::numbers::pi);
    ops::mul(&ops_);
    const auto s1 = d1_.value(&ops_);
    const auto s2 = d2_.value(&ops_);
    const double scale = 2.0 / d1_.window_sum();
    est.amplitude1_v = std::abs(s1) * scale;
    est.amplitude2_v = std::abs(s2) * scale;
    ops::norm(&ops_, 2);
    ops::transcendental(&ops_, 2);
    ops::mul(&ops_, 2);
    if (std::abs(s1) < 1e-12 || std::abs(s2) < 1e-12) return est;
    est.phase_diff_deg = rad_to_deg(std::arg(s1 * std::conj(s2)));
    ops::cmul(&ops_);
    ops::mul(&ops_);
    est.valid = est.sample_index >= warmup_ && !out.diverged && est.frequency_hz >= cfg_.band_min_hz &&
                est.frequency_hz <= cfg_.band_max_hz;
    return est;
  }

  int warmup_samples() const override { return warmup_; }

  std::uint64_t static_storage_bytes() const override {
    return AnfState::storage_bytes() + d1_.storage_bytes() + d2_.storage_bytes();
  }

  std::string name() const override { return to_string(Method::anf_dtft); }

  const AnfState& anf() const noexcept { return anf_; }
  const DtftState& dtft1() const noexcept { return d1_; }

 private:
  TrackerConfig cfg_;
  AnfState anf_;
  DtftState d1_;
  DtftState d2_;
  int warmup_ = 0;
  std::int64_t index_ = 0;
};

}  // namespace cmf
