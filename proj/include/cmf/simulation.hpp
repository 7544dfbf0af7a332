#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "cmf/analytic.hpp"
#include "cmf/error.hpp"
#include "cmf/filter_design.hpp"

namespace cmf {

struct TruthSeries {
  std::vector<double> amplitude_v;
  std::vector<double> frequency_hz;
  std::vector<double> phase_diff_deg;
  double sample_rate_hz = 2000.0;

  std::size_t size() const noexcept { return amplitude_v.size(); }
};

enum class PhaseMode {
  accumulated,  // Phi(n) = Phi(n-1) + 2 pi f(n) / fs
  literal,      // Phi(n) = 2 pi f(n) n / fs
};

/// Two sensor streams x1 = A sin(Phi + phi/2), x2 = A sin(Phi - phi/2):
/// sensor 1 leads by phi.
struct SensorRecord {
  std::vector<double> x1;
  std::vector<double> x2;
  TruthSeries truth;
  PhaseMode phase_mode = PhaseMode::accumulated;
  std::uint64_t seed = 0;
  std::uint64_t noise_seed = 0;
  double noise_sigma1 = 0.0;
  double noise_sigma2 = 0.0;

  std::size_t size() const noexcept { return x1.size(); }
};

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct MrwmParams {
  double sample_rate_hz = 2000.0;
  double shaping_cutoff_hz = 6.0;
  int shaping_order = 2;
  Range amp_range{0.05, 0.3};
  Range freq_range{85.0, 100.0};
  Range phase_range{0.0, 4.0};
  double noise_sigma1 = 0.0;
  double noise_sigma2 = 0.0;
  std::size_t duration_samples = 120000;
  std::uint64_t rng_seed = 1;
  // Shaping-filter start-up samples generated and discarded.
  std::size_t burn_in_samples = 2000;
  PhaseMode phase_mode = PhaseMode::accumulated;

  void validate() const {
    if (!(sample_rate_hz > 0.0)) throw Error(Errc::invalid_argument, "sample rate must be positive");
    if (!(sample_rate_hz > 2.0 * freq_range.max)) throw Error(Errc::invalid_argument, "fs must exceed 2 f_max");
    if (!(shaping_cutoff_hz > 0.0 && shaping_cutoff_hz < sample_rate_hz / 2.0))
      throw Error(Errc::invalid_argument, "shaping cutoff must lie in (0, fs/2)");
    for (const Range& r : {amp_range, freq_range, phase_range})
      if (r.min > r.max) throw Error(Errc::invalid_argument, "range min exceeds max");
    if (amp_range.min < 0.0) throw Error(Errc::invalid_argument, "amplitude range must be nonnegative");
    if (noise_sigma1 < 0.0 || noise_sigma2 < 0.0) throw Error(Errc::invalid_argument, "noise sigma must be >= 0");
    if (duration_samples == 0) throw Error(Errc::invalid_argument, "duration must be positive");
  }
};

namespace detail {

enum Stream : std::uint64_t { amp_stream = 1, freq_stream = 2, phase_stream = 3, noise1_stream = 11, noise2_stream = 12 };

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), 0x636d66u};
  return std::mt19937_64(seq);
}

// Uniform on [-1, 1) from the top 53 bits; independent of the standard
// library's distribution implementation.
inline double uniform_pm1(std::mt19937_64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-52 - 1.0;
}

// Standard normal by Box-Muller, pairs cached.
class Gaussian {
 public:
  double operator()(std::mt19937_64& g) {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = static_cast<double>(g() >> 11) * 0x1.0p-53;
    } while (u1 == 0.0);
    const double u2 = static_cast<double>(g() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline std::vector<double> filter_real(const PrototypeFilter& f, std::span<const double> x) {
  const auto& b = f.numerator();
  const auto& a = f.denominator();
  const std::size_t m = std::max(b.size(), a.size()) - 1;
  std::vector<double> s(m, 0.0), y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double out = b[0] * x[n] + (m ? s[0] : 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      double v = i + 1 < m ? s[i + 1] : 0.0;
      if (i + 1 < b.size()) v += b[i + 1] * x[n];
      if (i + 1 < a.size()) v -= a[i + 1] * out;
      s[i] = v;
    }
    y[n] = out;
  }
  return y;
}

// Whole-realization min-max rescale. A flat realization maps to the midpoint.
inline void rescale(std::vector<double>& v, Range r) {
  const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(v.begin(), v.end(), 0.5 * (r.min + r.max));
    return;
  }
  for (auto& x : v) {
    const double t = (x - lo) / (hi - lo);
    x = std::clamp(r.min * (1.0 - t) + r.max * t, r.min, r.max);
  }
}

inline std::vector<double> shaped_noise(const MrwmParams& p, std::uint64_t stream, const PrototypeFilter& shaping) {
  auto g = make_engine(p.rng_seed, stream);
  std::vector<double> u(p.duration_samples + p.burn_in_samples);
  for (auto& v : u) v = uniform_pm1(g);
  auto y = filter_real(shaping, u);
  y.erase(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(p.burn_in_samples));
  return y;
}

}  // namespace detail

/// Noise-free sensor streams from a truth series.
inline void synthesize(SensorRecord& rec, PhaseMode mode = PhaseMode::accumulated) {
  const auto& t = rec.truth;
  const std::size_t n = t.size();
  if (t.frequency_hz.size() != n || t.phase_diff_deg.size() != n)
    throw Error(Errc::invalid_argument, "truth series lengths differ");
  rec.phase_mode = mode;
  rec.x1.resize(n);
  rec.x2.resize(n);
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double phi = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mode == PhaseMode::accumulated) {
      phi += two_pi * t.frequency_hz[i] / t.sample_rate_hz;
      if (phi >= two_pi) phi -= two_pi;
    } else {
      phi = std::fmod(two_pi * t.frequency_hz[i] * static_cast<double>(i) / t.sample_rate_hz, two_pi);
    }
    const double half = 0.5 * deg_to_rad(t.phase_diff_deg[i]);
    rec.x1[i] = t.amplitude_v[i] * std::sin(phi + half);
    rec.x2[i] = t.amplitude_v[i] * std::sin(phi - half);
  }
}

/// Adds independent white Gaussian noise to both channels; truth untouched.
inline SensorRecord add_noise(SensorRecord rec, double sigma1_v, double sigma2_v, std::uint64_t seed) {
  if (sigma1_v < 0.0 || sigma2_v < 0.0) throw Error(Errc::invalid_argument, "noise sigma must be >= 0");
  if (sigma1_v > 0.0) {
    auto g = detail::make_engine(seed, detail::noise1_stream);
    detail::Gaussian gauss;
    for (auto& v : rec.x1) v += sigma1_v * gauss(g);
  }
  if (sigma2_v > 0.0) {
    auto g = detail::make_engine(seed, detail::noise2_stream);
    detail::Gaussian gauss;
    for (auto& v : rec.x2) v += sigma2_v * gauss(g);
  }
  rec.noise_seed = seed;
  rec.noise_sigma1 = std::hypot(rec.noise_sigma1, sigma1_v);
  rec.noise_sigma2 = std::hypot(rec.noise_sigma2, sigma2_v);
  return rec;
}

inline SensorRecord add_noise(SensorRecord rec, double sigma_v, std::uint64_t seed) {
  return add_noise(std::move(rec), sigma_v, sigma_v, seed);
}

/// Modified random walk: uniform noise, low-pass shaped, min-max rescaled
/// over the realization, then synthesized and noised. Batch operation.
inline SensorRecord mrwm_generate(const MrwmParams& p) {
  p.validate();
  const auto shaping = design_butterworth(p.shaping_order, p.shaping_cutoff_hz, FilterKind::low_pass, p.sample_rate_hz);
  SensorRecord rec;
  rec.seed = p.rng_seed;
  rec.truth.sample_rate_hz = p.sample_rate_hz;
  rec.truth.amplitude_v = detail::shaped_noise(p, detail::amp_stream, shaping);
  rec.truth.frequency_hz = detail::shaped_noise(p, detail::freq_stream, shaping);
  rec.truth.phase_diff_deg = detail::shaped_noise(p, detail::phase_stream, shaping);
  detail::rescale(rec.truth.amplitude_v, p.amp_range);
  detail::rescale(rec.truth.frequency_hz, p.freq_range);
  detail::rescale(rec.truth.phase_diff_deg, p.phase_range);
  synthesize(rec, p.phase_mode);
  if (p.noise_sigma1 > 0.0 || p.noise_sigma2 > 0.0)
    rec = add_noise(std::move(rec), p.noise_sigma1, p.noise_sigma2, p.rng_seed);
  return rec;
}

/// Stand-in for the plain random walk model: uniform increments of
/// step_fraction x range per sample, reflected at the range bounds, no shaping.
struct RwmParams {
  double sample_rate_hz = 2000.0;
  Range amp_range{0.05, 0.3};
  Range freq_range{85.0, 100.0};
  Range phase_range{0.0, 4.0};
  double step_fraction = 0.1;
  double noise_sigma1 = 0.0;
  double noise_sigma2 = 0.0;
  std::size_t duration_samples = 120000;
  std::uint64_t rng_seed = 1;
};

inline SensorRecord rwm_generate(const RwmParams& p) {
  if (!(p.sample_rate_hz > 2.0 * p.freq_range.max)) throw Error(Errc::invalid_argument, "fs must exceed 2 f_max");
  if (p.step_fraction < 0.0) throw Error(Errc::invalid_argument, "step fraction must be >= 0");
  auto walk = [&](Range r, std::uint64_t stream) {
    auto g = detail::make_engine(p.rng_seed, stream);
    std::vector<double> v(p.duration_samples);
    double x = 0.5 * (r.min + r.max);
    const double step = p.step_fraction * (r.max - r.min);
    for (auto& out : v) {
      x += step * detail::uniform_pm1(g);
      for (int k = 0; k < 4 && (x < r.min || x > r.max); ++k) {
        if (x > r.max) x = 2.0 * r.max - x;
        if (x < r.min) x = 2.0 * r.min - x;
      }
      x = std::clamp(x, r.min, r.max);
      out = x;
    }
    return v;
  };
  SensorRecord rec;
  rec.seed = p.rng_seed;
  rec.truth.sample_rate_hz = p.sample_rate_hz;
  rec.truth.amplitude_v = walk(p.amp_range, detail::amp_stream);
  rec.truth.frequency_hz = walk(p.freq_range, detail::freq_stream);
  rec.truth.phase_diff_deg = walk(p.phase_range, detail::phase_stream);
  synthesize(rec);
  if (p.noise_sigma1 > 0.0 || p.noise_sigma2 > 0.0)
    rec = add_noise(std::move(rec), p.noise_sigma1, p.noise_sigma2, p.rng_seed);
  return rec;
}

/// Hold, linear ramp of all three parameters, hold.
struct BatchParams {
  double sample_rate_hz = 2000.0;
  double pre_seconds = 0.5;
  double ramp_seconds = 0.5;
  double post_seconds = 0.5;
  double amp_start_v = 0.3, amp_end_v = 0.05;
  double freq_start_hz = 100.0, freq_end_hz = 85.0;
  double phase_start_deg = 0.0, phase_end_deg = 4.0;
};

inline SensorRecord batch_generate(const BatchParams& p) {
  if (!(p.ramp_seconds > 0.0)) throw Error(Errc::invalid_argument, "ramp must be positive");
  if (p.pre_seconds < 0.0 || p.post_seconds < 0.0) throw Error(Errc::invalid_argument, "hold times must be >= 0");
  const auto n = static_cast<std::size_t>(std::llround((p.pre_seconds + p.ramp_seconds + p.post_seconds) * p.sample_rate_hz)) + 1;
  SensorRecord rec;
  auto& t = rec.truth;
  t.sample_rate_hz = p.sample_rate_hz;
  t.amplitude_v.resize(n);
  t.frequency_hz.resize(n);
  t.phase_diff_deg.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double time = static_cast<double>(i) / p.sample_rate_hz;
    const double u = std::clamp((time - p.pre_seconds) / p.ramp_seconds, 0.0, 1.0);
    t.amplitude_v[i] = p.amp_start_v * (1.0 - u) + p.amp_end_v * u;
    t.frequency_hz[i] = p.freq_start_hz * (1.0 - u) + p.freq_end_hz * u;
    t.phase_diff_deg[i] = p.phase_start_deg * (1.0 - u) + p.phase_end_deg * u;
  }
  synthesize(rec);
  return rec;
}

inline SensorRecord tone_generate(double sample_rate_hz, std::size_t samples, double freq_hz, double amp_v,
                                  double phase_diff_deg) {
  if (!(sample_rate_hz > 2.0 * freq_hz) || freq_hz < 0.0) throw Error(Errc::invalid_argument, "tone must lie in [0, fs/2)");
  SensorRecord rec;
  rec.truth.sample_rate_hz = sample_rate_hz;
  rec.truth.amplitude_v.assign(samples, amp_v);
  rec.truth.frequency_hz.assign(samples, freq_hz);
  rec.truth.phase_diff_deg.assign(samples, phase_diff_deg);
  synthesize(rec);
  return rec;
}

}  // namespace cmf
