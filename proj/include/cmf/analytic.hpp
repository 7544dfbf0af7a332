#pragma once

#include <cmath>
#include <complex>
#include <numbers>

#include "cmf/error.hpp"
#include "cmf/filter_design.hpp"

namespace cmf {

struct AnalyticPair {
  std::complex<double> z1;
  std::complex<double> z2;
};

/// arg(z1 conj(z2)) in (-pi, pi]; positive when sensor 1 leads.
inline double phase_difference(const AnalyticPair& pair) {
  if (std::abs(pair.z1) == 0.0 || std::abs(pair.z2) == 0.0)
    throw Error(Errc::zero_magnitude_input, "phase difference of a zero sample");
  return wrap_angle(std::arg(pair.z1 * std::conj(pair.z2)));
}

inline double amplitude(std::complex<double> z, double gain = 1.0) {
  if (!(gain > 0.0)) throw Error(Errc::invalid_argument, "gain must be positive");
  return std::abs(z) / gain;
}

inline double span_to_hz(double phase_step_rad, int span, double sample_rate_hz) {
  return wrap_angle(phase_step_rad) * sample_rate_hz / (2.0 * std::numbers::pi * span);
}

/// Frequency from the phase advance of one analytic stream over K samples.
inline double frequency_from_span(std::complex<double> z_now, std::complex<double> z_past, int span,
                                  double sample_rate_hz) {
  if (span < 1) throw Error(Errc::invalid_argument, "span must be >= 1");
  if (std::abs(z_now) == 0.0 || std::abs(z_past) == 0.0)
    throw Error(Errc::zero_magnitude_input, "frequency from a zero sample");
  return span_to_hz(std::arg(z_now * std::conj(z_past)), span, sample_rate_hz);
}

/// Two-sensor form: the per-channel phase advances are summed as complex
/// products before the angle is taken, so the estimate is symmetric in the
/// two channels.
inline double frequency_from_span(const AnalyticPair& now, const AnalyticPair& past, int span,
                                  double sample_rate_hz) {
  if (span < 1) throw Error(Errc::invalid_argument, "span must be >= 1");
  const auto s = now.z1 * std::conj(past.z1) + now.z2 * std::conj(past.z2);
  if (std::abs(s) == 0.0) throw Error(Errc::zero_magnitude_input, "frequency from zero samples");
  return span_to_hz(std::arg(s), span, sample_rate_hz);
}

inline double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace cmf
