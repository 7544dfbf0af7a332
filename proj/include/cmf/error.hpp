#pragma once

#include <stdexcept>
#include <string>

namespace cmf {

enum class Errc {
  invalid_argument,
  invalid_order,
  cutoff_out_of_range,
  parse_error,
  unstable_prototype,
  degenerate_response,
  no_convergence,
  non_finite_input,
  zero_magnitude_input,
  notch_in_tracking_band,
  invalid_length,
  unprimed_buffer,
  no_valid_samples,
  ambiguous_peak,
  io_error,
};

inline const char* to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::invalid_order: return "invalid-order";
    case Errc::cutoff_out_of_range: return "cutoff-out-of-range";
    case Errc::parse_error: return "parse-error";
    case Errc::unstable_prototype: return "unstable-prototype";
    case Errc::degenerate_response: return "degenerate-response";
    case Errc::no_convergence: return "no-convergence";
    case Errc::non_finite_input: return "non-finite-input";
    case Errc::zero_magnitude_input: return "zero-magnitude-input";
    case Errc::notch_in_tracking_band: return "notch-in-tracking-band";
    case Errc::invalid_length: return "invalid-length";
    case Errc::unprimed_buffer: return "unprimed-buffer";
    case Errc::no_valid_samples: return "no-valid-samples";
    case Errc::ambiguous_peak: return "ambiguous-peak";
    case Errc::io_error: return "io-error";
  }
  return "unknown";
}

/// Every failure raised by the library carries one of the Errc codes.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace cmf
