#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "cmf/error.hpp"
#include "cmf/op_counter.hpp"
#include "cmf/tracker_types.hpp"

namespace cmf {

/// Sliding windowed DTFT of the newest N samples, referenced to the newest
/// sample: S(n, w) = sum_{m<N} w_m x(n-m) e^{j w m}. For a stationary tone at
/// w its argument is the tone's current phase.
///
/// Each bin follows S(n) = x(n) + e^{jw} S(n-1) - x(n-N) e^{jwN}. The Hann
/// window (periodic, w_m = 0.5 - 0.5 cos(2 pi m / N)) is the combination
/// 0.5 S(w) - 0.25 S(w + 2pi/N) - 0.25 S(w - 2pi/N). Bins stay at the rebase
/// frequency until the requested frequency moves further than 2pi/(10N),
/// then are recomputed directly from the buffer.
class DtftState {
 public:
  DtftState(int window_length, DtftWindow window = DtftWindow::rectangular)
      : n_(window_length), window_(window) {
    if (window_length < 4 || window_length % 2 != 0)
      throw Error(Errc::invalid_argument, "DTFT window length must be even and >= 4");
    buffer_.assign(static_cast<std::size_t>(n_), 0.0);
    const std::size_t bins = window_ == DtftWindow::hann ? 3 : 1;
    acc_.assign(bins, 0.0);
    step_.assign(bins, 1.0);
    wrap_.assign(bins, 1.0);
    set_frequency(0.0);
  }

  /// Pushes one sample, tracking omega_rad. Pre-history counts as zeros, so
  /// the recursion is exact from the first sample.
  void update(double x, double omega_rad, OpCounters* c = nullptr) {
    if (!std::isfinite(x)) throw Error(Errc::non_finite_input, "DTFT input is not finite");
    const double oldest = buffer_[head_];
    buffer_[head_] = x;
    head_ = (head_ + 1) % buffer_.size();
    ++count_;
    if (std::abs(omega_rad - omega_ref_) > 2.0 * std::numbers::pi / (10.0 * n_)) {
      set_frequency(omega_rad);
      recompute(c);
      ++rebases_;
      return;
    }
    for (std::size_t b = 0; b < acc_.size(); ++b) {
      acc_[b] = x + step_[b] * acc_[b] - oldest * wrap_[b];
      ops::cmul(c);
      ops::rcmul(c);
      ops::add(c);
      ops::cadd(c);
    }
  }

  bool primed() const noexcept { return count_ >= n_; }

  /// Windowed coefficient at the current rebase frequency.
  std::complex<double> value(OpCounters* c = nullptr) const {
    if (!primed()) throw Error(Errc::unprimed_buffer, "DTFT window not yet filled");
    if (window_ == DtftWindow::rectangular) return acc_[0];
    ops::rcmul(c, 3);
    ops::cadd(c, 2);
    return 0.5 * acc_[0] - 0.25 * (acc_[1] + acc_[2]);
  }

  /// Amplitude of a real tone: 2 |S| / sum(w).
  double amplitude(OpCounters* c = nullptr) const {
    const auto v = value(c);
    ops::norm(c);
    ops::transcendental(c);
    ops::mul(c);
    return 2.0 * std::abs(v) / window_sum();
  }

  double window_sum() const noexcept { return window_ == DtftWindow::hann ? 0.5 * n_ : static_cast<double>(n_); }

  /// Direct evaluation of the windowed sum over the buffer (test oracle and rebase).
  std::complex<double> direct(double omega_rad) const {
    std::complex<double> s = 0.0;
    for (int m = 0; m < n_; ++m) {
      const double x = sample_back(m);
      s += x * window_weight(m) * std::polar(1.0, omega_rad * m);
    }
    return s;
  }

  double rebase_frequency() const noexcept { return omega_ref_; }
  int window_length() const noexcept { return n_; }
  std::int64_t rebases() const noexcept { return rebases_; }
  std::int64_t samples_seen() const noexcept { return count_; }

  std::uint64_t storage_bytes() const noexcept {
    return ops::kRealBytes * (buffer_.size() + 1) + ops::kComplexBytes * (acc_.size() + step_.size() + wrap_.size());
  }

 private:
  double window_weight(int m) const {
    if (window_ == DtftWindow::rectangular) return 1.0;
    return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * m / n_);
  }

  // x(n - m); m = 0 is the newest sample.
  double sample_back(int m) const {
    const std::size_t n = buffer_.size();
    return buffer_[(head_ + n - 1 - static_cast<std::size_t>(m)) % n];
  }

  double bin_frequency(std::size_t b) const {
    const double d = 2.0 * std::numbers::pi / n_;
    return b == 0 ? omega_ref_ : (b == 1 ? omega_ref_ + d : omega_ref_ - d);
  }

  void set_frequency(double omega_rad) {
    omega_ref_ = omega_rad;
    for (std::size_t b = 0; b < acc_.size(); ++b) {
      step_[b] = std::polar(1.0, bin_frequency(b));
      wrap_[b] = std::polar(1.0, bin_frequency(b) * n_);
    }
  }

  void recompute(OpCounters* c) {
    for (std::size_t b = 0; b < acc_.size(); ++b) {
      std::complex<double> s = 0.0;
      const std::complex<double> rot = step_[b];
      // Horner from the oldest sample: s = x(n) + rot (x(n-1) + rot (...)).
      for (int m = n_ - 1; m >= 0; --m) s = sample_back(m) + rot * s;
      ops::cmul(c, static_cast<std::uint64_t>(n_));
      ops::add(c, static_cast<std::uint64_t>(n_));
      acc_[b] = s;
    }
  }

  int n_;
  DtftWindow window_;
  std::vector<double> buffer_;
  std::size_t head_ = 0;
  std::int64_t count_ = 0;
  std::int64_t rebases_ = 0;
  double omega_ref_ = 0.0;
  std::vector<std::complex<double>> acc_;
  std::vector<std::complex<double>> step_;
  std::vector<std::complex<double>> wrap_;
};

/// Pushes x and returns the windowed coefficient at omega_k.
inline std::complex<double> dtft_step(DtftState& state, double x_new, double omega_k, OpCounters* c = nullptr) {
  state.update(x_new, omega_k, c);
  return state.value(c);
}

}  // namespace cmf
