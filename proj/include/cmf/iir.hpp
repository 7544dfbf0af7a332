#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "cmf/error.hpp"
#include "cmf/filter_design.hpp"
#include "cmf/op_counter.hpp"

namespace cmf {

/// Complex-coefficient IIR in direct form II transposed. The delay line has
/// max(P, Q) entries; zero-padded coefficient slots are skipped, not counted.
class FilterState {
 public:
  explicit FilterState(ComplexCoefficients coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.numerator.empty() || coeffs_.denominator.empty())
      throw Error(Errc::invalid_argument, "filter needs nonempty coefficients");
    const auto a0 = coeffs_.denominator[0];
    if (a0 != std::complex<double>(1.0)) {
      if (a0 == std::complex<double>(0.0)) throw Error(Errc::invalid_argument, "a_0 must be nonzero");
      for (auto& v : coeffs_.numerator) v /= a0;
      for (auto& v : coeffs_.denominator) v /= a0;
    }
    delay_.assign(std::max(coeffs_.numerator.size(), coeffs_.denominator.size()) - 1, 0.0);
  }

  /// Real input stream (first stage): b_m x is a real-by-complex product.
  std::complex<double> step(double x, OpCounters* ops = nullptr) {
    if (!std::isfinite(x)) throw Error(Errc::non_finite_input, "filter input is not finite");
    return advance(x, ops, false);
  }

  std::complex<double> step(std::complex<double> x, OpCounters* ops = nullptr) {
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
      throw Error(Errc::non_finite_input, "filter input is not finite");
    return advance(x, ops, true);
  }

  void reset() {
    std::fill(delay_.begin(), delay_.end(), std::complex<double>(0.0));
    processed_ = 0;
  }

  const ComplexCoefficients& coefficients() const noexcept { return coeffs_; }
  const std::vector<std::complex<double>>& delay_line() const noexcept { return delay_; }
  std::int64_t samples_processed() const noexcept { return processed_; }

  std::uint64_t storage_bytes() const noexcept {
    return ops::kComplexBytes * (coeffs_.numerator.size() + coeffs_.denominator.size() - 1 + delay_.size());
  }

 private:
  std::complex<double> advance(std::complex<double> x, OpCounters* c, bool complex_input) {
    const auto& b = coeffs_.numerator;
    const auto& a = coeffs_.denominator;
    const std::size_t m = delay_.size();
    auto count_mul = [&] { complex_input ? ops::cmul(c) : ops::rcmul(c); };

    std::complex<double> y = b[0] * x;
    count_mul();
    if (m > 0) {
      y += delay_[0];
      ops::cadd(c);
    }
    for (std::size_t i = 0; i < m; ++i) {
      std::complex<double> s = i + 1 < m ? delay_[i + 1] : std::complex<double>(0.0);
      int terms = i + 1 < m ? 1 : 0;
      if (i + 1 < b.size()) {
        s += b[i + 1] * x;
        count_mul();
        ++terms;
      }
      if (i + 1 < a.size()) {
        s -= a[i + 1] * y;
        ops::cmul(c);
        ++terms;
      }
      if (terms > 1) ops::cadd(c, static_cast<std::uint64_t>(terms - 1));
      delay_[i] = s;
    }
    ++processed_;
    return y;
  }

  ComplexCoefficients coeffs_;
  std::vector<std::complex<double>> delay_;
  std::int64_t processed_ = 0;
};

/// Splits a complex filter into first-order sections (1 - z_k/z) / (1 - p_k/z),
/// each pole paired with its nearest remaining zero. The overall gain rides
/// on the first section. Much better conditioned than one high-order direct
/// form when the poles crowd the unit circle.
inline std::vector<ComplexCoefficients> factor_sections(const ComplexCoefficients& f) {
  using cd = std::complex<double>;
  std::size_t lead = 0;
  while (lead < f.numerator.size() && f.numerator[lead] == cd(0.0)) ++lead;
  if (lead == f.numerator.size()) throw Error(Errc::invalid_argument, "cannot factor a zero numerator");
  const cd a0 = f.denominator[0];
  std::vector<cd> z = zeros(f), p = poles(f);

  auto section = [&](std::vector<cd> b, std::vector<cd> a) {
    ComplexCoefficients c;
    c.numerator = std::move(b);
    c.denominator = std::move(a);
    c.shift_rad = f.shift_rad;
    c.source = f.source;
    return c;
  };
  std::vector<ComplexCoefficients> out;
  for (const cd& pole : p) {
    std::vector<cd> b{1.0};
    if (!z.empty()) {
      auto it = std::min_element(z.begin(), z.end(),
                                 [&](const cd& u, const cd& v) { return std::abs(u - pole) < std::abs(v - pole); });
      b.push_back(-*it);
      z.erase(it);
    }
    out.push_back(section(std::move(b), {1.0, -pole}));
  }
  for (const cd& zero : z) out.push_back(section({1.0, -zero}, {1.0}));
  for (std::size_t i = 0; i < lead; ++i) out.push_back(section({0.0, 1.0}, {1.0}));
  if (out.empty()) out.push_back(section({1.0}, {1.0}));
  for (auto& b : out.front().numerator) b *= f.numerator[lead] / a0;
  return out;
}

inline std::complex<double> filter_step(FilterState& state, double x, OpCounters* ops = nullptr) {
  return state.step(x, ops);
}

/// Series connection of complex sections. The first section sees the real
/// input; later sections see complex samples.
class FilterChain {
 public:
  FilterChain() = default;
  explicit FilterChain(std::vector<FilterState> stages) : stages_(std::move(stages)) {}

  void push_back(FilterState stage) { stages_.push_back(std::move(stage)); }

  std::complex<double> step(double x, OpCounters* ops = nullptr) {
    if (!std::isfinite(x)) throw Error(Errc::non_finite_input, "filter input is not finite");
    if (stages_.empty()) return x;
    auto y = stages_.front().step(x, ops);
    for (std::size_t i = 1; i < stages_.size(); ++i) y = stages_[i].step(y, ops);
    return y;
  }

  std::complex<double> response(double omega_rad) const {
    std::complex<double> h = 1.0;
    for (const auto& s : stages_) h *= frequency_response(s.coefficients(), omega_rad);
    return h;
  }

  double group_delay_samples(double omega_rad) const {
    double total = 0.0;
    for (const auto& s : stages_) total += group_delay(s.coefficients(), omega_rad).samples;
    return total;
  }

  void reset() {
    for (auto& s : stages_) s.reset();
  }

  std::size_t size() const noexcept { return stages_.size(); }
  bool empty() const noexcept { return stages_.empty(); }
  const FilterState& stage(std::size_t i) const { return stages_.at(i); }

  std::uint64_t storage_bytes() const noexcept {
    std::uint64_t total = 0;
    for (const auto& s : stages_) total += s.storage_bytes();
    return total;
  }

 private:
  std::vector<FilterState> stages_;
};

}  // namespace cmf
