#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <memory>
#include <numbers>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cmf/error.hpp"
#include "cmf/roots.hpp"

namespace cmf {

enum class FilterKind { low_pass, high_pass };

inline const char* to_string(FilterKind kind) {
  return kind == FilterKind::low_pass ? "low-pass" : "high-pass";
}

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double rad) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(rad, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

/// Real IIR prototype H_r(z) = sum b_m z^-m / sum a_n z^-n, normalized to
/// a_0 = 1 and verified stable on construction.
class PrototypeFilter {
 public:
  PrototypeFilter(std::vector<double> numerator, std::vector<double> denominator, FilterKind kind,
                  double sample_rate_hz, std::string label = {})
      : b_(std::move(numerator)),
        a_(std::move(denominator)),
        kind_(kind),
        sample_rate_hz_(sample_rate_hz),
        label_(std::move(label)) {
    if (b_.empty() || a_.empty())
      throw Error(Errc::invalid_argument, "prototype coefficient sequences must be nonempty");
    if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_))
      throw Error(Errc::invalid_argument, "sample rate must be positive");
    for (double v : b_)
      if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite numerator coefficient");
    for (double v : a_)
      if (!std::isfinite(v)) throw Error(Errc::invalid_argument, "non-finite denominator coefficient");
    if (a_[0] == 0.0) throw Error(Errc::invalid_argument, "a_0 must be nonzero");
    const double a0 = a_[0];
    for (auto& v : b_) v /= a0;
    for (auto& v : a_) v /= a0;
    if (a_.size() > 1) {
      for (const auto& p : find_roots(std::span<const double>(a_))) {
        if (!(std::abs(p) < 1.0))
          throw Error(Errc::unstable_prototype,
                      "pole at radius " + std::to_string(std::abs(p)) + " is not inside the unit circle");
      }
    }
  }

  const std::vector<double>& numerator() const noexcept { return b_; }
  const std::vector<double>& denominator() const noexcept { return a_; }
  FilterKind kind() const noexcept { return kind_; }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }
  const std::string& label() const noexcept { return label_; }
  std::size_t order() const noexcept { return std::max(b_.size(), a_.size()) - 1; }

 private:
  std::vector<double> b_;
  std::vector<double> a_;
  FilterKind kind_;
  double sample_rate_hz_;
  std::string label_;
};

/// Prototype coefficients rotated by e^{j shift m}. Poles and zeros are the
/// prototype's multiplied by e^{j shift}. Negative shifts give notch filters.
struct ComplexCoefficients {
  std::vector<std::complex<double>> numerator;
  std::vector<std::complex<double>> denominator;
  double shift_rad = 0.0;
  std::shared_ptr<const PrototypeFilter> source;
};

namespace detail {

inline void check_shift(double shift_rad) {
  if (!(shift_rad > -std::numbers::pi && shift_rad <= std::numbers::pi))
    throw Error(Errc::invalid_argument, "shift must lie in (-pi, pi]");
}

template <typename T>
std::vector<std::complex<double>> rotate(std::span<const T> coeffs, double shift_rad) {
  std::vector<std::complex<double>> out(coeffs.size());
  for (std::size_t m = 0; m < coeffs.size(); ++m)
    out[m] = std::complex<double>(coeffs[m]) * std::polar(1.0, shift_rad * static_cast<double>(m));
  return out;
}

// sum c_m w^m with w = e^{-j omega}.
template <typename T>
std::complex<double> eval_z_inverse(std::span<const T> c, std::complex<double> w) {
  std::complex<double> acc = 0.0;
  for (std::size_t m = c.size(); m-- > 0;) acc = acc * w + std::complex<double>(c[m]);
  return acc;
}

template <typename T>
std::complex<double> response(std::span<const T> b, std::span<const T> a, double omega) {
  const auto w = std::polar(1.0, -omega);
  const auto num = eval_z_inverse(b, w);
  const auto den = eval_z_inverse(a, w);
  if (std::abs(den) < 1e-300) throw Error(Errc::degenerate_response, "denominator vanishes");
  return num / den;
}

}  // namespace detail

inline ComplexCoefficients complex_shift(const PrototypeFilter& proto, double shift_rad) {
  detail::check_shift(shift_rad);
  ComplexCoefficients out;
  out.numerator = detail::rotate(std::span<const double>(proto.numerator()), shift_rad);
  out.denominator = detail::rotate(std::span<const double>(proto.denominator()), shift_rad);
  out.shift_rad = shift_rad;
  out.source = std::make_shared<const PrototypeFilter>(proto);
  return out;
}

/// Rotates an already-rotated set further; the recorded shift is the wrapped sum.
inline ComplexCoefficients complex_shift(const ComplexCoefficients& coeffs, double shift_rad) {
  detail::check_shift(shift_rad);
  ComplexCoefficients out;
  out.numerator = detail::rotate(std::span<const std::complex<double>>(coeffs.numerator), shift_rad);
  out.denominator = detail::rotate(std::span<const std::complex<double>>(coeffs.denominator), shift_rad);
  out.shift_rad = wrap_angle(coeffs.shift_rad + shift_rad);
  out.source = coeffs.source;
  return out;
}

inline std::complex<double> frequency_response(const PrototypeFilter& f, double omega_rad) {
  return detail::response(std::span<const double>(f.numerator()), std::span<const double>(f.denominator()),
                          omega_rad);
}

inline std::complex<double> frequency_response(const ComplexCoefficients& f, double omega_rad) {
  return detail::response(std::span<const std::complex<double>>(f.numerator),
                          std::span<const std::complex<double>>(f.denominator), omega_rad);
}

struct GroupDelay {
  double samples = 0.0;
  bool near_notch = false;  // |H| < 1e-6 at the evaluation point
};

/// -d arg H / d omega by central difference (step 1e-5 rad). The phase
/// difference is taken as arg(H(w+h) / H(w-h)), which is already unwrapped.
template <typename Filter>
GroupDelay group_delay(const Filter& f, double omega_rad) {
  constexpr double h = 1e-5;
  GroupDelay gd;
  gd.near_notch = std::abs(frequency_response(f, omega_rad)) < 1e-6;
  const auto up = frequency_response(f, omega_rad + h);
  const auto down = frequency_response(f, omega_rad - h);
  gd.samples = -std::arg(up / down) / (2.0 * h);
  return gd;
}

inline std::vector<std::complex<double>> poles(const PrototypeFilter& f) {
  if (f.denominator().size() < 2) return {};
  return find_roots(std::span<const double>(f.denominator()));
}

inline std::vector<std::complex<double>> zeros(const PrototypeFilter& f) {
  std::size_t nz = 0;
  for (double v : f.numerator()) nz += v != 0.0;
  if (f.numerator().size() < 2 || nz < 1) return {};
  std::size_t first = 0;
  while (f.numerator()[first] == 0.0) ++first;
  if (f.numerator().size() - first < 2) return {};
  return find_roots(std::span<const double>(f.numerator()));
}

inline std::vector<std::complex<double>> poles(const ComplexCoefficients& f) {
  if (f.denominator.size() < 2) return {};
  return find_roots(std::span<const std::complex<double>>(f.denominator));
}

inline std::vector<std::complex<double>> zeros(const ComplexCoefficients& f) {
  std::size_t first = 0;
  while (first < f.numerator.size() && f.numerator[first] == std::complex<double>(0.0)) ++first;
  if (f.numerator.size() - first < 2) return {};
  return find_roots(std::span<const std::complex<double>>(f.numerator));
}

/// Butterworth prototype by bilinear transform with cutoff prewarping, so
/// the response is exactly 1/sqrt(2) at cutoff_hz.
inline PrototypeFilter design_butterworth(int order, double cutoff_hz, FilterKind kind, double sample_rate_hz) {
  using cd = std::complex<double>;
  if (order < 1 || order > 8) throw Error(Errc::invalid_order, "order must be in 1..8");
  if (!(sample_rate_hz > 0.0)) throw Error(Errc::invalid_argument, "sample rate must be positive");
  if (!(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0))
    throw Error(Errc::cutoff_out_of_range, "cutoff must lie in (0, fs/2)");

  const double fs2 = 2.0 * sample_rate_hz;
  const double warped = fs2 * std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
  const auto n = static_cast<std::size_t>(order);

  // Denominator as a polynomial in z^-1: prod (1 - p_k z^-1).
  std::vector<cd> den{1.0};
  for (int k = 1; k <= order; ++k) {
    const double angle = std::numbers::pi * (2.0 * k + order - 1) / (2.0 * order);
    const cd s_pole = warped * std::polar(1.0, angle);
    const cd z_pole = (fs2 + s_pole) / (fs2 - s_pole);
    std::vector<cd> next(den.size() + 1, 0.0);
    for (std::size_t i = 0; i < den.size(); ++i) {
      next[i] += den[i];
      next[i + 1] -= den[i] * z_pole;
    }
    den = std::move(next);
  }
  std::vector<double> a(n + 1), b(n + 1);
  for (std::size_t i = 0; i <= n; ++i) a[i] = den[i].real();

  // Numerator (1 +- z^-1)^n.
  const double sign = kind == FilterKind::low_pass ? 1.0 : -1.0;
  double binom = 1.0;
  for (std::size_t i = 0; i <= n; ++i) {
    b[i] = binom * std::pow(sign, static_cast<double>(i));
    binom = binom * static_cast<double>(n - i) / static_cast<double>(i + 1);
  }
  const double omega_ref = kind == FilterKind::low_pass ? 0.0 : std::numbers::pi;
  const double gain =
      std::abs(detail::response(std::span<const double>(b), std::span<const double>(a), omega_ref));
  for (auto& v : b) v /= gain;

  std::ostringstream label;
  label << "butterworth " << to_string(kind) << " order " << order << " cutoff " << cutoff_hz << " Hz";
  return PrototypeFilter(std::move(b), std::move(a), kind, sample_rate_hz, label.str());
}

/// Parses the coefficient file format:
///
///     # comment
///     b: 0.5 0.5
///     a: 1
///     kind: low-pass            (optional; inferred from |H(0)| vs |H(pi)|)
///     sample_rate_hz: 2000      (optional; default 2000)
///     label: free text          (optional)
inline PrototypeFilter parse_prototype(const std::string& text) {
  std::vector<double> b, a;
  bool have_b = false, have_a = false;
  std::string kind_text, label;
  double fs = 2000.0;

  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto colon = line.find(':');
    std::string key = line.substr(0, colon);
    key.erase(0, key.find_first_not_of(" \t\r"));
    if (key.find_last_not_of(" \t\r") != std::string::npos)
      key.erase(key.find_last_not_of(" \t\r") + 1);
    else
      key.clear();
    if (key.empty() && colon == std::string::npos) continue;
    if (colon == std::string::npos)
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": expected 'key: values'");
    std::string rest = line.substr(colon + 1);

    auto parse_numbers = [&](std::vector<double>& out) {
      std::istringstream values(rest);
      std::string token;
      while (values >> token) {
        std::size_t used = 0;
        double v = 0.0;
        try {
          v = std::stod(token, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != token.size())
          throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": bad number '" + token + "'");
        out.push_back(v);
      }
      if (out.empty())
        throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": no coefficients");
    };
    auto trimmed = [&] {
      std::string s = rest;
      s.erase(0, s.find_first_not_of(" \t\r"));
      if (auto e = s.find_last_not_of(" \t\r"); e != std::string::npos) s.erase(e + 1);
      return s;
    };

    if (key == "b") {
      if (have_b) throw Error(Errc::parse_error, "duplicate 'b' line");
      parse_numbers(b);
      have_b = true;
    } else if (key == "a") {
      if (have_a) throw Error(Errc::parse_error, "duplicate 'a' line");
      parse_numbers(a);
      have_a = true;
    } else if (key == "kind") {
      kind_text = trimmed();
    } else if (key == "sample_rate_hz") {
      std::vector<double> v;
      parse_numbers(v);
      fs = v.front();
    } else if (key == "label") {
      label = trimmed();
    } else {
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
  }
  if (!have_b || !have_a) throw Error(Errc::parse_error, "coefficient file needs both 'b:' and 'a:' lines");
  if (a.front() == 0.0) throw Error(Errc::parse_error, "a_0 must be nonzero");

  FilterKind kind = FilterKind::low_pass;
  if (kind_text == "high-pass" || kind_text == "highpass") {
    kind = FilterKind::high_pass;
  } else if (kind_text.empty()) {
    const double dc = std::abs(detail::response(std::span<const double>(b), std::span<const double>(a), 0.0));
    const double nyq =
        std::abs(detail::response(std::span<const double>(b), std::span<const double>(a), std::numbers::pi));
    kind = dc >= nyq ? FilterKind::low_pass : FilterKind::high_pass;
  } else if (kind_text != "low-pass" && kind_text != "lowpass") {
    throw Error(Errc::parse_error, "unknown kind '" + kind_text + "'");
  }
  return PrototypeFilter(std::move(b), std::move(a), kind, fs, label);
}

inline PrototypeFilter load_prototype(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open coefficient file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  auto proto = parse_prototype(text.str());
  if (proto.label().empty())
    return PrototypeFilter(proto.numerator(), proto.denominator(), proto.kind(), proto.sample_rate_hz(), path);
  return proto;
}

inline void write_prototype(std::ostream& os, const PrototypeFilter& f) {
  char buf[40];
  if (!f.label().empty()) os << "label: " << f.label() << '\n';
  os << "kind: " << to_string(f.kind()) << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", f.sample_rate_hz());
  os << "sample_rate_hz: " << buf << '\n';
  auto line = [&](const char* key, const std::vector<double>& v) {
    os << key << ':';
    for (double x : v) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      os << ' ' << buf;
    }
    os << '\n';
  };
  line("b", f.numerator());
  line("a", f.denominator());
}

/// Elliptic prototypes designed offline for fs = 2 kHz; also shipped as
/// coefficient files under data/.
namespace bundled {

/// 5th-order elliptic low-pass: 0.5 dB ripple, 80 dB stopband, passband edge 65 Hz.
inline PrototypeFilter cbf_elliptic5() {
  return PrototypeFilter(
      {0.0001503168656662052, -0.00030281760255071249, 0.00018358062335361696, 0.00018358062335361691,
       -0.00030281760255071249, 0.00015031686566620525},
      {1, -4.7101133880259862, 8.9294014385438487, -8.5148784394971671, 4.0833772141076947,
       -0.78772466535545049},
      FilterKind::low_pass, 2000.0, "elliptic low-pass order 5, 0.5 dB / 80 dB, passband 65 Hz");
}

/// 3rd-order elliptic low-pass: 0.5 dB ripple, 60 dB stopband, passband edge 80 Hz.
inline PrototypeFilter cascade_cbf_elliptic3() {
  return PrototypeFilter({0.0030372381187046263, 0.001895932712989353, 0.001895932712989353, 0.0030372381187046263},
                         {1, -2.6431487591170764, 2.3838063708630184, -0.73079127008255385},
                         FilterKind::low_pass, 2000.0, "elliptic low-pass order 3, 0.5 dB / 60 dB, passband 80 Hz");
}

/// 4th-order elliptic high-pass: 0.5 dB ripple, 80 dB stopband (below ~12.9 Hz),
/// passband edge 60 Hz.
inline PrototypeFilter cnf_elliptic4() {
  return PrototypeFilter(
      {0.72997013985089676, -2.9186688913617336, 4.3773977574494811, -2.9186688913617336, 0.72997013985089676},
      {1, -3.4755782254168519, 4.5771406540533794, -2.7063715617609185, 0.60735341120839104},
      FilterKind::high_pass, 2000.0, "elliptic high-pass order 4, 0.5 dB / 80 dB, passband 60 Hz");
}

}  // namespace bundled
}  // namespace cmf
