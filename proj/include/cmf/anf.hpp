#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "cmf/error.hpp"
#include "cmf/op_counter.hpp"

namespace cmf {

/// Second-order adaptive notch, H(z) = (1 + a z^-1 + z^-2) / (1 + rho a z^-1 + rho^2 z^-2),
/// with a = -2 cos(w) adapted by a recursive Gauss-Newton update.
struct AnfState {
  double alpha_hat = 0.0;
  double rho = 0.9;
  double lambda = 0.9;
  double p_cov = 100.0;
  double psi = 0.0;
  double omega_hat = 0.0;
  // recursion memory
  double y1 = 0.0, y2 = 0.0;
  double e1 = 0.0, e2 = 0.0;
  double psi1 = 0.0, psi2 = 0.0;
  bool diverged = false;

  static AnfState make(double initial_omega_rad, double rho = 0.9, double lambda = 0.9, double p0 = 100.0) {
    if (!(rho > 0.0 && rho < 1.0) || !(lambda > 0.0 && lambda < 1.0) || !(p0 > 0.0))
      throw Error(Errc::invalid_argument, "ANF needs rho, lambda in (0,1) and P0 > 0");
    AnfState s;
    s.alpha_hat = -2.0 * std::cos(initial_omega_rad);
    s.rho = rho;
    s.lambda = lambda;
    s.p_cov = p0;
    s.omega_hat = initial_omega_rad;
    return s;
  }

  static constexpr std::uint64_t storage_bytes() { return 13 * ops::kRealBytes; }
};

struct AnfOutput {
  double e_s = 0.0;
  double omega_hat = 0.0;
  bool diverged = false;
};

inline AnfOutput anf_step(AnfState& s, double y, OpCounters* c = nullptr) {
  if (!std::isfinite(y)) throw Error(Errc::non_finite_input, "ANF input is not finite");
  const double ra = s.rho * s.alpha_hat;
  const double r2 = s.rho * s.rho;
  const double e = y + s.alpha_hat * s.y1 + s.y2 - ra * s.e1 - r2 * s.e2;
  const double psi = s.y1 - s.rho * s.e1 - ra * s.psi1 - r2 * s.psi2;
  ops::mul(c, 8);
  ops::add(c, 7);

  // P(n) = P(n-1) / (lambda + psi^2 P(n-1))
  s.p_cov = s.p_cov / (s.lambda + psi * psi * s.p_cov);
  ops::mul(c, 3);
  ops::add(c);
  s.alpha_hat -= s.p_cov * psi * e;
  ops::mul(c, 2);
  ops::add(c);
  s.alpha_hat = std::clamp(s.alpha_hat, -2.0, 2.0);
  s.omega_hat = std::acos(-0.5 * s.alpha_hat);
  ops::mul(c);
  ops::transcendental(c);

  s.psi = psi;
  s.y2 = s.y1;
  s.y1 = y;
  s.e2 = s.e1;
  s.e1 = e;
  s.psi2 = s.psi1;
  s.psi1 = psi;
  // Flag while P exceeds 1e12 (e.g. under silent input, where psi = 0 and P
  // grows as 1/lambda^n); P is held at 1e13 so it stays finite.
  s.diverged = !(s.p_cov <= 1e12) || !std::isfinite(s.alpha_hat);
  if (s.p_cov > 1e13) s.p_cov = 1e13;
  return {e, s.omega_hat, s.diverged};
}

/// Notch bandwidth in rad/sample for pole contraction rho.
inline double anf_bandwidth(double rho) { return 2.0 * std::acos(2.0 * rho / (1.0 + rho * rho)); }

inline std::complex<double> anf_response(double alpha, double rho, double omega_rad) {
  const auto z1 = std::polar(1.0, -omega_rad);
  const auto z2 = z1 * z1;
  return (1.0 + alpha * z1 + z2) / (1.0 + rho * alpha * z1 + rho * rho * z2);
}

}  // namespace cmf
