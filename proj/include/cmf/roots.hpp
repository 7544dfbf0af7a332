#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "cmf/error.hpp"

namespace cmf {

namespace detail {

using cd = std::complex<double>;

// p(z) and p'(z) by Horner; coefficients highest power first.
inline void horner(std::span<const cd> c, cd z, cd& p, cd& dp) {
  p = c[0];
  dp = 0.0;
  for (std::size_t k = 1; k < c.size(); ++k) {
    dp = dp * z + p;
    p = p * z + c[k];
  }
}

// Magnitude scale used for relative residuals: sum |c_k| |z|^(n-k).
inline double residual_scale(std::span<const cd> c, double r) {
  double s = std::abs(c[0]);
  for (std::size_t k = 1; k < c.size(); ++k) s = s * r + std::abs(c[k]);
  return s;
}

inline double relative_residual(std::span<const cd> c, cd z) {
  cd p, dp;
  horner(c, z, p, dp);
  const double scale = residual_scale(c, std::abs(z));
  return scale > 0.0 ? std::abs(p) / scale : 0.0;
}

// Taylor coefficients of p around z0: p(z0 + h) = sum t_k h^k.
inline std::vector<cd> taylor_shift(std::span<const cd> c, cd z0) {
  std::vector<cd> work(c.begin(), c.end());
  const std::size_t n = work.size() - 1;
  std::vector<cd> t(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    // Synthetic division; remainder is the k-th Taylor coefficient.
    const std::size_t len = n + 1 - k;
    for (std::size_t i = 1; i < len; ++i) work[i] += work[i - 1] * z0;
    t[k] = work[len - 1];
  }
  return t;
}

// Replaces clusters that are consistent with a rounding-perturbed multiple
// root (spread ~ (noise/|t_m|)^(1/m)) by a single refined value.
inline void merge_multiple_roots(std::span<const cd> c, std::vector<cd>& roots) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const std::size_t n = roots.size();
  std::vector<bool> used(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    if (used[i]) continue;
    const double reach = 1e-2 * std::max(1.0, std::abs(roots[i]));
    std::vector<std::size_t> members{i};
    for (std::size_t j = i + 1; j < n; ++j)
      if (!used[j] && std::abs(roots[j] - roots[i]) < reach) members.push_back(j);
    if (members.size() < 2) continue;

    cd centroid = 0.0;
    for (auto m : members) centroid += roots[m];
    centroid /= static_cast<double>(members.size());
    double spread = 0.0;
    for (auto m : members) spread = std::max(spread, std::abs(roots[m] - centroid));

    const std::size_t mult = members.size();
    const auto t = taylor_shift(c, centroid);
    const double lead = std::abs(t[mult]);
    if (lead == 0.0) continue;
    const double noise = static_cast<double>(c.size()) * eps *
                         residual_scale(c, std::abs(centroid));
    const double predicted = std::pow(noise / lead, 1.0 / static_cast<double>(mult));
    if (spread > 10.0 * predicted) continue;

    // A root of multiplicity m is a simple root of p^(m-1); Newton on that
    // derivative recovers it to working precision. With Taylor coefficients
    // t_k = p^(k)(z)/k!, the step is t_{m-1} / (m t_m).
    cd z = centroid;
    for (int it = 0; it < 50; ++it) {
      const auto tz = taylor_shift(c, z);
      if (tz[mult] == cd(0.0)) break;
      const cd step = tz[mult - 1] / (static_cast<double>(mult) * tz[mult]);
      z -= step;
      if (std::abs(step) <= 4.0 * eps * std::max(1.0, std::abs(z))) break;
    }
    if (!(std::abs(z - centroid) <= 2.0 * spread + 4.0 * eps * std::max(1.0, std::abs(z)))) z = centroid;
    for (auto m : members) {
      roots[m] = z;
      used[m] = true;
    }
  }
}

}  // namespace detail

/// Roots of a polynomial given highest-power coefficient first
/// ({1, -1} is z - 1). Leading zeros are stripped; trailing zeros yield
/// roots at the origin. Aberth-Ehrlich simultaneous iteration with a seeded
/// perturbation when progress stalls; converged when every relative residual
/// |p(r)| / sum|c_k||r|^(n-k) is below 1e-8. Roots come back unordered.
inline std::vector<std::complex<double>> find_roots(std::span<const std::complex<double>> poly) {
  using detail::cd;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  constexpr int kMaxIterations = 1000;
  constexpr double kTolerance = 1e-8;

  std::size_t first = 0;
  while (first < poly.size() && poly[first] == cd(0.0)) ++first;
  std::size_t last = poly.size();
  std::size_t zero_roots = 0;
  while (last > first && poly[last - 1] == cd(0.0)) {
    --last;
    ++zero_roots;
  }
  if (last <= first || last - first + zero_roots < 2)
    throw Error(Errc::invalid_argument, "find_roots needs degree >= 1");

  std::vector<cd> roots(zero_roots, cd(0.0));
  if (last - first < 2) return roots;

  std::vector<cd> c(poly.begin() + first, poly.begin() + last);
  const cd lead = c[0];
  for (auto& v : c) v /= lead;
  const std::size_t n = c.size() - 1;

  if (n == 1) {
    roots.push_back(-c[1]);
    return roots;
  }

  // Start on a circle whose radius is the geometric mean of root moduli.
  const double radius = std::max(std::pow(std::abs(c[n]), 1.0 / static_cast<double>(n)), 1e-3);
  std::vector<cd> z(n);
  for (std::size_t k = 0; k < n; ++k)
    z[k] = std::polar(radius, 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n) + 0.4);

  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const double tight = 8.0 * static_cast<double>(n + 1) * eps;

  bool converged = false;
  for (int iter = 0; iter < kMaxIterations && !converged; ++iter) {
    double max_step = 0.0;
    double max_residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cd p, dp;
      detail::horner(c, z[i], p, dp);
      const double scale = detail::residual_scale(c, std::abs(z[i]));
      max_residual = std::max(max_residual, scale > 0.0 ? std::abs(p) / scale : 0.0);
      if (p == cd(0.0)) continue;
      cd repulsion = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        cd diff = z[i] - z[j];
        if (diff == cd(0.0)) diff = cd(eps * radius, eps * radius);
        repulsion += 1.0 / diff;
      }
      const cd ratio = p / dp;
      const cd step = ratio / (1.0 - ratio * repulsion);
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) continue;
      z[i] -= step;
      max_step = std::max(max_step, std::abs(step) / std::max(1.0, std::abs(z[i])));
    }

    if (max_residual <= tight || max_step <= 2.0 * eps) {
      converged = true;
      for (std::size_t i = 0; i < n; ++i)
        if (detail::relative_residual(c, z[i]) >= kTolerance) converged = false;
      if (!converged && max_step <= 2.0 * eps) {
        for (auto& zi : z) zi += cd(jitter(rng), jitter(rng)) * 1e-3 * radius;
      }
    } else if (iter % 200 == 199) {
      // Stagnation: nudge every estimate and continue.
      for (auto& zi : z) zi += cd(jitter(rng), jitter(rng)) * 1e-6 * std::max(1.0, std::abs(zi));
    }
  }
  if (!converged) {
    for (std::size_t i = 0; i < n; ++i)
      if (detail::relative_residual(c, z[i]) >= kTolerance)
        throw Error(Errc::no_convergence, "root finder did not converge in 1000 iterations");
  }

  detail::merge_multiple_roots(c, z);
  roots.insert(roots.end(), z.begin(), z.end());
  return roots;
}

inline std::vector<std::complex<double>> find_roots(std::span<const double> poly) {
  std::vector<std::complex<double>> c(poly.begin(), poly.end());
  return find_roots(std::span<const std::complex<double>>(c));
}

}  // namespace cmf
