#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "cmf/anf.hpp"
#include "cmf/evaluation.hpp"
#include "cmf/hilbert.hpp"
#include "cmf/simulation.hpp"
#include "cmf/sliding_dtft.hpp"
#include "cmf/tracker.hpp"

using namespace cmf;
using cd = std::complex<double>;
constexpr double kPi = std::numbers::pi;

namespace {

TrackerConfig config_for(Method m) {
  TrackerConfig cfg;
  cfg.method = m;
  return cfg;
}

double hz_to_rad(double f) { return 2 * kPi * f / 2000.0; }

}  // namespace

// ---- Hilbert ---------------------------------------------------------------

TEST(HilbertDesign, TypeThreeSymmetryForAllLengths) {
  for (int len = 7; len <= 101; len += 2) {
    const auto h = design_hilbert_fir(len);
    ASSERT_EQ(h.size(), static_cast<std::size_t>(len));
    const int c = len / 2;
    EXPECT_EQ(h[c], 0.0);
    for (int i = 1; i <= c; ++i) {
      EXPECT_EQ(h[c + i], -h[c - i]) << len;
      if (i % 2 == 0) {
        EXPECT_EQ(h[c + i], 0.0);
      }
    }
  }
}

TEST(HilbertDesign, RejectsBadLengths) {
  for (int len : {-1, 0, 5, 8, 48}) {
    try {
      design_hilbert_fir(len);
      FAIL() << len;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_length);
    }
  }
}

TEST(HilbertDesign, MagnitudeFlatOverBand) {
  for (int len : {49, 65, 101}) {
    const auto h = design_hilbert_fir(len);
    for (double nu = 0.05; nu <= 0.45 + 1e-12; nu += 0.001)
      ASSERT_NEAR(hilbert_amplitude(h, 2 * kPi * nu), 1.0, 0.05) << len << " " << nu;
  }
}

TEST(HilbertTracker, ImpulseOutputEqualsTaps) {
  HilbertTracker t(config_for(Method::hilbert));
  const auto& h = t.taps();
  for (std::size_t n = 0; n < h.size() + 5; ++n) {
    t.step(n == 0 ? 1.0 : 0.0, 0.0);
    const double expected = n < h.size() ? h[n] : 0.0;
    EXPECT_EQ(t.last_analytic().z1.imag(), expected) << n;
    EXPECT_EQ(t.last_analytic().z1.real(), n == h.size() / 2 ? 1.0 : 0.0) << n;
  }
}

TEST(HilbertTracker, QuadratureLagsByCenterTaps) {
  // cos(w n) through the FIR gives A(w) sin(w (n - 24)), in step with the
  // real branch cos(w (n - 24)).
  HilbertTracker t(config_for(Method::hilbert));
  const double w = hz_to_rad(92.5), amp = 0.1;
  const double gain = hilbert_amplitude(t.taps(), w);
  EXPECT_NEAR(gain, 1.0, 0.02);
  for (int n = 0; n < 400; ++n) {
    t.step(amp * std::cos(w * n), 0.0);
    if (n < 48) continue;
    const auto z = t.last_analytic().z1;
    EXPECT_NEAR(z.real(), amp * std::cos(w * (n - 24)), 1e-15);
    EXPECT_NEAR(z.imag(), amp * gain * std::sin(w * (n - 24)), 1e-14);
  }
}

TEST(HilbertTracker, NinetyHertzTone) {
  // Scored as steady-state (Hann-weighted) means; per-sample frequency ripple
  // from the design's 0.3% negative-frequency leakage is bounded separately.
  auto t = make_tracker(config_for(Method::hilbert));
  const auto rec = tone_generate(2000.0, 6000, 90.0, 0.1, 2.0);
  const auto est = run_tracker(*t, rec.x1, rec.x2);
  std::vector<double> ef, ep;
  for (const auto& e : est) {
    if (!e.valid) continue;
    ef.push_back(e.frequency_hz - 90.0);
    ep.push_back(e.phase_diff_deg - 2.0);
    ASSERT_LT(std::abs(ef.back()), 0.15);
    ASSERT_LT(std::abs(ep.back()), 0.05);
    ASSERT_NEAR(e.amplitude1_v, 0.1, 0.001);
  }
  ASSERT_GT(ef.size(), 5000u);
  EXPECT_LT(std::abs(steady_mean(ef)), 0.05);
  EXPECT_LT(std::abs(steady_mean(ep)), 0.05);
}

TEST(HilbertTracker, ZeroInputInvalid) {
  const std::vector<double> z(1000, 0.0);
  for (const auto& e : run_tracker(config_for(Method::hilbert), z, z)) {
    ASSERT_FALSE(e.valid);
    ASSERT_TRUE(std::isfinite(e.frequency_hz));
  }
}

TEST(HilbertTracker, ImportedTapsValidated) {
  auto cfg = config_for(Method::hilbert);
  cfg.hilbert_taps = design_hilbert_fir(31);
  EXPECT_EQ(HilbertTracker(cfg).taps().size(), 31u);
  cfg.hilbert_taps[0] += 1e-6;
  EXPECT_THROW(HilbertTracker{cfg}, Error);
  cfg.hilbert_taps = {0.0, 1.0, 0.0, -1.0};
  EXPECT_THROW(HilbertTracker{cfg}, Error);
}

TEST(HilbertTracker, NoisierThanCbfOnMrwm) {
  MrwmParams p;
  p.duration_samples = 40000;
  p.noise_sigma1 = p.noise_sigma2 = 0.005;
  const auto rec = mrwm_generate(p);
  auto rmse_for = [&](Method m) {
    auto t = make_tracker(config_for(m));
    const auto est = run_tracker(*t, rec.x1, rec.x2);
    return rmse(est, rec.truth, static_cast<std::size_t>(t->warmup_samples())).frequency_hz;
  };
  EXPECT_GT(rmse_for(Method::hilbert), rmse_for(Method::cbf));
}

// ---- ANF -------------------------------------------------------------------

TEST(Anf, WeightMapsBackToFrequency) {
  const auto s = AnfState::make(hz_to_rad(90.0));
  EXPECT_NEAR(s.alpha_hat, -2 * std::cos(hz_to_rad(90.0)), 1e-15);
  EXPECT_NEAR(std::acos(-0.5 * s.alpha_hat) * 2000.0 / (2 * kPi), 90.0, 1e-11);
  EXPECT_THROW(AnfState::make(0.3, 1.0), Error);
  EXPECT_THROW(AnfState::make(0.3, 0.9, 0.0), Error);
  EXPECT_THROW(AnfState::make(0.3, 0.9, 0.9, -1.0), Error);
}

TEST(Anf, AlignedNotchCancelsTone) {
  auto s = AnfState::make(hz_to_rad(90.0));
  double worst = 0.0;
  for (int n = 0; n < 3000; ++n) {
    const auto out = anf_step(s, 0.1 * std::sin(hz_to_rad(90.0) * n + 0.4));
    if (n > 1000) worst = std::max(worst, std::abs(out.e_s));
  }
  EXPECT_LT(worst, 1e-7);
  EXPECT_NEAR(s.omega_hat, hz_to_rad(90.0), 1e-9);
}

TEST(Anf, ConvergesFromNinetyFiveToNinety) {
  auto s = AnfState::make(hz_to_rad(95.0));
  for (int n = 0; n < 2000; ++n) {
    const auto out = anf_step(s, 0.1 * std::cos(hz_to_rad(90.0) * n));
    if (n >= 1000) {
      ASSERT_LT(std::abs(out.omega_hat * 2000.0 / (2 * kPi) - 90.0), 0.1) << n;
    }
    ASSERT_LE(std::abs(s.alpha_hat), 2.0);
    ASSERT_GT(s.p_cov, 0.0);
  }
}

TEST(Anf, NotchConsistencyResidualVariance) {
  for (double f : {85.0, 92.5, 100.0}) {
    auto s = AnfState::make(hz_to_rad(95.0));
    std::vector<double> x, e;
    for (int n = 0; n < 6000; ++n) {
      const double v = 0.2 * std::sin(hz_to_rad(f) * n + 1.0);
      const auto out = anf_step(s, v);
      if (n >= 4000) {
        x.push_back(v);
        e.push_back(out.e_s);
      }
    }
    auto var = [](const std::vector<double>& v) {
      double m = 0.0, q = 0.0;
      for (double a : v) m += a;
      m /= static_cast<double>(v.size());
      for (double a : v) q += (a - m) * (a - m);
      return q / static_cast<double>(v.size());
    };
    EXPECT_LT(var(e), 1e-6 * var(x)) << f;
  }
}

TEST(Anf, BandwidthMatchesMeasuredNotchWidth) {
  // The notch of H(z) is not gain-normalized; the -3 dB points are taken
  // relative to its passband level max(|H(1)|, |H(-1)|).
  const double rho = 0.9;
  for (double w0 : {hz_to_rad(92.5), 1.0, kPi / 2}) {
    const double alpha = -2 * std::cos(w0);
    const double ref = std::max(std::abs(anf_response(alpha, rho, 0.0)), std::abs(anf_response(alpha, rho, kPi)));
    auto below = [&](double w) { return std::abs(anf_response(alpha, rho, w)) < ref / std::sqrt(2.0); };
    auto edge = [&](double inside, double outside) {
      for (int i = 0; i < 100; ++i) {
        const double mid = 0.5 * (inside + outside);
        (below(mid) ? inside : outside) = mid;
      }
      return 0.5 * (inside + outside);
    };
    const double width = edge(w0, std::min(kPi, w0 + 1.0)) - edge(w0, std::max(0.0, w0 - 1.0));
    EXPECT_NEAR(width, anf_bandwidth(rho), 0.1 * anf_bandwidth(rho)) << w0;
    EXPECT_LT(std::abs(anf_response(alpha, rho, w0)), 1e-12);
  }
}

TEST(Anf, SilentInputFlagsDivergenceWithoutFaults) {
  auto s = AnfState::make(hz_to_rad(92.5));
  bool flagged = false;
  for (int n = 0; n < 2000; ++n) {
    const auto out = anf_step(s, 0.0);
    flagged = flagged || out.diverged;
    ASSERT_TRUE(std::isfinite(out.omega_hat) && std::isfinite(s.p_cov));
  }
  EXPECT_TRUE(flagged);
  // Signal returns: P collapses and the flag clears.
  bool cleared = false;
  for (int n = 0; n < 2000; ++n) cleared = !anf_step(s, 0.1 * std::sin(hz_to_rad(90.0) * n)).diverged;
  EXPECT_TRUE(cleared);
  EXPECT_NEAR(s.omega_hat, hz_to_rad(90.0), hz_to_rad(0.1));
  EXPECT_THROW(anf_step(s, NAN), Error);
}

TEST(Anf, OpCountPerStep) {
  auto s = AnfState::make(0.3);
  OpCounters c;
  anf_step(s, 0.5, &c);
  EXPECT_EQ(c.multiplications, 8u + 3 + 2 + 1 + 1);
  EXPECT_EQ(c.additions, 7u + 1 + 1);
}

// ---- Sliding DTFT ------------------------------------------------------------

TEST(SlidingDtft, UnprimedBufferRejected) {
  DtftState d(64);
  for (int n = 0; n < 63; ++n) d.update(1.0, 0.3);
  try {
    d.value();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unprimed_buffer);
  }
  d.update(1.0, 0.3);
  EXPECT_NO_THROW(d.value());
}

TEST(SlidingDtft, ZeroWindowIsZero) {
  for (auto win : {DtftWindow::rectangular, DtftWindow::hann}) {
    DtftState d(128, win);
    for (int n = 0; n < 300; ++n) d.update(0.0, 0.29);
    EXPECT_EQ(d.value(), cd(0.0));
  }
}

TEST(SlidingDtft, RejectsBadWindowLength) {
  EXPECT_THROW(DtftState(63), Error);
  EXPECT_THROW(DtftState(2), Error);
  DtftState d(8);
  EXPECT_THROW(d.update(NAN, 0.1), Error);
}

class DtftWindows : public ::testing::TestWithParam<std::tuple<int, DtftWindow>> {};

TEST_P(DtftWindows, IntegerPeriodAmplitude) {
  const auto [n, win] = GetParam();
  for (int k : {5, 7, 11}) {
    const double w = 2 * kPi * k / n;
    DtftState d(n, win);
    for (int i = 0; i < 3 * n; ++i) {
      d.update(0.37 * std::cos(w * i + 0.2), w);
      if (i >= n) {
        ASSERT_NEAR(d.amplitude(), 0.37, 1e-9) << i;
      }
    }
    // Newest-sample reference: the argument is the tone's current phase.
    EXPECT_NEAR(std::arg(d.value()), wrap_angle(w * (3 * n - 1) + 0.2), 1e-9);
  }
}

TEST_P(DtftWindows, RecursionMatchesDirectSum) {
  const auto [n, win] = GetParam();
  std::mt19937_64 g(static_cast<unsigned>(n));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double w = 0.2903;
  DtftState d(n, win);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    d.update(u(g), w);
    if (d.primed() && i % 7 == 0) worst = std::max(worst, std::abs(d.value() - d.direct(w)));
  }
  EXPECT_LT(worst, 1e-9);
  EXPECT_EQ(d.rebases(), 1);  // the first call moves off the initial frequency
}

INSTANTIATE_TEST_SUITE_P(Lengths, DtftWindows,
                         ::testing::Combine(::testing::Values(64, 128, 256),
                                            ::testing::Values(DtftWindow::rectangular, DtftWindow::hann)));

TEST(SlidingDtft, RebaseThreshold) {
  const int n = 128;
  const double thr = 2 * kPi / (10.0 * n);
  DtftState d(n, DtftWindow::hann);
  for (int i = 0; i < 200; ++i) d.update(std::sin(0.3 * i), 0.3);
  const auto base = d.rebases();
  d.update(0.1, 0.3 + 0.9 * thr);  // stays on the old bins
  EXPECT_EQ(d.rebases(), base);
  EXPECT_EQ(d.rebase_frequency(), 0.3);
  d.update(0.2, 0.3 + 1.1 * thr);
  EXPECT_EQ(d.rebases(), base + 1);
  EXPECT_EQ(d.rebase_frequency(), 0.3 + 1.1 * thr);
  EXPECT_LT(std::abs(d.value() - d.direct(0.3 + 1.1 * thr)), 1e-12);
}

TEST(SlidingDtft, WindowSums) {
  EXPECT_EQ(DtftState(128).window_sum(), 128.0);
  EXPECT_EQ(DtftState(128, DtftWindow::hann).window_sum(), 64.0);
}

// ---- DTFT(ANF) tracker -------------------------------------------------------

TEST(DtftAnfTracker, SteadyToneConverges) {
  for (double f : {85.0, 90.0, 100.0}) {
    auto t = make_tracker(config_for(Method::anf_dtft));
    const auto rec = tone_generate(2000.0, 6000, f, 0.1, 2.0);
    const auto est = run_tracker(*t, rec.x1, rec.x2);
    for (std::size_t i = 2000; i < est.size(); ++i) {
      const auto& e = est[i];
      ASSERT_TRUE(e.valid);
      ASSERT_NEAR(e.frequency_hz, f, 0.1);
      ASSERT_NEAR(e.phase_diff_deg, 2.0, 0.1);
      ASSERT_NEAR(e.amplitude1_v, 0.1, 0.001);
      ASSERT_NEAR(e.amplitude2_v, 0.1, 0.001);
    }
  }
}

TEST(DtftAnfTracker, ZeroInputInvalid) {
  const std::vector<double> z(3000, 0.0);
  for (const auto& e : run_tracker(config_for(Method::anf_dtft), z, z)) {
    ASSERT_FALSE(e.valid);
    ASSERT_TRUE(std::isfinite(e.frequency_hz) && std::isfinite(e.amplitude1_v));
  }
}

TEST(DtftAnfTracker, WarmupDefault) {
  EXPECT_EQ(make_tracker(config_for(Method::anf_dtft))->warmup_samples(), 128 + 200);
}

TEST(DtftAnfTracker, MeanInputOption) {
  auto cfg = config_for(Method::anf_dtft);
  cfg.anf_mean_input = true;
  const auto rec = tone_generate(2000.0, 4000, 97.0, 0.1, 3.0);
  const auto est = run_tracker(cfg, rec.x1, rec.x2);
  EXPECT_NEAR(est.back().frequency_hz, 97.0, 0.01);
  EXPECT_NEAR(est.back().phase_diff_deg, 3.0, 0.1);
}

TEST(DtftAnfTracker, SlowestOnBatchRamp) {
  const auto rec = batch_generate({});
  std::vector<std::pair<Method, double>> delays;
  for (auto m : {Method::cbf, Method::cnf, Method::cbf_cnf, Method::hilbert, Method::anf_dtft}) {
    const auto est = run_tracker(config_for(m), rec.x1, rec.x2);
    delays.emplace_back(m, tracking_delay(est, rec.truth, 60.0).delay_ms);
  }
  for (std::size_t i = 0; i + 1 < delays.size(); ++i) EXPECT_LT(delays[i].second, delays.back().second);
}
