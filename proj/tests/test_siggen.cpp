#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "safe/siggen.hpp"

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("generated sinusoid has RMS A / sqrt 2") {
  const auto src = safe::gen_sinusoid(50.0, 20.0, safe::DacModel{}, 30.0);
  CHECK(src.duration_s() == 30.0);
  // 600 whole periods sampled at 100 points per period.
  const int n = 60000;
  double ss = 0;
  for (int i = 0; i < n; ++i) {
    const double v = src(0, 30.0 * i / n);
    ss += v * v;
  }
  CHECK(std::sqrt(ss / n) == doctest::Approx(50.0 / std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("zero amplitude gives an identically zero source") {
  const auto src = safe::gen_sinusoid(0.0, 20.0, safe::DacModel{}, 1.0);
  for (int i = 0; i < 1000; ++i) REQUIRE(src(i % 6, i * 1e-3) == 0.0);
}

TEST_CASE("gen_sinusoid argument errors") {
  CHECK_THROWS_AS(safe::gen_sinusoid(-1.0, 20.0, {}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(safe::gen_sinusoid(10.0, 0.0, {}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(safe::gen_sinusoid(10.0, -5.0, {}, 1.0), std::invalid_argument);
  safe::DacModel bad;
  bad.divider_ratio = 0;
  CHECK_THROWS_AS(safe::gen_sinusoid(10.0, 20.0, bad, 1.0), std::invalid_argument);
}

TEST_CASE("DAC quantization error is bounded by half the post-divider step") {
  auto check_dac = [](const safe::DacModel& dac) {
    const auto gen = safe::gen_sinusoid(73.0, 30.0, dac, 1.0, 0.4);
    const auto ideal = safe::analytic_sinusoid(73.0, 30.0, 1.0, 0.4);
    double worst = 0;
    for (int i = 0; i < 20000; ++i) {
      const double t = i / 20000.0;
      worst = std::max(worst, std::abs(gen(0, t) - ideal(0, t)));
    }
    return worst;
  };
  safe::DacModel paper;
  CHECK(paper.post_divider_step_v() == doctest::Approx(3.39e-12));
  CHECK(check_dac(paper) <= paper.post_divider_step_uv() / 2 * (1 + 1e-6));

  // A coarse divider makes the staircase visible but still bounded.
  safe::DacModel coarse;
  coarse.divider_ratio = 1e4;  // 0.061 uV steps
  const double worst = check_dac(coarse);
  CHECK(worst <= coarse.post_divider_step_uv() / 2 * (1 + 1e-9));
  CHECK(worst > coarse.post_divider_step_uv() / 4);

  // Shrinking the DAC step converges on the analytic sinusoid.
  safe::DacModel fine = coarse;
  fine.dac_step_v = coarse.dac_step_v / 1000;
  CHECK(check_dac(fine) < worst / 500);
}

TEST_CASE("sweep lists") {
  const auto f = safe::sweep_frequencies();
  CHECK(f.size() == 16);
  CHECK(f.front() == 10.0);
  CHECK(f.back() == 190.0);
  for (double x : f) CHECK(std::fmod(x, 50.0) != 0.0);
  CHECK(std::is_sorted(f.begin(), f.end()));
  // Symmetric about 100 Hz: the exclusions 50, 100, 150 are symmetric too.
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(f[i] + f[f.size() - 1 - i] == 200.0);
  CHECK(f == safe::sweep_frequencies());

  const auto a = safe::sweep_amplitudes();
  CHECK(a.size() == 10);
  CHECK(a.front() == 10.0);
  CHECK(a.back() == 100.0);
}

TEST_CASE("VEP template shape") {
  safe::VepTemplate t;
  t.peak_time_ms = 90;
  t.peak_to_peak_uv = 100;
  CHECK(t.lobe_half_width_ms() == 35.0);
  CHECK(t(90.0) == doctest::Approx(60.0));
  CHECK(t.trough_time_ms() == 160.0);
  CHECK(t(160.0) == doctest::Approx(-40.0));
  CHECK(t(-1.0) == 0.0);
  CHECK(t(0.0) == 0.0);
  CHECK(t(200.0) == 0.0);
  CHECK(t(250.0) == 0.0);
  double lo = 0, hi = 0;
  for (int i = 0; i <= 20000; ++i) {
    const double v = t(i * 0.01);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(hi - lo == doctest::Approx(100.0));
  CHECK(hi == doctest::Approx(60.0));

  // Early and late peaks shrink the lobes to stay inside [0, 200] ms.
  safe::VepTemplate early{20.0, 10.0};
  CHECK(early.lobe_half_width_ms() == 20.0);
  safe::VepTemplate late{170.0, 10.0};
  CHECK(late.lobe_half_width_ms() == 10.0);
  CHECK(late.trough_time_ms() + late.lobe_half_width_ms() == 200.0);

  CHECK_THROWS_AS((safe::VepTemplate{0.0, 10.0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((safe::VepTemplate{90.0, -1.0}.validate()), std::invalid_argument);
}

TEST_CASE("VEP session flash times") {
  const auto s = safe::gen_vep_session({}, 0.99, 300.0, 5.0, 1);
  REQUIRE(s.flash_times_s.size() == 297);
  for (std::size_t k = 0; k < s.flash_times_s.size(); ++k) REQUIRE(s.flash_times_s[k] == k / 0.99);
  CHECK(s.source.duration_s() == 300.0);
  CHECK_THROWS_AS(safe::gen_vep_session({}, 5.0, 10.0, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(safe::gen_vep_session({}, 0.0, 10.0, 0.0, 1), std::invalid_argument);
}

TEST_CASE("noiseless session reaches the template extremum at flash + peak time") {
  safe::VepTemplate t{90.0, 100.0};
  const auto s = safe::gen_vep_session(t, 0.99, 30.0, 0.0, 1, {1.0, 0.5});
  for (double f : s.flash_times_s) {
    REQUIRE(s.source(0, f + 0.090) == doctest::Approx(60.0));
    REQUIRE(s.source(1, f + 0.090) == doctest::Approx(30.0));
    REQUIRE(s.source(5, f + 0.160) == doctest::Approx(-40.0));
    REQUIRE(s.source(3, f + 0.5) == 0.0);
  }
}

TEST_CASE("averaging 297 trials leaves sigma / sqrt(297) of background") {
  safe::VepTemplate t{90.0, 100.0};
  const double sigma = 10.0;
  const auto s = safe::gen_vep_session(t, 0.99, 300.0, sigma, 42);
  const int points = 400;
  double ss = 0;
  for (int c = 0; c < 6; ++c) {
    for (int i = 0; i < points; ++i) {
      const double lat = i * 0.0005;
      double sum = 0;
      for (double f : s.flash_times_s) sum += s.source(c, f + lat) - t(lat * 1e3);
      const double avg = sum / static_cast<double>(s.flash_times_s.size());
      ss += avg * avg;
    }
  }
  const double residual = std::sqrt(ss / (6 * points));
  CHECK(residual == doctest::Approx(sigma / std::sqrt(297.0)).epsilon(0.1));
}

TEST_CASE("background noise is pure, per-channel, and held per cell") {
  const auto bg = safe::background_noise(5.0, 9);
  CHECK(bg(0, 0.25) == bg(0, 0.25));
  CHECK(bg(0, 0.25) != bg(1, 0.25));
  CHECK(bg(2, 1.0) == bg(2, 1.0 + 0.5 / 8192));
  CHECK(safe::background_noise(0.0, 9)(0, 1.0) == 0.0);
  CHECK_THROWS_AS(safe::background_noise(-1.0, 9), std::invalid_argument);
}

TEST_CASE("DAC model config") {
  auto kv = safe::KeyValueConfig::parse("dac.divider_ratio = 1000\n");
  const auto d = safe::DacModel::from_config(kv, safe::DacModel{});
  CHECK(d.divider_ratio == 1000.0);
  CHECK(d.dac_step_v == 610e-6);
  CHECK(d.post_divider_step_uv() == doctest::Approx(0.61));
}
