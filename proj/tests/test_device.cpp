#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "safe/device.hpp"
#include "safe/siggen.hpp"
#include "safe/sine_fit.hpp"

using safe::DeviceSpec;

namespace {

DeviceSpec quiet(DeviceSpec s = DeviceSpec::safe()) {
  s.noise_sigma_uv = 0.0;
  return s;
}

}  // namespace

TEST_CASE("presets") {
  const auto s = DeviceSpec::safe();
  CHECK(s.sample_rate_hz == 1024.0);
  CHECK(s.adc_step_uv == 0.125);
  CHECK(s.adc_bits == 16);
  CHECK(s.interchannel_skew_us == 10.0);
  CHECK(s.channel_count == 6);
  CHECK(s.noise_sigma_uv == 9.4);
  CHECK(s.loss_probability == 0.05);
  CHECK(s.full_scale_uv() == 4096.0);
  CHECK(s.packet_span_s() == doctest::Approx(0.04004).epsilon(1e-4));

  const auto r = DeviceSpec::reference();
  CHECK(r.sample_rate_hz == 1200.0);
  CHECK(r.interchannel_skew_us == 0.0);
  CHECK(r.noise_sigma_uv == 4.0);
  CHECK(r.loss_probability == 0.0);
}

TEST_CASE("adc_quantize examples") {
  const auto s = DeviceSpec::safe();
  CHECK(safe::adc_quantize(0.0, s) == 0.0);
  CHECK(safe::adc_quantize(1.0, s) == 1.0);
  CHECK(safe::adc_code(1.0, s) == 8);
  CHECK(safe::adc_quantize(5000.0, s) == 4095.875);
  CHECK(safe::adc_code(5000.0, s) == 32767);
  CHECK(safe::adc_quantize(-5000.0, s) == -4096.0);
  CHECK(safe::adc_code(-5000.0, s) == -32768);
  // Ties round away from zero.
  CHECK(safe::adc_quantize(0.0625, s) == 0.125);
  CHECK(safe::adc_quantize(-0.0625, s) == -0.125);
  CHECK(safe::adc_quantize(0.0624, s) == 0.0);
}

TEST_CASE("adc_quantize rejects non-finite input") {
  const auto s = DeviceSpec::safe();
  CHECK_THROWS_AS(safe::adc_quantize(std::nan(""), s), std::invalid_argument);
  CHECK_THROWS_AS(safe::adc_quantize(INFINITY, s), std::invalid_argument);
}

TEST_CASE("quantization is idempotent with error at most half a step") {
  const auto s = DeviceSpec::safe();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> in_range(-4096.0, 4095.875);
  std::uniform_real_distribution<double> wide(-1e6, 1e6);
  for (int i = 0; i < 100000; ++i) {
    const double v = in_range(rng);
    const double q = safe::adc_quantize(v, s);
    REQUIRE(safe::adc_quantize(q, s) == q);
    REQUIRE(std::abs(v - q) <= s.adc_step_uv / 2);
    const double w = wide(rng);
    REQUIRE(safe::adc_quantize(safe::adc_quantize(w, s), s) == safe::adc_quantize(w, s));
  }
}

TEST_CASE("ramp source: adjacent channels differ by slope x skew") {
  const auto s = quiet();
  // 1 uV per microsecond.
  safe::SignalSource ramp([](int, double t) { return t * 1e6; }, 0.004);
  safe::RandomStream noise(0);
  for (std::int64_t k = 0; k < 4; ++k) {
    const auto f = safe::sample_frame(ramp, k, s, noise);
    REQUIRE(f.channel_values_uv.size() == 6);
    for (int c = 1; c < 6; ++c) CHECK(f.channel_values_uv[c] - f.channel_values_uv[c - 1] == doctest::Approx(10.0).epsilon(0.0125));
  }
  const auto f0 = safe::sample_frame(ramp, 0, s, noise);
  CHECK(f0.channel_values_uv == std::vector<double>{0, 10, 20, 30, 40, 50});
}

TEST_CASE("constant zero source with no noise gives zero frames") {
  const auto s = quiet();
  safe::SignalSource zero([](int, double) { return 0.0; }, 1.0);
  for (const auto& f : safe::run_acquisition(zero, s, 1.0, 5))
    for (double v : f.channel_values_uv) REQUIRE(v == 0.0);
}

TEST_CASE("200 Hz source: channel 5 lags channel 0 by 1 % of a period") {
  const auto s = quiet();
  const auto src = safe::analytic_sinusoid(1000.0, 200.0, 2.0);
  const auto frames = safe::run_acquisition(src, s, 2.0, 1);
  std::vector<double> ch0, ch5;
  for (const auto& f : frames) {
    ch0.push_back(f.channel_values_uv[0]);
    ch5.push_back(f.channel_values_uv[5]);
  }
  const double p0 = safe::fit_sine_phase(ch0, 0.0, 1000.0, 200.0, s.sample_rate_hz).phase_rad;
  const double p5 = safe::fit_sine_phase(ch5, 0.0, 1000.0, 200.0, s.sample_rate_hz).phase_rad;
  const double deg = (p5 - p0) * 180.0 / std::numbers::pi;
  CHECK(deg == doctest::Approx(3.6).epsilon(0.1 / 3.6));
}

TEST_CASE("frame counts") {
  const auto s = DeviceSpec::safe();
  CHECK(safe::frame_count_for(30.0, s) == 30720);
  CHECK(safe::frame_count_for(0.5, s) == 512);
  CHECK(safe::frame_count_for(300.0, s) == 307200);
  safe::SignalSource zero([](int, double) { return 0.0; }, 30.0);
  const auto frames = safe::run_acquisition(zero, s, 30.0, 1);
  CHECK(frames.size() == 30720);
  CHECK(frames.back().frame_index == 30719);
}

TEST_CASE("acquisition errors") {
  const auto s = DeviceSpec::safe();
  safe::SignalSource src([](int, double) { return 0.0; }, 1.0);
  CHECK_THROWS_AS(safe::run_acquisition(src, s, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(safe::run_acquisition(src, s, -1.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(safe::run_acquisition(src, s, 2.0, 1), std::invalid_argument);
  safe::RandomStream noise(0);
  CHECK_THROWS_AS(safe::sample_frame(src, 2048, s, noise), std::out_of_range);
  CHECK_THROWS_AS(safe::sample_frame(src, -1, s, noise), std::invalid_argument);
}

TEST_CASE("identical seed, spec and source give bit-identical acquisitions") {
  const auto s = DeviceSpec::safe();
  const auto src = safe::analytic_sinusoid(50.0, 20.0, 2.0);
  const auto a = safe::run_acquisition(src, s, 2.0, 123);
  const auto b = safe::run_acquisition(src, s, 2.0, 123);
  const auto c = safe::run_acquisition(src, s, 2.0, 124);
  CHECK(a == b);
  CHECK_FALSE(a == c);
}

TEST_CASE("no noise, no skew: acquisition equals the quantized analytic sine") {
  auto s = quiet();
  s.interchannel_skew_us = 0.0;
  const double a = 123.4, f = 37.0;
  const auto frames = safe::run_acquisition(safe::analytic_sinusoid(a, f, 1.0), s, 1.0, 9);
  for (const auto& fr : frames) {
    const double t = static_cast<double>(fr.frame_index) / s.sample_rate_hz;
    const double expected = safe::adc_quantize(a * std::sin(2 * std::numbers::pi * f * t), s);
    for (double v : fr.channel_values_uv) REQUIRE(v == expected);
  }
}

TEST_CASE("noise is added before quantization with the configured sigma") {
  const auto s = DeviceSpec::safe();
  safe::SignalSource zero([](int, double) { return 0.0; }, 10.0);
  const auto frames = safe::run_acquisition(zero, s, 10.0, 3);
  double ss = 0;
  std::size_t n = 0;
  for (const auto& f : frames)
    for (double v : f.channel_values_uv) {
      REQUIRE(std::fmod(v, s.adc_step_uv) == 0.0);
      ss += v * v;
      ++n;
    }
  // Quantization adds step^2/12 of variance.
  const double expected = std::sqrt(9.4 * 9.4 + 0.125 * 0.125 / 12);
  CHECK(std::sqrt(ss / n) == doctest::Approx(expected).epsilon(0.01));
}

TEST_CASE("spec validation") {
  auto bad = [](auto mutate) {
    auto s = DeviceSpec::safe();
    mutate(s);
    return s;
  };
  CHECK_NOTHROW(DeviceSpec::safe().validate());
  CHECK_NOTHROW(DeviceSpec::reference().validate());
  CHECK_THROWS_AS(bad([](auto& s) { s.sample_rate_hz = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& s) { s.adc_step_uv = -1; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& s) { s.adc_bits = 40; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& s) { s.channel_count = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& s) { s.frames_per_packet = 0; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& s) { s.noise_sigma_uv = -0.1; }).validate(), std::invalid_argument);
  CHECK_THROWS_AS(bad([](auto& s) { s.loss_probability = 1.5; }).validate(), std::invalid_argument);
  // Six conversions 200 us apart do not fit in a 977 us frame.
  CHECK_THROWS_AS(bad([](auto& s) { s.interchannel_skew_us = 200; }).validate(), std::invalid_argument);
}

TEST_CASE("spec config round trip uses the field names as keys") {
  auto s = DeviceSpec::safe();
  s.sample_rate_hz = 2048;
  s.noise_sigma_uv = 1.5;
  safe::KeyValueConfig kv;
  s.to_config(kv, "x.");
  CHECK(kv.contains("x.frames_per_packet"));
  CHECK(DeviceSpec::from_config(kv, DeviceSpec::reference(), "x.") == s);
  auto partial = safe::KeyValueConfig::parse("noise_sigma_uv = 2\n");
  auto p = DeviceSpec::from_config(partial, DeviceSpec::safe());
  CHECK(p.noise_sigma_uv == 2.0);
  CHECK(p.sample_rate_hz == 1024.0);
}

TEST_CASE("delayed source") {
  safe::SignalSource one([](int, double t) { return 1.0 + t; }, 2.0, "one");
  const auto d = one.delayed(0.5, [](int, double) { return -7.0; });
  CHECK(d.duration_s() == 2.5);
  CHECK(d(0, 0.25) == -7.0);
  CHECK(d(0, 1.5) == 2.0);
  CHECK(one.delayed(0.5)(0, 0.1) == 0.0);
  CHECK_THROWS_AS(one.delayed(-1.0), std::invalid_argument);
}
