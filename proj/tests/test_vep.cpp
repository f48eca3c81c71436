#include <doctest.h>

#include <cmath>
#include <random>

#include "safe/errors.hpp"
#include "safe/experiment.hpp"
#include "safe/vep.hpp"

using safe::ExperimentConfig;
using safe::Preset;

namespace {

ExperimentConfig quiet_config(double duration_s) {
  ExperimentConfig cfg;
  cfg.experiment = safe::ExperimentKind::VepSession;
  cfg.seed = 11;
  cfg.vep.duration_s = duration_s;
  cfg.vep.sessions = 1;
  cfg.safe_spec.loss_probability = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("lossless session: every trigger yields a clean 411-sample trial") {
  auto cfg = quiet_config(300.0);
  const auto rec = safe::simulate_vep_arm(cfg, 0, Preset::Safe);
  REQUIRE(rec.triggers.size() == 297);
  const auto set = safe::epoch_vep(rec);
  CHECK(set.pre_samples == 205);
  CHECK(set.window_samples() == 411);
  CHECK(set.trials.size() == 297);
  CHECK(set.clean_count() == 297);
  CHECK(set.skipped_at_edges == 0);
  for (const auto& t : set.trials) {
    REQUIRE(t.values.size() == 6);
    REQUIRE(t.values[0].size() == 411);
    REQUIRE(t.anchor_frame % 41 == 0);
  }
}

TEST_CASE("triggers too close to either end are skipped") {
  safe::Recording rec;
  rec.spec = safe::DeviceSpec::reference();
  rec.record = safe::ContiguousRecord(6, 1200 * 2);
  for (double t : {0.1, 1.0, 1.9}) rec.triggers.push_back({t, safe::LabelMode::SampleAccurate, std::llround(t * 1200)});
  const auto set = safe::epoch_vep(rec);
  CHECK(set.pre_samples == 240);
  CHECK(set.trials.size() == 1);
  CHECK(set.skipped_at_edges == 2);
  CHECK(set.trials[0].anchor_frame == 1200);

  rec.triggers.clear();
  CHECK_THROWS_AS(safe::epoch_vep(rec), std::invalid_argument);
}

TEST_CASE("5 % packet loss leaves about 0.95^11 of trials clean") {
  auto cfg = quiet_config(300.0);
  cfg.safe_spec.loss_probability = 0.05;
  cfg.vep.background_sigma_uv = 0.0;
  cfg.vep.sessions = 4;
  std::int64_t clean = 0, total = 0;
  for (int session = 0; session < 4; ++session) {
    const auto set = safe::epoch_vep(safe::simulate_vep_arm(cfg, session, Preset::Safe));
    clean += set.clean_count();
    total += static_cast<std::int64_t>(set.trials.size());
  }
  const double p = std::pow(0.95, 11);
  const double frac = static_cast<double>(clean) / static_cast<double>(total);
  CHECK(std::abs(frac - p) < 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(total)));
}

TEST_CASE("averaging uses clean trials only") {
  safe::TrialSet set;
  set.pre_samples = 1;
  set.post_samples = 1;
  set.channel_count = 1;
  set.sample_rate_hz = 1000;
  set.trials.push_back({{{1, 2, 3}}, 0, 0, true});
  set.trials.push_back({{{3, 4, 5}}, 0, 0, true});
  set.trials.push_back({{{100, 100, 100}}, 0, 0, false});
  const auto avg = safe::vep_average(set);
  CHECK(avg.trial_count == 2);
  CHECK(avg.channels[0] == std::vector<double>{2, 3, 4});

  set.trials.resize(0);
  set.trials.push_back({{{1, 2, 3}}, 0, 0, false});
  CHECK_THROWS_AS(safe::vep_average(set), safe::AnalysisError);
}

TEST_CASE("SNR of known windows") {
  std::vector<double> trace(411);
  for (std::size_t i = 0; i < trace.size(); ++i) trace[i] = i % 2 ? 1.0 : -1.0;
  CHECK(safe::vep_snr_db(trace, 205) == doctest::Approx(0.0).epsilon(1e-3));
  for (std::size_t i = 205; i < trace.size(); ++i) trace[i] *= 10.0;
  CHECK(safe::vep_snr_db(trace, 205) == doctest::Approx(20.0).epsilon(1e-3));
  CHECK(safe::sample_variance_population(std::vector<double>{1, 3}) == 1.0);
}

TEST_CASE("metric windows and peak selection") {
  // pre = 4: indices 0..3 before, 4..7 after.
  const std::vector<double> trace = {9, -9, 1, 0, 0, 3, -5, 2, 99};
  CHECK(safe::vep_amplitude(trace, 4) == 8.0);
  CHECK(safe::vep_peak_time_ms(trace, 4, 1000) == 2.0);
  const auto m = safe::vep_metrics(trace, 4, 1000, 1.5);
  CHECK(m.peak_time_ms == 1.5);
  CHECK(m.amplitude_uv == 8.0);
  CHECK_THROWS_AS(safe::vep_amplitude(trace, 5), std::invalid_argument);
  CHECK_THROWS_AS(safe::vep_amplitude(trace, 0), std::invalid_argument);
}

TEST_CASE("noiseless template: amplitude and latency are recovered") {
  auto cfg = quiet_config(30.0);
  cfg.reference_spec.noise_sigma_uv = 0.0;
  cfg.vep.background_sigma_uv = 0.0;
  cfg.vep.jitter_ms = 0.0;
  cfg.vep.peak_to_peak_uv = {100.0};
  cfg.vep.peak_time_ms = {90.0};
  const auto rec = safe::simulate_vep_arm(cfg, 0, Preset::Reference);
  const auto set = safe::epoch_vep(rec);
  CHECK(set.clean_count() == 29);
  const auto avg = safe::vep_average(set);
  for (const auto& ch : avg.channels) {
    CHECK(safe::vep_amplitude(ch, avg.pre_samples) == doctest::Approx(100.0).epsilon(0.01));
    CHECK(std::abs(safe::vep_peak_time_ms(ch, avg.pre_samples, avg.sample_rate_hz) - 90.0) <= 1.0);
    // Silent pre-stimulus window: SNR is undefined.
    CHECK_THROWS_AS(safe::vep_snr_db(ch, avg.pre_samples), safe::AnalysisError);
  }
}

TEST_CASE("pure noise in both windows gives SNR near 0 dB") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 5.0);
  double sum = 0;
  for (int seed = 0; seed < 100; ++seed) {
    std::vector<double> trace(411);
    for (double& v : trace) v = n(rng);
    sum += safe::vep_snr_db(trace, 205);
  }
  CHECK(std::abs(sum / 100) < 1.0);
}
