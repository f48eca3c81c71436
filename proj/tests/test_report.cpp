#include <doctest.h>

#include "safe/errors.hpp"
#include "safe/report.hpp"

namespace {

safe::SineReport sample_sine() {
  safe::ExperimentConfig cfg;
  cfg.seed = 3;
  cfg.sine.frequencies_hz = {40};
  cfg.sine.amplitudes_uv = {70};
  cfg.sine.duration_s = 3;
  cfg.analysis.epochs = 30;
  return safe::run_sine_experiment(cfg, std::nullopt);
}

safe::VepReport sample_vep() {
  safe::ExperimentConfig cfg;
  cfg.experiment = safe::ExperimentKind::VepSession;
  cfg.seed = 4;
  cfg.vep.sessions = 2;
  cfg.vep.peak_to_peak_uv = {400, 70};
  cfg.vep.duration_s = 12;
  return safe::run_vep_experiment(cfg, std::nullopt);
}

}  // namespace

TEST_CASE("sine report round trip") {
  const auto report = sample_sine();
  const auto csv = safe::sine_report_csv(report);
  CHECK(csv.rfind("# safe-report-1 sine-sweep\n", 0) == 0);
  const auto parsed = safe::parse_sine_report_csv(csv);
  CHECK(safe::sine_report_csv(parsed) == csv);
  CHECK(safe::sine_summary_text(parsed) == safe::sine_summary_text(report));
  REQUIRE(parsed.conditions.size() == 4);
  CHECK(parsed.conditions[0].channels.size() == 6);
  CHECK(parsed.presets.size() == 2);

  const auto summary = safe::sine_summary_text(report);
  CHECK(summary.find("Pooled over all conditions") != std::string::npos);
  CHECK(summary.find("reference") != std::string::npos);
}

TEST_CASE("VEP report round trip") {
  const auto report = sample_vep();
  const auto csv = safe::vep_report_csv(report);
  CHECK(csv.rfind("# safe-report-1 vep\n", 0) == 0);
  const auto parsed = safe::parse_vep_report_csv(csv);
  CHECK(safe::vep_report_csv(parsed) == csv);
  CHECK(safe::vep_summary_text(parsed) == safe::vep_summary_text(report));
  REQUIRE(parsed.sessions.size() == 2);
  CHECK(parsed.sessions[1].session == report.sessions[1].session);

  const auto summary = safe::vep_summary_text(report);
  for (const char* s : {"SAFE", "Reference", "d (%)", "p-value"}) CHECK(summary.find(s) != std::string::npos);
}

TEST_CASE("report parser errors") {
  const auto csv = safe::sine_report_csv(sample_sine());
  CHECK_THROWS_AS(safe::parse_sine_report_csv(""), safe::MalformedHeaderError);
  CHECK_THROWS_AS(safe::parse_vep_report_csv(csv), safe::MalformedHeaderError);

  auto ragged = csv;
  const auto third = ragged.find('\n', ragged.find('\n') + 1) + 1;
  ragged.insert(ragged.find('\n', third), ",extra");
  try {
    (void)safe::parse_sine_report_csv(ragged);
    FAIL("expected RaggedRowError");
  } catch (const safe::RaggedRowError& e) {
    CHECK(e.row() == 3);
  }

  auto bad_kind = csv;
  bad_kind.replace(third, bad_kind.find(',', third) - third, "bogus");
  CHECK_THROWS_AS(safe::parse_sine_report_csv(bad_kind), safe::FormatError);
}
