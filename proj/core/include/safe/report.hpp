#pragma once

#include <string>
#include <string_view>

#include "safe/experiment.hpp"

namespace safe {

inline constexpr std::string_view kSineReportFile = "sine_report.csv";
inline constexpr std::string_view kSineSummaryFile = "sine_summary.txt";
inline constexpr std::string_view kVepReportFile = "vep_report.csv";
inline constexpr std::string_view kVepSummaryFile = "vep_summary.txt";

// One row per condition and channel plus an "all" row per condition and a
// pooled row per preset.
std::string sine_report_csv(const SineReport& report);
SineReport parse_sine_report_csv(std::string_view text);
std::string sine_summary_text(const SineReport& report);

// One row per session x metric x channel, plus a summary row per session and
// metric carrying mean/std of d, t and p.
std::string vep_report_csv(const VepReport& report);
VepReport parse_vep_report_csv(std::string_view text);
// Table laid out like a device comparison table: rows per metric
// (each arm's mean+-std, d, p), columns per session.
std::string vep_summary_text(const VepReport& report);

}  // namespace safe
