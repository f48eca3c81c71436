#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace safe {

enum class Metric { Amplitude, Snr, PeakTime };

std::string_view to_string(Metric m) noexcept;

struct TTestResult {
  double t_statistic = 0.0;
  double p_value = 1.0;  // two-tailed
  int df = 0;
};

struct ComparisonStats {
  Metric metric = Metric::Amplitude;
  std::vector<double> d;  // per-channel percent differences
  double mean_d = 0.0;
  double std_d = 0.0;     // sample standard deviation (n - 1)
  // Empty when the d values have zero variance (or n < 2).
  std::optional<TTestResult> ttest;
};

// Symmetric percent difference per channel, signed so that negative values
// favour the SAFE arm:
//   amplitude, SNR: d = 100 (ref - safe) / mean(ref, safe)
//   peak time:      d = 100 (safe - ref) / mean(safe, ref)
ComparisonStats percent_difference(std::span<const double> safe_values, std::span<const double> ref_values,
                                   Metric metric);

// One-sample Student's t-test of mean(d) against zero, df = n - 1.
// Throws DegenerateSampleError when the sample variance is zero.
TTestResult one_sample_ttest(std::span<const double> d);

// Same test from summary statistics (mean, sample std, n).
TTestResult ttest_from_summary(double mean, double std_dev, int n);

// Two-tailed p for a t statistic with `df` degrees of freedom.
double student_t_two_tailed_p(double t, int df);

double mean_of(std::span<const double> v);
double sample_std(std::span<const double> v);

}  // namespace safe
