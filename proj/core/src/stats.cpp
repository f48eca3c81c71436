#include "safe/stats.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/students_t.hpp>

#include "safe/errors.hpp"

namespace safe {

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::Amplitude: return "amplitude";
    case Metric::Snr: return "snr";
    case Metric::PeakTime: return "peak_time";
  }
  return "unknown";
}

double mean_of(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean of empty sample");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) throw std::invalid_argument("sample std needs at least two values");
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

ComparisonStats percent_difference(std::span<const double> safe_values, std::span<const double> ref_values,
                                   Metric metric) {
  if (safe_values.size() != ref_values.size())
    throw std::invalid_argument("percent_difference: channel counts differ");
  if (safe_values.empty()) throw std::invalid_argument("percent_difference: no channels");
  ComparisonStats out;
  out.metric = metric;
  for (std::size_t i = 0; i < safe_values.size(); ++i) {
    const double s = safe_values[i];
    const double r = ref_values[i];
    const double mid = 0.5 * (s + r);
    if (mid == 0.0)
      throw std::domain_error("percent_difference: mean of the two systems is zero on channel " + std::to_string(i + 1));
    const double diff = metric == Metric::PeakTime ? s - r : r - s;
    out.d.push_back(100.0 * diff / mid);
  }
  out.mean_d = mean_of(out.d);
  if (out.d.size() >= 2) {
    out.std_d = sample_std(out.d);
    if (out.std_d > 0.0) out.ttest = one_sample_ttest(out.d);
  }
  return out;
}

double student_t_two_tailed_p(double t, int df) {
  if (df < 1) throw std::invalid_argument("student_t_two_tailed_p: df must be >= 1");
  if (!std::isfinite(t)) return 0.0;
  boost::math::students_t dist(static_cast<double>(df));
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

TTestResult ttest_from_summary(double mean, double std_dev, int n) {
  if (n < 2) throw std::invalid_argument("t-test needs n >= 2");
  if (!(std_dev > 0.0)) throw DegenerateSampleError("t-test: zero variance");
  TTestResult r;
  r.df = n - 1;
  r.t_statistic = mean / (std_dev / std::sqrt(static_cast<double>(n)));
  r.p_value = student_t_two_tailed_p(r.t_statistic, r.df);
  return r;
}

TTestResult one_sample_ttest(std::span<const double> d) {
  if (d.size() < 2) throw std::invalid_argument("t-test needs n >= 2");
  return ttest_from_summary(mean_of(d), sample_std(d), static_cast<int>(d.size()));
}

}  // namespace safe
