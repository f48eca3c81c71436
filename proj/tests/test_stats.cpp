#include <doctest.h>

#include <cmath>
#include <numbers>

#include "safe/errors.hpp"
#include "safe/stats.hpp"

using safe::Metric;

namespace {

// Two-tailed p by Simpson integration of the Student t density.
double p_by_quadrature(double t, int df) {
  const double nu = df;
  const double c = std::tgamma((nu + 1) / 2) / (std::sqrt(nu * std::numbers::pi) * std::tgamma(nu / 2));
  auto pdf = [&](double x) { return c * std::pow(1 + x * x / nu, -(nu + 1) / 2); };
  const double a = 0, b = std::abs(t);
  const int n = 20000;
  const double h = (b - a) / n;
  double s = pdf(a) + pdf(b);
  for (int i = 1; i < n; ++i) s += pdf(a + i * h) * (i % 2 ? 4 : 2);
  return 1.0 - 2.0 * s * h / 3.0;
}

struct Table2Entry {
  double mean, sd;
  bool significant;
  double printed_p;  // < 0 marks "<0.001"
};

}  // namespace

TEST_CASE("percent difference examples and sign conventions") {
  const std::vector<double> safe_amp = {437}, ref_amp = {352};
  CHECK(safe::percent_difference(safe_amp, ref_amp, Metric::Amplitude).mean_d == doctest::Approx(100.0 * (352 - 437) / 394.5));
  const std::vector<double> s2 = {16}, r2 = {112};
  CHECK(safe::percent_difference(s2, r2, Metric::Amplitude).mean_d == doctest::Approx(150.0));
  CHECK(safe::percent_difference(s2, r2, Metric::Snr).mean_d == doctest::Approx(150.0));
  CHECK(safe::percent_difference(s2, r2, Metric::PeakTime).mean_d == doctest::Approx(-150.0));
  // Swapping the systems flips the sign.
  CHECK(safe::percent_difference(r2, s2, Metric::Amplitude).mean_d == doctest::Approx(-150.0));
}

TEST_CASE("percent difference is scale invariant and bounded") {
  const std::vector<double> s = {1, 2, 3, 4, 5, 6}, r = {2, 2, 5, 1, 9, 7};
  std::vector<double> s10, r10;
  for (double v : s) s10.push_back(v * 10);
  for (double v : r) r10.push_back(v * 10);
  const auto a = safe::percent_difference(s, r, Metric::Amplitude);
  const auto b = safe::percent_difference(s10, r10, Metric::Amplitude);
  for (std::size_t i = 0; i < a.d.size(); ++i) {
    CHECK(a.d[i] == doctest::Approx(b.d[i]));
    CHECK(std::abs(a.d[i]) < 200.0);
  }
  CHECK(a.std_d == doctest::Approx(safe::sample_std(a.d)));
  REQUIRE(a.ttest);
  CHECK(a.ttest->df == 5);
}

TEST_CASE("percent difference errors") {
  const std::vector<double> s = {1, -1}, r = {-1, 2}, one = {1};
  CHECK_THROWS_AS(safe::percent_difference(s, r, Metric::Snr), std::domain_error);
  CHECK_THROWS_AS(safe::percent_difference(s, one, Metric::Snr), std::invalid_argument);
  const std::vector<double> e;
  CHECK_THROWS_AS(safe::percent_difference(e, e, Metric::Snr), std::invalid_argument);
  // Identical d values: no t-test.
  const std::vector<double> a = {1, 2}, b = {2, 4};
  CHECK_FALSE(safe::percent_difference(a, b, Metric::Amplitude).ttest);
}

TEST_CASE("one-sample t-test") {
  const auto r = safe::ttest_from_summary(30, 24, 6);
  CHECK(r.t_statistic == doctest::Approx(30 / (24 / std::sqrt(6.0))));
  CHECK(r.t_statistic == doctest::Approx(3.06).epsilon(0.01));
  CHECK(r.p_value == doctest::Approx(0.028).epsilon(0.05));
  CHECK(r.df == 5);
  CHECK(safe::ttest_from_summary(-22, 7, 6).p_value < 0.001);

  const std::vector<double> d = {1, 2, 3, 4};
  const auto s = safe::one_sample_ttest(d);
  CHECK(s.t_statistic == doctest::Approx(2.5 / (std::sqrt(5.0 / 3.0) / 2)));

  const std::vector<double> flat = {3, 3, 3};
  CHECK_THROWS_AS(safe::one_sample_ttest(flat), safe::DegenerateSampleError);
  CHECK_THROWS_AS(safe::ttest_from_summary(1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(safe::student_t_two_tailed_p(1, 0), std::invalid_argument);
}

TEST_CASE("t distribution p-values match numerical integration") {
  for (int df : {1, 2, 5, 10, 30})
    for (double t : {0.1, 0.5, 1.0, 2.0, 3.5, 6.0}) {
      INFO("df=" << df << " t=" << t);
      CHECK(safe::student_t_two_tailed_p(t, df) == doctest::Approx(p_by_quadrature(t, df)).epsilon(1e-6));
      CHECK(safe::student_t_two_tailed_p(-t, df) == safe::student_t_two_tailed_p(t, df));
    }
  CHECK(safe::student_t_two_tailed_p(0.0, 5) == doctest::Approx(1.0));
}

TEST_CASE("published comparison table: significance at 0.001 and p-values") {
  const Table2Entry rows[] = {
      {-22, 7, true, -1}, {-6, 7, false, 0.12},   {149, 23, true, -1},     {30, 24, false, 0.029},
      {-26, 25, false, 0.0511}, {107, 16, true, -1}, {164, 17, true, -1},  {44, 39, false, 0.037},
      {-11, 11, false, 0.0565}, {0, 14, false, 0.9597}, {-23, 7, true, -1}, {5, 15, false, 0.4447},
  };
  for (const auto& r : rows) {
    INFO("d = " << r.mean << " +- " << r.sd);
    const double p = safe::ttest_from_summary(r.mean, r.sd, 6).p_value;
    CHECK((p < 0.001) == r.significant);
    if (r.printed_p < 0) {
      CHECK(p < 0.001);
      continue;
    }
    // Table entries are rounded to integers: search the rounding box.
    double lo = 1, hi = 0;
    for (double dm = -0.5; dm <= 0.5; dm += 0.05)
      for (double ds = -0.5; ds <= 0.5; ds += 0.05) {
        const double q = safe::ttest_from_summary(r.mean + dm, r.sd + ds, 6).p_value;
        lo = std::min(lo, q);
        hi = std::max(hi, q);
      }
    CHECK(r.printed_p >= lo - 0.015);
    CHECK(r.printed_p <= hi + 0.015);
  }
}

TEST_CASE("mean and std helpers") {
  const std::vector<double> v = {2, 4, 4, 4, 5, 5, 7, 9};
  CHECK(safe::mean_of(v) == 5.0);
  CHECK(safe::sample_std(v) == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK_THROWS_AS(safe::mean_of(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(safe::sample_std(std::vector<double>{1}), std::invalid_argument);
  CHECK(safe::to_string(Metric::PeakTime) == "peak_time");
}
