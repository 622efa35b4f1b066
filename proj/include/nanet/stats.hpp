#pragma once

// Summary statistics, Shapiro-Wilk normality test (Royston's AS R94
// approximation, complete samples only) and two-sample t-tests.
//
// Distribution functions (normal quantile/tail, Student t CDF) come from
// Boost.Math.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "nanet/error.hpp"

namespace nanet {

inline constexpr double kSignificance = 0.05;

struct SummaryStats {
  std::size_t count = 0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct TestReport {
  double statistic = 0.0;
  double df = 0.0;  // t-tests only
  double p_value = 1.0;
  bool significant = false;
};

inline SummaryStats summarize(std::span<const double> xs) {
  if (xs.empty()) throw ParameterError("summarize needs at least one sample");
  SummaryStats s;
  s.count = xs.size();
  double sum = 0.0;
  s.min = s.max = xs[0];
  for (double x : xs) {
    sum += x;
    s.min = std::min(s.min, x);
    s.max = std::max(s.max, x);
  }
  s.mean = sum / static_cast<double>(s.count);
  // Rounding can push the mean of near-identical values outside [min, max].
  s.mean = std::clamp(s.mean, s.min, s.max);
  if (s.count > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.count - 1));
  }
  return s;
}

namespace detail {

// c[0] + c[1] x + c[2] x^2 + ...
inline double poly(std::span<const double> c, double x) {
  double r = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) r = r * x + *it;
  return r;
}

inline double normal_quantile(double p) {
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

inline double normal_upper_tail(double z) {
  return boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(), z));
}

inline TestReport finish(double statistic, double df, double p) {
  p = std::clamp(p, 0.0, 1.0);
  return {statistic, df, p, p < kSignificance};
}

inline double two_sided_t_p(double t, double df) {
  if (t == 0.0) return 1.0;
  const boost::math::students_t_distribution<double> dist(df);
  return 2.0 * boost::math::cdf(dist, -std::abs(t));
}

}  // namespace detail

// Coefficients a_1 >= a_2 >= ... for the upper half of the ordered sample;
// the lower half is antisymmetric.
inline std::vector<double> shapiro_wilk_coefficients(std::size_t n) {
  static constexpr double c1[] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
  static constexpr double c2[] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
  const std::size_t half = n / 2;
  std::vector<double> a(half);
  if (n == 3) {
    a[0] = std::numbers::sqrt2 / 2.0;
    return a;
  }
  const double an25 = static_cast<double>(n) + 0.25;
  std::vector<double> m(half);
  double summ2 = 0.0;
  for (std::size_t i = 0; i < half; ++i) {
    m[i] = detail::normal_quantile((static_cast<double>(i + 1) - 0.375) / an25);
    summ2 += m[i] * m[i];
  }
  summ2 *= 2.0;
  const double ssumm2 = std::sqrt(summ2);
  const double rsn = 1.0 / std::sqrt(static_cast<double>(n));
  const double a1 = detail::poly(c1, rsn) - m[0] / ssumm2;

  std::size_t first_scaled;
  double fac;
  if (n > 5) {
    first_scaled = 2;
    const double a2 = -m[1] / ssumm2 + detail::poly(c2, rsn);
    fac = std::sqrt((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
    a[0] = a1;
    a[1] = a2;
  } else {
    first_scaled = 1;
    fac = std::sqrt((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1));
    a[0] = a1;
  }
  for (std::size_t i = first_scaled; i < half; ++i) a[i] = -m[i] / fac;
  return a;
}

inline TestReport shapiro_wilk(std::span<const double> samples) {
  const std::size_t n = samples.size();
  if (n < 3 || n > 5000)
    throw TestInapplicableError("Shapiro-Wilk needs 3 <= n <= 5000 samples (got " + std::to_string(n) + ")");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double range = x.back() - x.front();
  if (!(range > 1e-19 * std::max(1.0, std::abs(x.front()))))
    throw TestInapplicableError("Shapiro-Wilk is undefined for a constant sample");

  const auto half_a = shapiro_wilk_coefficients(n);
  // W is the squared correlation between the ordered sample and the full
  // antisymmetric coefficient vector; 1 - W is formed directly for accuracy.
  std::vector<double> a(n, 0.0);
  for (std::size_t i = 0; i < half_a.size(); ++i) {
    a[n - 1 - i] = half_a[i];
    a[i] = -half_a[i];
  }
  double xbar = 0.0, abar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xbar += x[i] / range;
    abar += a[i];
  }
  xbar /= static_cast<double>(n);
  abar /= static_cast<double>(n);
  double ssa = 0.0, ssx = 0.0, sax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - abar, dx = x[i] / range - xbar;
    ssa += da * da;
    ssx += dx * dx;
    sax += da * dx;
  }
  const double ssassx = std::sqrt(ssa * ssx);
  const double w1 = std::max(0.0, (ssassx - sax) * (ssassx + sax) / (ssa * ssx));
  const double w = 1.0 - w1;

  if (n == 3) {
    constexpr double pi6 = 6.0 / std::numbers::pi;
    constexpr double stqr = std::numbers::pi / 3.0;
    return detail::finish(w, 0.0, pi6 * (std::asin(std::sqrt(w)) - stqr));
  }

  static constexpr double c3[] = {0.5440, -0.39978, 0.025054, -6.714e-4};
  static constexpr double c4[] = {1.3822, -0.77857, 0.062767, -0.0020322};
  static constexpr double c5[] = {-1.5861, -0.31082, -0.083751, 0.0038915};
  static constexpr double c6[] = {-0.4803, -0.082676, 0.0030302};
  static constexpr double g[] = {-2.273, 0.459};
  constexpr double kTiny = 1e-19;

  if (w1 <= 0.0) return detail::finish(w, 0.0, 1.0);
  double y = std::log(w1);
  const double an = static_cast<double>(n);
  double m, s;
  if (n <= 11) {
    const double gamma = detail::poly(g, an);
    if (y >= gamma) return detail::finish(w, 0.0, kTiny);
    y = -std::log(gamma - y);
    m = detail::poly(c3, an);
    s = std::exp(detail::poly(c4, an));
  } else {
    const double ln = std::log(an);
    m = detail::poly(c5, ln);
    s = std::exp(detail::poly(c6, ln));
  }
  return detail::finish(w, 0.0, detail::normal_upper_tail((y - m) / s));
}

namespace detail {

struct MeanVar {
  double mean;
  double var;
  double n;
};

inline MeanVar mean_var(std::span<const double> xs) {
  const auto s = summarize(xs);
  return {s.mean, s.sd * s.sd, static_cast<double>(s.count)};
}

inline void check_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2)
    throw TestInapplicableError("t-test needs at least 2 samples per group (got " + std::to_string(a.size()) +
                                " and " + std::to_string(b.size()) + ")");
}

}  // namespace detail

// Welch's unequal-variance t-test, two-sided.
inline TestReport welch_t_test(std::span<const double> a, std::span<const double> b) {
  detail::check_two_sample(a, b);
  const auto ma = detail::mean_var(a), mb = detail::mean_var(b);
  if (ma.var == 0.0 && mb.var == 0.0) throw TestInapplicableError("t-test is undefined when both samples are constant");
  const double va = ma.var / ma.n, vb = mb.var / mb.n;
  const double se2 = va + vb;
  const double t = (ma.mean - mb.mean) / std::sqrt(se2);
  const double df = se2 * se2 / (va * va / (ma.n - 1.0) + vb * vb / (mb.n - 1.0));
  return detail::finish(t, df, detail::two_sided_t_p(t, df));
}

// Student's pooled-variance t-test, two-sided.
inline TestReport student_t_test(std::span<const double> a, std::span<const double> b) {
  detail::check_two_sample(a, b);
  const auto ma = detail::mean_var(a), mb = detail::mean_var(b);
  if (ma.var == 0.0 && mb.var == 0.0) throw TestInapplicableError("t-test is undefined when both samples are constant");
  const double df = ma.n + mb.n - 2.0;
  const double pooled = ((ma.n - 1.0) * ma.var + (mb.n - 1.0) * mb.var) / df;
  const double t = (ma.mean - mb.mean) / std::sqrt(pooled * (1.0 / ma.n + 1.0 / mb.n));
  return detail::finish(t, df, detail::two_sided_t_p(t, df));
}

}  // namespace nanet
