#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace arsv {

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * 3.14159265358979323846);
}

inline double norm_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

inline double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean: empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

inline double sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) throw std::invalid_argument("variance: need >= 2 points");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double standard_error(const std::vector<double>& x) {
  return std::sqrt(sample_variance(x) / static_cast<double>(x.size()));
}

// Excess-free sample kurtosis: m4 / m2^2.
inline double sample_kurtosis(const std::vector<double>& x) {
  const double m = mean(x);
  double m2 = 0.0, m4 = 0.0;
  for (double v : x) {
    const double d = v - m;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m2 /= static_cast<double>(x.size());
  m4 /= static_cast<double>(x.size());
  return m4 / (m2 * m2);
}

inline double sample_autocorr(const std::vector<double>& x, std::size_t lag) {
  if (x.size() <= lag + 1) throw std::invalid_argument("acf: series too short");
  const double m = mean(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - m;
    den += d * d;
    if (i + lag < x.size()) num += d * (x[i + lag] - m);
  }
  return num / den;
}

struct PairedTest {
  double mean_diff = 0.0;
  double t_stat = 0.0;          // paired t on raw differences (reported)
  double wilcoxon_z = 0.0;      // signed-rank normal approximation
  double wilcoxon_p_greater = 1.0;  // H1: differences shifted > 0
  std::size_t n = 0;
};

// One-sided paired Wilcoxon signed-rank test (normal approximation with
// midranks and tie correction, zeros dropped). Returns the p-value for
// the alternative "a tends to exceed b".
inline PairedTest paired_one_sided(const std::vector<double>& a,
                                   const std::vector<double>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("paired_one_sided: size mismatch");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];

  PairedTest out;
  out.n = d.size();
  out.mean_diff = mean(d);
  const double se = standard_error(d);
  out.t_stat = se > 0 ? out.mean_diff / se : 0.0;

  std::vector<double> nz;
  nz.reserve(d.size());
  for (double v : d)
    if (v != 0.0) nz.push_back(v);
  const std::size_t n = nz.size();
  if (n < 10) {
    out.wilcoxon_p_greater = 1.0;
    return out;
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return std::fabs(nz[i]) < std::fabs(nz[j]);
  });
  std::vector<double> rank(n);
  double tie_correction = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n &&
           std::fabs(nz[idx[j + 1]]) == std::fabs(nz[idx[i]]))
      ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = mid;
    const double t = static_cast<double>(j - i + 1);
    tie_correction += t * t * t - t;
    i = j + 1;
  }
  double w_plus = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    if (nz[i] > 0.0) w_plus += rank[i];
  const double nn = static_cast<double>(n);
  const double mu = nn * (nn + 1.0) / 4.0;
  const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 -
                     tie_correction / 48.0;
  const double z = (w_plus - mu - 0.5) / std::sqrt(var);
  out.wilcoxon_z = z;
  out.wilcoxon_p_greater = 1.0 - norm_cdf(z);
  return out;
}

// Upper critical value of Student's t via Cornish-Fisher in 1/df; fine for
// the df >= 20 regime this project uses t statistics in.
inline double t_critical_95(std::size_t df) {
  const double z = 1.6448536269514722;
  const double v = static_cast<double>(df);
  const double z3 = z * z * z;
  const double z5 = z3 * z * z;
  return z + (z3 + z) / (4.0 * v) +
         (5.0 * z5 + 16.0 * z3 + 3.0 * z) / (96.0 * v * v);
}

}  // namespace arsv
