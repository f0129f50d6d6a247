#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "arsv/filters.hpp"
#include "arsv/model.hpp"

namespace arsv {

enum class Measure { mmm, mc };

inline const char* to_string(Measure m) { return m == Measure::mmm ? "mmm" : "mc"; }

// Minimal-martingale-measure per-step factor
//   N = 1 + (e^K - 1)(e^{cr} - e^K) / (e^{2K} - e^{K2}),
// with the conditional cumulants approximated by K = sigma_hat^2/2 and
// K2 = 2 sigma_hat^2, and cr the realized centered return y - r. May be
// negative for extreme positive cr.
inline double mmm_step_weight(double sigma_hat, double centered_return) {
  if (!(sigma_hat > 0.0))
    throw numerical_error("mmm_step_weight: degenerate volatility estimate");
  const double u = std::exp(0.5 * sigma_hat * sigma_hat);  // e^K
  const double u2 = u * u;
  const double denom = u2 - u2 * u2;  // e^{2K} - e^{K2}, negative
  return 1.0 + (u - 1.0) * (std::exp(centered_return) - u) / denom;
}

// Mean-correcting per-step log-factor. With rho = sigma_hat/2 and
// eps_hat = cr/sigma_hat, log N = -rho eps_hat - rho^2/2 = -cr/2 - sigma_hat^2/8.
inline double mc_step_log_weight(double sigma_hat, double centered_return) {
  if (!(sigma_hat > 0.0))
    throw numerical_error("mc_step_log_weight: degenerate volatility estimate");
  return -0.5 * centered_return - 0.125 * sigma_hat * sigma_hat;
}

inline double mc_step_weight(double sigma_hat, double centered_return) {
  return std::exp(mc_step_log_weight(sigma_hat, centered_return));
}

// Per-step stochastic discount factors N_t and their running products
// Z_t = prod_{k<=t} N_k for one path.
struct KernelWeights {
  Measure measure = Measure::mc;
  std::vector<double> n;
  std::vector<double> z;
  bool negative_flag = false;  // some Z_t <= 0 (possible under mmm only)

  int horizon() const { return static_cast<int>(n.size()); }

  // F_t = prod_{i=t}^T N_i, 1-based from_step.
  double tail_product(int from_step) const {
    if (from_step < 1 || from_step > horizon())
      throw std::invalid_argument("tail_product: step out of range");
    if (measure == Measure::mc) {
      double acc = 0.0;
      for (int i = from_step - 1; i < horizon(); ++i) acc += std::log(n[i]);
      return std::exp(acc);
    }
    double acc = 1.0;
    for (int i = from_step - 1; i < horizon(); ++i) acc *= n[i];
    return acc;
  }
};

namespace detail {
inline void check_weight_inputs(const MarketPath& path,
                                const VolForecastSeries& forecasts) {
  if (static_cast<int>(forecasts.sigma_hat.size()) != path.horizon())
    throw std::invalid_argument("kernel weights: forecast/path length mismatch");
}
}  // namespace detail

inline KernelWeights mmm_weights(const MarketPath& path,
                                 const VolForecastSeries& forecasts,
                                 double r) {
  detail::check_weight_inputs(path, forecasts);
  KernelWeights out;
  out.measure = Measure::mmm;
  out.n.resize(path.horizon());
  out.z.resize(path.horizon());
  double z = 1.0;
  for (int t = 0; t < path.horizon(); ++t) {
    out.n[t] = mmm_step_weight(forecasts.sigma_hat[t], path.y[t] - r);
    z *= out.n[t];
    out.z[t] = z;
    if (z <= 0.0) out.negative_flag = true;
  }
  return out;
}

// Q_mc factors are strictly positive; products accumulate in log space.
inline KernelWeights mc_weights(const MarketPath& path,
                                const VolForecastSeries& forecasts,
                                double r) {
  detail::check_weight_inputs(path, forecasts);
  KernelWeights out;
  out.measure = Measure::mc;
  out.n.resize(path.horizon());
  out.z.resize(path.horizon());
  double log_z = 0.0;
  for (int t = 0; t < path.horizon(); ++t) {
    const double ln = mc_step_log_weight(forecasts.sigma_hat[t], path.y[t] - r);
    out.n[t] = std::exp(ln);
    log_z += ln;
    out.z[t] = std::exp(log_z);
  }
  return out;
}

inline KernelWeights kernel_weights(Measure m, const MarketPath& path,
                                    const VolForecastSeries& forecasts,
                                    double r) {
  return m == Measure::mmm ? mmm_weights(path, forecasts, r)
                           : mc_weights(path, forecasts, r);
}

}  // namespace arsv
