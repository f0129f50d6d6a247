#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "arsv/model.hpp"

namespace arsv {

enum class FilterMethod { kalman, hlik };

inline const char* to_string(FilterMethod m) {
  return m == FilterMethod::kalman ? "kalman" : "hlik";
}

// Constants of the log-abs-return state-space form
//   l_t = L_t + xi_t,  (L_t - alpha_k) = phi (L_{t-1} - alpha_k) + eta_t,
// where l_t = log|y_t - r|, L_t = log sigma_t, xi_t = log|eps_t| treated as
// Gaussian with mean mu_xi and variance pi^2/8, eta_t = w_t / 2.
struct KalmanConstants {
  double mu_xi = -0.63518;
  double var_xi = 3.14159265358979323846 * 3.14159265358979323846 / 8.0;
  double alpha_k = 0.0;
  double phi = 0.0;
  double var_eta = 0.0;

  static KalmanConstants from(const ModelParams& p) {
    p.validate();
    KalmanConstants k;
    k.alpha_k = p.gamma / (2.0 * (1.0 - p.phi));
    k.phi = p.phi;
    k.var_eta = 0.25 * p.sigma_w * p.sigma_w;
    return k;
  }
};

// Steady-state one-step-ahead (predicted) state variance of the filter.
inline double kalman_steady_predicted_var(const KalmanConstants& k) {
  const double c = k.var_xi * (1.0 - k.phi * k.phi) - k.var_eta;
  return 0.5 * (-c + std::sqrt(c * c + 4.0 * k.var_eta * k.var_xi));
}

inline double kalman_steady_updated_var(const KalmanConstants& k) {
  const double p = kalman_steady_predicted_var(k);
  return p * k.var_xi / (p + k.var_xi);
}

// Scalar Kalman filter on L_t = log sigma_t. The state held is the
// predicted distribution of L_t given observations up to t-1, so
// sigma_hat() is predictable by construction.
class KalmanFilter {
 public:
  KalmanFilter(const KalmanConstants& k, double prior_mean, double prior_var,
               double abs_return_floor = 1e-12)
      : k_(k), mean_(prior_mean), var_(prior_var), floor_(abs_return_floor) {}

  // Stationary prior N(alpha_k, var_b/4).
  static KalmanFilter stationary_prior(const ModelParams& p) {
    const auto k = KalmanConstants::from(p);
    return KalmanFilter(k, k.alpha_k, 0.25 * p.stationary_var_b());
  }

  // Continuation from a scalar log-variance estimate at a rebalance time:
  // b_state/2 is taken as the updated state mean; the updated variance is
  // the steady-state posterior (the exact stationary prior at the origin,
  // where no observation has been made yet).
  static KalmanFilter from_scalar_state(const ModelParams& p, double b_state,
                                        bool at_origin) {
    const auto k = KalmanConstants::from(p);
    const double uvar =
        at_origin ? 0.25 * p.stationary_var_b() : kalman_steady_updated_var(k);
    KalmanFilter f(k, 0.0, 0.0);
    f.predict_from_updated(0.5 * b_state, uvar);
    return f;
  }

  double sigma_hat() const { return std::exp(mean_); }
  double predicted_mean() const { return mean_; }
  double predicted_var() const { return var_; }
  long clamped_observations() const { return clamped_; }

  // Absorb the centered return y_t - r and move the state to t+1.
  void observe(double centered_return) {
    double a = std::fabs(centered_return);
    if (a < floor_) {
      a = floor_;
      ++clamped_;
    }
    const double l = std::log(a);
    const double denom = var_ + k_.var_xi;
    const double gain = denom > 0.0 ? var_ / denom : 0.0;
    const double upd_mean = mean_ + gain * (l - (mean_ + k_.mu_xi));
    const double upd_var = (1.0 - gain) * var_;
    predict_from_updated(upd_mean, upd_var);
  }

 private:
  void predict_from_updated(double upd_mean, double upd_var) {
    mean_ = k_.alpha_k + k_.phi * (upd_mean - k_.alpha_k);
    var_ = k_.phi * k_.phi * upd_var + k_.var_eta;
  }

  KalmanConstants k_;
  double mean_;
  double var_;
  double floor_;
  long clamped_ = 0;
};

// Solves argmin_b { z^2 e^{-b} + b + (1/sigma_w^2) (b - b_pred)^2 }.
// The objective is strictly convex; Newton on its derivative with a
// bisection safeguard on [b_pred - 40, b_pred + 40].
inline double hlik_update(const ModelParams& p, double z, double b_pred,
                          double tol = 1e-10, int max_iter = 100) {
  if (!(p.sigma_w > 0.0))
    throw std::invalid_argument("hlik_update: sigma_w > 0 required");
  const double z2 = z * z;
  const double w2inv = 2.0 / (p.sigma_w * p.sigma_w);
  auto grad = [&](double b) { return -z2 * std::exp(-b) + 1.0 + w2inv * (b - b_pred); };

  double lo = b_pred - 40.0;
  double hi = b_pred + 40.0;
  while (grad(lo) > 0.0) lo -= 40.0;   // cheap widening; effectively never taken
  while (grad(hi) < 0.0) hi += 40.0;
  double b = b_pred;
  for (int it = 0; it < max_iter; ++it) {
    const double g = grad(b);
    if (std::fabs(g) < tol) return b;
    if (g > 0.0) hi = b; else lo = b;
    const double h = z2 * std::exp(-b) + w2inv;
    double next = b - g / h;
    if (!(next > lo) || !(next < hi)) next = 0.5 * (lo + hi);
    b = next;
  }
  if (std::fabs(grad(b)) < 1e3 * tol) return b;
  throw numerical_error("hlik_update: Newton did not converge, last iterate " +
                        std::to_string(b));
}

// Hierarchical-likelihood prediction/update recursion on b_t = log sigma_t^2.
class HlikFilter {
 public:
  HlikFilter(const ModelParams& p, double b_updated)
      : p_(p), b_updated_(b_updated) {
    if (!(p.sigma_w > 0.0))
      throw std::invalid_argument("HlikFilter: sigma_w > 0 required");
  }

  static HlikFilter stationary_start(const ModelParams& p) {
    return HlikFilter(p, p.stationary_mean_b());
  }

  static HlikFilter from_scalar_state(const ModelParams& p, double b_state) {
    return HlikFilter(p, b_state);
  }

  double b_pred() const { return p_.gamma + p_.phi * b_updated_; }
  double b_updated() const { return b_updated_; }
  double sigma_hat() const { return std::exp(0.5 * b_pred()); }

  void observe(double centered_return) {
    b_updated_ = hlik_update(p_, centered_return, b_pred());
  }

 private:
  ModelParams p_;
  double b_updated_;
};

// Predictable one-step-ahead volatility estimates. sigma_hat[t-1] is the
// estimate of sigma_t and depends only on prices up to t-1.
struct VolForecastSeries {
  FilterMethod method = FilterMethod::kalman;
  std::vector<double> sigma_hat;
  std::vector<double> aux1;  // kalman: predicted state mean; hlik: b_pred
  std::vector<double> aux2;  // kalman: predicted state var;  hlik: b_updated
  long clamped_observations = 0;
};

namespace detail {
inline std::vector<double> returns_from_prices(const std::vector<double>& prices) {
  if (prices.size() < 1)
    throw std::invalid_argument("filter: price series must contain s0");
  std::vector<double> y(prices.size() - 1);
  for (std::size_t t = 0; t + 1 < prices.size(); ++t) {
    if (!(prices[t] > 0.0) || !(prices[t + 1] > 0.0))
      throw std::invalid_argument("filter: prices must be positive");
    y[t] = std::log(prices[t + 1] / prices[t]);
  }
  return y;
}
}  // namespace detail

inline VolForecastSeries kalman_filter(const ModelParams& p,
                                       const std::vector<double>& prices) {
  const auto y = detail::returns_from_prices(prices);
  auto f = KalmanFilter::stationary_prior(p);
  VolForecastSeries out;
  out.method = FilterMethod::kalman;
  out.sigma_hat.reserve(y.size());
  out.aux1.reserve(y.size());
  out.aux2.reserve(y.size());
  for (double yt : y) {
    out.aux1.push_back(f.predicted_mean());
    out.aux2.push_back(f.predicted_var());
    out.sigma_hat.push_back(f.sigma_hat());
    f.observe(yt - p.r);
  }
  out.clamped_observations = f.clamped_observations();
  return out;
}

inline VolForecastSeries hlik_filter(const ModelParams& p,
                                     const std::vector<double>& prices) {
  const auto y = detail::returns_from_prices(prices);
  auto f = HlikFilter::stationary_start(p);
  VolForecastSeries out;
  out.method = FilterMethod::hlik;
  out.sigma_hat.reserve(y.size());
  out.aux1.reserve(y.size());
  out.aux2.reserve(y.size());
  for (double yt : y) {
    out.aux1.push_back(f.b_pred());
    out.sigma_hat.push_back(f.sigma_hat());
    f.observe(yt - p.r);
    out.aux2.push_back(f.b_updated());
  }
  return out;
}

inline VolForecastSeries run_filter(FilterMethod m, const ModelParams& p,
                                    const std::vector<double>& prices) {
  return m == FilterMethod::kalman ? kalman_filter(p, prices)
                                   : hlik_filter(p, prices);
}

}  // namespace arsv
