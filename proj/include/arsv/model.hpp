#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arsv/rng.hpp"

namespace arsv {

// Raised when an iteration or estimator degenerates (as opposed to a
// caller passing parameters outside their domain).
struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// Auto-regressive stochastic volatility model
//   y_t = r + sigma_t eps_t,   b_t = gamma + phi b_{t-1} + w_t,
// with b_t = log sigma_t^2, eps ~ N(0,1), w ~ N(0, sigma_w^2), independent.
struct ModelParams {
  double r = 0.0;        // per-step risk-free log-return
  double gamma = 0.0;    // AR intercept of log-variance
  double phi = 0.0;      // AR coefficient, |phi| < 1
  double sigma_w = 0.0;  // log-variance innovation std

  void validate() const {
    if (!(std::fabs(phi) < 1.0))
      throw std::invalid_argument("ModelParams: |phi| must be < 1");
    if (!(sigma_w >= 0.0))
      throw std::invalid_argument("ModelParams: sigma_w must be >= 0");
  }

  double stationary_mean_b() const { return gamma / (1.0 - phi); }
  double stationary_var_b() const {
    return sigma_w * sigma_w / (1.0 - phi * phi);
  }
};

struct StationaryMoments {
  double var_y = 0.0;
  double kurtosis_y = 0.0;
  double mean_b = 0.0;
  double var_b = 0.0;
  double annualized_vol = 0.0;  // sqrt(252 var_y), one step = one trading day
};

inline StationaryMoments stationary_moments(const ModelParams& p) {
  p.validate();
  StationaryMoments m;
  m.mean_b = p.stationary_mean_b();
  m.var_b = p.stationary_var_b();
  m.var_y = std::exp(m.mean_b + 0.5 * m.var_b);
  m.kurtosis_y = 3.0 * std::exp(m.var_b);
  m.annualized_vol = std::sqrt(252.0 * m.var_y);
  return m;
}

// Squared-return autocorrelation approximation, valid for small var_b
// and/or phi near one.
inline double acf_squared_approx(const ModelParams& p, int lag) {
  p.validate();
  if (lag < 1) throw std::invalid_argument("acf_squared_approx: lag >= 1");
  const double e = std::exp(p.stationary_var_b());
  return (e - 1.0) / (3.0 * e - 1.0) * std::pow(p.phi, lag);
}

// log E[e^{z eps}] for standard normal eps.
inline double gaussian_cumulant(double z) { return 0.5 * z * z; }

struct ConditionalPriceMoments {
  double mean_change = 0.0;
  double var_change = 0.0;
};

// Conditional mean/variance of the one-step discounted price change, with
// the conditional cumulants approximated as K(sigma) ~ sigma_hat^2/2 and
// K(2 sigma) ~ 2 sigma_hat^2.
inline ConditionalPriceMoments conditional_price_moments(double s_prev_disc,
                                                         double sigma_hat) {
  if (!(sigma_hat > 0.0))
    throw std::invalid_argument("conditional_price_moments: sigma_hat > 0");
  const double k1 = 0.5 * sigma_hat * sigma_hat;
  ConditionalPriceMoments out;
  out.mean_change = s_prev_disc * (std::exp(k1) - 1.0);
  out.var_change = s_prev_disc * s_prev_disc *
                   (std::exp(4.0 * k1) - std::exp(2.0 * k1));
  return out;
}

// One simulated trajectory. Sequences run t = 1..T (index t-1); prices
// additionally carry s[0] = s0.
struct MarketPath {
  double s0 = 0.0;
  std::vector<double> b;      // latent log-variance
  std::vector<double> sigma;  // exp(b/2)
  std::vector<double> y;      // log-returns
  std::vector<double> s;      // prices, length T+1
  std::vector<double> eps;    // return innovations
  std::vector<double> w;      // volatility innovations

  int horizon() const { return static_cast<int>(y.size()); }
  double discounted_price(int t, double r) const { return s[t] * std::exp(-r * t); }
};

// Simulates one path, consuming one (w, eps) normal pair per step from the
// given stream. b_init defaults to the stationary mean.
inline MarketPath simulate_path(const ModelParams& p, double s0, int horizon,
                                RngStream& rng,
                                std::optional<double> b_init = std::nullopt) {
  p.validate();
  if (horizon < 1) throw std::invalid_argument("simulate_path: horizon >= 1");
  if (!(s0 > 0.0)) throw std::invalid_argument("simulate_path: s0 > 0");
  MarketPath path;
  path.s0 = s0;
  path.b.resize(horizon);
  path.sigma.resize(horizon);
  path.y.resize(horizon);
  path.eps.resize(horizon);
  path.w.resize(horizon);
  path.s.resize(horizon + 1);
  path.s[0] = s0;
  double b_prev = b_init.value_or(p.stationary_mean_b());
  for (int t = 0; t < horizon; ++t) {
    const double wt = rng.next_normal();
    const double et = rng.next_normal();
    const double bt = p.gamma + p.phi * b_prev + p.sigma_w * wt;
    const double st = std::exp(0.5 * bt);
    path.b[t] = bt;
    path.sigma[t] = st;
    path.w[t] = wt;
    path.eps[t] = et;
    path.y[t] = p.r + st * et;
    path.s[t + 1] = path.s[t] * std::exp(path.y[t]);
    b_prev = bt;
  }
  return path;
}

// Path i draws from substream (seed, i): serial and parallel generation
// agree and individual paths can be regenerated in isolation.
inline std::vector<MarketPath> simulate_paths(
    const ModelParams& p, double s0, int horizon, int n_paths,
    std::uint64_t seed, std::optional<double> b_init = std::nullopt) {
  if (n_paths < 1) throw std::invalid_argument("simulate_paths: n_paths >= 1");
  std::vector<MarketPath> out;
  out.reserve(n_paths);
  for (int i = 0; i < n_paths; ++i) {
    RngStream rng(seed, make_stream_id(StreamKind::eval_path, i));
    out.push_back(simulate_path(p, s0, horizon, rng, b_init));
  }
  return out;
}

// Rebuilds the price sequence from (s0, eps, sigma) with the exact same
// floating-point operations as simulate_path.
inline std::vector<double> rebuild_prices(double s0,
                                          const std::vector<double>& eps,
                                          const std::vector<double>& sigma,
                                          double r) {
  if (eps.size() != sigma.size())
    throw std::invalid_argument("rebuild_prices: length mismatch");
  std::vector<double> s(eps.size() + 1);
  s[0] = s0;
  for (std::size_t t = 0; t < eps.size(); ++t) {
    const double yt = r + sigma[t] * eps[t];
    s[t + 1] = s[t] * std::exp(yt);
  }
  return s;
}

}  // namespace arsv
