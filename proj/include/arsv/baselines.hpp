#pragma once

#include <cmath>

#include "arsv/lrm.hpp"
#include "arsv/model.hpp"
#include "arsv/stats.hpp"

namespace arsv {

struct BsParams {
  double vol_ann = 0.0;
  double rate_ann = 0.0;
  double steps_per_year = 252.0;

  static BsParams from(const ModelParams& p) {
    const auto m = stationary_moments(p);
    return {m.annualized_vol, 252.0 * p.r, 252.0};
  }

  void validate() const {
    if (!(vol_ann > 0.0)) throw std::invalid_argument("BsParams: vol > 0");
  }
};

namespace detail {
struct BsD1D2 {
  double d1, d2, tau;
};
inline BsD1D2 bs_d1d2(double s, double k, double tau_steps, const BsParams& b) {
  const double tau = tau_steps / b.steps_per_year;
  const double sq = b.vol_ann * std::sqrt(tau);
  const double d1 =
      (std::log(s / k) + (b.rate_ann + 0.5 * b.vol_ann * b.vol_ann) * tau) / sq;
  return {d1, d1 - sq, tau};
}
}  // namespace detail

// At expiry the at-the-money delta convention is 0 (option treated as not
// exercised on equality).
inline double bs_delta(double s, double k, double tau_steps, const BsParams& b) {
  b.validate();
  if (!(s > 0.0) || !(k > 0.0))
    throw std::invalid_argument("bs_delta: s, k > 0");
  if (tau_steps <= 0.0) return s > k ? 1.0 : 0.0;
  return norm_cdf(detail::bs_d1d2(s, k, tau_steps, b).d1);
}

inline double bs_price(double s, double k, double tau_steps, const BsParams& b) {
  b.validate();
  if (!(s > 0.0) || !(k > 0.0))
    throw std::invalid_argument("bs_price: s, k > 0");
  if (tau_steps <= 0.0) return std::max(s - k, 0.0);
  const auto d = detail::bs_d1d2(s, k, tau_steps, b);
  return s * norm_cdf(d.d1) - k * std::exp(-b.rate_ann * d.tau) * norm_cdf(d.d2);
}

inline double bs_put_price(double s, double k, double tau_steps,
                           const BsParams& b) {
  b.validate();
  if (tau_steps <= 0.0) return std::max(k - s, 0.0);
  const auto d = detail::bs_d1d2(s, k, tau_steps, b);
  return k * std::exp(-b.rate_ann * d.tau) * norm_cdf(-d.d2) - s * norm_cdf(-d.d1);
}

// Duan's sensitivity hedge under the configured pricing kernel:
// e^{-r(T-t)} E^Q[(S_T / s_t) 1_{S_T >= K}], evaluated on the same weighted
// sub-simulation as the LRM quote.
inline double duan_delta(const OptionSpec& option, int t, double s_t,
                         double b_state, const ModelParams& p,
                         const QuoteConfig& cfg, RngStream& rng) {
  return lrm_quote(option, t, s_t, b_state, p, cfg, rng).duan_ratio;
}

}  // namespace arsv
