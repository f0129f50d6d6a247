#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "arsv/filters.hpp"
#include "arsv/kernels.hpp"
#include "arsv/model.hpp"
#include "arsv/rng.hpp"

namespace arsv {

struct OptionSpec {
  double strike = 0.0;
  int maturity = 0;  // steps
  double r = 0.0;    // per step, constant

  void validate() const {
    if (!(strike > 0.0)) throw std::invalid_argument("OptionSpec: strike > 0");
    if (maturity < 1) throw std::invalid_argument("OptionSpec: maturity >= 1");
  }
  double payoff(double s_T) const { return std::max(s_T - strike, 0.0); }
};

struct HedgeQuote {
  double value = 0.0;      // V_t
  double ratio = 0.0;      // xi_{t+j}
  double denom = 0.0;      // Sigma^2_{t+j} estimate
  double duan_ratio = 0.0; // sensitivity hedge under the same kernel
  int n_effective = 0;
  double censored_fraction = 0.0;
  bool low_sample = false;
};

enum class ErrorConvention { discounted, terminal };

struct QuoteConfig {
  Measure measure = Measure::mmm;
  FilterMethod filter = FilterMethod::kalman;
  int hedge_interval = 1;  // j
  int n_mc = 2500;
  bool center_payoff = true;      // control-variate numerator (see README)
  bool alt_sum_discount = false;  // alternative ratio discount reading
  int min_effective = 50;
  double denom_floor_factor = 1e-14;
};

namespace detail {

// Per-sub-path terminal records for one maturity.
struct MaturitySlice {
  int maturity = 0;
  std::vector<double> weight_to_maturity;  // F = prod N over (t, T]
  std::vector<double> price_at_maturity;
  std::vector<unsigned char> censored;     // some partial product <= 0
};

// Records of one bundle of sub-simulations started at (t, s_t, b_state).
struct SubSimRecords {
  int t = 0;
  double s_t = 0.0;
  std::vector<double> delta;            // S_{t+j} e^{-rj} - s_t
  std::vector<double> weight_to_j;      // W = prod N over (t, t+j]
  std::vector<unsigned char> censored_j;
  std::vector<MaturitySlice> slices;    // one per requested maturity
};

// Shared estimator assembly: value, ratio (with optional control-variate
// centering of the payoff), the variance-form denominator, and the Duan
// sensitivity ratio, all over censoring-surviving sub-paths.
inline HedgeQuote assemble_quote(const SubSimRecords& rec,
                                 const MaturitySlice& slice, double strike,
                                 double r, const QuoteConfig& cfg) {
  const int n = static_cast<int>(rec.delta.size());
  const double disc = std::exp(-r * (slice.maturity - rec.t));
  long kept = 0;
  double sum_fh = 0.0;
  for (int i = 0; i < n; ++i) {
    if (slice.censored[i]) continue;
    ++kept;
    sum_fh += slice.weight_to_maturity[i] *
              std::max(slice.price_at_maturity[i] - strike, 0.0);
  }
  if (kept == 0)
    throw numerical_error("lrm quote: all sub-paths censored");
  HedgeQuote q;
  q.n_effective = static_cast<int>(kept);
  q.censored_fraction = 1.0 - static_cast<double>(kept) / n;
  q.low_sample = kept < cfg.min_effective;
  q.value = disc * sum_fh / kept;

  const double center = cfg.center_payoff ? q.value : 0.0;
  double sum_num = 0.0, sum_den = 0.0, sum_duan = 0.0;
  for (int i = 0; i < n; ++i) {
    if (slice.censored[i]) continue;
    const double h = std::max(slice.price_at_maturity[i] - strike, 0.0);
    const double d = rec.delta[i];
    sum_num += slice.weight_to_maturity[i] * (disc * h - center) * d;
    sum_den += rec.weight_to_j[i] * d * d;
    if (slice.price_at_maturity[i] >= strike)
      sum_duan += slice.weight_to_maturity[i] * slice.price_at_maturity[i];
  }
  q.denom = sum_den / kept;
  if (!(q.denom > cfg.denom_floor_factor * rec.s_t * rec.s_t))
    throw numerical_error("lrm quote: degenerate denominator");
  double ratio = (sum_num / kept) / q.denom;
  if (cfg.alt_sum_discount) ratio *= std::exp(-2.0 * r * rec.t);
  q.ratio = ratio;
  q.duan_ratio = disc * (sum_duan / kept) / rec.s_t;
  return q;
}

// Simulates cfg.n_mc sub-paths from (s_t, b_state) out to max(maturities),
// continuing the chosen filter along each sub-path for the kernel weights.
// sigma_hat at sub-step u is in place before y_u is observed.
inline SubSimRecords run_subsim(const ModelParams& p, int t, double s_t,
                                double b_state,
                                const std::vector<int>& maturities,
                                const QuoteConfig& cfg, RngStream& rng) {
  const int j = cfg.hedge_interval;
  const int t_max = *std::max_element(maturities.begin(), maturities.end());
  const int nsteps = t_max - t;
  if (nsteps < j)
    throw std::invalid_argument("lrm quote: need t + j <= maturity");

  SubSimRecords rec;
  rec.t = t;
  rec.s_t = s_t;
  rec.delta.resize(cfg.n_mc);
  rec.weight_to_j.resize(cfg.n_mc);
  rec.censored_j.assign(cfg.n_mc, 0);
  rec.slices.resize(maturities.size());
  for (std::size_t m = 0; m < maturities.size(); ++m) {
    rec.slices[m].maturity = maturities[m];
    rec.slices[m].weight_to_maturity.resize(cfg.n_mc);
    rec.slices[m].price_at_maturity.resize(cfg.n_mc);
    rec.slices[m].censored.assign(cfg.n_mc, 0);
  }

  const double disc_j = std::exp(-p.r * j);
  for (int i = 0; i < cfg.n_mc; ++i) {
    KalmanFilter kf = cfg.filter == FilterMethod::kalman
                          ? KalmanFilter::from_scalar_state(p, b_state, t == 0)
                          : KalmanFilter(KalmanConstants{}, 0.0, 0.0);
    HlikFilter hf = cfg.filter == FilterMethod::hlik
                        ? HlikFilter::from_scalar_state(p, b_state)
                        : HlikFilter(ModelParams{0, 0, 0, 1}, 0.0);
    double b = b_state;
    double s = s_t;
    double prefix = 1.0;     // mmm: running product
    double log_prefix = 0.0; // mc: running log-product
    bool neg = false;
    std::size_t m_next = 0;
    for (int k = 1; k <= nsteps; ++k) {
      const double sigma_hat = cfg.filter == FilterMethod::kalman
                                   ? kf.sigma_hat()
                                   : hf.sigma_hat();
      const double wt = rng.next_normal();
      const double et = rng.next_normal();
      b = p.gamma + p.phi * b + p.sigma_w * wt;
      const double sigma = std::exp(0.5 * b);
      const double y = p.r + sigma * et;
      s *= std::exp(y);
      const double cr = y - p.r;
      if (cfg.measure == Measure::mmm) {
        prefix *= mmm_step_weight(sigma_hat, cr);
        if (prefix <= 0.0) neg = true;
      } else {
        log_prefix += mc_step_log_weight(sigma_hat, cr);
      }
      if (k == j) {
        rec.delta[i] = s * disc_j - s_t;
        rec.weight_to_j[i] =
            cfg.measure == Measure::mmm ? prefix : std::exp(log_prefix);
        rec.censored_j[i] = neg ? 1 : 0;
      }
      while (m_next < maturities.size() && t + k == maturities[m_next]) {
        auto& sl = rec.slices[m_next];
        sl.weight_to_maturity[i] =
            cfg.measure == Measure::mmm ? prefix : std::exp(log_prefix);
        sl.price_at_maturity[i] = s;
        sl.censored[i] = neg ? 1 : 0;
        ++m_next;
      }
      if (cfg.filter == FilterMethod::kalman)
        kf.observe(cr);
      else
        hf.observe(cr);
    }
  }
  return rec;
}

}  // namespace detail

// Local-risk-minimizing quote at time t for one option, from the filtered
// log-variance state b_state. At t == maturity the payoff is exact and no
// simulation runs.
inline HedgeQuote lrm_quote(const OptionSpec& option, int t, double s_t,
                            double b_state, const ModelParams& p,
                            const QuoteConfig& cfg, RngStream& rng) {
  option.validate();
  p.validate();
  if (t == option.maturity) {
    HedgeQuote q;
    q.value = option.payoff(s_t);
    return q;
  }
  if (t + cfg.hedge_interval > option.maturity)
    throw std::invalid_argument("lrm_quote: t + j must not exceed maturity");
  if (cfg.n_mc < 100) throw std::invalid_argument("lrm_quote: n_mc >= 100");
  if (!std::isfinite(b_state))
    throw std::invalid_argument("lrm_quote: b_state must be finite");
  const std::vector<int> mats = {option.maturity};
  const auto rec = detail::run_subsim(p, t, s_t, b_state, mats, cfg, rng);
  return detail::assemble_quote(rec, rec.slices[0], option.strike, p.r, cfg);
}

inline HedgeQuote lrm_quote(const OptionSpec& option, int t, double s_t,
                            double b_state, const ModelParams& p,
                            const QuoteConfig& cfg, std::uint64_t seed,
                            std::uint64_t stream_id) {
  RngStream rng(seed, stream_id);
  return lrm_quote(option, t, s_t, b_state, p, cfg, rng);
}

// One option replication along a realized price path: quotes at the
// rebalance grid, the self-financing gains they generate, and the terminal
// square hedging error. Processes are stored discounted to time zero.
struct HedgeRun {
  Measure measure = Measure::mmm;
  FilterMethod filter = FilterMethod::kalman;
  int hedge_interval = 1;
  bool duan = false;
  std::vector<int> rebalance_times;  // 0, j, ..., T (grid incl. maturity)
  std::vector<double> ratios;        // held over (grid[i], grid[i+1]]
  std::vector<double> values;        // discounted quote values on the grid
  std::vector<double> gains;         // discounted gains on the grid
  std::vector<double> costs;         // values - gains
  double terminal_sq_error = 0.0;
  double terminal_sq_error_terminal_units = 0.0;
  int low_sample_quotes = 0;
  double max_censored_fraction = 0.0;
};

// duan=false hedges with the LRM ratio recomputed every j steps; duan=true
// hedges with the Duan sensitivity ratio, quoted once at inception and held
// (duan_rebalance recomputes it on the grid instead).
inline HedgeRun hedge_path(const ModelParams& p, const OptionSpec& option,
                           const std::vector<double>& prices,
                           const QuoteConfig& cfg, std::uint64_t seed,
                           bool duan = false, bool duan_rebalance = false,
                           std::uint32_t path_index = 0,
                           std::uint32_t method_id = 0) {
  option.validate();
  const int T = option.maturity;
  const int j = cfg.hedge_interval;
  if (T % j != 0)
    throw std::invalid_argument("hedge_path: maturity must be divisible by j");
  if (static_cast<int>(prices.size()) < T + 1)
    throw std::invalid_argument("hedge_path: price series shorter than maturity");

  const auto forecasts = run_filter(cfg.filter, p, prices);
  HedgeRun run;
  run.measure = cfg.measure;
  run.filter = cfg.filter;
  run.hedge_interval = j;
  run.duan = duan;

  for (int t = 0; t <= T; t += j) run.rebalance_times.push_back(t);
  const int k = T / j;
  run.ratios.resize(k);
  run.values.resize(k + 1);
  run.gains.assign(k + 1, 0.0);

  double v0 = 0.0;
  for (int m = 0; m < k; ++m) {
    const int t = m * j;
    double ratio;
    if (duan && !duan_rebalance && m > 0) {
      ratio = run.ratios[0];
      run.values[m] = run.values[m - 1];  // carried for reporting only
    } else {
      const double b_state =
          t == 0 ? p.stationary_mean_b() : 2.0 * std::log(forecasts.sigma_hat[t - 1]);
      RngStream rng(seed, make_stream_id(StreamKind::inner_mc, path_index, t,
                                         method_id));
      const auto q = lrm_quote(option, t, prices[t], b_state, p, cfg, rng);
      ratio = duan ? q.duan_ratio : q.ratio;
      if (q.low_sample) ++run.low_sample_quotes;
      run.max_censored_fraction =
          std::max(run.max_censored_fraction, q.censored_fraction);
      run.values[m] = q.value * std::exp(-p.r * t);
      if (t == 0) v0 = q.value;
    }
    run.ratios[m] = ratio;
    const double s_tilde_lo = prices[t] * std::exp(-p.r * t);
    const double s_tilde_hi = prices[t + j] * std::exp(-p.r * (t + j));
    run.gains[m + 1] = run.gains[m] + ratio * (s_tilde_hi - s_tilde_lo);
  }
  const double h_tilde = option.payoff(prices[T]) * std::exp(-p.r * T);
  run.values[k] = h_tilde;
  run.costs.resize(k + 1);
  for (int m = 0; m <= k; ++m) run.costs[m] = run.values[m] - run.gains[m];
  const double e = h_tilde - v0 - run.gains[k];
  run.terminal_sq_error = e * e;
  run.terminal_sq_error_terminal_units = std::exp(2.0 * p.r * T) * e * e;
  return run;
}

}  // namespace arsv
