#include "arsv/lrm.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "arsv/model.hpp"
#include "arsv/rng.hpp"
#include "arsv/stats.hpp"

using namespace arsv;

namespace {
const ModelParams kPaper{0.1 / 252.0, -0.821, 0.9, 0.675};

QuoteConfig quote_cfg(Measure m, int j = 1, int n_mc = 2500) {
  QuoteConfig c;
  c.measure = m;
  c.filter = FilterMethod::kalman;
  c.hedge_interval = j;
  c.n_mc = n_mc;
  return c;
}
}  // namespace

TEST(LrmQuote, TerminalQuoteIsExactPayoff) {
  const OptionSpec opt{95.0, 10, kPaper.r};
  RngStream rng(1, 1);
  const auto q = lrm_quote(opt, 10, 103.0, -8.0, kPaper, quote_cfg(Measure::mmm), rng);
  EXPECT_DOUBLE_EQ(q.value, 8.0);
  EXPECT_DOUBLE_EQ(q.ratio, 0.0);
}

TEST(LrmQuote, PreconditionsEnforced) {
  const OptionSpec opt{100.0, 10, kPaper.r};
  RngStream rng(1, 1);
  auto cfg = quote_cfg(Measure::mmm, 4);
  EXPECT_THROW(lrm_quote(opt, 8, 100.0, -8.0, kPaper, cfg, rng),
               std::invalid_argument);  // t + j > T
  cfg.n_mc = 50;
  EXPECT_THROW(lrm_quote(opt, 0, 100.0, -8.0, kPaper, cfg, rng),
               std::invalid_argument);
  cfg.n_mc = 500;
  EXPECT_THROW(lrm_quote(opt, 0, 100.0,
                         std::numeric_limits<double>::infinity(), kPaper, cfg, rng),
               std::invalid_argument);
}

TEST(LrmQuote, DeepInTheMoneyLimit) {
  // K -> 0: the call is the forward; value -> s_t and ratio -> 1
  const OptionSpec opt{0.05, 12, kPaper.r};
  for (auto m : {Measure::mmm, Measure::mc}) {
    RngStream rng(7, 3);
    const auto q = lrm_quote(opt, 0, 100.0, kPaper.stationary_mean_b(), kPaper,
                             quote_cfg(m, 1, 20000), rng);
    EXPECT_NEAR(q.value, 100.0 - 0.05 * std::exp(-kPaper.r * 12), 0.35) << to_string(m);
    EXPECT_NEAR(q.ratio, 1.0, 0.05) << to_string(m);
    EXPECT_NEAR(q.duan_ratio, 1.0, 0.01) << to_string(m);
  }
}

TEST(LrmQuote, ValueMonotoneAndConvexInStrike) {
  // common sub-paths across strikes (same seed) make this exact pathwise
  std::vector<double> strikes, values;
  for (double k = 80.0; k <= 120.0; k += 5.0) strikes.push_back(k);
  for (double k : strikes) {
    const OptionSpec opt{k, 10, kPaper.r};
    RngStream rng(11, 2);
    values.push_back(lrm_quote(opt, 0, 100.0, kPaper.stationary_mean_b(), kPaper,
                               quote_cfg(Measure::mc, 1, 2000), rng)
                         .value);
  }
  for (std::size_t i = 1; i < values.size(); ++i)
    EXPECT_LT(values[i], values[i - 1] + 1e-12);
  for (std::size_t i = 1; i + 1 < values.size(); ++i)
    EXPECT_GE(values[i + 1] - 2.0 * values[i] + values[i - 1], -1e-9);
}

TEST(LrmQuote, McValueBetweenIntrinsicAndSpot) {
  for (double k : {90.09, 100.0, 111.11}) {
    const OptionSpec opt{k, 12, kPaper.r};
    RngStream rng(13, 5);
    const auto q = lrm_quote(opt, 0, 100.0, kPaper.stationary_mean_b(), kPaper,
                             quote_cfg(Measure::mc, 1, 20000), rng);
    const double intrinsic = std::max(100.0 - k * std::exp(-kPaper.r * 12), 0.0);
    EXPECT_GT(q.value, intrinsic - 0.25) << k;
    EXPECT_LT(q.value, 100.0) << k;
  }
}

TEST(LrmQuote, JConsistencyAgainstIndependentRegressionEstimator) {
  // single hedge at inception (j = T): the quote ratio must equal the
  // regression-style estimator assembled independently from the same records
  const int T = 8;
  const OptionSpec opt{100.0, T, kPaper.r};
  auto cfg = quote_cfg(Measure::mc, T, 4000);
  const double b0 = kPaper.stationary_mean_b();

  RngStream rng_quote(17, 9);
  const auto q = lrm_quote(opt, 0, 100.0, b0, kPaper, cfg, rng_quote);

  RngStream rng_rec(17, 9);
  const auto rec =
      detail::run_subsim(kPaper, 0, 100.0, b0, {T}, cfg, rng_rec);
  const auto& sl = rec.slices[0];
  const double disc = std::exp(-kPaper.r * T);
  double v = 0.0;
  for (int i = 0; i < cfg.n_mc; ++i)
    v += sl.weight_to_maturity[i] * opt.payoff(sl.price_at_maturity[i]);
  v = disc * v / cfg.n_mc;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < cfg.n_mc; ++i) {
    const double h_tilde = disc * opt.payoff(sl.price_at_maturity[i]);
    num += sl.weight_to_maturity[i] * (h_tilde - v) * rec.delta[i];
    den += rec.weight_to_j[i] * rec.delta[i] * rec.delta[i];
  }
  EXPECT_NEAR(q.ratio, num / den, 1e-12 * std::fabs(num / den));
  EXPECT_NEAR(q.value, v, 1e-12 * v);
}

TEST(AssembleQuote, GuardsAndFlags) {
  detail::SubSimRecords rec;
  rec.t = 0;
  rec.s_t = 100.0;
  const int n = 200;
  rec.delta.assign(n, 1.0);
  rec.weight_to_j.assign(n, 1.0);
  rec.censored_j.assign(n, 0);
  rec.slices.resize(1);
  auto& sl = rec.slices[0];
  sl.maturity = 4;
  sl.weight_to_maturity.assign(n, 1.0);
  sl.price_at_maturity.assign(n, 105.0);
  sl.censored.assign(n, 0);
  QuoteConfig cfg = quote_cfg(Measure::mmm, 1, n);

  // censor most paths: low-sample flag
  for (int i = 0; i < n - 40; ++i) sl.censored[i] = 1;
  auto q = detail::assemble_quote(rec, sl, 100.0, 0.0, cfg);
  EXPECT_TRUE(q.low_sample);
  EXPECT_EQ(q.n_effective, 40);
  EXPECT_NEAR(q.censored_fraction, 0.8, 1e-12);

  // all censored: error
  for (int i = 0; i < n; ++i) sl.censored[i] = 1;
  EXPECT_THROW(detail::assemble_quote(rec, sl, 100.0, 0.0, cfg), numerical_error);

  // degenerate denominator
  for (int i = 0; i < n; ++i) sl.censored[i] = 0;
  rec.delta.assign(n, 0.0);
  EXPECT_THROW(detail::assemble_quote(rec, sl, 100.0, 0.0, cfg), numerical_error);
}

TEST(DenominatorEstimator, VarianceFormAgreesAndHasLowerVariance) {
  // variance form E[W (S e^{-rj} - s)^2] vs second-moment difference form
  // E[W (S^2 e^{-2rj} - s^2)]: same expectation, far smaller sampling noise
  const int T = 10, n_mc = 2000, reps = 60;
  auto cfg = quote_cfg(Measure::mc, T, n_mc);
  std::vector<double> var_form, diff_form;
  for (int rep = 0; rep < reps; ++rep) {
    RngStream rng(900 + rep, 1);
    const auto rec = detail::run_subsim(kPaper, 0, 100.0,
                                        kPaper.stationary_mean_b(), {T}, cfg, rng);
    double a = 0.0, b = 0.0;
    const double disc2 = std::exp(-2.0 * kPaper.r * T);
    for (int i = 0; i < n_mc; ++i) {
      const double sd = rec.delta[i];
      a += rec.weight_to_j[i] * sd * sd;
      const double s_T = rec.slices[0].price_at_maturity[i];
      b += rec.weight_to_j[i] * (s_T * s_T * disc2 - 100.0 * 100.0);
    }
    var_form.push_back(a / n_mc);
    diff_form.push_back(b / n_mc);
  }
  EXPECT_NEAR(mean(var_form), mean(diff_form),
              4.0 * std::sqrt(sample_variance(diff_form) / reps) +
                  4.0 * std::sqrt(sample_variance(var_form) / reps));
  EXPECT_LT(sample_variance(var_form), sample_variance(diff_form));
}

TEST(HedgePath, BookkeepingAndDeterminism) {
  RngStream rng(19, 8);
  const auto path = simulate_path(kPaper, 100.0, 12, rng);
  const OptionSpec opt{100.0, 12, kPaper.r};
  auto cfg = quote_cfg(Measure::mc, 4, 400);
  const auto run1 = hedge_path(kPaper, opt, path.s, cfg, 99);
  const auto run2 = hedge_path(kPaper, opt, path.s, cfg, 99);
  EXPECT_EQ(run1.ratios, run2.ratios);
  EXPECT_EQ(run1.terminal_sq_error, run2.terminal_sq_error);
  ASSERT_EQ(run1.rebalance_times.size(), 4u);  // 0, 4, 8, 12
  ASSERT_EQ(run1.ratios.size(), 3u);
  for (std::size_t i = 0; i < run1.values.size(); ++i)
    EXPECT_DOUBLE_EQ(run1.costs[i], run1.values[i] - run1.gains[i]);
  // terminal error recomputed from parts
  double gains = 0.0;
  for (int m = 0; m < 3; ++m) {
    const int t = 4 * m;
    gains += run1.ratios[m] * (path.s[t + 4] * std::exp(-kPaper.r * (t + 4)) -
                               path.s[t] * std::exp(-kPaper.r * t));
  }
  const double h_tilde = opt.payoff(path.s[12]) * std::exp(-kPaper.r * 12);
  const double e = h_tilde - run1.values[0] - gains;
  EXPECT_NEAR(run1.terminal_sq_error, e * e, 1e-12);
  EXPECT_NEAR(run1.terminal_sq_error_terminal_units,
              std::exp(2 * kPaper.r * 12) * e * e, 1e-12);
}

TEST(HedgePath, StaticDuanHoldsInceptionRatio) {
  RngStream rng(23, 8);
  const auto path = simulate_path(kPaper, 100.0, 8, rng);
  const OptionSpec opt{95.0, 8, kPaper.r};
  auto cfg = quote_cfg(Measure::mmm, 2, 400);
  const auto run = hedge_path(kPaper, opt, path.s, cfg, 5, /*duan=*/true);
  ASSERT_EQ(run.ratios.size(), 4u);
  for (double x : run.ratios) EXPECT_DOUBLE_EQ(x, run.ratios[0]);
  const auto dyn =
      hedge_path(kPaper, opt, path.s, cfg, 5, /*duan=*/true, /*rebalance=*/true);
  bool any_different = false;
  for (std::size_t i = 1; i < dyn.ratios.size(); ++i)
    any_different |= dyn.ratios[i] != dyn.ratios[0];
  EXPECT_TRUE(any_different);
}
