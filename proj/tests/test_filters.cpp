#include "arsv/filters.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "arsv/model.hpp"
#include "arsv/rng.hpp"
#include "arsv/stats.hpp"

using namespace arsv;

namespace {

const ModelParams kPaper{0.1 / 252.0, -0.821, 0.9, 0.675};

// Pure bisection on the h-likelihood stationarity condition, independent of
// the Newton path it checks.
double hlik_bisection_oracle(const ModelParams& p, double z, double b_pred) {
  const double z2 = z * z;
  const double c = 2.0 / (p.sigma_w * p.sigma_w);
  auto grad = [&](double b) { return -z2 * std::exp(-b) + 1.0 + c * (b - b_pred); };
  double lo = b_pred - 40.0, hi = b_pred + 40.0;
  while (grad(lo) > 0.0) lo -= 40.0;
  while (grad(hi) < 0.0) hi += 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13; ++i) {
    const double mid = 0.5 * (lo + hi);
    (grad(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(KalmanConstants, ExactFields) {
  const auto k = KalmanConstants::from(kPaper);
  EXPECT_DOUBLE_EQ(k.var_xi, M_PI * M_PI / 8.0);
  EXPECT_DOUBLE_EQ(k.var_eta, 0.25 * 0.675 * 0.675);
  EXPECT_DOUBLE_EQ(k.alpha_k, -0.821 / (2.0 * 0.1));
  EXPECT_DOUBLE_EQ(k.mu_xi, -0.63518);
}

TEST(KalmanFilter, PriorOnlyForecast) {
  const std::vector<double> prices = {100.0, 101.0};
  const auto fc = kalman_filter(kPaper, prices);
  ASSERT_EQ(fc.sigma_hat.size(), 1u);
  EXPECT_DOUBLE_EQ(fc.sigma_hat[0],
                   std::exp(kPaper.gamma / (2.0 * (1.0 - kPaper.phi))));
}

TEST(KalmanFilter, ConstantStateConvergence) {
  // sigma_w = 0: the latent state is frozen at alpha_k; the filter mean
  // must converge there and the variance to the Riccati fixed point (0).
  const ModelParams p{0.0, -8.0, 0.9, 0.0};
  RngStream rng(3, 9);
  const auto path = simulate_path(p, 100.0, 4000, rng);
  const auto fc = kalman_filter(p, path.s);
  const double alpha = p.gamma / (2.0 * (1.0 - p.phi));
  EXPECT_NEAR(std::log(fc.sigma_hat.back()), alpha, 0.05);
  EXPECT_LT(fc.aux2.back(), 1e-3);
}

TEST(KalmanFilter, ExactTrackingWithoutNoise) {
  // Observation noise variance forced to zero and var_eta = 0: after one
  // update the filter holds the state exactly.
  const double phi = 0.8, state0 = -3.0;
  KalmanConstants k;
  k.mu_xi = -0.63518;
  k.var_xi = 0.0;
  k.alpha_k = -2.0;
  k.phi = phi;
  k.var_eta = 0.0;
  KalmanFilter f(k, k.alpha_k, 1.0);
  double state = state0;
  for (int t = 0; t < 5; ++t) {
    state = k.alpha_k + phi * (state - k.alpha_k);
    if (t > 0) EXPECT_NEAR(f.predicted_mean(), state, 1e-12);
    const double obs = state + k.mu_xi;  // noise-free l_t
    f.observe(std::exp(obs));            // centered return with log|.| = obs
  }
}

TEST(KalmanFilter, VarianceSequencePositiveAndConvergent) {
  RngStream rng(8, 2);
  const auto path = simulate_path(kPaper, 100.0, 3000, rng);
  const auto fc = kalman_filter(kPaper, path.s);
  for (double v : fc.aux2) ASSERT_GT(v, 0.0);
  const double fixed = kalman_steady_predicted_var(KalmanConstants::from(kPaper));
  EXPECT_NEAR(fc.aux2.back(), fixed, 1e-10);
  EXPECT_NEAR(fixed, 0.3194, 5e-4);
}

TEST(KalmanFilter, ZeroReturnClampedNotFatal) {
  std::vector<double> prices = {100.0, 100.0, 101.0, 100.5};  // y_1 = 0
  const ModelParams p{0.0, -8.0, 0.9, 0.5};
  const auto fc = kalman_filter(p, prices);
  EXPECT_EQ(fc.clamped_observations, 1);
  for (double s : fc.sigma_hat) ASSERT_TRUE(std::isfinite(s) && s > 0.0);
}

TEST(HlikUpdate, ClosedFormAtZeroReturn) {
  const double bp = -7.3;
  const double b = hlik_update(kPaper, 0.0, bp);
  EXPECT_NEAR(b, bp - 0.5 * kPaper.sigma_w * kPaper.sigma_w, 1e-10);
}

TEST(HlikUpdate, TightPriorLimit) {
  ModelParams p = kPaper;
  p.sigma_w = 1e-4;
  const double b = hlik_update(p, 0.05, -7.0);
  EXPECT_NEAR(b, -7.0, 1e-4);
}

TEST(HlikUpdate, FirstOrderConditionAndBisectionOracle) {
  RngStream rng(77, 1);
  for (int i = 0; i < 1000; ++i) {
    const double b_true = -8.0 + 2.0 * rng.next_normal();
    const double z = std::exp(0.5 * b_true) * rng.next_normal();
    const double b_pred = b_true + 0.5 * rng.next_normal();
    ModelParams p = kPaper;
    p.sigma_w = 0.1 + 1.9 * rng.next_uniform();
    const double b = hlik_update(p, z, b_pred);
    const double g = -z * z * std::exp(-b) + 1.0 +
                     2.0 / (p.sigma_w * p.sigma_w) * (b - b_pred);
    ASSERT_LT(std::fabs(g), 1e-10);
    ASSERT_NEAR(b, hlik_bisection_oracle(p, z, b_pred), 1e-8);
  }
}

TEST(HlikFilter, EmptyAndDegenerateInputs) {
  EXPECT_TRUE(hlik_filter(kPaper, {100.0}).sigma_hat.empty());
  ModelParams p = kPaper;
  p.sigma_w = 0.0;
  EXPECT_THROW(hlik_filter(p, {100.0, 101.0}), std::invalid_argument);
}

TEST(HlikFilter, StationaryStartPrediction) {
  const std::vector<double> flat = {100.0, 100.0 * std::exp(kPaper.r),
                                    100.0 * std::exp(2 * kPaper.r)};
  const auto fc = hlik_filter(kPaper, flat);
  ASSERT_EQ(fc.sigma_hat.size(), 2u);
  EXPECT_DOUBLE_EQ(fc.sigma_hat[0], std::exp(0.5 * kPaper.stationary_mean_b()));
}

TEST(Filters, PredictabilityPrefixInvariance) {
  RngStream rng(4, 6);
  const auto path = simulate_path(kPaper, 100.0, 60, rng);
  for (auto method : {FilterMethod::kalman, FilterMethod::hlik}) {
    const auto full = run_filter(method, kPaper, path.s);
    for (int cut : {10, 30, 59}) {
      std::vector<double> prefix(path.s.begin(), path.s.begin() + cut + 1);
      const auto part = run_filter(method, kPaper, prefix);
      for (int t = 0; t < cut; ++t)
        ASSERT_DOUBLE_EQ(part.sigma_hat[t], full.sigma_hat[t])
            << to_string(method) << " t=" << t << " cut=" << cut;
    }
  }
}

TEST(Filters, ForecastBeatsConstantPredictor) {
  const double alpha = kPaper.gamma / (2.0 * (1.0 - kPaper.phi));
  for (auto method : {FilterMethod::kalman, FilterMethod::hlik}) {
    double sse_filter = 0.0, sse_const = 0.0;
    for (int rep = 0; rep < 3; ++rep) {
      RngStream rng(100 + rep, 1);
      const auto path = simulate_path(kPaper, 100.0, 10000, rng);
      const auto fc = run_filter(method, kPaper, path.s);
      for (int t = 0; t < path.horizon(); ++t) {
        const double truth = std::log(path.sigma[t]);
        sse_filter += std::pow(std::log(fc.sigma_hat[t]) - truth, 2);
        sse_const += std::pow(alpha - truth, 2);
      }
    }
    EXPECT_LT(sse_filter, sse_const) << to_string(method);
  }
}

TEST(Filters, ScaleConsistencyUnderGammaShift) {
  const double delta = 0.6;
  ModelParams shifted = kPaper;
  shifted.gamma += delta;
  for (auto method : {FilterMethod::kalman, FilterMethod::hlik}) {
    // same innovations drive both generating processes
    RngStream r1(55, 3), r2(55, 3);
    const auto base_path = simulate_path(kPaper, 100.0, 20000, r1);
    const auto shift_path = simulate_path(shifted, 100.0, 20000, r2);
    const auto fc1 = run_filter(method, kPaper, base_path.s);
    const auto fc2 = run_filter(method, shifted, shift_path.s);
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t t = 0; t < fc1.sigma_hat.size(); ++t) {
      m1 += 2.0 * std::log(fc1.sigma_hat[t]);
      m2 += 2.0 * std::log(fc2.sigma_hat[t]);
    }
    const double shift = (m2 - m1) / static_cast<double>(fc1.sigma_hat.size());
    const double expected = delta / (1.0 - kPaper.phi);
    EXPECT_NEAR(shift, expected, 0.05 * expected) << to_string(method);
  }
}
