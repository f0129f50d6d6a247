#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "arsv/lrm.hpp"
#include "arsv/model.hpp"
#include "arsv/rng.hpp"

namespace arsv {

// Finitely supported innovation law for exhaustive tree evaluation.
struct DiscreteDist {
  std::vector<double> value;
  std::vector<double> prob;

  void validate() const {
    if (value.empty() || value.size() != prob.size() || value.size() > 5)
      throw std::invalid_argument("DiscreteDist: need 1..5 support points");
    double s = 0.0;
    for (double p : prob) {
      if (!(p > 0.0)) throw std::invalid_argument("DiscreteDist: probs > 0");
      s += p;
    }
    if (std::fabs(s - 1.0) > 1e-12)
      throw std::invalid_argument("DiscreteDist: probs must sum to 1");
  }

  static DiscreteDist symmetric_pm1() { return {{-1.0, 1.0}, {0.5, 0.5}}; }
};

// ARSV dynamics on discretized innovations; small horizons only, every
// history is enumerated.
struct ArsvTree {
  ModelParams params;
  double s0 = 100.0;
  double b0 = 0.0;
  int horizon = 2;
  DiscreteDist eps = DiscreteDist::symmetric_pm1();
  DiscreteDist w = DiscreteDist::symmetric_pm1();  // absolute w values

  void validate() const {
    params.validate();
    eps.validate();
    w.validate();
    if (horizon < 1 || horizon > 4)
      throw std::invalid_argument("ArsvTree: horizon must be 1..4");
    if (!(s0 > 0.0)) throw std::invalid_argument("ArsvTree: s0 > 0");
  }

  int branching() const {
    return static_cast<int>(eps.value.size() * w.value.size());
  }
};

namespace tree_detail {

// Level-indexed enumeration. Node id at level t in [0, m^t); child c of
// node n is n*m + c. Branch c decodes as (eps index, w index).
struct Enumeration {
  int m = 0;
  std::vector<double> branch_prob;            // per branch
  std::vector<std::vector<double>> b;         // level t>=1: log-variance
  std::vector<std::vector<double>> s_tilde;   // level t>=0: discounted price
  std::vector<std::vector<double>> s;         // level t>=0: price
};

inline Enumeration enumerate(const ArsvTree& tree) {
  tree.validate();
  const auto& p = tree.params;
  const int m = tree.branching();
  const int ne = static_cast<int>(tree.eps.value.size());
  Enumeration e;
  e.m = m;
  e.branch_prob.resize(m);
  for (int c = 0; c < m; ++c)
    e.branch_prob[c] =
        tree.eps.prob[c % ne] * tree.w.prob[c / ne];
  e.b.resize(tree.horizon + 1);
  e.s.resize(tree.horizon + 1);
  e.s_tilde.resize(tree.horizon + 1);
  e.b[0] = {tree.b0};
  e.s[0] = {tree.s0};
  e.s_tilde[0] = {tree.s0};
  std::size_t width = 1;
  for (int t = 1; t <= tree.horizon; ++t) {
    width *= m;
    e.b[t].resize(width);
    e.s[t].resize(width);
    e.s_tilde[t].resize(width);
    const double disc = std::exp(-p.r * t);
    for (std::size_t n = 0; n < e.b[t - 1].size(); ++n) {
      for (int c = 0; c < m; ++c) {
        const double eps_v = tree.eps.value[c % ne];
        const double w_v = tree.w.value[c / ne];
        const double bt = p.gamma + p.phi * e.b[t - 1][n] + w_v;
        const double y = p.r + std::exp(0.5 * bt) * eps_v;
        const std::size_t id = n * m + c;
        e.b[t][id] = bt;
        e.s[t][id] = e.s[t - 1][n] * std::exp(y);
        e.s_tilde[t][id] = e.s[t][id] * disc;
      }
    }
  }
  return e;
}

}  // namespace tree_detail

// Backward local-risk-minimizing recursion under the physical measure.
// values[t][node] holds the discounted value process; ratios[t][node] the
// hedge held over (t, t+1].
struct TreeLrmSolution {
  std::vector<std::vector<double>> values;
  std::vector<std::vector<double>> ratios;  // ratios[t] defined for t < T
  double v0 = 0.0;
};

inline TreeLrmSolution lrm_quote_physical(const OptionSpec& option,
                                          const ArsvTree& tree) {
  if (option.maturity != tree.horizon)
    throw std::invalid_argument("tree: option maturity must equal horizon");
  const auto e = tree_detail::enumerate(tree);
  const int T = tree.horizon;
  TreeLrmSolution sol;
  sol.values.resize(T + 1);
  sol.ratios.resize(T);
  sol.values[T].resize(e.s[T].size());
  const double disc_T = std::exp(-tree.params.r * T);
  for (std::size_t n = 0; n < e.s[T].size(); ++n)
    sol.values[T][n] = disc_T * option.payoff(e.s[T][n]);
  for (int t = T - 1; t >= 0; --t) {
    const std::size_t width = e.s[t].size();
    sol.values[t].resize(width);
    sol.ratios[t].resize(width);
    for (std::size_t n = 0; n < width; ++n) {
      double mean_v = 0.0, mean_s = 0.0;
      for (int c = 0; c < e.m; ++c) {
        mean_v += e.branch_prob[c] * sol.values[t + 1][n * e.m + c];
        mean_s += e.branch_prob[c] * e.s_tilde[t + 1][n * e.m + c];
      }
      double cov = 0.0, var = 0.0;
      for (int c = 0; c < e.m; ++c) {
        const double ds = e.s_tilde[t + 1][n * e.m + c] - mean_s;
        cov += e.branch_prob[c] * (sol.values[t + 1][n * e.m + c] - mean_v) * ds;
        var += e.branch_prob[c] * ds * ds;
      }
      if (!(var > 0.0))
        throw numerical_error("tree lrm: zero conditional price variance");
      const double xi = cov / var;
      sol.ratios[t][n] = xi;
      sol.values[t][n] = mean_v - xi * (mean_s - e.s_tilde[t][n]);
    }
  }
  sol.v0 = sol.values[0][0];
  return sol;
}

// Exact per-transition minimal-martingale factors N(c|n), first-principles
// form N = 1 + lambda (S~_c - E_n[S~_c]).
struct TreeKernel {
  std::vector<std::vector<double>> n_factor;  // [t][node*m + c], t = 0..T-1
};

inline TreeKernel tree_qmin_weights(const ArsvTree& tree) {
  const auto e = tree_detail::enumerate(tree);
  TreeKernel k;
  k.n_factor.resize(tree.horizon);
  for (int t = 0; t < tree.horizon; ++t) {
    k.n_factor[t].resize(e.s[t + 1].size());
    for (std::size_t n = 0; n < e.s[t].size(); ++n) {
      double mean_s = 0.0;
      for (int c = 0; c < e.m; ++c)
        mean_s += e.branch_prob[c] * e.s_tilde[t + 1][n * e.m + c];
      double var = 0.0;
      for (int c = 0; c < e.m; ++c) {
        const double ds = e.s_tilde[t + 1][n * e.m + c] - mean_s;
        var += e.branch_prob[c] * ds * ds;
      }
      if (!(var > 0.0))
        throw numerical_error("tree qmin: zero conditional price variance");
      const double lambda = -(mean_s - e.s_tilde[t][n]) / var;
      for (int c = 0; c < e.m; ++c)
        k.n_factor[t][n * e.m + c] =
            1.0 + lambda * (e.s_tilde[t + 1][n * e.m + c] - mean_s);
    }
  }
  return k;
}

// Same factors through the cumulant-function expression, using the exact
// discrete conditional cumulants. Used to cross-check tree_qmin_weights.
inline TreeKernel tree_qmin_weights_cumulant_form(const ArsvTree& tree) {
  const auto e = tree_detail::enumerate(tree);
  const double r = tree.params.r;
  TreeKernel k;
  k.n_factor.resize(tree.horizon);
  for (int t = 0; t < tree.horizon; ++t) {
    k.n_factor[t].resize(e.s[t + 1].size());
    for (std::size_t n = 0; n < e.s[t].size(); ++n) {
      double ek1 = 0.0, ek2 = 0.0;
      for (int c = 0; c < e.m; ++c) {
        const double cr =
            std::log(e.s[t + 1][n * e.m + c] / e.s[t][n]) - r;
        ek1 += e.branch_prob[c] * std::exp(cr);
        ek2 += e.branch_prob[c] * std::exp(2.0 * cr);
      }
      for (int c = 0; c < e.m; ++c) {
        const double cr =
            std::log(e.s[t + 1][n * e.m + c] / e.s[t][n]) - r;
        k.n_factor[t][n * e.m + c] =
            1.0 + (ek1 - 1.0) * (std::exp(cr) - ek1) / (ek1 * ek1 - ek2);
      }
    }
  }
  return k;
}

// Backward recursion under the (possibly signed) tree measure defined by a
// kernel of per-transition factors.
inline TreeLrmSolution lrm_quote_martingale_tree(const OptionSpec& option,
                                                 const ArsvTree& tree,
                                                 const TreeKernel& kernel) {
  if (option.maturity != tree.horizon)
    throw std::invalid_argument("tree: option maturity must equal horizon");
  const auto e = tree_detail::enumerate(tree);
  const int T = tree.horizon;
  TreeLrmSolution sol;
  sol.values.resize(T + 1);
  sol.ratios.resize(T);
  sol.values[T].resize(e.s[T].size());
  const double disc_T = std::exp(-tree.params.r * T);
  for (std::size_t n = 0; n < e.s[T].size(); ++n)
    sol.values[T][n] = disc_T * option.payoff(e.s[T][n]);
  for (int t = T - 1; t >= 0; --t) {
    const std::size_t width = e.s[t].size();
    sol.values[t].resize(width);
    sol.ratios[t].resize(width);
    for (std::size_t n = 0; n < width; ++n) {
      double v = 0.0, num = 0.0, den = 0.0;
      for (int c = 0; c < e.m; ++c) {
        const double q = e.branch_prob[c] * kernel.n_factor[t][n * e.m + c];
        const double ds = e.s_tilde[t + 1][n * e.m + c] - e.s_tilde[t][n];
        v += q * sol.values[t + 1][n * e.m + c];
        num += q * sol.values[t + 1][n * e.m + c] * ds;
        den += q * ds * ds;
      }
      if (!(den > 0.0))
        throw numerical_error("tree martingale lrm: degenerate denominator");
      sol.values[t][n] = v;
      sol.ratios[t][n] = num / den;
    }
  }
  sol.v0 = sol.values[0][0];
  return sol;
}

// Exact Duan sensitivity ratio at inception under the kernel measure.
inline double tree_duan_delta(const OptionSpec& option, const ArsvTree& tree,
                              const TreeKernel& kernel) {
  const auto e = tree_detail::enumerate(tree);
  const int T = tree.horizon;
  std::vector<double> qprob = {1.0};
  for (int t = 0; t < T; ++t) {
    std::vector<double> next(e.s[t + 1].size());
    for (std::size_t n = 0; n < qprob.size(); ++n)
      for (int c = 0; c < e.m; ++c)
        next[n * e.m + c] =
            qprob[n] * e.branch_prob[c] * kernel.n_factor[t][n * e.m + c];
    qprob.swap(next);
  }
  double acc = 0.0;
  for (std::size_t n = 0; n < qprob.size(); ++n)
    if (e.s[T][n] >= option.strike) acc += qprob[n] * e.s[T][n];
  return std::exp(-tree.params.r * T) * acc / tree.s0;
}

struct HedgeRelationReport {
  double max_abs_discrepancy = 0.0;   // Eq-style hedge relation residual
  double max_abs_correction = 0.0;    // size of the correction term itself
};

// Verifies, node by node, that the minimal-martingale hedge equals the
// physical hedge plus the global-risk correction term.
inline HedgeRelationReport hedge_relation_check(const OptionSpec& option,
                                                const ArsvTree& tree) {
  const auto e = tree_detail::enumerate(tree);
  const auto phys = lrm_quote_physical(option, tree);
  const auto kernel = tree_qmin_weights(tree);
  const auto qmin = lrm_quote_martingale_tree(option, tree, kernel);
  const int T = tree.horizon;

  // Discounted physical gains along each history, then the global risk
  // process L~_t = (V~_t - G~_t) - V_0.
  std::vector<std::vector<double>> gains(T + 1);
  gains[0] = {0.0};
  for (int t = 0; t < T; ++t) {
    gains[t + 1].resize(e.s[t + 1].size());
    for (std::size_t n = 0; n < gains[t].size(); ++n)
      for (int c = 0; c < e.m; ++c)
        gains[t + 1][n * e.m + c] =
            gains[t][n] + phys.ratios[t][n] * (e.s_tilde[t + 1][n * e.m + c] -
                                               e.s_tilde[t][n]);
  }
  HedgeRelationReport rep;
  for (int t = 1; t <= T; ++t) {
    for (std::size_t n = 0; n < e.s[t - 1].size(); ++n) {
      double num = 0.0, den = 0.0;
      for (int c = 0; c < e.m; ++c) {
        const std::size_t id = n * e.m + c;
        const double q = e.branch_prob[c] * kernel.n_factor[t - 1][id];
        const double l_t = phys.values[t][id] - gains[t][id] - phys.v0;
        const double ds = e.s_tilde[t][id] - e.s_tilde[t - 1][n];
        num += q * l_t * ds;
        den += q * ds * ds;
      }
      const double correction = num / den;
      const double lhs = qmin.ratios[t - 1][n];
      const double rhs = phys.ratios[t - 1][n] + correction;
      rep.max_abs_discrepancy =
          std::max(rep.max_abs_discrepancy, std::fabs(lhs - rhs));
      rep.max_abs_correction =
          std::max(rep.max_abs_correction, std::fabs(correction));
    }
  }
  return rep;
}

enum class TreeSampling {
  plain,     // i.i.d. outcome draws
  balanced,  // systematic sampling over the joint outcome lattice
};

// Monte Carlo quote on the tree model with the exact discrete-cumulant
// minimal-martingale kernel; exercises the same estimator assembly as the
// production quote against the enumeration oracle. Balanced sampling keeps
// the sampling noise well inside tight oracle tolerances; plain sampling
// exhibits the usual 1/sqrt(n) error decay.
inline HedgeQuote tree_mc_quote(const OptionSpec& option, const ArsvTree& tree,
                                int j, int n_mc, std::uint64_t seed,
                                TreeSampling sampling = TreeSampling::balanced,
                                bool center_payoff = true) {
  tree.validate();
  if (option.maturity != tree.horizon)
    throw std::invalid_argument("tree_mc_quote: maturity must equal horizon");
  const auto& p = tree.params;
  const int T = tree.horizon;
  const int ne = static_cast<int>(tree.eps.value.size());
  const int m = tree.branching();

  detail::SubSimRecords rec;
  rec.t = 0;
  rec.s_t = tree.s0;
  rec.delta.resize(n_mc);
  rec.weight_to_j.resize(n_mc);
  rec.censored_j.assign(n_mc, 0);
  rec.slices.resize(1);
  auto& slice = rec.slices[0];
  slice.maturity = T;
  slice.weight_to_maturity.resize(n_mc);
  slice.price_at_maturity.resize(n_mc);
  slice.censored.assign(n_mc, 0);

  std::vector<double> cum(m);
  double acc = 0.0;
  const auto e = tree_detail::enumerate(tree);
  for (int c = 0; c < m; ++c) {
    acc += e.branch_prob[c];
    cum[c] = acc;
  }
  // joint-outcome cumulative for systematic sampling (physical measure)
  std::size_t n_terminal = 1;
  for (int k = 0; k < T; ++k) n_terminal *= m;
  std::vector<double> joint_cum;
  if (sampling == TreeSampling::balanced) {
    joint_cum.resize(n_terminal);
    double a = 0.0;
    for (std::size_t id = 0; id < n_terminal; ++id) {
      double pr = 1.0;
      std::size_t rem = id;
      for (int k = 0; k < T; ++k) {
        pr *= e.branch_prob[rem % m];
        rem /= m;
      }
      a += pr;
      joint_cum[id] = a;
    }
  }

  RngStream rng(seed, make_stream_id(StreamKind::inner_mc, 0, 0, 0));
  const double disc_j = std::exp(-p.r * j);
  std::vector<int> picks(T);
  for (int i = 0; i < n_mc; ++i) {
    if (sampling == TreeSampling::balanced) {
      const double u = (i + rng.next_uniform()) / n_mc;
      std::size_t id = 0;
      while (id + 1 < n_terminal && u > joint_cum[id]) ++id;
      for (int k = 0; k < T; ++k) {
        picks[k] = static_cast<int>(id % m);
        id /= m;
      }
    } else {
      for (int k = 0; k < T; ++k) {
        const double u = rng.next_uniform();
        int pick = 0;
        while (pick + 1 < m && u > cum[pick]) ++pick;
        picks[k] = pick;
      }
    }
    double b = tree.b0, s = tree.s0, prefix = 1.0;
    bool neg = false;
    for (int k = 1; k <= T; ++k) {
      // exact conditional cumulants given the revealed state b_{k-1}
      double ek1 = 0.0, ek2 = 0.0;
      for (int c = 0; c < m; ++c) {
        const double sig =
            std::exp(0.5 * (p.gamma + p.phi * b + tree.w.value[c / ne]));
        const double se = sig * tree.eps.value[c % ne];
        ek1 += e.branch_prob[c] * std::exp(se);
        ek2 += e.branch_prob[c] * std::exp(2.0 * se);
      }
      const int pick = picks[k - 1];
      const double bt = p.gamma + p.phi * b + tree.w.value[pick / ne];
      const double cr = std::exp(0.5 * bt) * tree.eps.value[pick % ne];
      b = bt;
      s *= std::exp(p.r + cr);
      prefix *= 1.0 + (ek1 - 1.0) * (std::exp(cr) - ek1) / (ek1 * ek1 - ek2);
      if (prefix <= 0.0) neg = true;
      if (k == j) {
        rec.delta[i] = s * disc_j - tree.s0;
        rec.weight_to_j[i] = prefix;
        rec.censored_j[i] = neg ? 1 : 0;
      }
      if (k == T) {
        slice.weight_to_maturity[i] = prefix;
        slice.price_at_maturity[i] = s;
        slice.censored[i] = neg ? 1 : 0;
      }
    }
  }
  QuoteConfig cfg;
  cfg.measure = Measure::mmm;
  cfg.hedge_interval = j;
  cfg.n_mc = n_mc;
  cfg.center_payoff = center_payoff;
  return detail::assemble_quote(rec, slice, option.strike, p.r, cfg);
}

}  // namespace arsv
