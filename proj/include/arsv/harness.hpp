#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "arsv/baselines.hpp"
#include "arsv/csv.hpp"
#include "arsv/filters.hpp"
#include "arsv/kernels.hpp"
#include "arsv/lrm.hpp"
#include "arsv/model.hpp"
#include "arsv/rng.hpp"
#include "arsv/stats.hpp"

namespace arsv {

struct MethodSpec {
  enum class Kind { lrm, duan, bs };
  Kind kind = Kind::bs;
  Measure measure = Measure::mmm;
  FilterMethod filter = FilterMethod::kalman;
  std::string name;
};

inline MethodSpec parse_method(const std::string& name) {
  MethodSpec m;
  m.name = name;
  if (name == "bs") {
    m.kind = MethodSpec::Kind::bs;
    return m;
  }
  const auto first = name.find('-');
  const auto second = name.find('-', first + 1);
  if (first == std::string::npos || second == std::string::npos)
    throw std::invalid_argument("unknown method: " + name);
  const std::string kind = name.substr(0, first);
  const std::string measure = name.substr(first + 1, second - first - 1);
  const std::string filter = name.substr(second + 1);
  if (kind == "lrm")
    m.kind = MethodSpec::Kind::lrm;
  else if (kind == "duan")
    m.kind = MethodSpec::Kind::duan;
  else
    throw std::invalid_argument("unknown method kind: " + name);
  if (measure == "mmm")
    m.measure = Measure::mmm;
  else if (measure == "mc")
    m.measure = Measure::mc;
  else
    throw std::invalid_argument("unknown measure in method: " + name);
  if (filter == "kalman")
    m.filter = FilterMethod::kalman;
  else if (filter == "hlik")
    m.filter = FilterMethod::hlik;
  else
    throw std::invalid_argument("unknown filter in method: " + name);
  return m;
}

struct ExperimentConfig {
  ModelParams model;
  double s0 = 100.0;
  std::vector<double> moneyness;   // S0/K
  std::vector<int> maturities;     // steps, each divisible by hedge_interval
  int hedge_interval = 1;
  std::vector<std::string> methods;
  int n_eval_paths = 200;
  int n_mc = 1000;
  std::uint64_t master_seed = 0;
  bool duan_rebalance = false;
  bool center_payoff = true;
  bool alt_sum_discount = false;
  ErrorConvention error_convention = ErrorConvention::discounted;
  int threads = 0;  // 0: ARSV_THREADS env or hardware concurrency

  void validate() const {
    model.validate();
    if (!(s0 > 0.0)) throw std::invalid_argument("config: s0 > 0");
    if (moneyness.empty()) throw std::invalid_argument("config: moneyness empty");
    for (double m : moneyness)
      if (!(m > 0.0)) throw std::invalid_argument("config: moneyness > 0");
    if (maturities.empty()) throw std::invalid_argument("config: maturities empty");
    if (hedge_interval < 1) throw std::invalid_argument("config: hedge_interval >= 1");
    for (int t : maturities)
      if (t < 1 || t % hedge_interval != 0)
        throw std::invalid_argument(
            "config: every maturity must be a positive multiple of hedge_interval");
    if (methods.empty()) throw std::invalid_argument("config: methods empty");
    for (const auto& m : methods) parse_method(m);
    if (n_eval_paths < 2) throw std::invalid_argument("config: n_eval_paths >= 2");
    if (n_mc < 100) throw std::invalid_argument("config: n_mc >= 100");
    if (static_cast<std::size_t>(n_eval_paths) > 0xFFFFFFFFull ||
        methods.size() > 0xFF)
      throw std::invalid_argument("config: too many paths or methods");
  }

  int resolved_threads() const {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("ARSV_THREADS")) {
      const int n = std::atoi(env);
      if (n > 0) return n;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{
      {"model",
       {{"r", c.model.r},
        {"gamma", c.model.gamma},
        {"phi", c.model.phi},
        {"sigma_w", c.model.sigma_w}}},
      {"s0", c.s0},
      {"moneyness", c.moneyness},
      {"maturities", c.maturities},
      {"hedge_interval", c.hedge_interval},
      {"methods", c.methods},
      {"n_eval_paths", c.n_eval_paths},
      {"n_mc", c.n_mc},
      {"seed", c.master_seed},
      {"duan_rebalance", c.duan_rebalance},
      {"center_payoff", c.center_payoff},
      {"alt_sum_discount", c.alt_sum_discount},
      {"error_convention",
       c.error_convention == ErrorConvention::discounted ? "discounted"
                                                         : "terminal"},
      {"threads", c.threads}};
}

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  const auto& m = j.at("model");
  c.model.r = m.at("r").get<double>();
  c.model.gamma = m.at("gamma").get<double>();
  c.model.phi = m.at("phi").get<double>();
  c.model.sigma_w = m.at("sigma_w").get<double>();
  c.s0 = j.at("s0").get<double>();
  c.moneyness = j.at("moneyness").get<std::vector<double>>();
  c.maturities = j.at("maturities").get<std::vector<int>>();
  c.hedge_interval = j.at("hedge_interval").get<int>();
  c.methods = j.at("methods").get<std::vector<std::string>>();
  c.n_eval_paths = j.at("n_eval_paths").get<int>();
  c.n_mc = j.at("n_mc").get<int>();
  c.master_seed = j.at("seed").get<std::uint64_t>();
  c.duan_rebalance = j.value("duan_rebalance", false);
  c.center_payoff = j.value("center_payoff", true);
  c.alt_sum_discount = j.value("alt_sum_discount", false);
  const std::string conv = j.value("error_convention", std::string("discounted"));
  if (conv == "discounted")
    c.error_convention = ErrorConvention::discounted;
  else if (conv == "terminal")
    c.error_convention = ErrorConvention::terminal;
  else
    throw std::invalid_argument("config: error_convention must be discounted|terminal");
  c.threads = j.value("threads", 0);
}

struct CellResult {
  std::string method;
  int maturity = 0;
  double moneyness = 0.0;
  double strike = 0.0;
  double mse = 0.0;
  double stderr_mse = 0.0;
  int n_paths = 0;
  int n_fail = 0;
  double mean_censored_fraction = 0.0;
  int low_sample_quotes = 0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<CellResult> cells;  // method-major, then maturity, then moneyness
  // per_path_errors[method][cell][path]; NaN marks a failed (path, cell)
  std::vector<std::vector<std::vector<double>>> per_path_errors;
  double wall_seconds = 0.0;

  int cell_index(int mat_idx, int mon_idx) const {
    return mat_idx * static_cast<int>(config.moneyness.size()) + mon_idx;
  }
  const std::vector<double>& errors(int method_idx, int mat_idx,
                                    int mon_idx) const {
    return per_path_errors[method_idx][cell_index(mat_idx, mon_idx)];
  }
};

// Stream ids a run will consume; the layout makes eval and inner streams
// disjoint by construction, which the harness tests assert.
inline std::vector<std::uint64_t> enumerate_stream_ids(
    const ExperimentConfig& cfg) {
  std::vector<std::uint64_t> ids;
  const int t_max = *std::max_element(cfg.maturities.begin(), cfg.maturities.end());
  for (int p = 0; p < cfg.n_eval_paths; ++p) {
    ids.push_back(make_stream_id(StreamKind::eval_path, p));
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
      const auto spec = parse_method(cfg.methods[m]);
      if (spec.kind == MethodSpec::Kind::bs) continue;
      for (int t = 0; t + cfg.hedge_interval <= t_max; t += cfg.hedge_interval) {
        if (spec.kind == MethodSpec::Kind::duan && !cfg.duan_rebalance && t > 0)
          continue;
        ids.push_back(make_stream_id(StreamKind::inner_mc, p, t, m));
      }
    }
  }
  return ids;
}

namespace detail {

struct PathCellOutcome {
  double sq_error = std::numeric_limits<double>::quiet_NaN();
  double censored_fraction_sum = 0.0;
  int censored_quotes = 0;
  int low_sample = 0;
  bool failed = true;
};

inline void run_one_path(const ExperimentConfig& cfg,
                         const std::vector<MethodSpec>& specs,
                         const std::vector<double>& strikes, int path_index,
                         PathCellOutcome* out_cells) {
  const int j = cfg.hedge_interval;
  const int t_max =
      *std::max_element(cfg.maturities.begin(), cfg.maturities.end());
  RngStream eval_rng(cfg.master_seed,
                     make_stream_id(StreamKind::eval_path, path_index));
  const MarketPath path = simulate_path(cfg.model, cfg.s0, t_max, eval_rng);

  bool need_kalman = false, need_hlik = false;
  for (const auto& s : specs) {
    if (s.kind == MethodSpec::Kind::bs) continue;
    (s.filter == FilterMethod::kalman ? need_kalman : need_hlik) = true;
  }
  VolForecastSeries fc_kalman, fc_hlik;
  if (need_kalman) fc_kalman = kalman_filter(cfg.model, path.s);
  if (need_hlik) fc_hlik = hlik_filter(cfg.model, path.s);

  const BsParams bsp = BsParams::from(cfg.model);
  const int n_mon = static_cast<int>(cfg.moneyness.size());
  const int n_cells = static_cast<int>(cfg.maturities.size()) * n_mon;

  for (std::size_t mi = 0; mi < specs.size(); ++mi) {
    const auto& spec = specs[mi];
    auto* cells = &out_cells[mi * n_cells];

    if (spec.kind == MethodSpec::Kind::bs) {
      for (std::size_t ti = 0; ti < cfg.maturities.size(); ++ti) {
        const int T = cfg.maturities[ti];
        for (int ki = 0; ki < n_mon; ++ki) {
          const double K = strikes[ki];
          const double v0 = bs_price(cfg.s0, K, T, bsp);
          double gains = 0.0;
          for (int t = 0; t < T; t += j) {
            const double d = bs_delta(path.s[t], K, T - t, bsp);
            gains += d * (path.discounted_price(t + j, cfg.model.r) -
                          path.discounted_price(t, cfg.model.r));
          }
          const double h_tilde =
              std::max(path.s[T] - K, 0.0) * std::exp(-cfg.model.r * T);
          double e = h_tilde - v0 - gains;
          if (cfg.error_convention == ErrorConvention::terminal)
            e *= std::exp(cfg.model.r * T);
          auto& cell = cells[ti * n_mon + ki];
          cell.sq_error = e * e;
          cell.failed = false;
        }
      }
      continue;
    }

    QuoteConfig qcfg;
    qcfg.measure = spec.measure;
    qcfg.filter = spec.filter;
    qcfg.hedge_interval = j;
    qcfg.n_mc = cfg.n_mc;
    qcfg.center_payoff = cfg.center_payoff;
    qcfg.alt_sum_discount = cfg.alt_sum_discount;
    const auto& fc = spec.filter == FilterMethod::kalman ? fc_kalman : fc_hlik;

    // ratios[cell][rebalance index], values at t=0 per cell
    std::vector<std::vector<double>> ratios(n_cells);
    std::vector<double> v0(n_cells, 0.0);
    std::vector<unsigned char> cell_failed(n_cells, 0);
    for (int c = 0; c < n_cells; ++c)
      ratios[c].assign(cfg.maturities[c / n_mon] / j, 0.0);

    for (int t = 0; t + j <= t_max; t += j) {
      std::vector<int> mats;
      std::vector<int> mat_idx;
      for (std::size_t ti = 0; ti < cfg.maturities.size(); ++ti)
        if (t + j <= cfg.maturities[ti]) {
          mats.push_back(cfg.maturities[ti]);
          mat_idx.push_back(static_cast<int>(ti));
        }
      if (mats.empty()) break;
      const bool duan_static_skip =
          spec.kind == MethodSpec::Kind::duan && !cfg.duan_rebalance && t > 0;
      if (duan_static_skip) {
        for (std::size_t q = 0; q < mat_idx.size(); ++q)
          for (int ki = 0; ki < n_mon; ++ki) {
            auto& rr = ratios[mat_idx[q] * n_mon + ki];
            rr[t / j] = rr[0];
          }
        continue;
      }
      const double b_state = t == 0 ? cfg.model.stationary_mean_b()
                                    : 2.0 * std::log(fc.sigma_hat[t - 1]);
      RngStream rng(cfg.master_seed,
                    make_stream_id(StreamKind::inner_mc, path_index, t, mi));
      try {
        const auto rec =
            run_subsim(cfg.model, t, path.s[t], b_state, mats, qcfg, rng);
        for (std::size_t q = 0; q < mats.size(); ++q) {
          for (int ki = 0; ki < n_mon; ++ki) {
            const int cell = mat_idx[q] * n_mon + ki;
            if (cell_failed[cell]) continue;
            try {
              const auto quote = assemble_quote(rec, rec.slices[q], strikes[ki],
                                                cfg.model.r, qcfg);
              ratios[cell][t / j] =
                  spec.kind == MethodSpec::Kind::duan ? quote.duan_ratio
                                                      : quote.ratio;
              if (t == 0) v0[cell] = quote.value;
              auto& out = cells[cell];
              out.censored_fraction_sum += quote.censored_fraction;
              ++out.censored_quotes;
              if (quote.low_sample) ++out.low_sample;
            } catch (const numerical_error&) {
              cell_failed[cell] = 1;
            }
          }
        }
      } catch (const std::exception&) {
        for (std::size_t q = 0; q < mat_idx.size(); ++q)
          for (int ki = 0; ki < n_mon; ++ki)
            cell_failed[mat_idx[q] * n_mon + ki] = 1;
      }
    }

    for (std::size_t ti = 0; ti < cfg.maturities.size(); ++ti) {
      const int T = cfg.maturities[ti];
      for (int ki = 0; ki < n_mon; ++ki) {
        const int cell = static_cast<int>(ti) * n_mon + ki;
        auto& out = cells[cell];
        if (cell_failed[cell]) {
          out.failed = true;
          continue;
        }
        double gains = 0.0;
        for (int t = 0; t < T; t += j)
          gains += ratios[cell][t / j] *
                   (path.discounted_price(t + j, cfg.model.r) -
                    path.discounted_price(t, cfg.model.r));
        const double h_tilde =
            std::max(path.s[T] - strikes[ki], 0.0) * std::exp(-cfg.model.r * T);
        double e = h_tilde - v0[cell] - gains;
        if (cfg.error_convention == ErrorConvention::terminal)
          e *= std::exp(cfg.model.r * T);
        out.sq_error = e * e;
        out.failed = false;
      }
    }
  }
}

}  // namespace detail

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  std::vector<MethodSpec> specs;
  for (const auto& m : cfg.methods) specs.push_back(parse_method(m));
  std::vector<double> strikes;
  for (double m : cfg.moneyness) strikes.push_back(cfg.s0 / m);

  const int n_mon = static_cast<int>(cfg.moneyness.size());
  const int n_cells = static_cast<int>(cfg.maturities.size()) * n_mon;
  const int n_methods = static_cast<int>(specs.size());
  const std::size_t per_path = static_cast<std::size_t>(n_methods) * n_cells;

  std::vector<detail::PathCellOutcome> outcomes(
      per_path * static_cast<std::size_t>(cfg.n_eval_paths));

  std::atomic<int> next_path{0};
  const int n_threads = std::min(cfg.resolved_threads(), cfg.n_eval_paths);
  auto worker = [&]() {
    for (;;) {
      const int p = next_path.fetch_add(1);
      if (p >= cfg.n_eval_paths) return;
      detail::run_one_path(cfg, specs, strikes, p,
                           &outcomes[per_path * static_cast<std::size_t>(p)]);
    }
  };
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  ExperimentReport rep;
  rep.config = cfg;
  rep.per_path_errors.assign(
      n_methods, std::vector<std::vector<double>>(
                     n_cells, std::vector<double>(cfg.n_eval_paths)));
  for (int mi = 0; mi < n_methods; ++mi) {
    for (std::size_t ti = 0; ti < cfg.maturities.size(); ++ti) {
      for (int ki = 0; ki < n_mon; ++ki) {
        const int cell = static_cast<int>(ti) * n_mon + ki;
        CellResult c;
        c.method = specs[mi].name;
        c.maturity = cfg.maturities[ti];
        c.moneyness = cfg.moneyness[ki];
        c.strike = strikes[ki];
        c.n_paths = cfg.n_eval_paths;
        std::vector<double> ok;
        double cens_sum = 0.0;
        long cens_quotes = 0;
        for (int p = 0; p < cfg.n_eval_paths; ++p) {
          const auto& o = outcomes[per_path * p + mi * n_cells + cell];
          rep.per_path_errors[mi][cell][p] = o.sq_error;
          if (o.failed) {
            ++c.n_fail;
          } else {
            ok.push_back(o.sq_error);
          }
          cens_sum += o.censored_fraction_sum;
          cens_quotes += o.censored_quotes;
          c.low_sample_quotes += o.low_sample;
        }
        if (!ok.empty()) c.mse = mean(ok);
        if (ok.size() >= 2) c.stderr_mse = standard_error(ok);
        c.mean_censored_fraction =
            cens_quotes > 0 ? cens_sum / static_cast<double>(cens_quotes) : 0.0;
        rep.cells.push_back(c);
      }
    }
  }
  rep.wall_seconds = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
  return rep;
}

// --- report files -----------------------------------------------------

inline std::string moneyness_label(double m) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", m);
  return buf;
}

inline std::string summary_csv(const ExperimentReport& rep) {
  std::string s = "method,maturity,moneyness,mse,stderr,n_fail\n";
  for (const auto& c : rep.cells) {
    s += c.method + "," + std::to_string(c.maturity) + "," +
         moneyness_label(c.moneyness) + "," + format_double(c.mse) + "," +
         format_double(c.stderr_mse) + "," + std::to_string(c.n_fail) + "\n";
  }
  return s;
}

inline std::string path_errors_csv(const ExperimentReport& rep) {
  std::string s = "method,maturity,moneyness,path,sq_error\n";
  const auto& cfg = rep.config;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
    for (std::size_t ti = 0; ti < cfg.maturities.size(); ++ti) {
      for (std::size_t ki = 0; ki < cfg.moneyness.size(); ++ki) {
        const auto& errs =
            rep.errors(static_cast<int>(mi), static_cast<int>(ti),
                       static_cast<int>(ki));
        for (std::size_t p = 0; p < errs.size(); ++p) {
          s += cfg.methods[mi] + "," + std::to_string(cfg.maturities[ti]) +
               "," + moneyness_label(cfg.moneyness[ki]) + "," +
               std::to_string(p) + "," +
               (std::isnan(errs[p]) ? std::string("nan")
                                    : format_double(errs[p])) +
               "\n";
        }
      }
    }
  }
  return s;
}

// One file per moneyness: maturity in the first column, one mse series per
// method, mirroring the figure layout.
inline std::string plot_csv(const ExperimentReport& rep, int mon_idx) {
  const auto& cfg = rep.config;
  std::string s = "maturity";
  for (const auto& m : cfg.methods) s += "," + m;
  s += "\n";
  for (std::size_t ti = 0; ti < cfg.maturities.size(); ++ti) {
    s += std::to_string(cfg.maturities[ti]);
    for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
      const auto& cell =
          rep.cells[mi * cfg.maturities.size() * cfg.moneyness.size() +
                    ti * cfg.moneyness.size() + mon_idx];
      s += "," + format_double(cell.mse);
    }
    s += "\n";
  }
  return s;
}

inline nlohmann::json manifest_json(const ExperimentReport& rep) {
  nlohmann::json j;
  j["config"] = rep.config;
  j["seed"] = rep.config.master_seed;
  j["wall_seconds"] = rep.wall_seconds;
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : rep.cells) {
    cells.push_back({{"method", c.method},
                     {"maturity", c.maturity},
                     {"moneyness", c.moneyness},
                     {"strike", c.strike},
                     {"mse", c.mse},
                     {"stderr", c.stderr_mse},
                     {"n_fail", c.n_fail},
                     {"mean_censored_fraction", c.mean_censored_fraction},
                     {"low_sample_quotes", c.low_sample_quotes}});
  }
  j["cells"] = cells;
  return j;
}

// Writes summary.csv, path_errors.csv, one plot_moneyness_<m>.csv per
// moneyness, and manifest.json into out_dir (which must exist).
inline std::vector<std::string> emit_report(const ExperimentReport& rep,
                                            const std::string& out_dir) {
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& body) {
    const std::string path = out_dir + "/" + name;
    write_text_file(path, body);
    written.push_back(path);
  };
  put("summary.csv", summary_csv(rep));
  put("path_errors.csv", path_errors_csv(rep));
  for (std::size_t ki = 0; ki < rep.config.moneyness.size(); ++ki)
    put("plot_moneyness_" + moneyness_label(rep.config.moneyness[ki]) + ".csv",
        plot_csv(rep, static_cast<int>(ki)));
  put("manifest.json", manifest_json(rep).dump(2) + "\n");
  return written;
}

}  // namespace arsv
