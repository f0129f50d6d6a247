#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "arsv/baselines.hpp"
#include "arsv/csv.hpp"
#include "arsv/filters.hpp"
#include "arsv/harness.hpp"
#include "arsv/kernels.hpp"
#include "arsv/lrm.hpp"
#include "arsv/model.hpp"
#include "arsv/rng.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 1;
  bool seed_set = false;
  int threads = 0;
};

arsv::ModelParams model_from_cli(CLI::App* cmd, const CommonOpts& common,
                                 const std::optional<double>& r,
                                 const std::optional<double>& gamma,
                                 const std::optional<double>& phi,
                                 const std::optional<double>& sigma_w) {
  arsv::ModelParams p;
  bool have_config_model = false;
  if (!common.config_path.empty()) {
    std::ifstream in(common.config_path);
    if (!in) throw std::invalid_argument("cannot open config: " + common.config_path);
    nlohmann::json j;
    in >> j;
    if (j.contains("model")) {
      const auto& m = j["model"];
      p.r = m.at("r").get<double>();
      p.gamma = m.at("gamma").get<double>();
      p.phi = m.at("phi").get<double>();
      p.sigma_w = m.at("sigma_w").get<double>();
      have_config_model = true;
    }
  }
  if (!have_config_model && !(r && gamma && phi && sigma_w))
    throw std::invalid_argument(
        cmd->get_name() + ": provide --r --gamma --phi --sigma-w or a --config with a model block");
  if (r) p.r = *r;
  if (gamma) p.gamma = *gamma;
  if (phi) p.phi = *phi;
  if (sigma_w) p.sigma_w = *sigma_w;
  p.validate();
  return p;
}

void write_or_print(const std::string& out, const std::string& body) {
  if (out.empty()) {
    std::cout << body;
  } else {
    arsv::write_text_file(out, body);
    std::cerr << "wrote " << out << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ARSV option market simulator, volatility filters, and local-risk-minimization hedging"};
  app.require_subcommand(1);
  app.fallthrough();

  CommonOpts common;
  app.add_option("--config", common.config_path, "JSON config file");
  app.add_option("--seed", common.seed, "master RNG seed")
      ->each([&](const std::string&) { common.seed_set = true; });
  app.add_option("--out", common.out, "output file or directory");
  app.add_option("--threads", common.threads, "worker threads (0 = auto)");
  app.add_option("--format", common.format, "output format")
      ->check(CLI::IsMember({"csv", "json"}));

  std::optional<double> r, gamma, phi, sigma_w;
  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--r", r, "per-step risk-free log-return");
    cmd->add_option("--gamma", gamma, "log-variance AR intercept");
    cmd->add_option("--phi", phi, "log-variance AR coefficient");
    cmd->add_option("--sigma-w", sigma_w, "log-variance innovation std");
  };

  // simulate
  auto* sim = app.add_subcommand("simulate", "simulate ARSV market paths to CSV");
  int horizon = 252, n_paths = 1;
  double s0 = 100.0;
  std::optional<double> b_init;
  add_model_flags(sim);
  sim->add_option("--horizon", horizon, "steps per path");
  sim->add_option("--n-paths", n_paths, "number of paths");
  sim->add_option("--s0", s0, "initial price");
  sim->add_option("--b-init", b_init, "initial log-variance (default: stationary mean)");

  // moments
  auto* mom = app.add_subcommand("moments", "print stationary moments");
  add_model_flags(mom);

  // filter
  auto* fil = app.add_subcommand("filter", "one-step-ahead volatility forecasts from a price CSV");
  std::string prices_file, method = "kalman";
  add_model_flags(fil);
  fil->add_option("--prices", prices_file, "price CSV (column s, or last column)")->required();
  fil->add_option("--method", method, "filter method")->check(CLI::IsMember({"kalman", "hlik"}));

  // hedge
  auto* hed = app.add_subcommand("hedge", "replicate one option along a realized price path");
  double strike = 100.0;
  int maturity = 12, j_interval = 1, n_mc = 2500;
  std::string measure = "mmm", filter_name = "kalman";
  bool duan = false, duan_rebalance = false;
  add_model_flags(hed);
  hed->add_option("--prices", prices_file, "price CSV")->required();
  hed->add_option("--strike", strike, "option strike")->required();
  hed->add_option("--maturity", maturity, "option maturity in steps")->required();
  hed->add_option("--j", j_interval, "hedge interval (steps between rebalances)");
  hed->add_option("--n-mc", n_mc, "sub-simulation paths per quote");
  hed->add_option("--measure", measure, "pricing kernel")->check(CLI::IsMember({"mmm", "mc"}));
  hed->add_option("--filter", filter_name, "volatility filter")->check(CLI::IsMember({"kalman", "hlik"}));
  hed->add_flag("--duan", duan, "hedge with the Duan sensitivity ratio");
  hed->add_flag("--duan-rebalance", duan_rebalance, "recompute the Duan ratio at every rebalance");

  // experiment
  auto* exp = app.add_subcommand("experiment", "run a hedging-error comparison experiment from a JSON config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sim->parsed()) {
      const auto p = model_from_cli(sim, common, r, gamma, phi, sigma_w);
      const std::string dir = common.out.empty() ? "." : common.out;
      for (int i = 0; i < n_paths; ++i) {
        arsv::RngStream rng(common.seed,
                            arsv::make_stream_id(arsv::StreamKind::eval_path, i));
        const auto path = arsv::simulate_path(p, s0, horizon, rng, b_init);
        char name[64];
        std::snprintf(name, sizeof(name), "path_%05d.csv", i);
        arsv::write_text_file(dir + "/" + name, arsv::path_to_csv(path));
      }
      std::cerr << "wrote " << n_paths << " path file(s) to " << dir << "\n";
      return 0;
    }

    if (mom->parsed()) {
      const auto p = model_from_cli(mom, common, r, gamma, phi, sigma_w);
      const auto m = arsv::stationary_moments(p);
      if (common.format == "json") {
        nlohmann::json j = {{"var_y", m.var_y},
                            {"kurtosis_y", m.kurtosis_y},
                            {"mean_b", m.mean_b},
                            {"var_b", m.var_b},
                            {"annualized_vol", m.annualized_vol}};
        write_or_print(common.out, j.dump(2) + "\n");
      } else {
        std::string s;
        s += "var_y," + arsv::format_double(m.var_y) + "\n";
        s += "kurtosis_y," + arsv::format_double(m.kurtosis_y) + "\n";
        s += "mean_b," + arsv::format_double(m.mean_b) + "\n";
        s += "var_b," + arsv::format_double(m.var_b) + "\n";
        s += "annualized_vol," + arsv::format_double(m.annualized_vol) + "\n";
        write_or_print(common.out, s);
      }
      return 0;
    }

    if (fil->parsed()) {
      const auto p = model_from_cli(fil, common, r, gamma, phi, sigma_w);
      const auto prices = arsv::read_price_csv_file(prices_file);
      const auto fc = arsv::run_filter(method == "kalman"
                                           ? arsv::FilterMethod::kalman
                                           : arsv::FilterMethod::hlik,
                                       p, prices);
      write_or_print(common.out, arsv::forecasts_to_csv(fc));
      return 0;
    }

    if (hed->parsed()) {
      const auto p = model_from_cli(hed, common, r, gamma, phi, sigma_w);
      const auto prices = arsv::read_price_csv_file(prices_file);
      arsv::OptionSpec option{strike, maturity, p.r};
      arsv::QuoteConfig qcfg;
      qcfg.measure = measure == "mmm" ? arsv::Measure::mmm : arsv::Measure::mc;
      qcfg.filter = filter_name == "kalman" ? arsv::FilterMethod::kalman
                                            : arsv::FilterMethod::hlik;
      qcfg.hedge_interval = j_interval;
      qcfg.n_mc = n_mc;
      const auto run = arsv::hedge_path(p, option, prices, qcfg, common.seed,
                                        duan, duan_rebalance);
      nlohmann::json out = {
          {"measure", arsv::to_string(run.measure)},
          {"filter", arsv::to_string(run.filter)},
          {"hedge_interval", run.hedge_interval},
          {"duan", run.duan},
          {"strike", strike},
          {"maturity", maturity},
          {"rebalance_times", run.rebalance_times},
          {"ratios", run.ratios},
          {"values_discounted", run.values},
          {"gains_discounted", run.gains},
          {"costs_discounted", run.costs},
          {"terminal_sq_error", run.terminal_sq_error},
          {"terminal_sq_error_terminal_units",
           run.terminal_sq_error_terminal_units},
          {"low_sample_quotes", run.low_sample_quotes},
          {"max_censored_fraction", run.max_censored_fraction},
          {"seed", common.seed}};
      write_or_print(common.out, out.dump(2) + "\n");
      return 0;
    }

    if (exp->parsed()) {
      if (common.config_path.empty())
        throw std::invalid_argument("experiment: --config is required");
      std::ifstream in(common.config_path);
      if (!in) throw std::invalid_argument("cannot open config: " + common.config_path);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
      }
      arsv::ExperimentConfig cfg = j.get<arsv::ExperimentConfig>();
      if (common.seed_set) cfg.master_seed = common.seed;
      if (common.threads > 0) cfg.threads = common.threads;
      cfg.validate();
      const auto rep = arsv::run_experiment(cfg);
      const std::string dir = common.out.empty() ? "." : common.out;
      const auto files = arsv::emit_report(rep, dir);
      for (const auto& f : files) std::cerr << "wrote " << f << "\n";
      int total_fail = 0;
      for (const auto& c : rep.cells) total_fail += c.n_fail;
      std::cerr << "cells: " << rep.cells.size() << ", failed path-cells: "
                << total_fail << ", wall: " << rep.wall_seconds << " s\n";
      return 0;
    }
  } catch (const arsv::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
