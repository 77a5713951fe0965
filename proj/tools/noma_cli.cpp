// Command-line front end: solve one instance, sweep a Monte-Carlo scenario to
// CSV, or print feasibility/structure diagnostics for an instance.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "noma/config.hpp"

namespace {

void print_report(const noma::SolveReport& rep) {
  std::cout << "status: " << noma::to_string(rep.status) << "\n";
  if (rep.status == noma::SolveStatus::Infeasible) {
    std::cout << "diagnostics: " << rep.diagnostics << "\n";
    return;
  }
  std::cout << "sum_rate_bps: " << rep.sum_rate_bps << "\n"
            << "ee_bps_per_joule: " << rep.ee_bps_per_joule << "\n"
            << "total_power_w: " << rep.allocation.total_power_w() << "\n";
  for (size_t n = 0; n < rep.allocation.powers_w.size(); ++n) {
    std::cout << "cluster " << n << ": q=" << rep.allocation.cluster_budgets_w[n]
              << " W, powers_w=[";
    const auto& p = rep.allocation.powers_w[n];
    for (size_t k = 0; k < p.size(); ++k)
      std::cout << (k ? ", " : "") << p[k];
    std::cout << "], rates_bps=[";
    for (size_t k = 0; k < rep.rates_bps[n].size(); ++k)
      std::cout << (k ? ", " : "") << rep.rates_bps[n][k];
    std::cout << "]\n";
  }
  for (const auto& [stage, count] : rep.iterations)
    std::cout << "iterations[" << stage << "]: " << count << "\n";
}

int run_solve(const std::string& config_path, const std::string& objective,
              noma::EeInner inner) {
  const auto cfg = noma::parse_instance(noma::load_json(config_path));
  const auto rep = objective == "ee"
                       ? noma::dinkelbach_solve(cfg.clusters, cfg.params, inner)
                       : noma::maximize_sum_rate(cfg.clusters, cfg.params);
  print_report(rep);
  return rep.status == noma::SolveStatus::Infeasible ? 2 : 0;
}

int run_check(const std::string& config_path) {
  const auto cfg = noma::parse_instance(noma::load_json(config_path));
  const auto feas = noma::feasibility_check(cfg.clusters, cfg.params);
  std::cout << "feasibility: " << feas.message() << "\n";
  for (size_t n = 0; n < feas.q_min_w.size(); ++n)
    std::cout << "cluster " << n << ": q_min_w=" << feas.q_min_w[n] << "\n";
  const auto eq = noma::equal_power_optimality(cfg.clusters, cfg.params);
  const char* verdict = eq.verdict == noma::EqualPowerVerdict::Optimal ? "optimal"
                        : eq.verdict == noma::EqualPowerVerdict::NotOptimal
                            ? "not optimal"
                            : "not applicable";
  std::cout << "equal-power split: " << verdict << " (" << eq.reason << ")\n";
  if (feas.feasible) {
    const auto v = noma::to_virtual_oma(cfg.clusters, cfg.params);
    const auto ee = noma::dinkelbach_solve(cfg.clusters, cfg.params);
    const bool full = noma::full_power_condition(
        v, ee.ee_bps_per_joule, cfg.params.subchannel_bandwidth_hz);
    std::cout << "full-power condition at EE optimum: " << (full ? "holds" : "fails")
              << "\n";
  }
  return 0;
}

int run_sweep(const std::string& config_path, uint64_t* seed, int* realizations,
              const std::vector<std::string>& schemes, const std::string& out,
              const noma::EeInner* inner) {
  auto cfg = noma::parse_scenario(noma::load_json(config_path));
  if (seed) cfg.rng_seed = *seed;
  if (realizations) cfg.n_realizations = *realizations;
  if (!schemes.empty()) {
    cfg.schemes.clear();
    for (const auto& s : schemes) cfg.schemes.push_back(noma::parse_scheme(s));
  }
  if (inner) cfg.ee_inner = *inner;
  const auto rows = noma::run_monte_carlo(cfg);
  if (out.empty()) {
    noma::write_csv(rows, std::cout);
  } else {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file: " + out);
    noma::write_csv(rows, os);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Downlink multicarrier NOMA power allocation solver"};
  app.require_subcommand(1);

  std::string config_path, objective = "sumrate", inner_name = "subgradient";
  std::string out_path;
  std::vector<std::string> scheme_override;
  uint64_t seed = 0;
  int realizations = 0;
  bool seed_set = false, realizations_set = false;

  bool inner_set = false;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON config file")->required();
    cmd->add_option("--inner", inner_name, "EE inner solver")
        ->check(CLI::IsMember({"subgradient", "barrier"}))
        ->each([&](const std::string&) { inner_set = true; });
  };
  auto* solve = app.add_subcommand("solve", "solve one instance");
  add_common(solve);
  solve->add_option("--objective", objective, "optimization objective")
      ->check(CLI::IsMember({"sumrate", "ee"}));

  auto* sweep = app.add_subcommand("sweep", "Monte-Carlo sweep to CSV");
  add_common(sweep);
  sweep->add_option("--seed", seed, "RNG seed override")
      ->each([&](const std::string&) { seed_set = true; });
  sweep->add_option("--realizations", realizations, "realization count override")
      ->each([&](const std::string&) { realizations_set = true; });
  sweep->add_option("--scheme", scheme_override, "scheme list override");
  sweep->add_option("--out", out_path, "CSV output path (default stdout)");

  auto* check = app.add_subcommand("check", "feasibility and structure diagnostics");
  add_common(check);

  CLI11_PARSE(app, argc, argv);
  const auto inner =
      inner_name == "barrier" ? noma::EeInner::Barrier : noma::EeInner::Subgradient;
  try {
    if (solve->parsed()) return run_solve(config_path, objective, inner);
    if (check->parsed()) return run_check(config_path);
    if (realizations_set && realizations < 1) {
      std::cerr << "error: --realizations must be >= 1\n";
      return 1;
    }
    return run_sweep(config_path, seed_set ? &seed : nullptr,
                     realizations_set ? &realizations : nullptr, scheme_override,
                     out_path, inner_set ? &inner : nullptr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
