#pragma once

// JSON configuration loading for the CLI: a "system"+"clusters" document
// describes one concrete instance (solve/check), a "scenario" document
// describes a Monte-Carlo sweep. Powers may be given in Watts or dBm.

#include <fstream>

#include <json.hpp>

#include "noma/montecarlo.hpp"

namespace noma {

struct InstanceConfig {
  SystemParams params;
  std::vector<ClusterSpec> clusters;
};

namespace detail {

inline double power_field(const nlohmann::json& j, const std::string& key_w,
                          const std::string& key_dbm, double fallback_w) {
  if (j.contains(key_w)) return j.at(key_w).get<double>();
  if (j.contains(key_dbm)) return dbm_to_watts(j.at(key_dbm).get<double>());
  return fallback_w;
}

inline std::vector<double> number_or_list(const nlohmann::json& j) {
  if (j.is_array()) return j.get<std::vector<double>>();
  return {j.get<double>()};
}

}  // namespace detail

inline InstanceConfig parse_instance(const nlohmann::json& doc) {
  const auto& sys = doc.at("system");
  const double p_max = detail::power_field(sys, "p_max_w", "p_max_dbm", 0.0);
  const int n_sub = sys.at("n_subchannels").get<int>();
  std::vector<double> mask;
  if (sys.contains("p_mask_w"))
    mask = sys.at("p_mask_w").get<std::vector<double>>();
  else
    mask.assign(static_cast<size_t>(n_sub), p_max);

  InstanceConfig cfg;
  cfg.params = SystemParams::make(
      sys.at("total_bandwidth_hz").get<double>(), n_sub, p_max, std::move(mask),
      detail::power_field(sys, "p_circuit_w", "p_circuit_dbm", 0.0),
      sys.value("u_max", 1));
  for (const auto& c : doc.at("clusters")) {
    std::vector<int> ids;
    if (c.contains("user_ids")) ids = c.at("user_ids").get<std::vector<int>>();
    auto cnr = c.at("cnr").get<std::vector<double>>();
    if (ids.empty()) {
      ids.resize(cnr.size());
      std::iota(ids.begin(), ids.end(), 0);
    }
    cfg.clusters.push_back(ClusterSpec::make(
        c.at("subchannel").get<int>(), std::move(ids), std::move(cnr),
        c.at("r_min_bps").get<std::vector<double>>(),
        c.value("r_max_bps", std::vector<double>{})));
  }
  if (cfg.clusters.empty()) throw std::invalid_argument("no clusters in config");
  return cfg;
}

inline ScenarioConfig parse_scenario(const nlohmann::json& doc) {
  const auto& sc = doc.at("scenario");
  ScenarioConfig cfg;
  for (double k : detail::number_or_list(sc.at("n_users")))
    cfg.n_users.push_back(static_cast<int>(k));
  cfg.r_min_bps = detail::number_or_list(sc.at("r_min_bps"));
  for (const auto& s : sc.at("schemes"))
    cfg.schemes.push_back(parse_scheme(s.get<std::string>()));
  cfg.n_realizations = sc.value("realizations", 1);
  cfg.rng_seed = sc.value("seed", uint64_t{0});
  cfg.total_bandwidth_hz = sc.value("total_bandwidth_hz", 5e6);
  cfg.p_max_w = detail::power_field(sc, "p_max_w", "p_max_dbm", dbm_to_watts(46.0));
  cfg.p_circuit_w =
      detail::power_field(sc, "p_circuit_w", "p_circuit_dbm", dbm_to_watts(30.0));
  cfg.noise_density_dbm_hz = sc.value("noise_density_dbm_hz", -174.0);
  cfg.channel.cell_radius_m = sc.value("cell_radius_m", 500.0);
  cfg.channel.min_distance_m = sc.value("min_distance_m", 20.0);
  cfg.channel.shadowing_sigma_db = sc.value("shadowing_sigma_db", 8.0);
  cfg.n_workers = sc.value("workers", 0);
  const std::string inner = sc.value("inner", "subgradient");
  if (inner == "subgradient")
    cfg.ee_inner = EeInner::Subgradient;
  else if (inner == "barrier")
    cfg.ee_inner = EeInner::Barrier;
  else
    throw std::invalid_argument("inner must be subgradient or barrier");
  if (cfg.channel.cell_radius_m <= cfg.channel.min_distance_m)
    throw std::invalid_argument("cell radius must exceed the minimum distance");
  return cfg;
}

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return nlohmann::json::parse(in);
}

}  // namespace noma
