#pragma once

// Monte-Carlo experiment driver: draws channel realizations, builds each
// scheme's clustering, and aggregates outage, minimum power, sum-rate, and EE.
// Realizations are independent work items fanned out to a thread pool; every
// result lands in a slot indexed by realization, and aggregation walks slots
// in order, so worker count never changes the output.

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <thread>

#include "noma/channel.hpp"
#include "noma/ee.hpp"

namespace noma {

/// A multiple-access scheme is fully described by its cluster-size cap.
/// u_max = 0 is shorthand for "all users in one cluster" (SC-NOMA).
struct Scheme {
  std::string name;
  int u_max = 1;
};

inline Scheme parse_scheme(const std::string& s) {
  if (s == "SC-NOMA") return {s, 0};
  if (s == "FDMA") return {s, 1};
  if (s.rfind("FD-NOMA(", 0) == 0 && s.back() == ')') {
    const int u = std::atoi(s.c_str() + 8);
    if (u >= 1) return {s, u};
  }
  throw std::invalid_argument("unknown scheme: " + s);
}

struct ScenarioConfig {
  std::vector<int> n_users;        // K grid
  std::vector<double> r_min_bps;   // common-demand grid
  std::vector<Scheme> schemes;
  int n_realizations = 1;
  uint64_t rng_seed = 0;
  ChannelModel channel;
  double noise_density_dbm_hz = -174.0;
  double total_bandwidth_hz = 5e6;
  double p_max_w = dbm_to_watts(46.0);
  double p_circuit_w = dbm_to_watts(30.0);
  EeInner ee_inner = EeInner::Subgradient;
  int n_workers = 0;  // 0: NOMA_OPT_THREADS env var, else 1
};

struct MetricsRow {
  std::string scheme;
  int k = 0;
  double r_min_bps = 0.0;
  double outage = 0.0;
  double avg_min_power_w = 0.0;  // over feasible realizations only
  double avg_sum_rate_bps = 0.0;  // infeasible realizations count as zero
  double avg_ee = 0.0;
  int n_feasible = 0;
};

namespace detail {

struct RealizationOutcome {
  bool feasible = false;
  double min_power_w = 0.0;
  double sum_rate_bps = 0.0;
  double ee = 0.0;
};

inline RealizationOutcome evaluate_scheme(const ScenarioConfig& cfg, int k,
                                          double r_min, const Scheme& scheme,
                                          const std::vector<double>& gains) {
  const int u_eff = scheme.u_max == 0 ? k : std::min(scheme.u_max, k);
  const int n_sub = (k + u_eff - 1) / u_eff;
  const auto params = SystemParams::make(cfg.total_bandwidth_hz, n_sub, cfg.p_max_w,
                                         cfg.p_max_w, cfg.p_circuit_w, u_eff);
  const double noise_w =
      noise_watts(cfg.noise_density_dbm_hz, params.subchannel_bandwidth_hz);
  std::vector<double> cnr(gains.size());
  for (size_t i = 0; i < gains.size(); ++i) cnr[i] = gains[i] / noise_w;

  const auto groups = cluster_users(cnr, u_eff);
  std::vector<ClusterSpec> clusters;
  for (size_t n = 0; n < groups.size(); ++n) {
    std::vector<int> ids = groups[n];
    std::vector<double> h, demands;
    for (int uid : ids) {
      h.push_back(cnr[static_cast<size_t>(uid)]);
      demands.push_back(r_min);
    }
    clusters.push_back(ClusterSpec::make(static_cast<int>(n), std::move(ids),
                                         std::move(h), std::move(demands)));
  }

  RealizationOutcome out;
  const auto feas = feasibility_check(clusters, params);
  if (!feas.feasible) return out;
  out.feasible = true;
  out.min_power_w =
      std::accumulate(feas.q_min_w.begin(), feas.q_min_w.end(), 0.0);
  out.sum_rate_bps = maximize_sum_rate(clusters, params).sum_rate_bps;
  out.ee = dinkelbach_solve(clusters, params, cfg.ee_inner).ee_bps_per_joule;
  return out;
}

inline int worker_count(const ScenarioConfig& cfg) {
  if (cfg.n_workers > 0) return cfg.n_workers;
  if (const char* env = std::getenv("NOMA_OPT_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

}  // namespace detail

inline std::vector<MetricsRow> run_monte_carlo(const ScenarioConfig& cfg) {
  if (cfg.n_realizations < 1)
    throw std::invalid_argument("n_realizations must be >= 1");
  if (cfg.n_users.empty() || cfg.r_min_bps.empty() || cfg.schemes.empty())
    throw std::invalid_argument("scenario needs users, demands, and schemes");

  std::vector<MetricsRow> rows;
  const size_t n_schemes = cfg.schemes.size();
  for (int k : cfg.n_users) {
    for (double r_min : cfg.r_min_bps) {
      std::vector<detail::RealizationOutcome> outcomes(
          static_cast<size_t>(cfg.n_realizations) * n_schemes);
      std::atomic<int> next{0};
      auto work = [&]() {
        for (;;) {
          const int r = next.fetch_add(1);
          if (r >= cfg.n_realizations) return;
          const auto gains = generate_realization(cfg.channel, k, cfg.rng_seed,
                                                  static_cast<uint64_t>(r));
          for (size_t s = 0; s < n_schemes; ++s)
            outcomes[static_cast<size_t>(r) * n_schemes + s] =
                detail::evaluate_scheme(cfg, k, r_min, cfg.schemes[s], gains);
        }
      };
      const int n_threads = detail::worker_count(cfg);
      if (n_threads <= 1) {
        work();
      } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(work);
        for (auto& t : pool) t.join();
      }

      for (size_t s = 0; s < n_schemes; ++s) {
        MetricsRow row;
        row.scheme = cfg.schemes[s].name;
        row.k = k;
        row.r_min_bps = r_min;
        double min_power = 0.0, sum_rate = 0.0, ee = 0.0;
        for (int r = 0; r < cfg.n_realizations; ++r) {
          const auto& o = outcomes[static_cast<size_t>(r) * n_schemes + s];
          if (o.feasible) {
            ++row.n_feasible;
            min_power += o.min_power_w;
          }
          sum_rate += o.sum_rate_bps;  // zero when infeasible
          ee += o.ee;
        }
        const double nr = static_cast<double>(cfg.n_realizations);
        row.outage = (nr - row.n_feasible) / nr;
        row.avg_min_power_w = row.n_feasible > 0 ? min_power / row.n_feasible : 0.0;
        row.avg_sum_rate_bps = sum_rate / nr;
        row.avg_ee = ee / nr;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

/// Fixed column order and shortest-roundtrip float formatting so identical
/// inputs produce byte-identical files.
inline void write_csv(const std::vector<MetricsRow>& rows, std::ostream& os) {
  os << "scheme,K,r_min_bps,outage,avg_min_power_w,avg_sum_rate_bps,avg_ee,n_feasible\n";
  char buf[32];
  auto fmt = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
  };
  for (const auto& r : rows)
    os << r.scheme << ',' << r.k << ',' << fmt(r.r_min_bps) << ',' << fmt(r.outage)
       << ',' << fmt(r.avg_min_power_w) << ',' << fmt(r.avg_sum_rate_bps) << ','
       << fmt(r.avg_ee) << ',' << r.n_feasible << '\n';
}

}  // namespace noma
