#pragma once

// Domain types and rate/EE evaluation for downlink multicarrier NOMA.
// Internal units are linear SI throughout: Watts, Hz, bps, CNR in 1/W
// (noise-normalized). dB/dBm conversion happens once at the config boundary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace noma {

inline constexpr double kLn2 = 0.6931471805599453094172321214581766;

inline double log2_safe(double x) { return std::log(x) / kLn2; }

// --- dB / dBm conversions (configuration boundary only) ---

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Noise power in Watts from a density in dBm/Hz over a bandwidth in Hz.
inline double noise_watts(double density_dbm_hz, double bandwidth_hz) {
  return dbm_to_watts(density_dbm_hz) * bandwidth_hz;
}

// --- Domain types ---

struct SystemParams {
  double total_bandwidth_hz = 0.0;       // W
  int n_subchannels = 0;                 // N
  double subchannel_bandwidth_hz = 0.0;  // W_s = W/N, stored once
  double p_max_w = 0.0;                  // cellular power budget
  std::vector<double> p_mask_w;          // per-subchannel cap, length N
  double p_circuit_w = 0.0;              // P_C
  int u_max = 1;                         // max multiplexed users per subchannel

  static SystemParams make(double total_bandwidth_hz, int n_subchannels,
                           double p_max_w, std::vector<double> p_mask_w,
                           double p_circuit_w, int u_max) {
    if (!(total_bandwidth_hz > 0.0) || !std::isfinite(total_bandwidth_hz))
      throw std::invalid_argument("total_bandwidth_hz must be positive and finite");
    if (n_subchannels < 1) throw std::invalid_argument("n_subchannels must be >= 1");
    if (!(p_max_w > 0.0) || !std::isfinite(p_max_w))
      throw std::invalid_argument("p_max_w must be positive and finite");
    if (static_cast<int>(p_mask_w.size()) != n_subchannels)
      throw std::invalid_argument("p_mask_w must have one entry per subchannel");
    for (double m : p_mask_w)
      if (!(m > 0.0) || !std::isfinite(m))
        throw std::invalid_argument("p_mask_w entries must be positive and finite");
    if (!(p_circuit_w >= 0.0) || !std::isfinite(p_circuit_w))
      throw std::invalid_argument("p_circuit_w must be nonnegative and finite");
    if (u_max < 1) throw std::invalid_argument("u_max must be >= 1");
    SystemParams p;
    p.total_bandwidth_hz = total_bandwidth_hz;
    p.n_subchannels = n_subchannels;
    p.subchannel_bandwidth_hz = total_bandwidth_hz / n_subchannels;
    p.p_max_w = p_max_w;
    p.p_mask_w = std::move(p_mask_w);
    p.p_circuit_w = p_circuit_w;
    p.u_max = u_max;
    return p;
  }

  static SystemParams make(double total_bandwidth_hz, int n_subchannels,
                           double p_max_w, double p_mask_each_w,
                           double p_circuit_w, int u_max) {
    return make(total_bandwidth_hz, n_subchannels, p_max_w,
                std::vector<double>(static_cast<size_t>(n_subchannels), p_mask_each_w),
                p_circuit_w, u_max);
  }
};

/// One subchannel's multiplexed users. Canonical order is strictly ascending
/// CNR (ties broken by ascending user id and then treated as strict); the
/// last entry is the cluster head, which cancels all the others under SIC.
struct ClusterSpec {
  int subchannel_index = 0;
  std::vector<int> user_ids;
  std::vector<double> cnr;        // h, linear 1/W
  std::vector<double> r_min_bps;  // per-user minimum rate demand
  std::vector<double> r_max_bps;  // optional; empty = unbounded

  size_t size() const { return cnr.size(); }
  bool has_r_max() const { return !r_max_bps.empty(); }
  int head_index() const { return static_cast<int>(cnr.size()) - 1; }

  static ClusterSpec make(int subchannel_index, std::vector<int> user_ids,
                          std::vector<double> cnr, std::vector<double> r_min_bps,
                          std::vector<double> r_max_bps = {}) {
    const size_t n = cnr.size();
    if (n == 0) throw std::invalid_argument("cluster must contain at least one user");
    if (user_ids.size() != n || r_min_bps.size() != n ||
        (!r_max_bps.empty() && r_max_bps.size() != n))
      throw std::invalid_argument("cluster field lengths must match");
    for (double h : cnr)
      if (!(h > 0.0) || !std::isfinite(h))
        throw std::invalid_argument("cnr entries must be positive and finite");
    for (size_t k = 0; k < n; ++k) {
      if (!(r_min_bps[k] >= 0.0)) throw std::invalid_argument("r_min_bps must be >= 0");
      if (!r_max_bps.empty() && r_min_bps[k] > r_max_bps[k])
        throw std::invalid_argument("r_min_bps must not exceed r_max_bps");
    }
    // Canonicalize: ascending CNR, ties by ascending user id.
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      if (cnr[a] != cnr[b]) return cnr[a] < cnr[b];
      return user_ids[a] < user_ids[b];
    });
    ClusterSpec c;
    c.subchannel_index = subchannel_index;
    c.user_ids.reserve(n);
    c.cnr.reserve(n);
    c.r_min_bps.reserve(n);
    if (!r_max_bps.empty()) c.r_max_bps.reserve(n);
    for (size_t i : order) {
      c.user_ids.push_back(user_ids[i]);
      c.cnr.push_back(cnr[i]);
      c.r_min_bps.push_back(r_min_bps[i]);
      if (!r_max_bps.empty()) c.r_max_bps.push_back(r_max_bps[i]);
    }
    return c;
  }
};

struct PowerAllocation {
  std::vector<std::vector<double>> powers_w;  // per cluster, per user
  std::vector<double> cluster_budgets_w;      // q_n = sum of row n

  double total_power_w() const {
    return std::accumulate(cluster_budgets_w.begin(), cluster_budgets_w.end(), 0.0);
  }
};

enum class SolveStatus { Optimal, Infeasible, MaxIterations };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::MaxIterations: return "MaxIterations";
  }
  return "?";
}

struct SolveReport {
  PowerAllocation allocation;
  std::vector<std::vector<double>> rates_bps;  // same shape as allocation
  double sum_rate_bps = 0.0;
  double ee_bps_per_joule = 0.0;
  std::map<std::string, int> iterations;
  SolveStatus status = SolveStatus::Optimal;
  std::string diagnostics;  // populated for Infeasible
};

// --- Rate evaluation ---

/// SINR of user k decoding its own signal; interference comes only from
/// users with strictly higher decoding order (later canonical positions).
inline double sinr(const ClusterSpec& cluster, std::span<const double> powers, size_t k) {
  if (k >= cluster.size() || powers.size() != cluster.size())
    throw std::out_of_range("sinr: index/shape mismatch");
  const double h = cluster.cnr[k];
  double interference = 0.0;
  for (size_t j = k + 1; j < cluster.size(); ++j) interference += powers[j];
  return powers[k] * h / (h * interference + 1.0);
}

inline double rate_bps(const ClusterSpec& cluster, std::span<const double> powers,
                       size_t k, double ws_hz) {
  return ws_hz * log2_safe(1.0 + sinr(cluster, powers, k));
}

struct Objectives {
  double sum_rate_bps = 0.0;
  double ee_bps_per_joule = 0.0;
};

inline Objectives system_objectives(const std::vector<ClusterSpec>& clusters,
                                    const PowerAllocation& allocation,
                                    const SystemParams& params) {
  if (allocation.powers_w.size() != clusters.size() ||
      allocation.cluster_budgets_w.size() != clusters.size())
    throw std::invalid_argument("system_objectives: shape mismatch");
  const double ws = params.subchannel_bandwidth_hz;
  double sum_rate = 0.0;
  for (size_t n = 0; n < clusters.size(); ++n) {
    if (allocation.powers_w[n].size() != clusters[n].size())
      throw std::invalid_argument("system_objectives: cluster shape mismatch");
    for (size_t k = 0; k < clusters[n].size(); ++k)
      sum_rate += rate_bps(clusters[n], allocation.powers_w[n], k, ws);
  }
  const double denom = allocation.total_power_w() + params.p_circuit_w;
  Objectives obj;
  obj.sum_rate_bps = sum_rate;
  obj.ee_bps_per_joule = denom > 0.0 ? sum_rate / denom : 0.0;
  return obj;
}

}  // namespace noma
