#pragma once

// Single-cluster closed-form machinery: minimum-power allocation, feasibility
// constants, budget-parameterized optimal intra-cluster powers, the max-rate
// constrained variant, admission control, and the SIC-outage condition.

#include <optional>
#include <sstream>
#include <utility>

#include "noma/core.hpp"

namespace noma {

struct BudgetOutOfRange : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InfeasibleBox : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Backward recursion for the minimum cluster power meeting per-user rate
/// targets: p_k = beta_k * (1/h_k + sum_{j>k} p_j), walking from the head
/// down, with beta_k = 2^(target_k/W_s) - 1. Every user's rate is pinned to
/// its target. This recursion is authoritative for Q^min; the expanded
/// product form it is sometimes written as degenerates for small clusters.
inline std::vector<double> pinned_rate_powers(const ClusterSpec& cluster,
                                              std::span<const double> targets_bps,
                                              double ws_hz) {
  const int n = static_cast<int>(cluster.size());
  std::vector<double> p(static_cast<size_t>(n), 0.0);
  double tail = 0.0;  // sum of powers of stronger users
  for (int k = n - 1; k >= 0; --k) {
    const double beta = std::exp2(targets_bps[static_cast<size_t>(k)] / ws_hz) - 1.0;
    p[static_cast<size_t>(k)] = beta * (1.0 / cluster.cnr[static_cast<size_t>(k)] + tail);
    tail += p[static_cast<size_t>(k)];
  }
  return p;
}

}  // namespace detail

/// Per-cluster constants derived from CNRs and minimum rate demands.
/// Indices follow the canonical ascending-CNR order; the head is last.
struct ClusterConstants {
  std::vector<double> beta_min;   // 2^(R_min/W_s) - 1
  std::vector<double> beta_frac;  // (2^(R_min/W_s) - 1) / 2^(R_min/W_s)
  std::vector<double> c_per_user;
  std::vector<double> power_coeff;  // slope of p_k in q for non-head users
  double alpha = 1.0;
  double c_total = 0.0;
  double q_min_w = 0.0;
  std::optional<double> q_max_w;  // present when the cluster carries R_max

  static ClusterConstants from(const ClusterSpec& cluster, double ws_hz) {
    const size_t n = cluster.size();
    ClusterConstants cc;
    cc.beta_min.resize(n);
    cc.beta_frac.resize(n);
    cc.c_per_user.resize(n);
    cc.power_coeff.assign(n, 0.0);
    for (size_t k = 0; k < n; ++k) {
      const double g = std::exp2(cluster.r_min_bps[k] / ws_hz);
      cc.beta_min[k] = g - 1.0;
      cc.beta_frac[k] = (g - 1.0) / g;
    }
    // c_k = beta_k (1/h_k - sum_{j<k} beta_j prod_{j<l<k}(1-beta_l) / h_j),
    // with the fractional betas.
    for (size_t k = 0; k < n; ++k) {
      double s = 0.0;
      for (size_t j = 0; j < k; ++j) {
        double prod = 1.0;
        for (size_t l = j + 1; l < k; ++l) prod *= 1.0 - cc.beta_frac[l];
        s += cc.beta_frac[j] * prod / cluster.cnr[j];
      }
      cc.c_per_user[k] = cc.beta_frac[k] * (1.0 / cluster.cnr[k] - s);
    }
    double coeff_sum = 0.0;
    for (size_t k = 0; k + 1 < n; ++k) {
      double prod = 1.0;
      for (size_t j = 0; j < k; ++j) prod *= 1.0 - cc.beta_frac[j];
      cc.power_coeff[k] = cc.beta_frac[k] * prod;
      coeff_sum += cc.power_coeff[k];
      cc.c_total += cc.c_per_user[k];
    }
    cc.alpha = 1.0 - coeff_sum;
    {
      const auto p = detail::pinned_rate_powers(cluster, cluster.r_min_bps, ws_hz);
      cc.q_min_w = std::accumulate(p.begin(), p.end(), 0.0);
    }
    if (cluster.has_r_max()) {
      const auto p = detail::pinned_rate_powers(cluster, cluster.r_max_bps, ws_hz);
      cc.q_max_w = std::accumulate(p.begin(), p.end(), 0.0);
    }
    return cc;
  }
};

/// Powers meeting every user's minimum rate exactly, and their sum Q^min.
inline std::pair<std::vector<double>, double> min_power_allocation(
    const ClusterSpec& cluster, double ws_hz) {
  auto p = detail::pinned_rate_powers(cluster, cluster.r_min_bps, ws_hz);
  const double q_min = std::accumulate(p.begin(), p.end(), 0.0);
  return {std::move(p), q_min};
}

struct FeasibilityReport {
  bool feasible = true;
  std::vector<double> q_min_w;          // per cluster
  std::vector<int> mask_violations;     // cluster indices with Q^min > P^mask
  double budget_shortfall_w = 0.0;      // max(0, sum Q^min - P^max)

  std::string message() const {
    if (feasible) return "feasible";
    std::ostringstream os;
    os << "infeasible:";
    for (int n : mask_violations)
      os << " cluster " << n << " Q^min " << q_min_w[static_cast<size_t>(n)]
         << " W exceeds its mask;";
    if (budget_shortfall_w > 0.0)
      os << " total budget shortfall " << budget_shortfall_w << " W";
    return os.str();
  }
};

inline FeasibilityReport feasibility_check(const std::vector<ClusterSpec>& clusters,
                                           const SystemParams& params) {
  FeasibilityReport rep;
  const double ws = params.subchannel_bandwidth_hz;
  double total = 0.0;
  for (size_t n = 0; n < clusters.size(); ++n) {
    auto [p, q_min] = min_power_allocation(clusters[n], ws);
    rep.q_min_w.push_back(q_min);
    total += q_min;
    const double mask = params.p_mask_w[static_cast<size_t>(clusters[n].subchannel_index)];
    if (q_min > mask) {
      rep.feasible = false;
      rep.mask_violations.push_back(static_cast<int>(n));
    }
  }
  if (total > params.p_max_w) {
    rep.feasible = false;
    rep.budget_shortfall_w = total - params.p_max_w;
  }
  return rep;
}

/// Optimal intra-cluster split of a budget q_n: every non-head user is pinned
/// to its minimum rate, the head takes alpha*q - c. q_n must lie in the
/// cluster box [Q^min, p_mask] up to 1e-9 relative slack.
inline std::vector<double> intra_cluster_optimal(
    const ClusterSpec& cluster, double q_n, double ws_hz,
    double p_mask_w = std::numeric_limits<double>::infinity(),
    const ClusterConstants* precomputed = nullptr) {
  ClusterConstants local;
  if (!precomputed) {
    local = ClusterConstants::from(cluster, ws_hz);
    precomputed = &local;
  }
  const ClusterConstants& cc = *precomputed;
  const double tol_lo = 1e-9 * std::max(cc.q_min_w, 1e-300);
  const double tol_hi = 1e-9 * p_mask_w;
  if (q_n < cc.q_min_w - tol_lo || q_n > p_mask_w + tol_hi) {
    std::ostringstream os;
    os << "budget " << q_n << " W outside [" << cc.q_min_w << ", " << p_mask_w << "]";
    throw BudgetOutOfRange(os.str());
  }
  const double q = std::clamp(q_n, cc.q_min_w, p_mask_w);
  const size_t n = cluster.size();
  std::vector<double> p(n, 0.0);
  for (size_t k = 0; k + 1 < n; ++k)
    p[k] = std::max(0.0, cc.power_coeff[k] * q + cc.c_per_user[k]);
  p[n - 1] = std::max(0.0, cc.alpha * q - cc.c_total);
  return p;
}

/// High-CNR approximation of the optimal split (the c ~ 0 regime); used for
/// heterogeneity diagnostics only.
inline std::vector<double> approx_intra_powers(const ClusterSpec& cluster, double q_n,
                                               double ws_hz) {
  const auto cc = ClusterConstants::from(cluster, ws_hz);
  const size_t n = cluster.size();
  std::vector<double> p(n, 0.0);
  for (size_t k = 0; k + 1 < n; ++k) p[k] = cc.power_coeff[k] * q_n;
  p[n - 1] = cc.alpha * q_n;
  return p;
}

struct MaxRateResult {
  std::vector<double> powers_w;
  double total_power_w = 0.0;
  int pivot_index = 0;          // first uncapped user, walking down from the head
  double budget_slack_w = 0.0;  // positive when every user hit its rate cap
};

/// Sequential cap-and-redistribute allocation under per-user maximum rates.
/// Starts from the minimum-rate optimal split; walking down from the head,
/// caps any user whose power exceeds its rate-cap power M_k and hands the
/// residual budget to the next user, stopping at the first uncapped one.
inline MaxRateResult max_rate_allocation(const ClusterSpec& cluster, double budget_w,
                                         double ws_hz) {
  if (!cluster.has_r_max())
    throw std::invalid_argument("max_rate_allocation requires r_max_bps");
  for (size_t k = 0; k < cluster.size(); ++k)
    if (cluster.r_min_bps[k] > cluster.r_max_bps[k])
      throw InfeasibleBox("r_min exceeds r_max");
  const auto cc = ClusterConstants::from(cluster, ws_hz);
  const double q_max = *cc.q_max_w;
  const double q_tot = std::min(budget_w, q_max);

  MaxRateResult res;
  res.powers_w = intra_cluster_optimal(cluster, q_tot, ws_hz,
                                       std::numeric_limits<double>::infinity(), &cc);
  auto& p = res.powers_w;
  const int n = static_cast<int>(cluster.size());
  double tail = 0.0;  // sum of (already capped) stronger powers
  for (int k = n - 1; k >= 0; --k) {
    const size_t uk = static_cast<size_t>(k);
    const double h = cluster.cnr[uk];
    const double m_k = (std::exp2(cluster.r_max_bps[uk] / ws_hz) - 1.0) *
                       (h * tail + 1.0) / h;
    if (p[uk] <= m_k * (1.0 + 1e-12)) {
      res.pivot_index = k;
      break;
    }
    p[uk] = m_k;
    tail += m_k;
    if (k > 0) {
      double others = 0.0;
      for (int j = 0; j < n; ++j)
        if (j != k - 1) others += p[static_cast<size_t>(j)];
      p[static_cast<size_t>(k - 1)] = std::max(0.0, q_tot - others);
    }
    res.pivot_index = k;  // overwritten unless the loop exhausts
  }
  res.total_power_w = std::accumulate(p.begin(), p.end(), 0.0);
  res.budget_slack_w = std::max(0.0, budget_w - res.total_power_w);
  return res;
}

struct AdmissionResult {
  std::vector<ClusterSpec> clusters;            // reduced, feasible system
  std::vector<std::pair<int, int>> dropped;     // (user id, subchannel index)
};

/// Drops (user, subchannel) assignments with the largest minimum power until
/// the system is feasible. Ties are broken toward the smaller CNR so reruns
/// are deterministic.
inline AdmissionResult admission_control(std::vector<ClusterSpec> clusters,
                                         const SystemParams& params) {
  AdmissionResult res;
  const double ws = params.subchannel_bandwidth_hz;
  for (;;) {
    std::vector<size_t> live;
    for (size_t n = 0; n < clusters.size(); ++n)
      if (clusters[n].size() > 0) live.push_back(n);
    std::vector<ClusterSpec> active;
    for (size_t n : live) active.push_back(clusters[n]);
    if (active.empty() || feasibility_check(active, params).feasible) break;

    size_t worst_cluster = 0;
    int worst_user = -1;
    double worst_power = -1.0;
    double worst_cnr = 0.0;
    for (size_t n : live) {
      auto [p, q_min] = min_power_allocation(clusters[n], ws);
      for (size_t k = 0; k < p.size(); ++k) {
        const bool better =
            p[k] > worst_power ||
            (p[k] == worst_power && clusters[n].cnr[k] < worst_cnr);
        if (better) {
          worst_power = p[k];
          worst_cnr = clusters[n].cnr[k];
          worst_cluster = n;
          worst_user = static_cast<int>(k);
        }
      }
    }
    ClusterSpec& c = clusters[worst_cluster];
    const size_t uk = static_cast<size_t>(worst_user);
    res.dropped.emplace_back(c.user_ids[uk], c.subchannel_index);
    c.user_ids.erase(c.user_ids.begin() + worst_user);
    c.cnr.erase(c.cnr.begin() + worst_user);
    c.r_min_bps.erase(c.r_min_bps.begin() + worst_user);
    if (c.has_r_max()) c.r_max_bps.erase(c.r_max_bps.begin() + worst_user);
  }
  for (auto& c : clusters)
    if (c.size() > 0) res.clusters.push_back(std::move(c));
  return res;
}

/// Zero-SIC-outage condition under bounded channel estimation error: for
/// every pair ordered by estimated CNR, the worst case of the stronger user
/// must still dominate the best case of the weaker one.
inline bool sic_outage_zero(std::span<const double> cnr_est,
                            std::span<const double> err_lower,
                            std::span<const double> err_upper) {
  const size_t n = cnr_est.size();
  if (err_lower.size() != n || err_upper.size() != n)
    throw std::invalid_argument("sic_outage_zero: shape mismatch");
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      if (cnr_est[i] > cnr_est[j] &&
          cnr_est[i] + err_lower[i] < cnr_est[j] + err_upper[j])
        return false;
  return true;
}

}  // namespace noma
