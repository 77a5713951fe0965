#pragma once

// Sum-rate maximization: every cluster collapses to one virtual OMA user with
// effective CNR H_n = alpha_n * h_head and an affine budget shift c_n/alpha_n,
// after which the inter-cluster split is classic box-constrained water-filling
// solved by bisection on the water level.

#include "noma/cluster.hpp"

namespace noma {

struct BracketFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VirtualOmaSystem {
  std::vector<double> h_eff;        // H_n
  std::vector<double> q_tilde_min;  // Q^min_n - shift_n, always >= 0
  std::vector<double> p_tilde_mask;
  double p_tilde_max = 0.0;
  std::vector<double> shift;    // c_n / alpha_n; q_n = q~_n + shift_n
  std::vector<double> weights;  // head weights, default 1

  // Kept for diagnostics and the EE full-power test.
  std::vector<ClusterConstants> constants;
  std::vector<double> h_head;
  std::vector<double> p_mask_w;  // original per-cluster mask

  size_t size() const { return h_eff.size(); }
};

inline VirtualOmaSystem to_virtual_oma(const std::vector<ClusterSpec>& clusters,
                                       const SystemParams& params,
                                       std::vector<double> weights = {}) {
  if (weights.empty()) weights.assign(clusters.size(), 1.0);
  if (weights.size() != clusters.size())
    throw std::invalid_argument("to_virtual_oma: one weight per cluster");
  for (double w : weights)
    if (!(w >= 1.0)) throw std::invalid_argument("head weights must be >= 1");

  VirtualOmaSystem v;
  v.weights = std::move(weights);
  double shift_sum = 0.0;
  const double ws = params.subchannel_bandwidth_hz;
  for (const auto& cluster : clusters) {
    auto cc = ClusterConstants::from(cluster, ws);
    const double head_cnr = cluster.cnr.back();
    const double s = cc.c_total / cc.alpha;
    v.h_eff.push_back(cc.alpha * head_cnr);
    v.q_tilde_min.push_back(std::max(0.0, cc.q_min_w - s));
    const double mask = params.p_mask_w[static_cast<size_t>(cluster.subchannel_index)];
    v.p_tilde_mask.push_back(mask - s);
    v.shift.push_back(s);
    v.h_head.push_back(head_cnr);
    v.p_mask_w.push_back(mask);
    v.constants.push_back(std::move(cc));
    shift_sum += s;
  }
  v.p_tilde_max = params.p_max_w - shift_sum;
  return v;
}

struct WaterfillResult {
  std::vector<double> q_tilde;
  double nu = 0.0;  // budget multiplier at the solution
  int iterations = 0;
  SolveStatus status = SolveStatus::Optimal;
};

/// Box-constrained water-filling: q~_n = clamp(w_n x - 1/H_n, [Q~min, p~mask])
/// with the water level x = W_s/(ln2 nu) bisected until sum q~ = P~max within
/// 1e-8 relative. Bisecting the level (rather than nu itself) gives a
/// guaranteed bracket and uniform convergence across CNR scales.
inline WaterfillResult waterfill(const VirtualOmaSystem& v, double ws_hz) {
  const size_t n = v.size();
  WaterfillResult res;
  const double sum_mask = std::accumulate(v.p_tilde_mask.begin(), v.p_tilde_mask.end(), 0.0);
  const double sum_min = std::accumulate(v.q_tilde_min.begin(), v.q_tilde_min.end(), 0.0);
  if (v.p_tilde_max >= sum_mask) {  // every box saturates
    res.q_tilde = v.p_tilde_mask;
    return res;
  }
  if (v.p_tilde_max <= sum_min + 1e-12 * std::max(1.0, sum_min)) {
    res.q_tilde = v.q_tilde_min;  // no slack beyond the minima
    return res;
  }

  auto fill = [&](double x, std::vector<double>& q) {
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      q[i] = std::clamp(v.weights[i] * x - 1.0 / v.h_eff[i], v.q_tilde_min[i],
                        v.p_tilde_mask[i]);
      total += q[i];
    }
    return total;
  };

  double x_lo = 0.0;
  double max_inv_h = 0.0;
  for (double h : v.h_eff) max_inv_h = std::max(max_inv_h, 1.0 / h);
  double x_hi = sum_mask + max_inv_h;
  std::vector<double> q(n, 0.0);
  if (fill(x_hi, q) < v.p_tilde_max)
    throw BracketFailure("water level bracket failed; infeasible virtual system");

  const double tol = 1e-8 * std::max(std::abs(v.p_tilde_max), 1e-300);
  double total = 0.0;
  res.status = SolveStatus::MaxIterations;
  for (int it = 1; it <= 200; ++it) {
    const double x = 0.5 * (x_lo + x_hi);
    total = fill(x, q);
    res.iterations = it;
    if (std::abs(total - v.p_tilde_max) <= tol) {
      res.status = SolveStatus::Optimal;
      res.nu = ws_hz / (kLn2 * x);
      break;
    }
    (total < v.p_tilde_max ? x_lo : x_hi) = x;
  }
  if (res.status == SolveStatus::MaxIterations) res.nu = ws_hz / (kLn2 * 0.5 * (x_lo + x_hi));
  res.q_tilde = std::move(q);
  return res;
}

namespace detail {

/// Maps per-cluster budgets back to a full report via the closed-form split.
inline SolveReport report_from_budgets(const std::vector<ClusterSpec>& clusters,
                                       const SystemParams& params,
                                       const VirtualOmaSystem& v,
                                       const std::vector<double>& q_tilde) {
  SolveReport rep;
  const double ws = params.subchannel_bandwidth_hz;
  for (size_t i = 0; i < clusters.size(); ++i) {
    const double q_n = q_tilde[i] + v.shift[i];
    auto p = intra_cluster_optimal(clusters[i], q_n, ws, v.p_mask_w[i], &v.constants[i]);
    std::vector<double> rates(p.size());
    for (size_t k = 0; k < p.size(); ++k) rates[k] = rate_bps(clusters[i], p, k, ws);
    rep.allocation.cluster_budgets_w.push_back(
        std::accumulate(p.begin(), p.end(), 0.0));
    rep.allocation.powers_w.push_back(std::move(p));
    rep.rates_bps.push_back(std::move(rates));
  }
  const auto obj = system_objectives(clusters, rep.allocation, params);
  rep.sum_rate_bps = obj.sum_rate_bps;
  rep.ee_bps_per_joule = obj.ee_bps_per_joule;
  return rep;
}

}  // namespace detail

/// Full sum-rate pipeline: feasibility, virtual-OMA transform, water-filling,
/// closed-form intra-cluster split.
inline SolveReport maximize_sum_rate(const std::vector<ClusterSpec>& clusters,
                                     const SystemParams& params,
                                     std::vector<double> weights = {}) {
  const auto feas = feasibility_check(clusters, params);
  if (!feas.feasible) {
    SolveReport rep;
    rep.status = SolveStatus::Infeasible;
    rep.diagnostics = feas.message();
    return rep;
  }
  const auto v = to_virtual_oma(clusters, params, std::move(weights));
  auto wf = waterfill(v, params.subchannel_bandwidth_hz);
  auto rep = detail::report_from_budgets(clusters, params, v, wf.q_tilde);
  rep.iterations["bisection"] = wf.iterations;
  rep.status = wf.status;
  return rep;
}

enum class EqualPowerVerdict { Optimal, NotOptimal, NotApplicable };

struct EqualPowerResult {
  EqualPowerVerdict verdict = EqualPowerVerdict::NotApplicable;
  std::string reason;
};

/// Certificate that the trivial split q_n = P^max/N is optimal. Valid only in
/// the c ~ 0 regime; outside it the check abstains rather than guessing.
inline EqualPowerResult equal_power_optimality(const std::vector<ClusterSpec>& clusters,
                                               const SystemParams& params,
                                               double c_threshold = 1e-3) {
  EqualPowerResult res;
  const double ws = params.subchannel_bandwidth_hz;
  const double q_eq = params.p_max_w / static_cast<double>(clusters.size());
  std::vector<ClusterConstants> cc;
  for (const auto& c : clusters) cc.push_back(ClusterConstants::from(c, ws));
  for (const auto& k : cc)
    if (std::abs(k.c_total) / (k.alpha * q_eq) > c_threshold) {
      res.reason = "shift constants not negligible at this budget";
      return res;
    }
  for (size_t n = 0; n < clusters.size(); ++n) {
    const double mask = params.p_mask_w[static_cast<size_t>(clusters[n].subchannel_index)];
    if (q_eq < cc[n].q_min_w || q_eq > mask) {
      res.verdict = EqualPowerVerdict::NotOptimal;
      res.reason = "equal share outside cluster " + std::to_string(n) + " box";
      return res;
    }
  }
  // Condition 2: alpha_n * h_head equal across clusters.
  double h0 = cc[0].alpha * clusters[0].cnr.back();
  for (size_t n = 1; n < clusters.size(); ++n) {
    const double hn = cc[n].alpha * clusters[n].cnr.back();
    if (std::abs(hn - h0) > 1e-6 * std::max(std::abs(hn), std::abs(h0))) {
      res.verdict = EqualPowerVerdict::NotOptimal;
      res.reason = "effective CNR ratio differs from alpha ratio";
      return res;
    }
  }
  res.verdict = EqualPowerVerdict::Optimal;
  res.reason = "both equal-split conditions hold";
  return res;
}

/// Weighted fairness: minimum demands scaled per user (scale 1 on heads),
/// head weights biasing the water-filling. Reduces to maximize_sum_rate when
/// all scales and weights are 1.
inline SolveReport mixed_fairness_solve(
    const std::vector<ClusterSpec>& clusters, const SystemParams& params,
    const std::vector<std::vector<double>>& lambda_scale,
    std::vector<double> head_weights) {
  if (lambda_scale.size() != clusters.size())
    throw std::invalid_argument("mixed_fairness_solve: one scale row per cluster");
  std::vector<ClusterSpec> scaled = clusters;
  for (size_t n = 0; n < clusters.size(); ++n) {
    if (lambda_scale[n].size() != clusters[n].size())
      throw std::invalid_argument("mixed_fairness_solve: scale row shape mismatch");
    for (size_t k = 0; k < clusters[n].size(); ++k) {
      const double lam = lambda_scale[n][k];
      if (!(lam >= 1.0)) throw std::invalid_argument("lambda scales must be >= 1");
      if (k + 1 == clusters[n].size() && lam != 1.0)
        throw std::invalid_argument("head users must have lambda scale 1");
      scaled[n].r_min_bps[k] *= lam;
    }
  }
  return maximize_sum_rate(scaled, params, std::move(head_weights));
}

}  // namespace noma
