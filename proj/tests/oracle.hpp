#pragma once

// Reference solvers for validating the closed forms and iterative solvers at
// small scale. Deliberately test-only and deliberately slow: everything here
// works through the raw SINR/rate evaluators, never through the solver
// formulas under test (ee_exhaustive excepted, which by design sweeps the
// total power against the production water-filler).

#include <functional>

#include "noma/ee.hpp"

namespace noma::oracle {

struct NoFeasiblePoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OracleConfig {
  int grid_points = 2001;
  double pg_step = 0.0;  // 0 = auto
  int pg_iterations = 20000;
  double tolerance = 1e-10;
};

/// Smallest own power reaching r_min against fixed interference, found by
/// doubling then three passes of grid refinement over the monotone rate.
inline double min_power_for_rate(double h, double interference, double r_min,
                                 double ws_hz, int grid_points = 2001) {
  if (r_min <= 0.0) return 0.0;
  auto rate = [&](double p) {
    return ws_hz * std::log2(1.0 + p * h / (h * interference + 1.0));
  };
  double lo = 0.0, hi = 1.0 / h;
  for (int i = 0; i < 600 && rate(hi) < r_min; ++i) hi *= 2.0;
  if (rate(hi) < r_min) throw NoFeasiblePoint("rate target unreachable");
  for (int pass = 0; pass < 3; ++pass) {
    const double step = (hi - lo) / (grid_points - 1);
    double found = hi;
    for (int i = 1; i < grid_points; ++i) {
      const double p = lo + step * i;
      if (rate(p) >= r_min) {
        found = p;
        lo = p - step;
        break;
      }
    }
    hi = found;
    lo = std::max(0.0, lo);
  }
  return hi;
}

/// Minimum total cluster power meeting all demands: the strongest user needs
/// no interference margin, so minimizing power user by user from the head
/// down is globally minimal.
inline double grid_min_power(const ClusterSpec& cluster, double ws_hz,
                             const OracleConfig& cfg = {}) {
  double total = 0.0;
  for (int k = static_cast<int>(cluster.size()) - 1; k >= 0; --k) {
    const size_t uk = static_cast<size_t>(k);
    total += min_power_for_rate(cluster.cnr[uk], total, cluster.r_min_bps[uk],
                                ws_hz, cfg.grid_points);
  }
  return total;
}

/// Exhaustive simplex grid for the best intra-cluster split of q_n
/// (clusters of at most 3 users).
inline std::vector<double> grid_intra_cluster(const ClusterSpec& cluster, double q_n,
                                              double ws_hz,
                                              const OracleConfig& cfg = {}) {
  const size_t n = cluster.size();
  if (n > 3) throw std::invalid_argument("grid oracle limited to 3 users");
  auto sum_rate_if_feasible = [&](const std::vector<double>& p, double& out) {
    double s = 0.0;
    for (size_t k = 0; k < n; ++k) {
      const double r = rate_bps(cluster, p, k, ws_hz);
      if (r < cluster.r_min_bps[k] - 1e-9 * std::max(1.0, cluster.r_min_bps[k]))
        return false;
      s += r;
    }
    out = s;
    return true;
  };

  std::vector<double> best;
  double best_rate = -1.0;
  const double step = q_n / (cfg.grid_points - 1);
  std::vector<double> p(n, 0.0);
  if (n == 1) {
    p[0] = q_n;
    double r;
    if (!sum_rate_if_feasible(p, r)) throw NoFeasiblePoint("singleton infeasible");
    return p;
  }
  for (int i = 0; i < cfg.grid_points; ++i) {
    p[0] = step * i;
    if (n == 2) {
      p[1] = q_n - p[0];
      double r;
      if (sum_rate_if_feasible(p, r) && r > best_rate) {
        best_rate = r;
        best = p;
      }
    } else {
      for (int j = 0; i + j < cfg.grid_points; ++j) {
        p[1] = step * j;
        p[2] = q_n - p[0] - p[1];
        double r;
        if (sum_rate_if_feasible(p, r) && r > best_rate) {
          best_rate = r;
          best = p;
        }
      }
    }
  }
  if (best.empty()) throw NoFeasiblePoint("no grid point meets the demands");
  return best;
}

namespace detail {

/// Splits a cluster budget by direct construction: walking up from the
/// weakest user, give each the least power meeting its demand (interference
/// is whatever remains above it); the head keeps the remainder. Returns false
/// if the demands cannot be met within q_n.
inline bool split_budget(const ClusterSpec& cluster, double q_n, double ws_hz,
                         std::vector<double>& p) {
  const size_t n = cluster.size();
  p.assign(n, 0.0);
  double used = 0.0;
  for (size_t k = 0; k + 1 < n; ++k) {
    // Own power x faces interference q_n - used - x; solve by bisection.
    auto rate = [&](double x) {
      const double h = cluster.cnr[k];
      return ws_hz * std::log2(1.0 + x * h / (h * (q_n - used - x) + 1.0));
    };
    const double cap = q_n - used;
    if (rate(cap) < cluster.r_min_bps[k]) return false;
    double lo = 0.0, hi = cap;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (rate(mid) >= cluster.r_min_bps[k] ? hi : lo) = mid;
    }
    p[k] = hi;
    used += hi;
  }
  p[n - 1] = q_n - used;
  if (p[n - 1] < -1e-12 * std::max(1.0, q_n)) return false;
  p[n - 1] = std::max(0.0, p[n - 1]);
  return rate_bps(cluster, p, n - 1, ws_hz) >=
         cluster.r_min_bps[n - 1] * (1.0 - 1e-9) - 1e-12;
}

inline double objective(const std::vector<ClusterSpec>& clusters, double ws_hz,
                        const std::vector<double>& q, std::vector<double>& scratch) {
  double total = 0.0;
  for (size_t n = 0; n < clusters.size(); ++n) {
    if (!detail::split_budget(clusters[n], q[n], ws_hz, scratch))
      return -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < clusters[n].size(); ++k)
      total += rate_bps(clusters[n], scratch, k, ws_hz);
  }
  return total;
}

/// Euclidean projection onto {lo <= q <= hi, sum q <= budget}.
inline void project(std::vector<double>& q, const std::vector<double>& lo,
                    const std::vector<double>& hi, double budget) {
  const size_t n = q.size();
  auto clip_sum = [&](double tau) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += std::clamp(q[i] - tau, lo[i], hi[i]);
    return s;
  };
  double tau = 0.0;
  if (clip_sum(0.0) > budget) {
    double t_lo = 0.0, t_hi = 1.0;
    while (clip_sum(t_hi) > budget) t_hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      tau = 0.5 * (t_lo + t_hi);
      (clip_sum(tau) > budget ? t_lo : t_hi) = tau;
    }
    tau = t_hi;
  }
  for (size_t i = 0; i < n; ++i) q[i] = std::clamp(q[i] - tau, lo[i], hi[i]);
}

}  // namespace detail

struct PgResult {
  double sum_rate_bps = 0.0;
  std::vector<double> q;
  int iterations = 0;
};

/// Projected gradient ascent over the cluster budgets with finite-difference
/// gradients and a pairwise-transfer polish. The intra-cluster split for a
/// candidate budget is constructed directly (split_budget above), never via
/// the closed forms under test.
inline PgResult projected_gradient_sum_rate(const std::vector<ClusterSpec>& clusters,
                                            const SystemParams& params,
                                            const OracleConfig& cfg = {}) {
  const size_t n = clusters.size();
  const double ws = params.subchannel_bandwidth_hz;
  std::vector<double> lo(n), hi(n), q(n);
  for (size_t i = 0; i < n; ++i) {
    lo[i] = grid_min_power(clusters[i], ws, cfg) * (1.0 + 1e-9) + 1e-300;
    hi[i] = params.p_mask_w[static_cast<size_t>(clusters[i].subchannel_index)];
    q[i] = lo[i];
  }
  // Spread the remaining budget evenly, then project.
  double remaining = params.p_max_w - std::accumulate(lo.begin(), lo.end(), 0.0);
  for (size_t i = 0; i < n; ++i) q[i] += remaining / static_cast<double>(n);
  detail::project(q, lo, hi, params.p_max_w);

  std::vector<double> scratch, grad(n), trial(n);
  double f = detail::objective(clusters, ws, q, scratch);
  double step = cfg.pg_step > 0.0 ? cfg.pg_step
                                  : params.p_max_w / static_cast<double>(n);
  PgResult res;
  for (int it = 0; it < cfg.pg_iterations; ++it) {
    res.iterations = it + 1;
    for (size_t i = 0; i < n; ++i) {
      const double h = 1e-7 * std::max(q[i], 1e-3 * params.p_max_w);
      trial = q;
      const double xp = std::min(q[i] + h, hi[i]);
      const double xm = std::max(q[i] - h, lo[i]);
      if (xp <= xm) {
        grad[i] = 0.0;
        continue;
      }
      trial[i] = xp;
      const double fp = detail::objective(clusters, ws, trial, scratch);
      trial[i] = xm;
      const double fm = detail::objective(clusters, ws, trial, scratch);
      grad[i] = (fp - fm) / (xp - xm);
    }
    double gnorm = 0.0;
    for (double g : grad) gnorm = std::max(gnorm, std::abs(g));
    if (gnorm == 0.0) break;
    bool improved = false;
    for (int ls = 0; ls < 40; ++ls) {
      for (size_t i = 0; i < n; ++i) trial[i] = q[i] + step * grad[i] / gnorm;
      detail::project(trial, lo, hi, params.p_max_w);
      const double ft = detail::objective(clusters, ws, trial, scratch);
      if (ft > f) {
        q = trial;
        f = ft;
        improved = true;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    if (!improved && step < 1e-14 * params.p_max_w) break;
  }

  // Pairwise transfer polish: handles the boundary face gradient projection
  // reaches only slowly.
  for (double delta = 1e-2 * params.p_max_w; delta > 1e-13 * params.p_max_w;
       delta *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          trial = q;
          trial[i] = std::max(lo[i], q[i] - delta);
          trial[j] = std::min(hi[j], q[j] + (q[i] - trial[i]));
          if (trial[j] - q[j] < q[i] - trial[i])  // mask bound: shrink the move
            trial[i] = q[i] - (trial[j] - q[j]);
          const double ft = detail::objective(clusters, ws, trial, scratch);
          if (ft > f) {
            q = trial;
            f = ft;
            moved = true;
          }
        }
    }
  }
  res.sum_rate_bps = f;
  res.q = std::move(q);
  return res;
}

struct EeSweepResult {
  double best_ee = 0.0;
  double best_total_power_w = 0.0;
  double grid_step_w = 0.0;
  // EE drop from the best grid point to its neighbors. For a locally concave
  // EE curve this upper-bounds the gap between the grid best and the true
  // optimum, so it is the sweep's resolution.
  double ee_resolution = 0.0;
};

/// Sweeps the total transmit power over its feasible range, water-filling at
/// each point, and keeps the best EE.
inline EeSweepResult ee_exhaustive(const std::vector<ClusterSpec>& clusters,
                                   const SystemParams& params,
                                   const OracleConfig& cfg = {}) {
  const double ws = params.subchannel_bandwidth_hz;
  double q_min_total = 0.0;
  for (const auto& c : clusters) q_min_total += min_power_allocation(c, ws).second;
  EeSweepResult res;
  res.grid_step_w = (params.p_max_w - q_min_total) / (cfg.grid_points - 1);
  auto ee_at = [&](double p_ee) {
    SystemParams sub = params;
    sub.p_max_w = p_ee;
    const auto rep = maximize_sum_rate(clusters, sub);
    return rep.status == SolveStatus::Infeasible ? -1.0 : rep.ee_bps_per_joule;
  };
  int best_i = -1;
  for (int i = 0; i < cfg.grid_points; ++i) {
    const double p_ee = q_min_total + res.grid_step_w * i;
    if (p_ee <= 0.0) continue;
    const double ee = ee_at(p_ee);
    if (ee > res.best_ee) {
      res.best_ee = ee;
      res.best_total_power_w = p_ee;
      best_i = i;
    }
  }
  for (int i : {best_i - 1, best_i + 1}) {
    if (i < 0 || i >= cfg.grid_points) continue;
    const double ee = ee_at(q_min_total + res.grid_step_w * i);
    if (ee >= 0.0)
      res.ee_resolution = std::max(res.ee_resolution, res.best_ee - ee);
  }
  return res;
}

/// Central finite differences against an analytic gradient; returns the
/// largest relative coordinate error.
inline double finite_difference_check(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& grad, const std::vector<double>& point,
    double rel_step = 1e-6) {
  double worst = 0.0;
  std::vector<double> x = point;
  for (size_t i = 0; i < point.size(); ++i) {
    const double h = rel_step * std::max(std::abs(point[i]), 1e-8);
    x[i] = point[i] + h;
    const double fp = f(x);
    x[i] = point[i] - h;
    const double fm = f(x);
    x[i] = point[i];
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-12});
    worst = std::max(worst, std::abs(fd - grad[i]) / denom);
  }
  return worst;
}

}  // namespace noma::oracle
