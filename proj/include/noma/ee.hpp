#pragma once

// Energy-efficiency maximization by the Dinkelbach method. The fractional
// objective f1/f2 is linearized at each outer step; the inner concave problem
// is solved in the virtual-OMA domain either by a full-budget water-fill
// (when the full-power condition certifies the cellular constraint is
// active), a projected-subgradient dual loop, or a log-barrier Newton method.

#include "noma/sumrate.hpp"

namespace noma {

struct LineSearchStall : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class EeInner { Subgradient, Barrier };

/// Numerator (bps) and denominator (Watts) of the EE ratio.
inline std::pair<double, double> ee_objective_split(
    const std::vector<ClusterSpec>& clusters, const PowerAllocation& allocation,
    const SystemParams& params) {
  const auto obj = system_objectives(clusters, allocation, params);
  return {obj.sum_rate_bps, allocation.total_power_w() + params.p_circuit_w};
}

/// Sufficient condition for the cellular power constraint to be active at the
/// EE optimum for parameter lambda: the unconstrained per-cluster stationary
/// budget exceeds every mask.
inline bool full_power_condition(const VirtualOmaSystem& v, double lambda,
                                 double ws_hz) {
  if (!(lambda > 0.0)) return true;  // water level -> infinity
  const double level = ws_hz / (kLn2 * lambda);
  for (size_t n = 0; n < v.size(); ++n)
    if (level - 1.0 / v.h_eff[n] + v.shift[n] <= v.p_mask_w[n]) return false;
  return true;
}

struct InnerResult {
  std::vector<double> q_tilde;
  int iterations = 0;
  SolveStatus status = SolveStatus::Optimal;
};

/// Projected subgradient on the budget dual of the lambda-linearized problem:
/// primal recovered in closed form, nu stepped on the budget residual. The
/// step is Newton-scaled from the problem data and relaxed on sign flips so
/// convergence is scale-independent.
inline InnerResult subgradient_inner(const VirtualOmaSystem& v, double lambda,
                                     double ws_hz) {
  const size_t n = v.size();
  InnerResult res;
  res.q_tilde.assign(n, 0.0);
  const double sum_min =
      std::accumulate(v.q_tilde_min.begin(), v.q_tilde_min.end(), 0.0);
  if (v.p_tilde_max <= sum_min + 1e-12 * std::max(1.0, sum_min)) {
    res.q_tilde = v.q_tilde_min;
    return res;
  }

  auto primal = [&](double nu, std::vector<double>& q) {
    const double denom = lambda + nu;
    double total = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double raw = denom > 0.0
                             ? ws_hz / (kLn2 * denom) - 1.0 / v.h_eff[i]
                             : std::numeric_limits<double>::infinity();
      q[i] = std::clamp(raw, v.q_tilde_min[i], v.p_tilde_mask[i]);
      total += q[i];
    }
    return total;
  };

  // Warm start near the water level that would spend the whole budget.
  const double nd = static_cast<double>(n);
  double nu = std::max(0.0, ws_hz * nd / (kLn2 * v.p_tilde_max) - lambda);
  double step = ws_hz * nd / (kLn2 * v.p_tilde_max * v.p_tilde_max);
  std::vector<double> q(n, 0.0), q_prev(n, 0.0);
  double prev_residual = 0.0;
  res.status = SolveStatus::MaxIterations;
  for (int it = 1; it <= 10000; ++it) {
    const double total = primal(nu, q);
    const double residual = v.p_tilde_max - total;  // >0: budget slack
    res.iterations = it;

    double dq = 0.0, scale = 0.0;
    for (size_t i = 0; i < n; ++i) {
      dq = std::max(dq, std::abs(q[i] - q_prev[i]));
      scale = std::max(scale, std::abs(q[i]));
    }
    const bool primal_settled = it > 1 && dq <= 1e-9 * std::max(scale, 1e-300);
    const bool slack_ok =
        nu == 0.0 || std::abs(residual) <= 1e-6 * v.p_tilde_max;
    if (primal_settled && slack_ok) {
      res.status = SolveStatus::Optimal;
      break;
    }
    if (it > 1 && residual * prev_residual < 0.0) step *= 0.5;
    nu = std::max(0.0, nu - step * residual);
    q_prev = q;
    prev_residual = residual;
  }
  res.q_tilde = std::move(q);
  return res;
}

/// Log-barrier interior-point solve of the lambda-linearized problem with the
/// budget and both box faces in the barrier; Newton steps use the
/// diagonal-plus-rank-one Hessian structure (Sherman-Morrison).
inline InnerResult barrier_inner(const VirtualOmaSystem& v, double lambda,
                                 double ws_hz) {
  const size_t n = v.size();
  InnerResult res;
  const double sum_min =
      std::accumulate(v.q_tilde_min.begin(), v.q_tilde_min.end(), 0.0);
  if (v.p_tilde_max <= sum_min + 1e-12 * std::max(1.0, sum_min)) {
    res.q_tilde = v.q_tilde_min;
    return res;
  }

  // Coordinates with a degenerate box are pinned and removed from the solve.
  std::vector<size_t> live;
  std::vector<double> q(n);
  double pinned_total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double span = v.p_tilde_mask[i] - v.q_tilde_min[i];
    if (span <= 1e-14 * std::max(1.0, std::abs(v.p_tilde_mask[i]))) {
      q[i] = v.q_tilde_min[i];
      pinned_total += q[i];
    } else {
      live.push_back(i);
    }
  }
  const double budget = v.p_tilde_max - pinned_total;
  const size_t m_live = live.size();
  if (m_live == 0) {
    res.q_tilde = std::move(q);
    return res;
  }

  double live_min = 0.0;
  for (size_t i : live) live_min += v.q_tilde_min[i];
  const double share = (budget - live_min) / static_cast<double>(m_live);
  for (size_t i : live)
    q[i] = v.q_tilde_min[i] +
           0.9 * std::min(v.p_tilde_mask[i] - v.q_tilde_min[i], share);

  auto f0 = [&](const std::vector<double>& x) {
    double s = 0.0;
    for (size_t i : live)
      s += lambda * x[i] - ws_hz * std::log1p(v.h_eff[i] * x[i]) / kLn2;
    return s;
  };
  auto slack_budget = [&](const std::vector<double>& x) {
    double total = pinned_total;
    for (size_t i : live) total += x[i];
    return v.p_tilde_max - total;
  };
  auto barrier_value = [&](const std::vector<double>& x, double t) {
    const double r = slack_budget(x);
    if (r <= 0.0) return std::numeric_limits<double>::infinity();
    double u = t * f0(x) - std::log(r);
    for (size_t i : live) {
      const double lo = x[i] - v.q_tilde_min[i];
      const double hi = v.p_tilde_mask[i] - x[i];
      if (lo <= 0.0 || hi <= 0.0) return std::numeric_limits<double>::infinity();
      u -= std::log(lo) + std::log(hi);
    }
    return u;
  };

  const double n_constraints = static_cast<double>(2 * m_live + 1);
  const double f_scale = std::max(1.0, std::abs(f0(q)));
  const double eps_gap = 1e-8 * f_scale;
  const double eps_newton = 1e-10 * f_scale;
  double t = n_constraints / f_scale;
  const double mu = 20.0;

  std::vector<double> grad(n, 0.0), dir(n, 0.0), trial(q);
  int total_newton = 0;
  while (n_constraints / t > eps_gap) {
    for (int inner = 0; inner < 200; ++inner) {
      ++total_newton;
      const double r = slack_budget(q);
      double sum_dinv_g = 0.0, sum_dinv_u2 = 0.0;
      for (size_t i : live) {
        const double lo = q[i] - v.q_tilde_min[i];
        const double hi = v.p_tilde_mask[i] - q[i];
        const double h = v.h_eff[i];
        grad[i] = t * (lambda - ws_hz * h / (kLn2 * (1.0 + h * q[i]))) + 1.0 / r -
                  1.0 / lo + 1.0 / hi;
        const double d = t * ws_hz * h * h / (kLn2 * (1.0 + h * q[i]) * (1.0 + h * q[i])) +
                         1.0 / (lo * lo) + 1.0 / (hi * hi);
        dir[i] = grad[i] / d;  // D^-1 g, reused below
        sum_dinv_g += dir[i];
        sum_dinv_u2 += 1.0 / d;
      }
      // (D + uu^T)^-1 g with u = (1/r) * ones, via Sherman-Morrison.
      const double w = 1.0 / (r * r);
      const double corr = w * sum_dinv_g / (1.0 + w * sum_dinv_u2);
      double decrement2 = 0.0;
      for (size_t i : live) {
        const double lo = q[i] - v.q_tilde_min[i];
        const double hi = v.p_tilde_mask[i] - q[i];
        const double h = v.h_eff[i];
        const double d = t * ws_hz * h * h / (kLn2 * (1.0 + h * q[i]) * (1.0 + h * q[i])) +
                         1.0 / (lo * lo) + 1.0 / (hi * hi);
        dir[i] = -(grad[i] - corr) / d;
        decrement2 += -grad[i] * dir[i];
      }
      if (decrement2 * 0.5 <= eps_newton) break;

      const double u0 = barrier_value(q, t);
      double g_dot_dir = 0.0;
      for (size_t i : live) g_dot_dir += grad[i] * dir[i];
      double s = 1.0;
      bool accepted = false;
      for (int ls = 0; ls < 100; ++ls) {
        trial = q;
        for (size_t i : live) trial[i] = q[i] + s * dir[i];
        if (barrier_value(trial, t) <= u0 + 0.25 * s * g_dot_dir) {
          accepted = true;
          break;
        }
        s *= 0.5;
      }
      if (!accepted) throw LineSearchStall("barrier line search failed to make progress");
      q = trial;
    }
    t *= mu;
  }
  res.iterations = total_newton;
  res.q_tilde = std::move(q);
  return res;
}

struct DinkelbachState {
  double lambda = 0.0;
  double f_value = 0.0;
  int iteration = 0;
  std::vector<std::pair<double, double>> history;  // (lambda, F)
};

/// Dinkelbach outer loop: lambda tracks the best EE seen; each step maximizes
/// f1 - lambda f2 with the cheapest applicable inner solver and stops when the
/// linearized surplus F vanishes.
inline SolveReport dinkelbach_solve(const std::vector<ClusterSpec>& clusters,
                                    const SystemParams& params,
                                    EeInner inner = EeInner::Subgradient,
                                    DinkelbachState* state_out = nullptr) {
  const auto feas = feasibility_check(clusters, params);
  if (!feas.feasible) {
    SolveReport rep;
    rep.status = SolveStatus::Infeasible;
    rep.diagnostics = feas.message();
    return rep;
  }
  const double ws = params.subchannel_bandwidth_hz;
  const auto v = to_virtual_oma(clusters, params);

  // lambda_0: EE of the minimum-power allocation, always attainable.
  DinkelbachState st;
  {
    PowerAllocation min_alloc;
    for (const auto& c : clusters) {
      auto [p, q_min] = min_power_allocation(c, ws);
      min_alloc.cluster_budgets_w.push_back(q_min);
      min_alloc.powers_w.push_back(std::move(p));
    }
    auto [f1, f2] = ee_objective_split(clusters, min_alloc, params);
    st.lambda = f1 / f2;
  }

  SolveReport rep;
  int inner_total = 0;
  SolveStatus status = SolveStatus::MaxIterations;
  for (int outer = 1; outer <= 50; ++outer) {
    st.iteration = outer;
    std::vector<double> q_tilde;
    if (full_power_condition(v, st.lambda, ws)) {
      auto wf = waterfill(v, ws);
      inner_total += wf.iterations;
      q_tilde = std::move(wf.q_tilde);
    } else {
      auto ir = inner == EeInner::Subgradient ? subgradient_inner(v, st.lambda, ws)
                                              : barrier_inner(v, st.lambda, ws);
      inner_total += ir.iterations;
      q_tilde = std::move(ir.q_tilde);
    }
    rep = detail::report_from_budgets(clusters, params, v, q_tilde);
    auto [f1, f2] = ee_objective_split(clusters, rep.allocation, params);
    st.f_value = f1 - st.lambda * f2;
    st.history.emplace_back(st.lambda, st.f_value);
    if (std::abs(st.f_value) <= 1e-7 * f1) {
      status = SolveStatus::Optimal;
      break;
    }
    st.lambda = f1 / f2;
  }
  rep.iterations["dinkelbach"] = st.iteration;
  rep.iterations["inner"] = inner_total;
  rep.status = status;
  if (state_out) *state_out = std::move(st);
  return rep;
}

}  // namespace noma
