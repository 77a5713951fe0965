#pragma once

// Channel realization model: user distance uniform between the minimum
// distance and the cell radius, 3GPP-style log-distance path loss, lognormal
// shadowing, Rayleigh flat fading. Gains are flat across subchannels; the per-scheme CNR is
// gain / (noise density x subchannel bandwidth).

#include "noma/core.hpp"
#include "noma/philox.hpp"

namespace noma {

struct ChannelModel {
  double cell_radius_m = 500.0;
  double min_distance_m = 20.0;
  double shadowing_sigma_db = 8.0;
  double path_loss_db_at(double distance_m) const {
    return 128.1 + 37.6 * std::log10(distance_m / 1000.0);
  }
};

/// Linear channel gains for one realization, one per user. Each (seed,
/// realization) pair is a dedicated counter stream, so draws are identical
/// regardless of how realizations are split across workers.
inline std::vector<double> generate_realization(const ChannelModel& model,
                                                int n_users, uint64_t seed,
                                                uint64_t realization) {
  Philox rng(seed, realization);
  std::vector<double> gains(static_cast<size_t>(n_users));
  for (auto& g : gains) {
    // Distance uniform on [min_distance, cell_radius].
    const double d = model.min_distance_m +
                     rng.uniform() * (model.cell_radius_m - model.min_distance_m);
    const double loss_db = model.path_loss_db_at(d);
    const double shadow_db = model.shadowing_sigma_db * rng.normal();
    const double fading = rng.exponential();
    g = db_to_linear(-loss_db - shadow_db) * fading;
  }
  return gains;
}

/// Round-robin clustering over descending CNR rank: the N strongest users
/// become cluster heads, then assignment wraps. N = ceil(K / u_max).
inline std::vector<std::vector<int>> cluster_users(const std::vector<double>& cnr,
                                                   int u_max) {
  const int k = static_cast<int>(cnr.size());
  if (k < 1) throw std::invalid_argument("cluster_users: need at least one user");
  if (u_max < 1) throw std::invalid_argument("cluster_users: u_max must be >= 1");
  const int n = (k + u_max - 1) / u_max;
  std::vector<int> order(static_cast<size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    const double ha = cnr[static_cast<size_t>(a)], hb = cnr[static_cast<size_t>(b)];
    if (ha != hb) return ha > hb;
    return a < b;
  });
  std::vector<std::vector<int>> clusters(static_cast<size_t>(n));
  for (int rank = 0; rank < k; ++rank)
    clusters[static_cast<size_t>(rank % n)].push_back(order[static_cast<size_t>(rank)]);
  return clusters;
}

}  // namespace noma
