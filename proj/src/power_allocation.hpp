#ifndef PLCSEC_POWER_ALLOCATION_HPP
#define PLCSEC_POWER_ALLOCATION_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "spectral.hpp"

namespace plcsec {

// Gains at or below this are treated as exact zeros so 1/g never overflows.
inline constexpr double kMinUsableGain = 1e-300;

// Solution of max sum log2(1 + P_k g_k) s.t. sum P_k = P_T, P_k >= 0,
// together with its KKT certificate: the water level mu and the active set
// (P_k = mu - 1/g_k on active bins, 0 elsewhere).
struct WaterfillResult {
    PowerAllocation alloc;
    double water_level = 0.0;
    std::vector<uint8_t> active;
    int n_active = 0;
};

// Exact water-filling: sort 1/g ascending (ties broken by bin index), grow
// the candidate active set, and solve the water level in closed form for the
// largest feasible set. Deterministic and exact to rounding; no iteration.
WaterfillResult waterfill(std::span<const double> gains, double total_power_w);

// Equal split of the budget over active bins (all bins when no mask).
PowerAllocation uniform_allocation(int n, double total_power_w,
                                   const std::vector<uint8_t>* active_mask = nullptr);

} // namespace plcsec

#endif
