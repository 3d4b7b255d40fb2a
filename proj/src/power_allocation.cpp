#include "power_allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mathutil.hpp"

namespace plcsec {

WaterfillResult waterfill(std::span<const double> gains, double total_power_w) {
    size_t n = gains.size();
    if (n == 0)
        throw ValidationError("waterfill: no subchannels");
    if (!(total_power_w > 0.0) || !std::isfinite(total_power_w))
        throw ValidationError("waterfill: total power must be positive and finite");

    std::vector<size_t> order;
    order.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        if (!std::isfinite(gains[i]) || gains[i] < 0.0)
            throw ValidationError("waterfill: gains must be finite and non-negative (bin " +
                                  std::to_string(i) + ")");
        if (gains[i] > kMinUsableGain) order.push_back(i);
    }
    if (order.empty())
        throw ValidationError("waterfill: all gains are zero, no rate improvement is feasible");

    // Ascending inverse gain; equal inverse gains admit bins lowest-index first.
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        double ia = 1.0 / gains[a], ib = 1.0 / gains[b];
        if (ia != ib) return ia < ib;
        return a < b;
    });

    // Largest m with (P_T + sum_{j<m} 1/g_j) / m > 1/g_{m-1} gives the KKT-
    // feasible active set; the water level follows in closed form.
    size_t m_best = 1;
    double mu = 0.0;
    CompensatedSum prefix;
    for (size_t m = 1; m <= order.size(); ++m) {
        double inv = 1.0 / gains[order[m - 1]];
        prefix.add(inv);
        double cand = (total_power_w + prefix.value()) / static_cast<double>(m);
        if (cand > inv) {
            m_best = m;
            mu = cand;
        } else {
            break;
        }
    }

    WaterfillResult res;
    res.alloc.powers_w.assign(n, 0.0);
    res.alloc.total_w = total_power_w;
    res.active.assign(n, 0);
    res.water_level = mu;
    res.n_active = static_cast<int>(m_best);
    CompensatedSum spent;
    for (size_t j = 0; j < m_best; ++j) {
        size_t i = order[j];
        res.alloc.powers_w[i] = std::max(0.0, mu - 1.0 / gains[i]);
        res.active[i] = 1;
        spent.add(res.alloc.powers_w[i]);
    }
    // mu - 1/g cancels badly when the budget is tiny against the inverse
    // gains; a proportional correction restores the budget to rounding while
    // leaving the KKT certificate intact (the slack is far inside tolerance
    // exactly when the cancellation is large).
    if (spent.value() > 0.0 && std::isfinite(spent.value())) {
        double scale = total_power_w / spent.value();
        for (size_t j = 0; j < m_best; ++j) res.alloc.powers_w[order[j]] *= scale;
    }
    return res;
}

PowerAllocation uniform_allocation(int n, double total_power_w,
                                   const std::vector<uint8_t>* active_mask) {
    if (n < 1)
        throw ValidationError("uniform_allocation: need at least one subchannel");
    if (!(total_power_w > 0.0) || !std::isfinite(total_power_w))
        throw ValidationError("uniform_allocation: total power must be positive and finite");

    PowerAllocation alloc;
    alloc.total_w = total_power_w;
    alloc.powers_w.assign(static_cast<size_t>(n), 0.0);
    if (!active_mask) {
        double share = total_power_w / n;
        std::fill(alloc.powers_w.begin(), alloc.powers_w.end(), share);
        return alloc;
    }
    if (active_mask->size() != static_cast<size_t>(n))
        throw ValidationError("uniform_allocation: mask length mismatch");
    size_t count = static_cast<size_t>(
        std::count_if(active_mask->begin(), active_mask->end(), [](uint8_t b) { return b != 0; }));
    if (count == 0)
        throw ValidationError("uniform_allocation: active set is empty");
    double share = total_power_w / static_cast<double>(count);
    for (int i = 0; i < n; ++i)
        if ((*active_mask)[static_cast<size_t>(i)]) alloc.powers_w[static_cast<size_t>(i)] = share;
    return alloc;
}

} // namespace plcsec
