#include "spectral.hpp"

#include <cmath>

namespace plcsec {

SpectralGrid make_grid(int n_subchannels, double f_start_hz, double f_stop_hz) {
    if (n_subchannels < 1)
        throw ValidationError("make_grid: n_subchannels must be >= 1");
    if (!(std::isfinite(f_start_hz) && std::isfinite(f_stop_hz)))
        throw ValidationError("make_grid: band edges must be finite");
    if (!(f_stop_hz > f_start_hz))
        throw ValidationError("make_grid: f_stop must exceed f_start");
    return SpectralGrid{n_subchannels, f_start_hz, f_stop_hz};
}

void ChannelRealization::validate() const {
    size_t n = static_cast<size_t>(grid.n_subchannels);
    if (cfr.size() != n)
        throw ValidationError("ChannelRealization: cfr length " + std::to_string(cfr.size()) +
                              " does not match grid size " + std::to_string(n));
    if (noise_power_w.size() != n)
        throw ValidationError("ChannelRealization: noise length " +
                              std::to_string(noise_power_w.size()) +
                              " does not match grid size " + std::to_string(n));
    for (size_t k = 0; k < n; ++k) {
        if (!(noise_power_w[k] > 0.0) || !std::isfinite(noise_power_w[k]))
            throw ValidationError("ChannelRealization: noise power must be positive and finite at bin " +
                                  std::to_string(k));
        if (!std::isfinite(cfr[k].real()) || !std::isfinite(cfr[k].imag()))
            throw ValidationError("ChannelRealization: non-finite CFR at bin " + std::to_string(k));
    }
}

double dbm_to_watts(double dbm) {
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double watts_to_dbm(double watts) {
    if (!(watts > 0.0))
        throw ValidationError("watts_to_dbm: input must be positive");
    return 10.0 * std::log10(watts) + 30.0;
}

std::vector<double> per_bin_snr(const ChannelRealization& ch, const PowerAllocation& alloc) {
    size_t n = ch.cfr.size();
    if (alloc.powers_w.size() != n || ch.noise_power_w.size() != n)
        throw ValidationError("per_bin_snr: allocation/channel length mismatch");
    std::vector<double> snr(n);
    for (size_t k = 0; k < n; ++k)
        snr[k] = alloc.powers_w[k] * std::norm(ch.cfr[k]) / ch.noise_power_w[k];
    return snr;
}

std::vector<double> gain_to_noise(const ChannelRealization& ch) {
    size_t n = ch.cfr.size();
    if (ch.noise_power_w.size() != n)
        throw ValidationError("gain_to_noise: cfr/noise length mismatch");
    std::vector<double> g(n);
    for (size_t k = 0; k < n; ++k)
        g[k] = std::norm(ch.cfr[k]) / ch.noise_power_w[k];
    return g;
}

} // namespace plcsec
