#ifndef PLCSEC_SPECTRAL_HPP
#define PLCSEC_SPECTRAL_HPP

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace plcsec {

// Error hierarchy shared by the whole library. The C API maps these onto
// status codes, so new failure modes should reuse one of the classes below.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct FormatError : Error {
    using Error::Error;
};
struct ConvergenceError : Error {
    using Error::Error;
};

// Uniform frequency lattice over an operating band. Bin k is centered at
// f_start + (k + 0.5) * bin_width.
struct SpectralGrid {
    int n_subchannels = 0;
    double f_start_hz = 0.0;
    double f_stop_hz = 0.0;

    double bandwidth_hz() const { return f_stop_hz - f_start_hz; }
    double bin_width_hz() const { return bandwidth_hz() / n_subchannels; }
    double bin_center_hz(int k) const { return f_start_hz + (k + 0.5) * bin_width_hz(); }

    bool operator==(const SpectralGrid&) const = default;
};

SpectralGrid make_grid(int n_subchannels, double f_start_hz, double f_stop_hz);

// One receiver's view of the link: complex frequency response plus per-bin
// additive-noise power in watts. Immutable after construction by convention.
struct ChannelRealization {
    SpectralGrid grid;
    std::vector<std::complex<double>> cfr;
    std::vector<double> noise_power_w;

    void validate() const;
};

// Per-bin transmit powers in watts; `total_w` is the budget the allocator
// distributed (the entries sum to it when the full budget was used).
struct PowerAllocation {
    std::vector<double> powers_w;
    double total_w = 0.0;
};

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts); // rejects watts <= 0

// Per-bin linear SNR: powers[k] * |cfr[k]|^2 / noise[k].
std::vector<double> per_bin_snr(const ChannelRealization& ch, const PowerAllocation& alloc);

// |cfr[k]|^2 / noise[k]; the power-free channel quality used by the
// allocator, the capacity helpers, and the multichannel SNR summary.
std::vector<double> gain_to_noise(const ChannelRealization& ch);

} // namespace plcsec

#endif
