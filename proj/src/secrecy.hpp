#ifndef PLCSEC_SECRECY_HPP
#define PLCSEC_SECRECY_HPP

#include <span>
#include <string>

#include "power_allocation.hpp"
#include "spectral.hpp"

namespace plcsec {

enum class Scenario { SP, LP }; // eavesdropper near the transmitter / near the receiver
enum class SnrBin { bin1 = 1, bin2 = 2, bin3 = 3, out_of_range = 0 };
enum class Allocator { OA, UA }; // water-filling / uniform
enum class Side { Bob, Eve };

std::string to_string(Scenario s);
std::string to_string(SnrBin b);
std::string to_string(Allocator a);
Scenario scenario_from_string(const std::string& s);
SnrBin bin_from_string(const std::string& s);
Allocator allocator_from_string(const std::string& s);

// Legitimate-receiver / eavesdropper channel pair sharing one grid.
struct WiretapPair {
    ChannelRealization bob;
    ChannelRealization eve;
    Scenario scenario = Scenario::SP;
    SnrBin bob_bin = SnrBin::out_of_range;
};

struct SecrecyOutcome {
    double c_b_bits = 0.0;    // receiver capacity, bits per block use
    double c_e_bits = 0.0;    // eavesdropper capacity, bits per block use
    double r_s_bps_hz = 0.0;  // max(0, (c_b - c_e) / N)
    bool outage = false;      // r_s < target rate
};

// sum_k log2(1 + gains[k] * powers[k]); compensated summation in index order.
double capacity_from_gains(std::span<const double> gains, std::span<const double> powers);

// sum_k log2(1 + snr_k), bits per block use.
double link_capacity(const ChannelRealization& ch, const PowerAllocation& alloc);

// Normalized multichannel SNR: geometric mean of (1 + |H|^2/P_V) minus one,
// evaluated in the log domain so 2048-bin products cannot overflow.
double nsnr_linear(const ChannelRealization& ch);
double nsnr_db(const ChannelRealization& ch);
double nsnr_linear_from_gains(std::span<const double> gain_to_noise);
double nsnr_db_from_gains(std::span<const double> gain_to_noise);

// Receiver-quality partition in dB: [51.1, 61.1), [61.1, 72.3), [72.3, 82.9].
inline constexpr double kBinEdges[4] = {51.1, 61.1, 72.3, 82.9};
SnrBin classify_bin(double nsnr_db);

// Achievable secrecy rate under one shared allocation (computed from the
// legitimate receiver's gains only; the eavesdropper is passive).
double secrecy_rate(const WiretapPair& pair, const PowerAllocation& alloc);
SecrecyOutcome evaluate_pair(const WiretapPair& pair, const PowerAllocation& alloc,
                             double target_rate_bps_hz);

// Water-filling on the given gains, falling back to an even split when no
// gain is usable (the rate is zero either way).
PowerAllocation allocate(Allocator how, std::span<const double> bob_gains, double total_power_w);

struct ErgodicRate {
    double rate_bps = 0.0;
    double stderr_bps = 0.0;
};

// Bandwidth-scaled ensemble mean of the secrecy rate; allocation recomputed
// per pair from the legitimate receiver's gains.
ErgodicRate ergodic_secrecy_rate(std::span<const WiretapPair> pairs, Allocator how,
                                 double total_power_w, double bandwidth_hz);

struct OutageEstimate {
    double p = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    long outages = 0;
    long count = 0;
};

// Fraction of pairs with secrecy rate strictly below the target, with a
// Wilson-score 95% interval.
OutageEstimate outage_probability(std::span<const WiretapPair> pairs, Allocator how,
                                  double total_power_w, double target_rate_bps_hz);

OutageEstimate wilson_interval(long outages, long count);

} // namespace plcsec

#endif
