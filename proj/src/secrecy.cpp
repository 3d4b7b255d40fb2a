#include "secrecy.hpp"

#include <cmath>

#include "mathutil.hpp"

namespace plcsec {

namespace {
constexpr double kLn2 = 0.6931471805599453;
constexpr double kWilsonZ = 1.959963984540054; // two-sided 95%
} // namespace

std::string to_string(Scenario s) { return s == Scenario::SP ? "SP" : "LP"; }

std::string to_string(SnrBin b) {
    switch (b) {
        case SnrBin::bin1: return "bin1";
        case SnrBin::bin2: return "bin2";
        case SnrBin::bin3: return "bin3";
        default: return "out_of_range";
    }
}

std::string to_string(Allocator a) { return a == Allocator::OA ? "OA" : "UA"; }

Scenario scenario_from_string(const std::string& s) {
    if (s == "SP") return Scenario::SP;
    if (s == "LP") return Scenario::LP;
    throw FormatError("unknown scenario '" + s + "' (expected SP or LP)");
}

SnrBin bin_from_string(const std::string& s) {
    if (s == "bin1") return SnrBin::bin1;
    if (s == "bin2") return SnrBin::bin2;
    if (s == "bin3") return SnrBin::bin3;
    throw FormatError("unknown bin '" + s + "' (expected bin1, bin2 or bin3)");
}

Allocator allocator_from_string(const std::string& s) {
    if (s == "OA") return Allocator::OA;
    if (s == "UA") return Allocator::UA;
    throw FormatError("unknown allocator '" + s + "' (expected OA or UA)");
}

double capacity_from_gains(std::span<const double> gains, std::span<const double> powers) {
    if (gains.size() != powers.size())
        throw ValidationError("capacity_from_gains: length mismatch");
    CompensatedSum bits;
    for (size_t k = 0; k < gains.size(); ++k)
        bits.add(std::log1p(powers[k] * gains[k]) / kLn2);
    return bits.value();
}

double link_capacity(const ChannelRealization& ch, const PowerAllocation& alloc) {
    if (alloc.powers_w.size() != ch.cfr.size())
        throw ValidationError("link_capacity: allocation/channel length mismatch");
    std::vector<double> g = gain_to_noise(ch);
    return capacity_from_gains(g, alloc.powers_w);
}

double nsnr_linear_from_gains(std::span<const double> gain_to_noise) {
    if (gain_to_noise.empty())
        throw ValidationError("nsnr: empty channel");
    CompensatedSum logs;
    for (double g : gain_to_noise) logs.add(std::log1p(g));
    double mean_log = logs.value() / static_cast<double>(gain_to_noise.size());
    return std::expm1(mean_log);
}

double nsnr_db_from_gains(std::span<const double> g) {
    return 10.0 * std::log10(nsnr_linear_from_gains(g));
}

double nsnr_linear(const ChannelRealization& ch) {
    std::vector<double> g = gain_to_noise(ch);
    return nsnr_linear_from_gains(g);
}

double nsnr_db(const ChannelRealization& ch) { return 10.0 * std::log10(nsnr_linear(ch)); }

SnrBin classify_bin(double nsnr_db) {
    if (nsnr_db >= kBinEdges[0] && nsnr_db < kBinEdges[1]) return SnrBin::bin1;
    if (nsnr_db >= kBinEdges[1] && nsnr_db < kBinEdges[2]) return SnrBin::bin2;
    if (nsnr_db >= kBinEdges[2] && nsnr_db <= kBinEdges[3]) return SnrBin::bin3;
    return SnrBin::out_of_range;
}

double secrecy_rate(const WiretapPair& pair, const PowerAllocation& alloc) {
    if (pair.bob.cfr.size() != pair.eve.cfr.size())
        throw ValidationError("secrecy_rate: receiver/eavesdropper grid mismatch");
    double c_b = link_capacity(pair.bob, alloc);
    double c_e = link_capacity(pair.eve, alloc);
    double n = static_cast<double>(pair.bob.cfr.size());
    return std::max(0.0, (c_b - c_e) / n);
}

SecrecyOutcome evaluate_pair(const WiretapPair& pair, const PowerAllocation& alloc,
                             double target_rate_bps_hz) {
    SecrecyOutcome out;
    out.c_b_bits = link_capacity(pair.bob, alloc);
    out.c_e_bits = link_capacity(pair.eve, alloc);
    double n = static_cast<double>(pair.bob.cfr.size());
    out.r_s_bps_hz = std::max(0.0, (out.c_b_bits - out.c_e_bits) / n);
    out.outage = out.r_s_bps_hz < target_rate_bps_hz;
    return out;
}

PowerAllocation allocate(Allocator how, std::span<const double> bob_gains, double total_power_w) {
    if (how == Allocator::UA)
        return uniform_allocation(static_cast<int>(bob_gains.size()), total_power_w);
    for (double g : bob_gains)
        if (g > kMinUsableGain) return waterfill(bob_gains, total_power_w).alloc;
    return uniform_allocation(static_cast<int>(bob_gains.size()), total_power_w);
}

ErgodicRate ergodic_secrecy_rate(std::span<const WiretapPair> pairs, Allocator how,
                                 double total_power_w, double bandwidth_hz) {
    if (pairs.empty())
        throw ValidationError("ergodic_secrecy_rate: empty ensemble");
    std::vector<double> rates(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i) {
        std::vector<double> g = gain_to_noise(pairs[i].bob);
        PowerAllocation alloc = allocate(how, g, total_power_w);
        rates[i] = bandwidth_hz * secrecy_rate(pairs[i], alloc);
    }
    ErgodicRate out;
    out.rate_bps = mean_of(rates);
    out.stderr_bps = sample_sd(rates) / std::sqrt(static_cast<double>(rates.size()));
    return out;
}

OutageEstimate outage_probability(std::span<const WiretapPair> pairs, Allocator how,
                                  double total_power_w, double target_rate_bps_hz) {
    if (pairs.empty())
        throw ValidationError("outage_probability: empty ensemble");
    if (target_rate_bps_hz < 0.0)
        throw ValidationError("outage_probability: target rate must be non-negative");
    long outages = 0;
    for (const WiretapPair& p : pairs) {
        std::vector<double> g = gain_to_noise(p.bob);
        PowerAllocation alloc = allocate(how, g, total_power_w);
        if (secrecy_rate(p, alloc) < target_rate_bps_hz) ++outages;
    }
    return wilson_interval(outages, static_cast<long>(pairs.size()));
}

OutageEstimate wilson_interval(long outages, long count) {
    if (count <= 0)
        throw ValidationError("wilson_interval: empty sample");
    if (outages < 0 || outages > count)
        throw ValidationError("wilson_interval: count out of range");
    double n = static_cast<double>(count);
    double p_hat = static_cast<double>(outages) / n;
    double z2 = kWilsonZ * kWilsonZ;
    double denom = 1.0 + z2 / n;
    double center = (p_hat + z2 / (2.0 * n)) / denom;
    double half = kWilsonZ * std::sqrt(p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)) / denom;
    OutageEstimate est;
    est.p = p_hat;
    est.ci_lo = std::max(0.0, center - half);
    est.ci_hi = std::min(1.0, center + half);
    // Boundary estimates pin the matching endpoint exactly.
    if (outages == 0) est.ci_lo = 0.0;
    if (outages == count) est.ci_hi = 1.0;
    est.outages = outages;
    est.count = count;
    return est;
}

} // namespace plcsec
