#ifndef PLCSEC_SYNTH_HPP
#define PLCSEC_SYNTH_HPP

#include <complex>
#include <cstdint>
#include <vector>

#include "rng.hpp"
#include "secrecy.hpp"
#include "spectral.hpp"

namespace plcsec {

// Multipath echo model of a conducted power-line channel:
//   H(f) = sum_i g_i * exp(-(a0 + a1 f^K) d_i) * exp(-j 2 pi f d_i / v)
struct PlcPathModel {
    int n_paths = 1;
    std::vector<double> path_gains;
    std::vector<double> path_lengths_m;
    double attenuation_a0 = 0.0;         // 1/m
    double attenuation_a1 = 0.0;         // s^K/m
    double attenuation_exponent_k = 1.0; // exponent on frequency
    double propagation_velocity_mps = 1.5e8;

    void validate() const;
};

std::vector<std::complex<double>> synth_plc_cfr(const PlcPathModel& model,
                                                const SpectralGrid& grid);

// Conducted segment followed by a radiated coupling stage: a deterministic
// loss profile (flat loss + per-decade tilt around the band's geometric
// center) times a unit-mean-power, frequency-correlated complex fading
// sequence with a moving-average correlation length of `fading_coherence_bins`.
struct HybridLinkModel {
    PlcPathModel base;
    double radiation_loss_db = 0.0;
    double radiation_slope_db_per_decade = 0.0;
    double fading_sigma = 0.0;
    int fading_coherence_bins = 1;

    void validate() const;
};

std::vector<std::complex<double>> synth_hybrid_cfr(const HybridLinkModel& model,
                                                   const SpectralGrid& grid, Rng& rng);

// Background-noise PSD in dBm/Hz: a + b * (f/MHz)^c, plus one zero-mean
// Gaussian level offset per realization (spread `dispersion_db`). Converted
// to per-bin watts through the grid's bin width.
struct NoiseModel {
    double psd_a_dbm_hz = -132.0;
    double psd_b = 30.0;
    double psd_c = -0.5;
    double dispersion_db = 0.0;
};

std::vector<double> synth_noise(const NoiseModel& model, const SpectralGrid& grid, Rng& rng);

// Truncated-normal mixture describing the distribution of a family's
// multichannel-SNR level in dB. `offset_db` and `spread_scale` are the two
// calibration knobs: draws are mapped affinely around the nominal mixture
// mean, so the offset shifts the family mean one-for-one and the spread
// scales its standard deviation exactly.
struct LevelComponent {
    double weight = 1.0;
    double mean_db = 0.0;
    double sigma_db = 1.0;
    double lo_db = -1e30;
    double hi_db = 1e30;
};

struct LevelModel {
    std::vector<LevelComponent> components;
    double offset_db = 0.0;
    double spread_scale = 1.0;

    double nominal_mean_db() const; // weighted component means, calibration pivot
    double draw_db(Rng& rng) const;
    void validate() const;
};

// Distribution over multipath geometries; one draw yields a concrete
// PlcPathModel. The first path carries unit gain and later path gains decay
// geometrically with jittered magnitude and random sign, which bounds notch
// depth away from total cancellation.
struct PlcGeometry {
    int n_paths_min = 3;
    int n_paths_max = 6;
    double first_len_min_m = 8.0;
    double first_len_max_m = 25.0;
    double step_len_min_m = 2.0;
    double step_len_max_m = 12.0;
    double gain_decay = 0.5;
    double gain_jitter_lo = 0.3;
    double gain_jitter_hi = 0.8;
};

struct PlcFamily {
    PlcGeometry geometry;
    double attenuation_a0 = 0.01;
    double attenuation_a1 = 7.8e-10;
    double attenuation_exponent_k = 1.0;
    double propagation_velocity_mps = 1.5e8;
    LevelModel level;

    PlcPathModel draw_model(Rng& rng) const;
};

struct HybridFamily {
    PlcGeometry geometry;
    double attenuation_a0 = 0.01;
    double attenuation_a1 = 7.8e-10;
    double attenuation_exponent_k = 1.0;
    double propagation_velocity_mps = 1.5e8;
    double radiation_loss_db = 30.0;
    double radiation_slope_db_per_decade = 6.0;
    double fading_sigma = 0.4;
    int fading_coherence_bins = 16;
    LevelModel level;

    HybridLinkModel draw_model(Rng& rng) const;
};

// Everything needed to draw one (receiver, eavesdropper) pair population.
struct ScenarioSpec {
    SpectralGrid grid;
    Scenario scenario = Scenario::SP;
    SnrBin bob_bin = SnrBin::bin1;
    PlcFamily bob_model;
    HybridFamily eve_model;
    NoiseModel noise;
    double reference_power_dbm = 0.0; // diagnostics only; binning is power-free
};

inline constexpr int kRejectionAttemptBudget = 1000;

// Single unconditioned draws. Each realization's overall level is set by a
// draw from the family's level model: the synthesized channel is rescaled so
// its multichannel SNR lands on the drawn level (the rescale is folded into
// the path gains, where a per-realization attenuation offset would live).
ChannelRealization draw_bob_realization(const ScenarioSpec& spec, Rng& rng);
ChannelRealization draw_eve_realization(const ScenarioSpec& spec, Rng& rng);

// Deterministic ensemble: pair i depends only on (spec, master_seed, i). The
// receiver side is rejection-sampled into the requested bin; exceeding the
// attempt budget signals a mis-calibrated generator and raises an error.
std::vector<WiretapPair> generate_ensemble(const ScenarioSpec& spec, int count,
                                           uint64_t master_seed, int threads = 1);

// Unconditioned multichannel-SNR sample of one side's family, for
// calibration and family-level statistics.
std::vector<double> sample_family_nsnr_db(const ScenarioSpec& spec, Side side, int count,
                                          uint64_t seed, int threads = 1);

struct NsnrTargets {
    double mean_db = 0.0;
    double sd_db = 1.0;
};

struct CalibrationReport {
    bool converged = false;
    int iterations = 0;
    double achieved_mean_db = 0.0;
    double achieved_sd_db = 0.0;
    double residual_mean_db = 0.0;
    double residual_sd_db = 0.0;
};

// Coordinate search on (level offset dB, level spread scale): alternately
// shift the offset by the mean residual and rescale the spread by the SD
// ratio, measuring each step on a fixed-seed ensemble of `sample_count`
// realizations, until the mean is within tol_db and the SD within 2*tol_db.
// The adjusted spec is written back; non-convergence is reported with the
// best-found state and residuals, not thrown.
CalibrationReport calibrate_family(ScenarioSpec& spec, Side side, const NsnrTargets& targets,
                                   double tol_db, int sample_count, uint64_t seed,
                                   int max_iterations = 8, int threads = 1);

} // namespace plcsec

#endif
