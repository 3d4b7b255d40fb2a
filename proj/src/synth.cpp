#include "synth.hpp"

#include <algorithm>
#include <cmath>

#include "mathutil.hpp"

namespace plcsec {

void PlcPathModel::validate() const {
    if (n_paths < 1)
        throw ValidationError("PlcPathModel: need at least one path");
    if (path_gains.size() != static_cast<size_t>(n_paths) ||
        path_lengths_m.size() != static_cast<size_t>(n_paths))
        throw ValidationError("PlcPathModel: gain/length vectors must have n_paths entries");
    for (double d : path_lengths_m)
        if (!(d > 0.0)) throw ValidationError("PlcPathModel: path lengths must be positive");
    if (!(propagation_velocity_mps > 0.0 && propagation_velocity_mps <= 3e8))
        throw ValidationError("PlcPathModel: propagation velocity outside (0, 3e8] m/s");
}

void HybridLinkModel::validate() const {
    base.validate();
    if (radiation_loss_db < 0.0)
        throw ValidationError("HybridLinkModel: radiation loss must be >= 0 dB");
    if (fading_sigma < 0.0)
        throw ValidationError("HybridLinkModel: fading sigma must be >= 0");
    if (fading_coherence_bins < 1)
        throw ValidationError("HybridLinkModel: fading coherence must span >= 1 bin");
}

std::vector<std::complex<double>> synth_plc_cfr(const PlcPathModel& model,
                                                const SpectralGrid& grid) {
    model.validate();
    std::vector<std::complex<double>> cfr(static_cast<size_t>(grid.n_subchannels));
    const double two_pi = 2.0 * M_PI;
    for (int k = 0; k < grid.n_subchannels; ++k) {
        double f = grid.bin_center_hz(k);
        double fk = std::pow(f, model.attenuation_exponent_k);
        double alpha = model.attenuation_a0 + model.attenuation_a1 * fk;
        std::complex<double> h{0.0, 0.0};
        for (int i = 0; i < model.n_paths; ++i) {
            double d = model.path_lengths_m[static_cast<size_t>(i)];
            double amp = model.path_gains[static_cast<size_t>(i)] * std::exp(-alpha * d);
            double phase = -two_pi * f * d / model.propagation_velocity_mps;
            h += amp * std::complex<double>(std::cos(phase), std::sin(phase));
        }
        cfr[static_cast<size_t>(k)] = h;
    }
    return cfr;
}

std::vector<std::complex<double>> synth_hybrid_cfr(const HybridLinkModel& model,
                                                   const SpectralGrid& grid, Rng& rng) {
    model.validate();
    std::vector<std::complex<double>> cfr = synth_plc_cfr(model.base, grid);
    size_t n = cfr.size();

    // Tilt pivots on the band's geometric center so slope changes do not move
    // the overall level.
    double f_ref = std::sqrt(grid.f_start_hz > 0.0 ? grid.f_start_hz * grid.f_stop_hz
                                                   : grid.f_stop_hz * grid.f_stop_hz / 4.0);
    for (size_t k = 0; k < n; ++k) {
        double f = grid.bin_center_hz(static_cast<int>(k));
        double loss_db = model.radiation_loss_db +
                         model.radiation_slope_db_per_decade * std::log10(f / f_ref);
        cfr[k] *= std::pow(10.0, -loss_db / 20.0);
    }

    if (model.fading_sigma > 0.0) {
        size_t len = static_cast<size_t>(model.fading_coherence_bins);
        std::vector<std::complex<double>> w(n + len - 1);
        for (auto& x : w) x = rng.complex_normal();
        double norm = 1.0 / std::sqrt(static_cast<double>(len));
        double power_norm = 1.0 / std::sqrt(1.0 + model.fading_sigma * model.fading_sigma);
        for (size_t k = 0; k < n; ++k) {
            std::complex<double> g{0.0, 0.0};
            for (size_t j = 0; j < len; ++j) g += w[k + j];
            g *= norm;
            cfr[k] *= (1.0 + model.fading_sigma * g) * power_norm;
        }
    }
    return cfr;
}

std::vector<double> synth_noise(const NoiseModel& model, const SpectralGrid& grid, Rng& rng) {
    double jitter_db = model.dispersion_db > 0.0 ? rng.normal(0.0, model.dispersion_db) : 0.0;
    std::vector<double> noise(static_cast<size_t>(grid.n_subchannels));
    double bin_w = grid.bin_width_hz();
    for (int k = 0; k < grid.n_subchannels; ++k) {
        double f_mhz = grid.bin_center_hz(k) / 1e6;
        double psd_dbm_hz = model.psd_a_dbm_hz + model.psd_b * std::pow(f_mhz, model.psd_c);
        noise[static_cast<size_t>(k)] = dbm_to_watts(psd_dbm_hz + jitter_db) * bin_w;
        if (!(noise[static_cast<size_t>(k)] > 0.0))
            throw ValidationError("synth_noise: model produced a non-positive noise power");
    }
    return noise;
}

double LevelModel::nominal_mean_db() const {
    double wsum = 0.0, msum = 0.0;
    for (const LevelComponent& c : components) {
        wsum += c.weight;
        msum += c.weight * c.mean_db;
    }
    return msum / wsum;
}

void LevelModel::validate() const {
    if (components.empty())
        throw ValidationError("LevelModel: needs at least one component");
    double wsum = 0.0;
    for (const LevelComponent& c : components) {
        if (!(c.weight > 0.0)) throw ValidationError("LevelModel: weights must be positive");
        if (!(c.hi_db >= c.lo_db)) throw ValidationError("LevelModel: component bounds inverted");
        wsum += c.weight;
    }
    if (!(wsum > 0.0)) throw ValidationError("LevelModel: zero total weight");
    if (!(spread_scale > 0.0)) throw ValidationError("LevelModel: spread scale must be positive");
}

double LevelModel::draw_db(Rng& rng) const {
    validate();
    double wsum = 0.0;
    for (const LevelComponent& c : components) wsum += c.weight;
    double u = rng.uniform01() * wsum;
    const LevelComponent* pick = &components.back();
    for (const LevelComponent& c : components) {
        if (u < c.weight) {
            pick = &c;
            break;
        }
        u -= c.weight;
    }
    double x = rng.truncated_normal(pick->mean_db, pick->sigma_db, pick->lo_db, pick->hi_db);
    double pivot = nominal_mean_db();
    return pivot + offset_db + (x - pivot) * spread_scale;
}

namespace {

PlcPathModel draw_geometry(const PlcGeometry& geo, double a0, double a1, double k, double v,
                           Rng& rng) {
    PlcPathModel m;
    m.n_paths = rng.uniform_int(geo.n_paths_min, geo.n_paths_max);
    m.attenuation_a0 = a0;
    m.attenuation_a1 = a1;
    m.attenuation_exponent_k = k;
    m.propagation_velocity_mps = v;
    m.path_gains.resize(static_cast<size_t>(m.n_paths));
    m.path_lengths_m.resize(static_cast<size_t>(m.n_paths));
    double d = rng.uniform(geo.first_len_min_m, geo.first_len_max_m);
    double decay = 1.0;
    for (int i = 0; i < m.n_paths; ++i) {
        if (i == 0) {
            m.path_gains[0] = 1.0;
        } else {
            d += rng.uniform(geo.step_len_min_m, geo.step_len_max_m);
            decay *= geo.gain_decay;
            double mag = decay * rng.uniform(geo.gain_jitter_lo, geo.gain_jitter_hi);
            m.path_gains[static_cast<size_t>(i)] = rng.bernoulli(0.5) ? mag : -mag;
        }
        m.path_lengths_m[static_cast<size_t>(i)] = d;
    }
    return m;
}

// Rescale the response so its multichannel SNR hits target_db. One Newton
// touch-up corrects the (1 + g) curvature left by the first pass.
void retarget_level(std::vector<std::complex<double>>& cfr, const std::vector<double>& noise,
                    double target_db) {
    for (int pass = 0; pass < 2; ++pass) {
        std::vector<double> g(cfr.size());
        for (size_t i = 0; i < cfr.size(); ++i) g[i] = std::norm(cfr[i]) / noise[i];
        double now_db = nsnr_db_from_gains(g);
        double scale = std::pow(10.0, (target_db - now_db) / 20.0);
        for (auto& h : cfr) h *= scale;
    }
}

} // namespace

PlcPathModel PlcFamily::draw_model(Rng& rng) const {
    return draw_geometry(geometry, attenuation_a0, attenuation_a1, attenuation_exponent_k,
                         propagation_velocity_mps, rng);
}

HybridLinkModel HybridFamily::draw_model(Rng& rng) const {
    HybridLinkModel m;
    m.base = draw_geometry(geometry, attenuation_a0, attenuation_a1, attenuation_exponent_k,
                           propagation_velocity_mps, rng);
    m.radiation_loss_db = radiation_loss_db;
    m.radiation_slope_db_per_decade = radiation_slope_db_per_decade;
    m.fading_sigma = fading_sigma;
    m.fading_coherence_bins = fading_coherence_bins;
    return m;
}

ChannelRealization draw_bob_realization(const ScenarioSpec& spec, Rng& rng) {
    double target_db = spec.bob_model.level.draw_db(rng);
    PlcPathModel model = spec.bob_model.draw_model(rng);
    ChannelRealization ch;
    ch.grid = spec.grid;
    ch.noise_power_w = synth_noise(spec.noise, spec.grid, rng);
    ch.cfr = synth_plc_cfr(model, spec.grid);
    retarget_level(ch.cfr, ch.noise_power_w, target_db);
    return ch;
}

ChannelRealization draw_eve_realization(const ScenarioSpec& spec, Rng& rng) {
    double target_db = spec.eve_model.level.draw_db(rng);
    HybridLinkModel model = spec.eve_model.draw_model(rng);
    ChannelRealization ch;
    ch.grid = spec.grid;
    ch.noise_power_w = synth_noise(spec.noise, spec.grid, rng);
    ch.cfr = synth_hybrid_cfr(model, spec.grid, rng);
    retarget_level(ch.cfr, ch.noise_power_w, target_db);
    return ch;
}

std::vector<WiretapPair> generate_ensemble(const ScenarioSpec& spec, int count,
                                           uint64_t master_seed, int threads) {
    if (count < 1)
        throw ValidationError("generate_ensemble: count must be >= 1");
    std::vector<WiretapPair> pairs(static_cast<size_t>(count));
    parallel_for(static_cast<size_t>(count), threads, [&](size_t i) {
        WiretapPair& pair = pairs[i];
        pair.scenario = spec.scenario;
        pair.bob_bin = spec.bob_bin;

        bool accepted = false;
        for (uint64_t attempt = 0; attempt < kRejectionAttemptBudget; ++attempt) {
            Rng rng = Rng::stream(master_seed, {0x0b, i, attempt});
            ChannelRealization bob = draw_bob_realization(spec, rng);
            if (classify_bin(nsnr_db(bob)) == spec.bob_bin) {
                pair.bob = std::move(bob);
                accepted = true;
                break;
            }
        }
        if (!accepted)
            throw ConvergenceError(
                "generate_ensemble: exceeded " + std::to_string(kRejectionAttemptBudget) +
                " rejection attempts for " + to_string(spec.scenario) + "/" +
                to_string(spec.bob_bin) + " at pair index " + std::to_string(i) +
                "; the generator level model looks mis-calibrated for this bin");

        Rng rng = Rng::stream(master_seed, {0x0e, i});
        pair.eve = draw_eve_realization(spec, rng);
    });
    return pairs;
}

std::vector<double> sample_family_nsnr_db(const ScenarioSpec& spec, Side side, int count,
                                          uint64_t seed, int threads) {
    if (count < 1)
        throw ValidationError("sample_family_nsnr_db: count must be >= 1");
    std::vector<double> out(static_cast<size_t>(count));
    parallel_for(static_cast<size_t>(count), threads, [&](size_t i) {
        Rng rng = Rng::stream(seed, {side == Side::Bob ? 0x0bu : 0x0eu, i});
        ChannelRealization ch = side == Side::Bob ? draw_bob_realization(spec, rng)
                                                  : draw_eve_realization(spec, rng);
        out[i] = nsnr_db(ch);
    });
    return out;
}

CalibrationReport calibrate_family(ScenarioSpec& spec, Side side, const NsnrTargets& targets,
                                   double tol_db, int sample_count, uint64_t seed,
                                   int max_iterations, int threads) {
    if (sample_count < 2)
        throw ValidationError("calibrate_family: sample count must be >= 2");
    if (!(tol_db > 0.0))
        throw ValidationError("calibrate_family: tolerance must be positive");

    LevelModel& level = side == Side::Bob ? spec.bob_model.level : spec.eve_model.level;
    CalibrationReport report;
    for (int iter = 1; iter <= max_iterations; ++iter) {
        // Fixed seed per iteration: common random numbers keep the two
        // coordinate updates from chasing sampling noise.
        std::vector<double> nsnr = sample_family_nsnr_db(spec, side, sample_count, seed, threads);
        report.achieved_mean_db = mean_of(nsnr);
        report.achieved_sd_db = sample_sd(nsnr);
        report.residual_mean_db = targets.mean_db - report.achieved_mean_db;
        report.residual_sd_db = targets.sd_db - report.achieved_sd_db;
        report.iterations = iter;
        if (std::abs(report.residual_mean_db) <= tol_db &&
            std::abs(report.residual_sd_db) <= 2.0 * tol_db) {
            report.converged = true;
            return report;
        }
        if (iter == max_iterations) break; // leave the spec matching the reported residuals
        level.offset_db += report.residual_mean_db;
        if (report.achieved_sd_db > 1e-9) {
            double ratio = targets.sd_db / report.achieved_sd_db;
            level.spread_scale *= std::clamp(ratio, 0.2, 5.0);
        }
        level.spread_scale = std::clamp(level.spread_scale, 0.02, 50.0);
    }
    return report;
}

} // namespace plcsec
