#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "experiment.hpp"
#include "mathutil.hpp"
#include "rng.hpp"
#include "synth.hpp"

using namespace plcsec;

namespace {

PlcPathModel single_path(double gain, double length_m, double a0, double a1, double v = 1.5e8) {
    PlcPathModel m;
    m.n_paths = 1;
    m.path_gains = {gain};
    m.path_lengths_m = {length_m};
    m.attenuation_a0 = a0;
    m.attenuation_a1 = a1;
    m.attenuation_exponent_k = 1.0;
    m.propagation_velocity_mps = v;
    return m;
}

} // namespace

TEST_CASE("conducted model: lossless near-zero-delay path is flat unity") {
    SpectralGrid grid = make_grid(64, 1.7e6, 86e6);
    auto cfr = synth_plc_cfr(single_path(1.0, 1e-9, 0.0, 0.0), grid);
    for (const auto& h : cfr) {
        CHECK(std::abs(h - std::complex<double>(1.0, 0.0)) < 1e-6);
    }
}

TEST_CASE("conducted model: flat attenuation a0*d = ln 2 halves every bin") {
    SpectralGrid grid = make_grid(32, 1.7e6, 86e6);
    auto cfr = synth_plc_cfr(single_path(1.0, 1.0, std::log(2.0), 0.0), grid);
    for (const auto& h : cfr) CHECK(std::abs(h) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("conducted model: two equal paths interfere as 2|cos(pi f tau)|") {
    // Bin centers 0.5, 1.5, 2.5, 3.5 MHz. With tau = 1 us every center sits
    // on a null; with tau = 2 us every center sits on a peak of magnitude 2.
    SpectralGrid grid = make_grid(4, 0.0, 4e6);
    const double v = 1.5e8;
    auto two_path = [&](double tau_s) {
        PlcPathModel m = single_path(1.0, 1.0, 0.0, 0.0, v);
        m.n_paths = 2;
        m.path_gains = {1.0, 1.0};
        m.path_lengths_m = {1.0, 1.0 + v * tau_s};
        return m;
    };
    auto nulls = synth_plc_cfr(two_path(1e-6), grid);
    for (const auto& h : nulls) CHECK(std::abs(h) < 1e-6);
    auto peaks = synth_plc_cfr(two_path(2e-6), grid);
    for (const auto& h : peaks) CHECK(std::abs(h) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("conducted model magnitude never exceeds the gain sum") {
    SpectralGrid grid = make_grid(128, 1.7e6, 86e6);
    Rng rng = Rng::seeded(61);
    PlcFamily family = ExperimentConfig::defaults().bob_family;
    for (int trial = 0; trial < 100; ++trial) {
        PlcPathModel m = family.draw_model(rng);
        double gain_sum = 0.0;
        for (double g : m.path_gains) gain_sum += std::abs(g);
        auto cfr = synth_plc_cfr(m, grid);
        for (const auto& h : cfr) CHECK(std::abs(h) <= gain_sum + 1e-12);
    }
}

TEST_CASE("hybrid model: transparent radiation stage is the identity") {
    SpectralGrid grid = make_grid(64, 1.7e6, 86e6);
    HybridLinkModel m;
    m.base = single_path(0.7, 12.0, 0.002, 5e-10);
    m.radiation_loss_db = 0.0;
    m.radiation_slope_db_per_decade = 0.0;
    m.fading_sigma = 0.0;
    auto conducted = synth_plc_cfr(m.base, grid);
    Rng rng = Rng::seeded(1);
    auto hybrid = synth_hybrid_cfr(m, grid, rng);
    for (size_t k = 0; k < conducted.size(); ++k) CHECK(hybrid[k] == conducted[k]);
}

TEST_CASE("hybrid model: flat 20 dB coupling loss scales magnitudes by 0.1") {
    SpectralGrid grid = make_grid(64, 1.7e6, 86e6);
    HybridLinkModel m;
    m.base = single_path(1.0, 5.0, 0.001, 3e-10);
    m.radiation_loss_db = 20.0;
    m.fading_sigma = 0.0;
    auto conducted = synth_plc_cfr(m.base, grid);
    Rng rng = Rng::seeded(1);
    auto hybrid = synth_hybrid_cfr(m, grid, rng);
    for (size_t k = 0; k < conducted.size(); ++k)
        CHECK(std::abs(hybrid[k]) ==
              doctest::Approx(0.1 * std::abs(conducted[k])).epsilon(1e-12));
}

TEST_CASE("hybrid model: raising the coupling loss lowers every bin") {
    SpectralGrid grid = make_grid(64, 1.7e6, 86e6);
    HybridLinkModel m;
    m.base = single_path(1.0, 5.0, 0.001, 3e-10);
    m.fading_sigma = 0.5;
    m.fading_coherence_bins = 4;

    m.radiation_loss_db = 10.0;
    Rng rng_a = Rng::stream(99, {1});
    auto low = synth_hybrid_cfr(m, grid, rng_a);
    m.radiation_loss_db = 13.0;
    Rng rng_b = Rng::stream(99, {1}); // identical stream, only the loss differs
    auto high = synth_hybrid_cfr(m, grid, rng_b);
    for (size_t k = 0; k < low.size(); ++k) CHECK(std::abs(high[k]) < std::abs(low[k]));
}

TEST_CASE("hybrid fading decorrelates beyond the coherence length") {
    SpectralGrid grid = make_grid(256, 1.7e6, 86e6);
    HybridLinkModel m;
    m.base = single_path(1.0, 1e-9, 0.0, 0.0); // flat conducted segment
    m.radiation_loss_db = 0.0;
    m.fading_sigma = 0.8;
    m.fading_coherence_bins = 1;

    const int reps = 10000;
    const size_t n = 256;
    // Ensemble autocorrelation of the fading at lags 2 and 3.
    std::complex<double> mean{0.0, 0.0};
    std::vector<std::vector<std::complex<double>>> draws(reps);
    for (int r = 0; r < reps; ++r) {
        Rng rng = Rng::stream(7, {static_cast<uint64_t>(r)});
        draws[r] = synth_hybrid_cfr(m, grid, rng);
        for (const auto& h : draws[r]) mean += h;
    }
    mean /= static_cast<double>(reps) * static_cast<double>(n);

    auto autocorr = [&](size_t lag) {
        std::complex<double> num{0.0, 0.0};
        double den = 0.0;
        for (const auto& d : draws) {
            for (size_t k = 0; k + lag < n; ++k) {
                num += (d[k] - mean) * std::conj(d[k + lag] - mean);
                den += std::norm(d[k] - mean);
            }
        }
        return std::abs(num) / den;
    };
    CHECK(autocorr(2) < 0.02);
    CHECK(autocorr(3) < 0.02);
}

TEST_CASE("noise synthesis") {
    SpectralGrid grid = make_grid(2048, 1.7e6, 86e6);
    SUBCASE("flat -120 dBm/Hz converts through the bin width") {
        NoiseModel m{-120.0, 0.0, -0.5, 0.0};
        Rng rng = Rng::seeded(5);
        auto noise = synth_noise(m, grid, rng);
        for (double w : noise) CHECK(w == doctest::Approx(4.1162109375e-11).epsilon(1e-9));
    }
    SUBCASE("no dispersion means identical output across streams") {
        NoiseModel m{-120.0, 25.0, -0.7, 0.0};
        Rng a = Rng::seeded(123), b = Rng::seeded(456);
        CHECK(synth_noise(m, grid, a) == synth_noise(m, grid, b));
    }
    SUBCASE("negative exponent gives strictly decreasing noise") {
        NoiseModel m{-130.0, 30.0, -0.5, 0.0};
        Rng rng = Rng::seeded(5);
        auto noise = synth_noise(m, grid, rng);
        for (size_t k = 1; k < noise.size(); ++k) CHECK(noise[k] < noise[k - 1]);
    }
}

TEST_CASE("level model draws honor bounds and calibration transform") {
    LevelModel level;
    level.components = {{0.6, 50.0, 2.0, 45.0, 55.0}, {0.4, 70.0, 3.0, 64.0, 76.0}};
    Rng rng = Rng::seeded(77);
    for (int i = 0; i < 2000; ++i) {
        double x = level.draw_db(rng);
        CHECK(((x >= 45.0 && x <= 55.0) || (x >= 64.0 && x <= 76.0)));
    }
    // offset shifts draws one-for-one; spread stretches around the pivot
    LevelModel shifted = level;
    shifted.offset_db = 4.0;
    Rng a = Rng::seeded(31), b = Rng::seeded(31);
    for (int i = 0; i < 100; ++i)
        CHECK(shifted.draw_db(a) == doctest::Approx(level.draw_db(b) + 4.0).epsilon(1e-12));
}

namespace {

ScenarioSpec test_spec(SnrBin bin, Scenario scenario = Scenario::SP, int n_bins = 256) {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    ScenarioSpec spec;
    spec.grid = make_grid(n_bins, 1.7e6, 86e6);
    spec.scenario = scenario;
    spec.bob_bin = bin;
    spec.bob_model = cfg.bob_family;
    spec.eve_model = scenario == Scenario::SP ? cfg.eve_sp_family : cfg.eve_lp_family;
    spec.noise = cfg.noise;
    return spec;
}

} // namespace

TEST_CASE("ensemble generation is deterministic and bin-compliant") {
    ScenarioSpec spec = test_spec(SnrBin::bin2);
    auto a = generate_ensemble(spec, 60, 4242, 1);
    auto b = generate_ensemble(spec, 60, 4242, 2); // different thread count
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].bob.cfr == b[i].bob.cfr);
        CHECK(a[i].bob.noise_power_w == b[i].bob.noise_power_w);
        CHECK(a[i].eve.cfr == b[i].eve.cfr);
        CHECK(a[i].eve.noise_power_w == b[i].eve.noise_power_w);
    }
    for (const auto& p : a) {
        CHECK(classify_bin(nsnr_db(p.bob)) == SnrBin::bin2);
        p.bob.validate();
        p.eve.validate();
    }
}

TEST_CASE("pair i is a pure function of (spec, seed, i)") {
    ScenarioSpec spec = test_spec(SnrBin::bin3);
    auto small = generate_ensemble(spec, 5, 99, 1);
    auto large = generate_ensemble(spec, 12, 99, 2);
    for (size_t i = 0; i < small.size(); ++i) {
        CHECK(small[i].bob.cfr == large[i].bob.cfr);
        CHECK(small[i].eve.cfr == large[i].eve.cfr);
    }
}

TEST_CASE("every requested bin is reachable under the default families") {
    for (SnrBin bin : {SnrBin::bin1, SnrBin::bin2, SnrBin::bin3}) {
        ScenarioSpec spec = test_spec(bin);
        auto pairs = generate_ensemble(spec, 20, 7, 2);
        for (const auto& p : pairs) CHECK(p.bob_bin == bin);
    }
}

TEST_CASE("family calibration meets its targets") {
    ScenarioSpec spec = test_spec(SnrBin::bin2);

    SUBCASE("conducted family against its published-level targets") {
        NsnrTargets targets{70.2, 9.3};
        CalibrationReport rep = calibrate_family(spec, Side::Bob, targets, 1.5, 1200, 515, 8, 2);
        CHECK(rep.converged);
        CHECK(std::abs(rep.achieved_mean_db - 70.2) <= 1.5);
        CHECK(std::abs(rep.achieved_sd_db - 9.3) <= 3.0);
    }
    SUBCASE("no-op when targets equal the current statistics") {
        auto sample = sample_family_nsnr_db(spec, Side::Eve, 1200, 515, 2);
        NsnrTargets self{0.0, 0.0};
        std::vector<double> xs(sample.begin(), sample.end());
        self.mean_db = mean_of(xs);
        self.sd_db = sample_sd(xs);
        double offset_before = spec.eve_model.level.offset_db;
        CalibrationReport rep = calibrate_family(spec, Side::Eve, self, 1.5, 1200, 515, 8, 2);
        CHECK(rep.converged);
        CHECK(rep.iterations == 1);
        CHECK(spec.eve_model.level.offset_db == offset_before);
    }
}

TEST_CASE("calibrated radiated families keep their level ordering") {
    ScenarioSpec sp = test_spec(SnrBin::bin2, Scenario::SP);
    ScenarioSpec lp = test_spec(SnrBin::bin2, Scenario::LP);
    CalibrationReport rep_sp = calibrate_family(sp, Side::Eve, {61.1, 2.5}, 1.5, 1000, 616, 8, 2);
    CalibrationReport rep_lp = calibrate_family(lp, Side::Eve, {47.2, 3.8}, 1.5, 1000, 616, 8, 2);
    REQUIRE(rep_sp.converged);
    REQUIRE(rep_lp.converged);
    double gap = rep_sp.achieved_mean_db - rep_lp.achieved_mean_db;
    CHECK(std::abs(gap - 13.9) <= 1.0); // 61.1 - 47.2 dB
}

TEST_CASE("rejection budget failure carries a diagnostic") {
    ScenarioSpec spec = test_spec(SnrBin::bin2);
    // Push the whole family far below every bin so no draw can comply.
    spec.bob_model.level.offset_db = -100.0;
    CHECK_THROWS_AS(generate_ensemble(spec, 2, 1, 1), ConvergenceError);
    try {
        generate_ensemble(spec, 2, 1, 1);
    } catch (const ConvergenceError& e) {
        std::string msg = e.what();
        CHECK(msg.find("bin2") != std::string::npos);
        CHECK(msg.find("attempts") != std::string::npos);
    }
}
