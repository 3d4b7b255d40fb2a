#include "plcsec.h"

#include <cstring>
#include <new>
#include <string>

#include "ensemble_io.hpp"
#include "experiment.hpp"
#include "mathutil.hpp"
#include "power_allocation.hpp"
#include "secrecy.hpp"
#include "spectral.hpp"

using namespace plcsec;

struct plcsec_config {
    ExperimentConfig cfg;
};

struct plcsec_ensemble {
    Ensemble ens;
};

namespace {

thread_local std::string g_last_error;

void set_error(const std::string& msg) { g_last_error = msg; }

plcsec_status status_of(const std::exception& e) {
    if (dynamic_cast<const FormatError*>(&e)) return PLCSEC_ERR_FORMAT;
    if (dynamic_cast<const IoError*>(&e)) return PLCSEC_ERR_IO;
    if (dynamic_cast<const ConvergenceError*>(&e)) return PLCSEC_ERR_NO_CONVERGENCE;
    if (dynamic_cast<const ValidationError*>(&e)) return PLCSEC_ERR_INVALID_ARGUMENT;
    if (dynamic_cast<const std::invalid_argument*>(&e)) return PLCSEC_ERR_INVALID_ARGUMENT;
    return PLCSEC_ERR_INTERNAL;
}

template <typename Fn>
plcsec_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return PLCSEC_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return status_of(e);
    } catch (...) {
        set_error("unknown error");
        return PLCSEC_ERR_INTERNAL;
    }
}

template <typename Fn>
auto guarded_ptr(Fn&& fn) -> decltype(fn()) {
    try {
        auto* p = fn();
        g_last_error.clear();
        return p;
    } catch (const std::exception& e) {
        set_error(e.what());
        return nullptr;
    } catch (...) {
        set_error("unknown error");
        return nullptr;
    }
}

plcsec_status require(bool ok, const char* what) {
    if (ok) return PLCSEC_OK;
    set_error(what);
    return PLCSEC_ERR_INVALID_ARGUMENT;
}

ChannelRealization channel_from_arrays(size_t n, const double* re, const double* im,
                                       const double* noise_w) {
    ChannelRealization ch;
    // The grid geometry does not enter any per-channel metric; a unit lattice
    // of matching size keeps the invariants satisfied.
    ch.grid = make_grid(static_cast<int>(n), 0.0, static_cast<double>(n));
    ch.cfr.resize(n);
    ch.noise_power_w.assign(noise_w, noise_w + n);
    for (size_t k = 0; k < n; ++k) ch.cfr[k] = {re[k], im[k]};
    ch.validate();
    return ch;
}

Allocator allocator_from_int(int a) {
    if (a == PLCSEC_ALLOC_OA) return Allocator::OA;
    if (a == PLCSEC_ALLOC_UA) return Allocator::UA;
    throw ValidationError("allocator must be PLCSEC_ALLOC_OA or PLCSEC_ALLOC_UA");
}

} // namespace

extern "C" {

const char* plcsec_version(void) { return "0.1.0"; }

const char* plcsec_last_error(void) { return g_last_error.c_str(); }

void plcsec_string_free(char* s) { delete[] s; }

plcsec_config* plcsec_config_default(void) {
    return guarded_ptr([]() -> plcsec_config* {
        auto* h = new plcsec_config{ExperimentConfig::defaults()};
        apply_env_overrides(h->cfg);
        return h;
    });
}

plcsec_config* plcsec_config_from_json(const char* json_text) {
    return guarded_ptr([&]() -> plcsec_config* {
        if (!json_text) throw ValidationError("json_text is NULL");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(json_text);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("config JSON parse error: ") + e.what());
        }
        auto* h = new plcsec_config{ExperimentConfig::from_json(j)};
        apply_env_overrides(h->cfg);
        return h;
    });
}

plcsec_config* plcsec_config_from_json_file(const char* path) {
    return guarded_ptr([&]() -> plcsec_config* {
        if (!path) throw ValidationError("path is NULL");
        auto* h = new plcsec_config{ExperimentConfig::from_json_file(path)};
        apply_env_overrides(h->cfg);
        return h;
    });
}

void plcsec_config_free(plcsec_config* cfg) { delete cfg; }

plcsec_status plcsec_config_set_seed(plcsec_config* cfg, uint64_t seed) {
    if (auto s = require(cfg != nullptr, "config is NULL")) return s;
    cfg->cfg.master_seed = seed;
    return PLCSEC_OK;
}

plcsec_status plcsec_config_set_out_dir(plcsec_config* cfg, const char* dir) {
    if (auto s = require(cfg && dir, "config or dir is NULL")) return s;
    cfg->cfg.out_dir = dir;
    return PLCSEC_OK;
}

plcsec_status plcsec_config_set_threads(plcsec_config* cfg, int threads) {
    if (auto s = require(cfg != nullptr, "config is NULL")) return s;
    if (auto s = require(threads >= 0, "threads must be >= 0")) return s;
    cfg->cfg.threads = threads;
    return PLCSEC_OK;
}

plcsec_status plcsec_config_set_ensemble_dir(plcsec_config* cfg, const char* dir) {
    if (auto s = require(cfg && dir, "config or dir is NULL")) return s;
    cfg->cfg.ensemble_dir = dir;
    return PLCSEC_OK;
}

char* plcsec_config_to_json(const plcsec_config* cfg) {
    return guarded_ptr([&]() -> char* {
        if (!cfg) throw ValidationError("config is NULL");
        std::string s = cfg->cfg.to_json().dump(2);
        char* out = new char[s.size() + 1];
        std::memcpy(out, s.c_str(), s.size() + 1);
        return out;
    });
}

plcsec_status plcsec_config_hash(const plcsec_config* cfg, uint64_t* hash_out) {
    if (auto s = require(cfg && hash_out, "config or hash_out is NULL")) return s;
    return guarded([&] { *hash_out = cfg->cfg.semantic_hash(); });
}

plcsec_status plcsec_run_generate(const plcsec_config* cfg) {
    if (auto s = require(cfg != nullptr, "config is NULL")) return s;
    return guarded([&] { cmd_generate(cfg->cfg); });
}

plcsec_status plcsec_run_calibrate(const plcsec_config* cfg) {
    if (auto s = require(cfg != nullptr, "config is NULL")) return s;
    return guarded([&] { cmd_calibrate(cfg->cfg); });
}

plcsec_status plcsec_run_sweep_rate(const plcsec_config* cfg) {
    if (auto s = require(cfg != nullptr, "config is NULL")) return s;
    return guarded([&] { cmd_sweep_rate(cfg->cfg); });
}

plcsec_status plcsec_run_sweep_outage_r(const plcsec_config* cfg) {
    if (auto s = require(cfg != nullptr, "config is NULL")) return s;
    return guarded([&] { cmd_sweep_outage_r(cfg->cfg); });
}

plcsec_status plcsec_run_sweep_outage_pt(const plcsec_config* cfg) {
    if (auto s = require(cfg != nullptr, "config is NULL")) return s;
    return guarded([&] { cmd_sweep_outage_pt(cfg->cfg); });
}

plcsec_status plcsec_run_stats(const plcsec_config* cfg) {
    if (auto s = require(cfg != nullptr, "config is NULL")) return s;
    return guarded([&] { cmd_stats(cfg->cfg); });
}

plcsec_status plcsec_dbm_to_watts(double dbm, double* watts_out) {
    if (auto s = require(watts_out != nullptr, "watts_out is NULL")) return s;
    return guarded([&] { *watts_out = dbm_to_watts(dbm); });
}

plcsec_status plcsec_watts_to_dbm(double watts, double* dbm_out) {
    if (auto s = require(dbm_out != nullptr, "dbm_out is NULL")) return s;
    return guarded([&] { *dbm_out = watts_to_dbm(watts); });
}

plcsec_status plcsec_waterfill(const double* gains, size_t n, double total_power_w,
                               double* powers_out, double* water_level_out) {
    if (auto s = require(gains && powers_out && n > 0, "gains/powers_out NULL or n == 0"))
        return s;
    return guarded([&] {
        WaterfillResult r = waterfill(std::span<const double>(gains, n), total_power_w);
        std::memcpy(powers_out, r.alloc.powers_w.data(), n * sizeof(double));
        if (water_level_out) *water_level_out = r.water_level;
    });
}

plcsec_status plcsec_uniform_allocation(size_t n, double total_power_w,
                                        const uint8_t* active_mask, double* powers_out) {
    if (auto s = require(powers_out && n > 0, "powers_out NULL or n == 0")) return s;
    return guarded([&] {
        PowerAllocation alloc;
        if (active_mask) {
            std::vector<uint8_t> mask(active_mask, active_mask + n);
            alloc = uniform_allocation(static_cast<int>(n), total_power_w, &mask);
        } else {
            alloc = uniform_allocation(static_cast<int>(n), total_power_w);
        }
        std::memcpy(powers_out, alloc.powers_w.data(), n * sizeof(double));
    });
}

plcsec_status plcsec_link_capacity(size_t n, const double* cfr_re, const double* cfr_im,
                                   const double* noise_w, const double* powers_w,
                                   double* bits_out) {
    if (auto s = require(cfr_re && cfr_im && noise_w && powers_w && bits_out && n > 0,
                         "array argument NULL or n == 0"))
        return s;
    return guarded([&] {
        ChannelRealization ch = channel_from_arrays(n, cfr_re, cfr_im, noise_w);
        PowerAllocation alloc;
        alloc.powers_w.assign(powers_w, powers_w + n);
        alloc.total_w = compensated_sum(alloc.powers_w);
        *bits_out = link_capacity(ch, alloc);
    });
}

plcsec_status plcsec_nsnr_db(size_t n, const double* cfr_re, const double* cfr_im,
                             const double* noise_w, double* nsnr_db_out) {
    if (auto s = require(cfr_re && cfr_im && noise_w && nsnr_db_out && n > 0,
                         "array argument NULL or n == 0"))
        return s;
    return guarded([&] {
        ChannelRealization ch = channel_from_arrays(n, cfr_re, cfr_im, noise_w);
        *nsnr_db_out = nsnr_db(ch);
    });
}

int plcsec_classify_bin(double nsnr_db) { return static_cast<int>(classify_bin(nsnr_db)); }

plcsec_status plcsec_secrecy_rate(size_t n, const double* bob_cfr_re, const double* bob_cfr_im,
                                  const double* bob_noise_w, const double* eve_cfr_re,
                                  const double* eve_cfr_im, const double* eve_noise_w,
                                  const double* powers_w, double* rate_out) {
    if (auto s = require(bob_cfr_re && bob_cfr_im && bob_noise_w && eve_cfr_re && eve_cfr_im &&
                             eve_noise_w && powers_w && rate_out && n > 0,
                         "array argument NULL or n == 0"))
        return s;
    return guarded([&] {
        WiretapPair pair;
        pair.bob = channel_from_arrays(n, bob_cfr_re, bob_cfr_im, bob_noise_w);
        pair.eve = channel_from_arrays(n, eve_cfr_re, eve_cfr_im, eve_noise_w);
        PowerAllocation alloc;
        alloc.powers_w.assign(powers_w, powers_w + n);
        alloc.total_w = compensated_sum(alloc.powers_w);
        *rate_out = secrecy_rate(pair, alloc);
    });
}

plcsec_ensemble* plcsec_ensemble_open(const char* path) {
    return guarded_ptr([&]() -> plcsec_ensemble* {
        if (!path) throw ValidationError("path is NULL");
        return new plcsec_ensemble{read_ensemble(path)};
    });
}

void plcsec_ensemble_free(plcsec_ensemble* ens) { delete ens; }

int64_t plcsec_ensemble_count(const plcsec_ensemble* ens) {
    if (!ens) {
        set_error("ensemble is NULL");
        return -1;
    }
    return static_cast<int64_t>(ens->ens.pairs.size());
}

plcsec_status plcsec_ensemble_grid(const plcsec_ensemble* ens, uint32_t* n_subchannels,
                                   double* f_start_hz, double* f_stop_hz) {
    if (auto s = require(ens != nullptr, "ensemble is NULL")) return s;
    if (n_subchannels) *n_subchannels = static_cast<uint32_t>(ens->ens.header.grid.n_subchannels);
    if (f_start_hz) *f_start_hz = ens->ens.header.grid.f_start_hz;
    if (f_stop_hz) *f_stop_hz = ens->ens.header.grid.f_stop_hz;
    return PLCSEC_OK;
}

plcsec_status plcsec_ensemble_stats(const plcsec_ensemble* ens, int side, double out[5]) {
    if (auto s = require(ens && out, "ensemble or out is NULL")) return s;
    if (auto s = require(side == PLCSEC_SIDE_BOB || side == PLCSEC_SIDE_EVE, "invalid side"))
        return s;
    return guarded([&] {
        NsnrStats st = ensemble_stats(ens->ens.pairs,
                                      side == PLCSEC_SIDE_BOB ? Side::Bob : Side::Eve);
        out[0] = st.max_db;
        out[1] = st.mean_db;
        out[2] = st.min_db;
        out[3] = st.sd_db;
        out[4] = st.p90_db;
    });
}

plcsec_status plcsec_ensemble_ergodic_rate(const plcsec_ensemble* ens, int allocator,
                                           double total_power_w, double bandwidth_hz,
                                           double* rate_bps_out, double* stderr_bps_out) {
    if (auto s = require(ens && rate_bps_out, "ensemble or rate_bps_out is NULL")) return s;
    return guarded([&] {
        ErgodicRate r = ergodic_secrecy_rate(ens->ens.pairs, allocator_from_int(allocator),
                                             total_power_w, bandwidth_hz);
        *rate_bps_out = r.rate_bps;
        if (stderr_bps_out) *stderr_bps_out = r.stderr_bps;
    });
}

plcsec_status plcsec_ensemble_outage(const plcsec_ensemble* ens, int allocator,
                                     double total_power_w, double target_rate_bps_hz,
                                     double* p_out, double* ci_lo_out, double* ci_hi_out) {
    if (auto s = require(ens && p_out, "ensemble or p_out is NULL")) return s;
    return guarded([&] {
        OutageEstimate est = outage_probability(ens->ens.pairs, allocator_from_int(allocator),
                                                total_power_w, target_rate_bps_hz);
        *p_out = est.p;
        if (ci_lo_out) *ci_lo_out = est.ci_lo;
        if (ci_hi_out) *ci_hi_out = est.ci_hi;
    });
}

} // extern "C"
