#ifndef PLCSEC_EXPERIMENT_HPP
#define PLCSEC_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ensemble_io.hpp"
#include "synth.hpp"

namespace plcsec {

// Batch experiment description. Serialized as JSON; fields absent from a
// config file keep their defaults. The calibrated broadband defaults cover
// the 1.7-86 MHz band with N = 2048 subchannels.
struct ExperimentConfig {
    SpectralGrid grid{2048, 1.7e6, 86e6};
    std::vector<Scenario> scenarios{Scenario::SP, Scenario::LP};
    std::vector<SnrBin> bins{SnrBin::bin1, SnrBin::bin2, SnrBin::bin3};
    std::vector<Allocator> allocators{Allocator::OA, Allocator::UA};

    std::vector<double> pt_sweep_dbm;    // default -30..30 dBm step 5
    std::vector<double> r_sweep_bps_hz;  // default 0..8 step 0.25
    std::vector<double> outage_pt_dbm;   // transmit powers for the outage-vs-R sweep
    std::vector<double> outage_r_bps_hz; // target rates for the outage-vs-PT sweep

    int ensemble_size = 2000;
    uint64_t master_seed = 97531;
    std::string out_dir = "out";
    int threads = 0; // 0 = hardware concurrency
    enum class Source { Generate, Load };
    Source ensemble_source = Source::Generate;
    std::string ensemble_dir; // empty = <out_dir>/ensembles

    double reference_power_dbm = 0.0;
    double calibration_tol_db = 1.5;
    int calibration_sample_count = 2000;
    int calibration_max_iterations = 8;
    NsnrTargets plc_targets{70.2, 9.3};
    NsnrTargets sp_targets{61.1, 2.5};
    NsnrTargets lp_targets{47.2, 3.8};

    PlcFamily bob_family;
    HybridFamily eve_sp_family;
    HybridFamily eve_lp_family;
    NoiseModel noise;

    static ExperimentConfig defaults();
    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig from_json_file(const std::string& path);
    nlohmann::json to_json() const;

    // Hash of the scientific content only: execution-environment fields
    // (out_dir, threads, ensemble_dir) are excluded so reruns in different
    // directories or thread counts emit byte-identical CSVs.
    uint64_t semantic_hash() const;

    std::string resolved_ensemble_dir() const;
    int resolved_threads() const;
    void validate() const;
};

// PLCSEC_OUT_DIR and PLCSEC_THREADS, when set, override the corresponding
// config-file values. Command-line flags are applied after this and win.
void apply_env_overrides(ExperimentConfig& cfg);

// generate: calibrate the three channel families, then write one ensemble
// file per (scenario, bin) plus manifest.json into <out_dir>/ensembles.
void cmd_generate(const ExperimentConfig& cfg);

// calibrate: run family calibration alone and write calibration.json.
// Non-convergence still writes the report, then raises an error.
void cmd_calibrate(const ExperimentConfig& cfg);

// Sweep commands read ensembles via the manifest in resolved_ensemble_dir()
// and write one CSV each into out_dir.
void cmd_sweep_rate(const ExperimentConfig& cfg);      // rate_vs_pt.csv
void cmd_sweep_outage_r(const ExperimentConfig& cfg);  // outage_vs_r.csv
void cmd_sweep_outage_pt(const ExperimentConfig& cfg); // outage_vs_pt.csv
void cmd_stats(const ExperimentConfig& cfg);           // nsnr_stats.csv

// Per-pair secrecy-rate tables for a set of transmit powers; the building
// block all sweep commands share. r_ref holds the eavesdropper-free
// reference C_B/N. Indexing: [allocator][pt][pair].
struct PairRateTable {
    std::vector<double> pt_dbm;
    std::vector<Allocator> allocators;
    size_t n_pairs = 0;
    std::vector<std::vector<std::vector<double>>> r_s;
    std::vector<std::vector<std::vector<double>>> r_ref;
};

PairRateTable compute_pair_rates(const std::vector<WiretapPair>& pairs,
                                 const std::vector<double>& pts_dbm,
                                 const std::vector<Allocator>& allocators, int threads);

} // namespace plcsec

#endif
