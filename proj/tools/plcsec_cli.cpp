// Batch front end over the plcsec shared library. Subcommands map 1:1 onto
// the plcsec_run_* entry points; this file only parses flags and reports
// errors, everything else lives behind the C API.

#include <cstdint>
#include <cstdio>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "plcsec.h"

namespace {

struct ConfigDeleter {
    void operator()(plcsec_config* c) const { plcsec_config_free(c); }
};
using ConfigPtr = std::unique_ptr<plcsec_config, ConfigDeleter>;

int fail(const std::string& what) {
    std::fprintf(stderr, "plcsec: %s: %s\n", what.c_str(), plcsec_last_error());
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Physical-layer security analysis of broadband power-line links\n"
                 "eavesdropped through a radiated side channel."};
    app.require_subcommand(1);

    std::string config_path, out_dir, ensemble_dir;
    uint64_t seed = 0;
    int threads = -1;
    bool seed_given = false;

    app.add_option("--config", config_path, "Experiment configuration (JSON)")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "Master seed override")
        ->each([&](const std::string&) { seed_given = true; });
    app.add_option("--out-dir", out_dir, "Output directory override");
    app.add_option("--threads", threads, "Worker thread count (0 = hardware)")
        ->check(CLI::Range(0, 4096));
    app.add_option("--ensemble-dir", ensemble_dir,
                   "Directory holding generated ensembles (default <out-dir>/ensembles)");

    auto* generate = app.add_subcommand(
        "generate", "Calibrate channel families and write one ensemble per scenario/bin");
    auto* calibrate = app.add_subcommand(
        "calibrate", "Calibrate channel families against their level targets only");
    auto* sweep_rate = app.add_subcommand(
        "sweep-rate", "Ergodic secrecy rate vs transmit power (rate_vs_pt.csv)");
    auto* sweep_outage_r = app.add_subcommand(
        "sweep-outage-r", "Secrecy outage probability vs target rate (outage_vs_r.csv)");
    auto* sweep_outage_pt = app.add_subcommand(
        "sweep-outage-pt", "Secrecy outage probability vs transmit power (outage_vs_pt.csv)");
    auto* stats = app.add_subcommand(
        "stats", "Multichannel-SNR statistics of the calibrated families (nsnr_stats.csv)");

    // Accept the global flags after the subcommand as well.
    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    ConfigPtr cfg(config_path.empty() ? plcsec_config_default()
                                      : plcsec_config_from_json_file(config_path.c_str()));
    if (!cfg) return fail("loading configuration failed");

    if (seed_given && plcsec_config_set_seed(cfg.get(), seed) != PLCSEC_OK)
        return fail("setting seed failed");
    if (!out_dir.empty() && plcsec_config_set_out_dir(cfg.get(), out_dir.c_str()) != PLCSEC_OK)
        return fail("setting out-dir failed");
    if (threads >= 0 && plcsec_config_set_threads(cfg.get(), threads) != PLCSEC_OK)
        return fail("setting threads failed");
    if (!ensemble_dir.empty() &&
        plcsec_config_set_ensemble_dir(cfg.get(), ensemble_dir.c_str()) != PLCSEC_OK)
        return fail("setting ensemble-dir failed");

    plcsec_status rc = PLCSEC_OK;
    if (generate->parsed())
        rc = plcsec_run_generate(cfg.get());
    else if (calibrate->parsed())
        rc = plcsec_run_calibrate(cfg.get());
    else if (sweep_rate->parsed())
        rc = plcsec_run_sweep_rate(cfg.get());
    else if (sweep_outage_r->parsed())
        rc = plcsec_run_sweep_outage_r(cfg.get());
    else if (sweep_outage_pt->parsed())
        rc = plcsec_run_sweep_outage_pt(cfg.get());
    else if (stats->parsed())
        rc = plcsec_run_stats(cfg.get());

    if (rc != PLCSEC_OK) return fail("command failed");
    return 0;
}
