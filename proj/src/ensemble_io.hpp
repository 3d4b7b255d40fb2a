#ifndef PLCSEC_ENSEMBLE_IO_HPP
#define PLCSEC_ENSEMBLE_IO_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "secrecy.hpp"
#include "spectral.hpp"

namespace plcsec {

// Container format: one magic line, one JSON header line, then raw
// little-endian float64 records. Per pair the record holds the receiver CFR
// as (re, im) pairs, receiver noise watts, eavesdropper CFR, eavesdropper
// noise watts, each of grid length. Lossless by construction.
inline constexpr char kEnsembleMagic[] = "PLCSECENS1";

struct EnsembleHeader {
    SpectralGrid grid;
    Scenario scenario = Scenario::SP;
    SnrBin bin = SnrBin::bin1;
    uint64_t master_seed = 0;
    uint64_t spec_hash = 0;
    int count = 0;
};

struct Ensemble {
    EnsembleHeader header;
    std::vector<WiretapPair> pairs;
};

void write_ensemble(const std::string& path, const EnsembleHeader& header,
                    std::span<const WiretapPair> pairs);
Ensemble read_ensemble(const std::string& path);

// Resample externally measured data onto a grid. The CFR file needs columns
// frequency_hz,re,im and the noise file frequency_hz,psd_dbm_per_hz (header
// row required, frequencies strictly increasing, coverage spanning every bin
// center). PSD values are converted to per-bin watts via the bin width.
ChannelRealization import_measured(const std::string& cfr_csv_path,
                                   const std::string& noise_csv_path, const SpectralGrid& grid);

struct NsnrStats {
    double max_db = 0.0;
    double mean_db = 0.0;
    double min_db = 0.0;
    double sd_db = 0.0;
    double p90_db = 0.0;
};

// Statistics are computed and aggregated in the dB domain; p90 interpolates
// order statistics linearly.
NsnrStats nsnr_stats(std::span<const double> nsnr_db_values);
NsnrStats ensemble_stats(std::span<const WiretapPair> pairs, Side side);

} // namespace plcsec

#endif
