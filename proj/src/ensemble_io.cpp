#include "ensemble_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mathutil.hpp"

static_assert(std::endian::native == std::endian::little,
              "ensemble container stores raw little-endian float64");

namespace plcsec {

namespace {

using nlohmann::json;

size_t record_doubles(int n) { return 6 * static_cast<size_t>(n); } // 2N cfr + N noise, twice

void flatten_pair(const WiretapPair& p, std::vector<double>& buf) {
    buf.clear();
    auto push_channel = [&](const ChannelRealization& ch) {
        for (const auto& h : ch.cfr) {
            buf.push_back(h.real());
            buf.push_back(h.imag());
        }
        for (double w : ch.noise_power_w) buf.push_back(w);
    };
    push_channel(p.bob);
    push_channel(p.eve);
}

void check_record_finite(std::span<const double> rec, int n, size_t index) {
    auto fail = [&](const std::string& what, size_t k) {
        throw FormatError("ensemble record " + std::to_string(index) + ": " + what + " at bin " +
                          std::to_string(k));
    };
    size_t nn = static_cast<size_t>(n);
    for (size_t j = 0; j < rec.size(); ++j) {
        if (!std::isfinite(rec[j])) {
            size_t local = j % (3 * nn);
            fail("non-finite value", local < 2 * nn ? local / 2 : local - 2 * nn);
        }
    }
    for (size_t side = 0; side < 2; ++side) {
        size_t noise_off = side * 3 * nn + 2 * nn;
        for (size_t k = 0; k < nn; ++k)
            if (!(rec[noise_off + k] > 0.0)) fail("non-positive noise power", k);
    }
}

WiretapPair unflatten_pair(std::span<const double> rec, const EnsembleHeader& h) {
    WiretapPair p;
    p.scenario = h.scenario;
    p.bob_bin = h.bin;
    size_t n = static_cast<size_t>(h.grid.n_subchannels);
    auto pull_channel = [&](size_t off) {
        ChannelRealization ch;
        ch.grid = h.grid;
        ch.cfr.resize(n);
        ch.noise_power_w.resize(n);
        for (size_t k = 0; k < n; ++k)
            ch.cfr[k] = {rec[off + 2 * k], rec[off + 2 * k + 1]};
        for (size_t k = 0; k < n; ++k) ch.noise_power_w[k] = rec[off + 2 * n + k];
        return ch;
    };
    p.bob = pull_channel(0);
    p.eve = pull_channel(3 * n);
    return p;
}

} // namespace

void write_ensemble(const std::string& path, const EnsembleHeader& header,
                    std::span<const WiretapPair> pairs) {
    if (pairs.empty())
        throw ValidationError("write_ensemble: refusing to write an empty ensemble");
    if (header.count != static_cast<int>(pairs.size()))
        throw ValidationError("write_ensemble: header count does not match pair count");
    for (size_t i = 0; i < pairs.size(); ++i) {
        if (pairs[i].bob.grid != header.grid || pairs[i].eve.grid != header.grid)
            throw ValidationError("write_ensemble: pair " + std::to_string(i) +
                                  " is not on the header grid");
        pairs[i].bob.validate();
        pairs[i].eve.validate();
    }

    json meta = {{"n_subchannels", header.grid.n_subchannels},
                 {"f_start_hz", header.grid.f_start_hz},
                 {"f_stop_hz", header.grid.f_stop_hz},
                 {"scenario", to_string(header.scenario)},
                 {"bin", to_string(header.bin)},
                 {"master_seed", header.master_seed},
                 {"spec_hash", header.spec_hash},
                 {"count", header.count}};

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("write_ensemble: cannot open '" + path + "' for writing");
    out << kEnsembleMagic << "\n" << meta.dump() << "\n";

    std::vector<double> buf;
    for (const WiretapPair& p : pairs) {
        flatten_pair(p, buf);
        out.write(reinterpret_cast<const char*>(buf.data()),
                  static_cast<std::streamsize>(buf.size() * sizeof(double)));
    }
    if (!out)
        throw IoError("write_ensemble: write failed for '" + path + "'");
}

Ensemble read_ensemble(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("read_ensemble: cannot open '" + path + "'");

    std::string magic, meta_line;
    if (!std::getline(in, magic) || magic != kEnsembleMagic)
        throw FormatError("read_ensemble: '" + path + "' is not an ensemble container");
    if (!std::getline(in, meta_line))
        throw FormatError("read_ensemble: missing header line in '" + path + "'");

    EnsembleHeader h;
    try {
        json meta = json::parse(meta_line);
        h.grid = make_grid(meta.at("n_subchannels").get<int>(), meta.at("f_start_hz").get<double>(),
                           meta.at("f_stop_hz").get<double>());
        h.scenario = scenario_from_string(meta.at("scenario").get<std::string>());
        h.bin = bin_from_string(meta.at("bin").get<std::string>());
        h.master_seed = meta.at("master_seed").get<uint64_t>();
        h.spec_hash = meta.at("spec_hash").get<uint64_t>();
        h.count = meta.at("count").get<int>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("read_ensemble: malformed header: ") + e.what());
    }
    if (h.count < 1)
        throw FormatError("read_ensemble: header declares a non-positive record count");

    Ensemble ens;
    ens.header = h;
    ens.pairs.reserve(static_cast<size_t>(h.count));
    size_t doubles = record_doubles(h.grid.n_subchannels);
    std::vector<double> rec(doubles);
    for (int i = 0; i < h.count; ++i) {
        in.read(reinterpret_cast<char*>(rec.data()),
                static_cast<std::streamsize>(doubles * sizeof(double)));
        std::streamsize got = in.gcount();
        if (got != static_cast<std::streamsize>(doubles * sizeof(double))) {
            if (got == 0)
                throw FormatError("read_ensemble: record count mismatch: header declares " +
                                  std::to_string(h.count) + " records, file contains " +
                                  std::to_string(i));
            throw FormatError("read_ensemble: file truncated inside record " + std::to_string(i));
        }
        check_record_finite(rec, h.grid.n_subchannels, static_cast<size_t>(i));
        ens.pairs.push_back(unflatten_pair(rec, h));
    }
    if (in.peek() != std::char_traits<char>::eof())
        throw FormatError("read_ensemble: trailing data after record " +
                          std::to_string(h.count - 1) + "; header count looks wrong");
    return ens;
}

namespace {

std::vector<std::vector<double>> read_csv_columns(const std::string& path,
                                                  const std::vector<std::string>& names) {
    std::ifstream in(path);
    if (!in)
        throw IoError("import_measured: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line))
        throw FormatError("import_measured: '" + path + "' is empty");

    // Header row is mandatory and must name the expected columns in order.
    std::stringstream hs(line);
    std::string cell;
    std::vector<std::string> cols;
    while (std::getline(hs, cell, ','))
        cols.push_back(cell);
    if (cols.size() != names.size())
        throw FormatError("import_measured: '" + path + "' must have exactly " +
                          std::to_string(names.size()) + " columns");
    for (size_t i = 0; i < names.size(); ++i)
        if (cols[i] != names[i])
            throw FormatError("import_measured: '" + path + "' column " + std::to_string(i) +
                              " is '" + cols[i] + "', expected '" + names[i] + "'");

    std::vector<std::vector<double>> data(names.size());
    size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::stringstream ls(line);
        for (size_t i = 0; i < names.size(); ++i) {
            if (!std::getline(ls, cell, ','))
                throw FormatError("import_measured: '" + path + "' row " + std::to_string(row) +
                                  " has too few fields");
            try {
                data[i].push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw FormatError("import_measured: '" + path + "' row " + std::to_string(row) +
                                  ": cannot parse '" + cell + "'");
            }
        }
    }
    if (data[0].empty())
        throw FormatError("import_measured: '" + path + "' has no data rows");
    for (size_t i = 1; i < data[0].size(); ++i)
        if (!(data[0][i] > data[0][i - 1]))
            throw FormatError("import_measured: '" + path +
                              "' frequency column must be strictly increasing (row " +
                              std::to_string(i + 2) + ")");
    return data;
}

double interp_at(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
    auto it = std::lower_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return ys.front();
    if (it == xs.end()) return ys.back();
    size_t hi = static_cast<size_t>(it - xs.begin());
    size_t lo = hi - 1;
    double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return ys[lo] + t * (ys[hi] - ys[lo]);
}

void check_coverage(const std::vector<double>& freqs, const SpectralGrid& grid,
                    const std::string& path) {
    double lo = grid.bin_center_hz(0);
    double hi = grid.bin_center_hz(grid.n_subchannels - 1);
    if (freqs.front() > lo || freqs.back() < hi)
        throw ValidationError("import_measured: '" + path + "' covers [" +
                              std::to_string(freqs.front()) + ", " + std::to_string(freqs.back()) +
                              "] Hz but the grid needs [" + std::to_string(lo) + ", " +
                              std::to_string(hi) + "] Hz");
}

} // namespace

ChannelRealization import_measured(const std::string& cfr_csv_path,
                                   const std::string& noise_csv_path, const SpectralGrid& grid) {
    auto cfr_cols = read_csv_columns(cfr_csv_path, {"frequency_hz", "re", "im"});
    auto noise_cols = read_csv_columns(noise_csv_path, {"frequency_hz", "psd_dbm_per_hz"});
    check_coverage(cfr_cols[0], grid, cfr_csv_path);
    check_coverage(noise_cols[0], grid, noise_csv_path);

    ChannelRealization ch;
    ch.grid = grid;
    ch.cfr.resize(static_cast<size_t>(grid.n_subchannels));
    ch.noise_power_w.resize(static_cast<size_t>(grid.n_subchannels));
    double bin_w = grid.bin_width_hz();
    for (int k = 0; k < grid.n_subchannels; ++k) {
        double f = grid.bin_center_hz(k);
        ch.cfr[static_cast<size_t>(k)] = {interp_at(cfr_cols[0], cfr_cols[1], f),
                                          interp_at(cfr_cols[0], cfr_cols[2], f)};
        double psd = interp_at(noise_cols[0], noise_cols[1], f);
        ch.noise_power_w[static_cast<size_t>(k)] = dbm_to_watts(psd) * bin_w;
    }
    ch.validate();
    return ch;
}

NsnrStats nsnr_stats(std::span<const double> nsnr_db_values) {
    if (nsnr_db_values.empty())
        throw ValidationError("nsnr_stats: empty ensemble");
    std::vector<double> xs(nsnr_db_values.begin(), nsnr_db_values.end());
    NsnrStats s;
    s.mean_db = mean_of(xs);
    s.sd_db = sample_sd(xs);
    s.max_db = *std::max_element(xs.begin(), xs.end());
    s.min_db = *std::min_element(xs.begin(), xs.end());
    s.p90_db = quantile(xs, 0.9);
    return s;
}

NsnrStats ensemble_stats(std::span<const WiretapPair> pairs, Side side) {
    if (pairs.empty())
        throw ValidationError("ensemble_stats: empty ensemble");
    std::vector<double> xs(pairs.size());
    for (size_t i = 0; i < pairs.size(); ++i)
        xs[i] = nsnr_db(side == Side::Bob ? pairs[i].bob : pairs[i].eve);
    return nsnr_stats(xs);
}

} // namespace plcsec
