// Acceptance suite: exercises the full pipeline against its quantitative
// gates and prints one PASS/FAIL line per criterion. Returns a nonzero exit
// code when any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ensemble_io.hpp"
#include "experiment.hpp"
#include "mathutil.hpp"
#include "power_allocation.hpp"
#include "rng.hpp"
#include "secrecy.hpp"
#include "synth.hpp"

using namespace plcsec;
namespace fs = std::filesystem;

namespace {

struct CheckLine {
    std::string name;
    bool pass;
    std::string detail;
};

std::vector<CheckLine> g_lines;

void record(const std::string& name, bool pass, const std::string& detail) {
    g_lines.push_back({name, pass, detail});
    std::printf("[%s] %s — %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", x);
    return buf;
}

// --------------------------------------------------------------------------
// Criterion 1: water-filling correctness on 10,000 random instances.

std::vector<double> oracle_waterfill_bisection(const std::vector<double>& gains, double total) {
    double lo = 0.0, hi = total;
    for (double g : gains)
        if (g > 0.0) hi = std::max(hi, total + 1.0 / g);
    auto spent = [&](double mu) {
        double s = 0.0;
        for (double g : gains)
            if (g > 0.0) s += std::max(0.0, mu - 1.0 / g);
        return s;
    };
    while (spent(hi) < total) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (spent(mid) < total ? lo : hi) = mid;
    }
    double mu = 0.5 * (lo + hi);
    std::vector<double> p(gains.size(), 0.0);
    for (size_t i = 0; i < gains.size(); ++i)
        if (gains[i] > 0.0) p[i] = std::max(0.0, mu - 1.0 / gains[i]);
    return p;
}

void criterion_1() {
    auto t0 = std::chrono::steady_clock::now();
    Rng rng = Rng::seeded(0xACC1);
    const int instances = 10000;
    int budget_bad = 0, kkt_bad = 0, dominance_bad = 0, oracle_bad = 0, small_n = 0;

    for (int i = 0; i < instances; ++i) {
        size_t n = i < 600 ? static_cast<size_t>(1 + i % 6)
                           : static_cast<size_t>(rng.uniform_int(1, 2048));
        std::vector<double> g(n);
        for (auto& x : g) x = std::pow(10.0, rng.uniform(-6.0, 6.0));
        double total = std::pow(10.0, rng.uniform(-3.0, 3.0));

        WaterfillResult r = waterfill(g, total);
        double spent = compensated_sum(r.alloc.powers_w);
        if (std::abs(spent - total) > 1e-9 * total) ++budget_bad;

        for (size_t k = 0; k < n; ++k) {
            if (r.active[k]) {
                if (std::abs(r.alloc.powers_w[k] + 1.0 / g[k] - r.water_level) >
                    1e-6 * r.water_level) {
                    ++kkt_bad;
                    break;
                }
            } else if (1.0 / g[k] < r.water_level * (1.0 - 1e-9)) {
                ++kkt_bad;
                break;
            }
        }

        double wf_rate = capacity_from_gains(g, r.alloc.powers_w);
        double ua_rate =
            capacity_from_gains(g, uniform_allocation(static_cast<int>(n), total).powers_w);
        if (wf_rate < ua_rate - 1e-12) ++dominance_bad;

        if (n <= 6) {
            ++small_n;
            double oracle = capacity_from_gains(g, oracle_waterfill_bisection(g, total));
            if (std::abs(wf_rate - oracle) > 1e-6) ++oracle_bad;
        }
    }

    double secs = seconds_since(t0);
    bool pass = budget_bad == 0 && kkt_bad == 0 && dominance_bad == 0 && oracle_bad == 0 &&
                small_n >= 600 && secs < 60.0;
    record("criterion 1: water-filling correctness", pass,
           std::to_string(instances) + " instances, budget/KKT/dominance/oracle violations " +
               std::to_string(budget_bad) + "/" + std::to_string(kkt_bad) + "/" +
               std::to_string(dominance_bad) + "/" + std::to_string(oracle_bad) + " (" +
               std::to_string(small_n) + " oracle-checked), " + fmt(secs) + " s (limit 60)");
}

// --------------------------------------------------------------------------
// Criterion 2: metric identities.

ChannelRealization channel_from_gains(const std::vector<double>& g) {
    ChannelRealization ch;
    ch.grid = make_grid(static_cast<int>(g.size()), 0.0, static_cast<double>(g.size()));
    ch.noise_power_w.assign(g.size(), 1.0);
    ch.cfr.resize(g.size());
    for (size_t i = 0; i < g.size(); ++i) ch.cfr[i] = {std::sqrt(g[i]), 0.0};
    return ch;
}

void criterion_2() {
    auto t0 = std::chrono::steady_clock::now();
    bool flat_ok = true, mirror_ok = true, silent_ok = true, equiv_ok = true;

    for (double snr : {1e-4, 0.5, 7.0, 316.23, 1e5, 2.7e8}) {
        ChannelRealization ch = channel_from_gains(std::vector<double>(2048, snr));
        if (std::abs(nsnr_linear(ch) - snr) > 1e-12 * snr) flat_ok = false;
    }

    Rng rng = Rng::seeded(0xACC2);
    for (int trial = 0; trial < 200; ++trial) {
        size_t n = static_cast<size_t>(rng.uniform_int(1, 64));
        std::vector<double> gb(n);
        for (auto& x : gb) x = std::pow(10.0, rng.uniform(-3.0, 3.0));
        WiretapPair pair;
        pair.bob = channel_from_gains(gb);
        pair.eve = pair.bob;
        PowerAllocation alloc = uniform_allocation(static_cast<int>(n), 1.0);
        if (secrecy_rate(pair, alloc) != 0.0) mirror_ok = false;

        pair.eve = channel_from_gains(std::vector<double>(n, 0.0));
        double expect = link_capacity(pair.bob, alloc) / static_cast<double>(n);
        if (std::abs(secrecy_rate(pair, alloc) - expect) > 1e-12 * std::max(expect, 1.0))
            silent_ok = false;
    }

    int clamp_branch = 0, ratio_branch = 0, equiv_bad = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        size_t n = static_cast<size_t>(rng.uniform_int(1, 8));
        std::vector<double> gb(n), ge(n);
        for (auto& x : gb) x = std::pow(10.0, rng.uniform(-2.0, 2.0));
        for (auto& x : ge) x = std::pow(10.0, rng.uniform(-2.0, 2.0));
        double r = rng.uniform(0.0, 3.0);
        WiretapPair pair;
        pair.bob = channel_from_gains(gb);
        pair.eve = channel_from_gains(ge);
        PowerAllocation unit{std::vector<double>(n, 1.0), static_cast<double>(n)};
        bool outage = secrecy_rate(pair, unit) < r;

        double ratio = 1.0;
        for (size_t k = 0; k < n; ++k) ratio *= (1.0 + gb[k]) / (1.0 + ge[k]);
        bool expected;
        if (ratio >= 1.0) {
            expected = ratio < std::pow(2.0, r * static_cast<double>(n));
            ++ratio_branch;
        } else {
            expected = 0.0 < r;
            ++clamp_branch;
        }
        if (outage != expected) ++equiv_bad;
    }
    equiv_ok = equiv_bad == 0 && clamp_branch > 500 && ratio_branch > 500;

    double secs = seconds_since(t0);
    bool pass = flat_ok && mirror_ok && silent_ok && equiv_ok;
    record("criterion 2: metric identities", pass,
           std::string("flat-nSNR ") + (flat_ok ? "ok" : "BAD") + ", mirrored-pair zero " +
               (mirror_ok ? "ok" : "BAD") + ", silent-eavesdropper " +
               (silent_ok ? "ok" : "BAD") + ", outage-indicator equivalence " +
               std::to_string(equiv_bad) + " bad over 10000 (branches " +
               std::to_string(ratio_branch) + "/" + std::to_string(clamp_branch) + "), " +
               fmt(secs) + " s");
}

// --------------------------------------------------------------------------
// Criterion 3: outage estimator exactness and Wilson coverage.

void criterion_3() {
    auto t0 = std::chrono::steady_clock::now();

    WiretapPair leak;
    leak.bob = channel_from_gains({4.0, 4.0});
    leak.eve = leak.bob; // rate exactly 0: in outage for any positive target
    WiretapPair safe;
    safe.bob = channel_from_gains({15.0, 15.0});
    safe.eve = channel_from_gains({0.0, 0.0}); // rate 4 at P_T = 2, never in outage at R = 1

    bool exact_ok = true;
    const int m_total = 500;
    for (double p : {0.0, 0.25, 0.5, 1.0}) {
        int m_out = static_cast<int>(p * m_total);
        std::vector<WiretapPair> pairs;
        pairs.reserve(m_total);
        for (int i = 0; i < m_out; ++i) pairs.push_back(leak);
        for (int i = m_out; i < m_total; ++i) pairs.push_back(safe);
        OutageEstimate est = outage_probability(pairs, Allocator::UA, 2.0, 1.0);
        if (est.p != static_cast<double>(m_out) / m_total || est.outages != m_out)
            exact_ok = false;
    }

    // Coverage of the Wilson interval over repeated random ensembles.
    Rng rng = Rng::seeded(0xACC3);
    bool coverage_ok = true;
    std::string coverage_detail;
    for (double p : {0.0, 0.25, 0.5, 1.0}) {
        int covered = 0;
        const int reps = 1000;
        for (int rep = 0; rep < reps; ++rep) {
            std::vector<WiretapPair> pairs;
            pairs.reserve(m_total);
            for (int i = 0; i < m_total; ++i) pairs.push_back(rng.bernoulli(p) ? leak : safe);
            OutageEstimate est = outage_probability(pairs, Allocator::UA, 2.0, 1.0);
            if (est.ci_lo <= p && p <= est.ci_hi) ++covered;
        }
        double rate = static_cast<double>(covered) / reps;
        coverage_detail += fmt(p) + ":" + fmt(rate) + " ";
        if (rate < 0.93) coverage_ok = false;
    }

    double secs = seconds_since(t0);
    bool pass = exact_ok && coverage_ok && secs < 120.0;
    record("criterion 3: outage estimator", pass,
           std::string("exact counts ") + (exact_ok ? "ok" : "BAD") + ", Wilson coverage " +
               coverage_detail + "(needs >= 0.93 each), " + fmt(secs) + " s (limit 120)");
}

// --------------------------------------------------------------------------
// Criterion 4: calibration against the published level statistics.

void criterion_4() {
    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.master_seed = 0xACC4;
    int threads = cfg.resolved_threads();

    struct Fam {
        const char* name;
        Side side;
        Scenario scenario;
        NsnrTargets targets;
    };
    const Fam fams[] = {{"PLC", Side::Bob, Scenario::SP, cfg.plc_targets},
                        {"HybridSP", Side::Eve, Scenario::SP, cfg.sp_targets},
                        {"HybridLP", Side::Eve, Scenario::LP, cfg.lp_targets}};

    bool all_ok = true;
    std::string detail;
    double plc_max_db = 0.0;
    for (const Fam& f : fams) {
        auto t0 = std::chrono::steady_clock::now();
        ScenarioSpec spec;
        spec.grid = cfg.grid;
        spec.scenario = f.scenario;
        spec.bob_bin = SnrBin::bin2;
        spec.bob_model = cfg.bob_family;
        spec.eve_model = f.scenario == Scenario::SP ? cfg.eve_sp_family : cfg.eve_lp_family;
        spec.noise = cfg.noise;

        CalibrationReport rep =
            calibrate_family(spec, f.side, f.targets, 1.5, 2000, cfg.master_seed, 8, threads);
        auto sample = sample_family_nsnr_db(spec, f.side, 2000, cfg.master_seed + 1, threads);
        NsnrStats st = nsnr_stats(sample);
        if (f.side == Side::Bob) plc_max_db = st.max_db;

        double secs = seconds_since(t0);
        bool ok = rep.converged && std::abs(st.mean_db - f.targets.mean_db) <= 1.5 &&
                  std::abs(st.sd_db - f.targets.sd_db) <= 3.0 && secs < 300.0;
        all_ok = all_ok && ok;
        detail += std::string(f.name) + " mean " + fmt(st.mean_db) + "/" +
                  fmt(f.targets.mean_db) + " sd " + fmt(st.sd_db) + "/" + fmt(f.targets.sd_db) +
                  " in " + fmt(secs) + " s; ";
    }

    // Observed ceiling of the conducted family tracks the published maximum.
    bool max_ok = std::abs(plc_max_db - 82.8) <= 2.5;
    all_ok = all_ok && max_ok;
    detail += "PLC max " + fmt(plc_max_db) + " (target 82.8 +- 2.5)";
    record("criterion 4: calibration to published level statistics", all_ok, detail);
}

// --------------------------------------------------------------------------
// Criterion 5: qualitative reproduction on calibrated full-size ensembles.

struct Table {
    std::map<std::string, size_t> col;
    std::vector<std::vector<std::string>> rows;
};

Table parse_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("acceptance: missing CSV " + path.string());
    Table t;
    std::string line;
    std::getline(in, line); // comment
    std::getline(in, line);
    std::stringstream hs(line);
    std::string cell;
    size_t idx = 0;
    while (std::getline(hs, cell, ',')) t.col[cell] = idx++;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::stringstream ls(line);
        while (std::getline(ls, cell, ',')) row.push_back(cell);
        t.rows.push_back(row);
    }
    return t;
}

double cell_d(const Table& t, const std::vector<std::string>& row, const std::string& name) {
    return std::stod(row[t.col.at(name)]);
}

void criterion_5(const fs::path& work) {
    auto t0 = std::chrono::steady_clock::now();
    fs::path out = work / "full";
    fs::remove_all(out);
    fs::create_directories(out);

    ExperimentConfig cfg = ExperimentConfig::defaults();
    cfg.master_seed = 0xACC5;
    cfg.out_dir = out.string();

    cmd_generate(cfg);
    cmd_sweep_rate(cfg);
    cmd_sweep_outage_r(cfg);
    cmd_sweep_outage_pt(cfg);

    Table rate = parse_csv(out / "rate_vs_pt.csv");
    Table out_r = parse_csv(out / "outage_vs_r.csv");
    Table out_pt = parse_csv(out / "outage_vs_pt.csv");

    // 5a: full outage for R >= 1 at P_T = -30 dBm, everywhere.
    {
        int checked = 0, bad = 0;
        for (const auto& row : out_r.rows) {
            if (cell_d(out_r, row, "p_t_dbm") != -30.0) continue;
            if (cell_d(out_r, row, "target_r") < 1.0 - 1e-12) continue;
            ++checked;
            if (cell_d(out_r, row, "p_s") != 1.0) ++bad;
        }
        record("criterion 5a: P_S = 1 for R >= 1 at P_T = -30 dBm", bad == 0 && checked > 0,
               std::to_string(checked) + " sweep points, " + std::to_string(bad) + " below 1");
    }

    // 5b: near-transmitter eavesdropping dominates at matched sweep points.
    {
        auto key_r = [&](const std::vector<std::string>& row) {
            return row[out_r.col.at("bin")] + "|" + row[out_r.col.at("allocator")] + "|" +
                   row[out_r.col.at("p_t_dbm")] + "|" + row[out_r.col.at("target_r")];
        };
        auto key_pt = [&](const std::vector<std::string>& row) {
            return row[out_pt.col.at("bin")] + "|" + row[out_pt.col.at("allocator")] + "|" +
                   row[out_pt.col.at("p_t_dbm")] + "|" + row[out_pt.col.at("target_r")];
        };
        std::map<std::string, double> sp, lp;
        for (const auto& row : out_r.rows)
            (row[out_r.col.at("scenario")] == "SP" ? sp : lp)["r|" + key_r(row)] =
                cell_d(out_r, row, "p_s");
        for (const auto& row : out_pt.rows)
            (row[out_pt.col.at("scenario")] == "SP" ? sp : lp)["pt|" + key_pt(row)] =
                cell_d(out_pt, row, "p_s");
        int matched = 0, ok = 0;
        for (const auto& [k, v] : sp) {
            auto it = lp.find(k);
            if (it == lp.end()) continue;
            ++matched;
            if (v >= it->second) ++ok;
        }
        double frac = matched > 0 ? static_cast<double>(ok) / matched : 0.0;
        record("criterion 5b: SP outage >= LP outage at matched points", frac >= 0.95,
               std::to_string(ok) + "/" + std::to_string(matched) + " = " + fmt(frac) +
                   " (needs >= 0.95)");
    }

    // Index the rate table.
    std::map<std::string, double> rates;
    for (const auto& row : rate.rows)
        rates[row[rate.col.at("scenario")] + "|" + row[rate.col.at("bin")] + "|" +
              row[rate.col.at("allocator")] + "|" + row[rate.col.at("p_t_dbm")]] =
            cell_d(rate, row, "ergodic_rate_bps");

    // 5c: bin1/SP/UA stays below 5% of its eavesdropper-free reference over
    // practical transmit powers.
    {
        int checked = 0, bad = 0;
        std::string worst;
        double worst_ratio = 0.0;
        for (double pt : cfg.pt_sweep_dbm) {
            if (pt < 0.0) continue;
            std::string pt_s = format_g(pt);
            double rs = rates.at("SP|bin1|UA|" + pt_s);
            double ref = rates.at("SP-CE0|bin1|UA|" + pt_s);
            ++checked;
            double ratio = rs / ref;
            if (ratio > worst_ratio) {
                worst_ratio = ratio;
                worst = pt_s + " dBm";
            }
            if (!(ratio < 0.05)) ++bad;
        }
        record("criterion 5c: bin1/SP/UA rate under 5% of reference", bad == 0 && checked > 0,
               "worst ratio " + fmt(worst_ratio) + " at " + worst + " over " +
                   std::to_string(checked) + " practical powers");
    }

    // 5d: LP/OA outage below 0.05 for bin2/bin3 at practical powers.
    {
        int checked = 0, bad = 0;
        double worst = 0.0;
        for (const auto& row : out_pt.rows) {
            if (row[out_pt.col.at("scenario")] != "LP") continue;
            if (row[out_pt.col.at("allocator")] != "OA") continue;
            std::string bin = row[out_pt.col.at("bin")];
            if (bin != "bin2" && bin != "bin3") continue;
            double pt = cell_d(out_pt, row, "p_t_dbm");
            if (pt < 0.0 || pt > 30.0) continue;
            ++checked;
            double p = cell_d(out_pt, row, "p_s");
            worst = std::max(worst, p);
            if (!(p < 0.05)) ++bad;
        }
        record("criterion 5d: LP/OA outage < 0.05 for bin2/bin3", bad == 0 && checked > 0,
               std::to_string(checked) + " points, worst P_S " + fmt(worst));
    }

    // 5e: the allocator gap at P_T = 30 dBm stays within 5% relative.
    {
        int bad = 0;
        std::string detail;
        for (const std::string scen : {"SP", "LP"}) {
            for (const std::string bin : {"bin1", "bin2", "bin3"}) {
                double oa = rates.at(scen + "|" + bin + "|OA|30");
                double ua = rates.at(scen + "|" + bin + "|UA|30");
                double gap = std::abs(oa - ua) / std::max({oa, ua, 1e-300});
                detail += scen + "/" + bin + ":" + fmt(gap) + " ";
                if (!(gap <= 0.05)) ++bad;
            }
        }
        record("criterion 5e: |OA-UA| ergodic-rate gap <= 5% at 30 dBm", bad == 0, detail);
    }

    double secs = seconds_since(t0);
    record("criterion 5 runtime: full pipeline under 15 min", secs < 900.0,
           fmt(secs) + " s (limit 900)");
}

// --------------------------------------------------------------------------
// Criterion 6: byte-identical CLI outputs across worker-thread counts.

int run_cli(const std::string& args, const fs::path& log) {
    std::string cmd = std::string(PLCSEC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    if (rc == -1 || !WIFEXITED(rc)) return -1;
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void criterion_6(const fs::path& work) {
    auto t0 = std::chrono::steady_clock::now();
    fs::path base = work / "determinism";
    fs::remove_all(base);
    fs::create_directories(base);

    // Reduced ensemble size; full grid and default sweeps.
    fs::path cfg_path = base / "config.json";
    {
        std::ofstream cfg(cfg_path);
        cfg << R"({"ensemble_size": 240, "calibration_sample_count": 800, "master_seed": 424242})";
    }

    const std::vector<std::pair<std::string, int>> runs = {
        {"t1", 1}, {"t4a", 4}, {"t4b", 4}, {"t8", 8}};
    const std::vector<std::string> commands = {"generate",       "calibrate",
                                               "sweep-rate",     "sweep-outage-r",
                                               "sweep-outage-pt", "stats"};
    bool all_ok = true;
    std::string detail;

    for (const auto& [tag, threads] : runs) {
        fs::path dir = base / tag;
        fs::create_directories(dir);
        for (const std::string& sub : commands) {
            std::string args = sub + " --config " + cfg_path.string() + " --out-dir " +
                               dir.string() + " --threads " + std::to_string(threads);
            int rc = run_cli(args, dir / ("log_" + sub + ".txt"));
            if (rc != 0) {
                all_ok = false;
                detail += tag + "/" + sub + " exit " + std::to_string(rc) + "; ";
            }
        }
    }

    const std::vector<std::string> artifacts = {
        "rate_vs_pt.csv",        "outage_vs_r.csv",        "outage_vs_pt.csv",
        "nsnr_stats.csv",        "calibration.json",       "ensembles/manifest.json",
        "ensembles/sp_bin1.ens", "ensembles/lp_bin3.ens"};
    if (all_ok) {
        for (const std::string& art : artifacts) {
            std::string ref = slurp(base / "t1" / art);
            if (ref.empty()) {
                all_ok = false;
                detail += art + " missing; ";
                continue;
            }
            for (const char* tag : {"t4a", "t4b", "t8"}) {
                if (slurp(base / tag / art) != ref) {
                    all_ok = false;
                    detail += art + " differs in " + tag + "; ";
                }
            }
        }
    }

    // The CLI must fail loudly when ensembles are missing.
    fs::path lonely = base / "no_ensembles";
    fs::create_directories(lonely);
    int rc = run_cli("sweep-rate --config " + cfg_path.string() + " --out-dir " + lonely.string(),
                     lonely / "log.txt");
    if (rc == 0) {
        all_ok = false;
        detail += "sweep without ensembles exited 0; ";
    }

    double secs = seconds_since(t0);
    record("criterion 6: byte-identical CLI output at 1/4/8 threads", all_ok,
           detail.empty() ? ("4 runs x 6 commands compared, " + fmt(secs) + " s")
                          : detail + fmt(secs) + " s");
}

} // namespace

int main() {
    unsetenv("PLCSEC_OUT_DIR");
    unsetenv("PLCSEC_THREADS");

    fs::path work = PLCSEC_WORK_DIR;
    fs::create_directories(work);

    try {
        criterion_1();
        criterion_2();
        criterion_3();
        criterion_4();
        criterion_5(work);
        criterion_6(work);
    } catch (const std::exception& e) {
        record("acceptance harness", false, std::string("unhandled error: ") + e.what());
    }

    int failures = 0;
    for (const CheckLine& line : g_lines)
        if (!line.pass) ++failures;
    std::printf("%d/%zu acceptance checks passed\n", static_cast<int>(g_lines.size()) - failures,
                g_lines.size());
    return failures == 0 ? 0 : 1;
}
