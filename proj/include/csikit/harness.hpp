#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "csikit/channel.hpp"
#include "csikit/common.hpp"
#include "csikit/dhsic.hpp"
#include "csikit/io.hpp"
#include "csikit/pca.hpp"
#include "csikit/rng.hpp"
#include "csikit/stats.hpp"

namespace csikit {

/**
 * Full campaign description: one grid and channel template swept over
 * SNR x SCS, decomposed at each retained dimension in d_hat_list, with
 * `trials` independent scene seeds averaged per cell.
 */
struct ExperimentConfig {
    GridConfig grid;
    ChannelConfig channel;  // scs_hz and seed are overridden per cell
    std::vector<double> snr_list_db{10.0, 30.0, 50.0};
    std::vector<double> scs_list_hz{15e3, 30e3, 60e3, 100e3, 1000e3};
    std::vector<int> d_hat_list{1, 2, 3, 4, 8};
    int k_neighbors = 9;
    double alpha = 0.05;
    int permutations = 100;
    int trials = 1;
    std::uint64_t master_seed = 1;
    CorrFeatures corr_features = CorrFeatures::magnitude;
    User fit_user = User::b;

    void validate() const {
        if (snr_list_db.empty() || scs_list_hz.empty() || d_hat_list.empty())
            throw config_error("sweep lists must be non-empty");
        for (int d : d_hat_list)
            if (d < 0 || d > channel.subcarriers)
                throw config_error("d_hat values must lie in [0, subcarriers]");
        if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("alpha must be in (0,1)");
        if (permutations < 1) throw config_error("permutations must be >= 1");
        if (trials < 1) throw config_error("trials must be >= 1");
        if (k_neighbors < 1) throw config_error("k_neighbors must be >= 1");
    }
};

// d_hat == -1 tags the observed-channel baseline row in every table.
inline constexpr int kObservedStage = -1;

struct SweepResult {
    struct Table1Row {
        double snr_db;
        double scs_hz;
        int d_hat;
        double mean_abs_rho;
    };
    struct Table2Row {
        double snr_db;
        double scs_hz;
        int d_hat;
        double rejection_rate;
    };
    struct Fig2Row {
        double snr_db;
        double scs_hz;
        int d_hat;
        double statistic;       // trial-averaged, logged at emit time
        double critical_value;  // trial-averaged
    };

    std::vector<Table1Row> table1_rows;
    std::vector<Table2Row> table2_rows;
    std::vector<Fig2Row> fig2_rows;
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::vector<std::string> cell_errors;
};

inline json experiment_config_to_json(const ExperimentConfig& c) {
    return json{{"schema", "csikit.sweep.v1"},
                {"grid", grid_config_to_json(c.grid)},
                {"channel", channel_config_to_json(c.channel)},
                {"snr_list_db", c.snr_list_db},
                {"scs_list_hz", c.scs_list_hz},
                {"d_hat_list", c.d_hat_list},
                {"k_neighbors", c.k_neighbors},
                {"alpha", c.alpha},
                {"permutations", c.permutations},
                {"trials", c.trials},
                {"master_seed", c.master_seed},
                {"corr_features",
                 c.corr_features == CorrFeatures::magnitude ? "magnitude" : "complex_modulus"},
                {"fit_user", c.fit_user == User::b ? "b" : "a"}};
}

// Missing keys fall back to the defaults above, so a config file only
// needs the fields it changes.
inline ExperimentConfig experiment_config_from_json(const json& j) {
    try {
        ExperimentConfig c;
        if (j.contains("schema") && j.at("schema").get<std::string>() != "csikit.sweep.v1")
            throw data_error("unsupported sweep config schema");
        if (j.contains("grid")) c.grid = grid_config_from_json(j.at("grid"));
        if (j.contains("channel")) c.channel = channel_config_from_json(j.at("channel"));
        c.snr_list_db = j.value("snr_list_db", c.snr_list_db);
        c.scs_list_hz = j.value("scs_list_hz", c.scs_list_hz);
        c.d_hat_list = j.value("d_hat_list", c.d_hat_list);
        c.k_neighbors = j.value("k_neighbors", c.k_neighbors);
        c.alpha = j.value("alpha", c.alpha);
        c.permutations = j.value("permutations", c.permutations);
        c.trials = j.value("trials", c.trials);
        c.master_seed = j.value("master_seed", c.master_seed);
        const std::string feat = j.value("corr_features", std::string("magnitude"));
        if (feat == "magnitude") c.corr_features = CorrFeatures::magnitude;
        else if (feat == "complex_modulus") c.corr_features = CorrFeatures::complex_modulus;
        else throw data_error("corr_features must be magnitude or complex_modulus");
        const std::string user = j.value("fit_user", std::string("b"));
        if (user == "a") c.fit_user = User::a;
        else if (user == "b") c.fit_user = User::b;
        else throw data_error("fit_user must be a or b");
        return c;
    } catch (const json::exception& e) {
        throw data_error(std::string("malformed sweep config: ") + e.what());
    }
}

namespace detail {

inline constexpr std::uint64_t kSweepStream = 0x31;
inline constexpr std::uint64_t kRejectionStream = 0x32;
inline constexpr std::uint64_t kSubcarrierStream = 0x33;

inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string utc_timestamp() {
    const std::time_t now =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace detail

/**
 * Runs the full SNR x SCS sweep.
 *
 * Each (snr, scs) cell synthesizes `trials` scenes with seeds derived
 * from (master_seed, snr index, scs index, trial), fits PCA on the
 * configured user's observation, and evaluates three metrics for the
 * observed channel and for the residual at every d_hat: mean neighbor
 * correlation, neighborhood rejection rate, and the cross-subcarrier
 * joint test. A cell that throws is skipped and its error recorded;
 * the remaining cells still run.
 */
inline SweepResult run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();

    SweepResult result;
    result.master_seed = cfg.master_seed;
    result.config_hash = detail::fnv1a_hex(experiment_config_to_json(cfg).dump());

    KernelSpec kernel;  // median heuristic
    std::optional<LocationGrid> grid;
    std::optional<NeighborMap> nmap;

    std::vector<int> stages;
    stages.push_back(kObservedStage);
    stages.insert(stages.end(), cfg.d_hat_list.begin(), cfg.d_hat_list.end());
    const auto n_stage = stages.size();

    for (std::size_t si = 0; si < cfg.snr_list_db.size(); ++si) {
        for (std::size_t ci = 0; ci < cfg.scs_list_hz.size(); ++ci) {
            const double snr = cfg.snr_list_db[si];
            const double scs = cfg.scs_list_hz[ci];
            try {
                if (!grid) grid = build_grid(cfg.grid);
                if (!nmap) nmap = knn(*grid, cfg.k_neighbors);

                std::vector<double> rho(n_stage, 0.0), rate(n_stage, 0.0),
                    stat(n_stage, 0.0), cv(n_stage, 0.0);

                for (int t = 0; t < cfg.trials; ++t) {
                    const std::uint64_t scene_seed = derive_seed(
                        cfg.master_seed, {detail::kSweepStream, si, ci,
                                          static_cast<std::uint64_t>(t)});
                    ChannelConfig ch = cfg.channel;
                    ch.scs_hz = scs;
                    ch.seed = scene_seed;
                    const CMatrix truth = synthesize_csi(*grid, ch);
                    const CMatrix obs =
                        observe(truth, snr, cfg.fit_user, scene_seed).csi;
                    const PcaModel model = fit_pca(obs);

                    for (std::size_t s = 0; s < n_stage; ++s) {
                        const CMatrix mat = stages[s] == kObservedStage
                                                ? obs
                                                : residuals(obs, model, stages[s]).residual;
                        rho[s] += mean_neighbor_corr(mat, *nmap, cfg.corr_features)
                                      .mean_abs_rho;
                        rate[s] += neighborhood_rejection_rate(
                            mat, *nmap, kernel, cfg.alpha, cfg.permutations,
                            derive_seed(scene_seed, {detail::kRejectionStream, s}));
                        const DhsicTest sub = subcarrier_test(
                            mat, kernel, cfg.alpha, cfg.permutations,
                            derive_seed(scene_seed, {detail::kSubcarrierStream, s}));
                        stat[s] += sub.statistic;
                        cv[s] += sub.critical_value;
                    }
                }

                const double nt = static_cast<double>(cfg.trials);
                for (std::size_t s = 0; s < n_stage; ++s) {
                    result.table1_rows.push_back({snr, scs, stages[s], rho[s] / nt});
                    result.table2_rows.push_back({snr, scs, stages[s], rate[s] / nt});
                    result.fig2_rows.push_back(
                        {snr, scs, stages[s], stat[s] / nt, cv[s] / nt});
                }
            } catch (const std::exception& e) {
                std::ostringstream msg;
                msg << "cell snr_db=" << snr << " scs_hz=" << scs << ": " << e.what();
                result.cell_errors.push_back(msg.str());
            }
        }
    }
    return result;
}

inline std::string table1_csv(const SweepResult& r) {
    std::ostringstream out;
    out << "snr_db,scs_hz,d_hat,mean_abs_rho\n";
    for (const auto& row : r.table1_rows)
        out << fmt_sig6(row.snr_db) << ',' << fmt_sig6(row.scs_hz) << ',' << row.d_hat << ','
            << fmt_sig6(row.mean_abs_rho) << '\n';
    return out.str();
}

inline std::string table2_csv(const SweepResult& r) {
    std::ostringstream out;
    out << "snr_db,scs_hz,d_hat,rejection_rate\n";
    for (const auto& row : r.table2_rows)
        out << fmt_sig6(row.snr_db) << ',' << fmt_sig6(row.scs_hz) << ',' << row.d_hat << ','
            << fmt_sig6(row.rejection_rate) << '\n';
    return out.str();
}

inline std::string fig2_csv(const SweepResult& r) {
    std::ostringstream out;
    out << "snr_db,scs_hz,d_hat,log_statistic,log_critical_value\n";
    for (const auto& row : r.fig2_rows)
        out << fmt_sig6(row.snr_db) << ',' << fmt_sig6(row.scs_hz) << ',' << row.d_hat << ','
            << fmt_sig6(std::log(row.statistic)) << ','
            << fmt_sig6(std::log(row.critical_value)) << '\n';
    return out.str();
}

/**
 * Writes table1.csv, table2.csv, fig2.csv and provenance.json into
 * out_dir (created if missing). The CSV bytes are a pure function of
 * (config, master_seed); only provenance.json carries a wall-clock
 * timestamp.
 */
inline void emit_reports(const SweepResult& result, const ExperimentConfig& cfg,
                         const std::string& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory " + out_dir + ": " + ec.message());

    const std::filesystem::path dir(out_dir);
    write_text_file((dir / "table1.csv").string(), table1_csv(result));
    write_text_file((dir / "table2.csv").string(), table2_csv(result));
    write_text_file((dir / "fig2.csv").string(), fig2_csv(result));

    json provenance{{"schema", "csikit.provenance.v1"},
                    {"config", experiment_config_to_json(cfg)},
                    {"config_hash", result.config_hash},
                    {"master_seed", result.master_seed},
                    {"timestamp_utc", detail::utc_timestamp()},
                    {"cell_errors", result.cell_errors}};
    save_json(provenance, (dir / "provenance.json").string());
}

}  // namespace csikit
