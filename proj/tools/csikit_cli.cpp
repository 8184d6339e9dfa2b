#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "csikit/csikit.hpp"

namespace {

using csikit::json;

void print_error(const std::string& kind, const std::string& message) {
    const json err{{"error", {{"kind", kind}, {"message", message}}}};
    std::cerr << err.dump() << std::endl;
}

csikit::User parse_user(const std::string& u) {
    if (u == "a") return csikit::User::a;
    if (u == "b") return csikit::User::b;
    throw csikit::argument_error("user must be 'a' or 'b'");
}

double parse_snr(const std::string& s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw csikit::argument_error("snr must be a number in dB or 'inf'");
    }
}

csikit::Scene load_scene(const std::string& path) {
    return csikit::scene_from_json(csikit::load_json(path));
}

// Observed channel or PCA residual of the chosen user; d_hat < 0 selects
// the raw observation.
csikit::CMatrix stage_matrix(const csikit::Scene& scene, csikit::User user, int d_hat) {
    const csikit::CMatrix& obs =
        user == csikit::User::b ? scene.csi.observed_b : scene.csi.observed_a;
    if (d_hat < 0) return obs;
    const csikit::PcaModel model = csikit::fit_pca(obs);
    return csikit::residuals(obs, model, d_hat).residual;
}

struct SceneArgs {
    std::string config_path;
    std::string out_path;
    std::string snr;
    std::uint64_t seed = 0;
    bool has_seed = false;
};

int run_scene(const SceneArgs& a) {
    csikit::GridConfig grid;
    csikit::ChannelConfig channel;
    double snr_db = 30.0;
    if (!a.config_path.empty()) {
        const json cfg = csikit::load_json(a.config_path);
        try {
            if (cfg.contains("grid")) grid = csikit::grid_config_from_json(cfg.at("grid"));
            if (cfg.contains("channel"))
                channel = csikit::channel_config_from_json(cfg.at("channel"));
            if (cfg.contains("snr_db")) snr_db = csikit::detail::snr_from_json(cfg.at("snr_db"));
        } catch (const json::exception& e) {
            throw csikit::data_error(std::string("malformed scene config: ") + e.what());
        }
    }
    if (a.has_seed) channel.seed = a.seed;
    if (!a.snr.empty()) snr_db = parse_snr(a.snr);

    const csikit::Scene scene = csikit::make_scene(grid, channel, snr_db);
    csikit::save_json(csikit::scene_to_json(scene), a.out_path);
    std::cout << "wrote " << a.out_path << " (" << scene.csi.true_csi.rows() << " locations x "
              << scene.csi.true_csi.cols() << " subcarriers, snr_db="
              << csikit::fmt_sig6(snr_db) << ")\n";
    return 0;
}

struct DecomposeArgs {
    std::string scene_path;
    std::string out_path;
    std::string evr_path;
    std::string user = "b";
    int d_hat = 0;
};

int run_decompose(const DecomposeArgs& a) {
    const csikit::Scene scene = load_scene(a.scene_path);
    const csikit::User user = parse_user(a.user);
    const csikit::CMatrix& obs =
        user == csikit::User::b ? scene.csi.observed_b : scene.csi.observed_a;
    const csikit::PcaModel model = csikit::fit_pca(obs);
    const csikit::Decomposition dec = csikit::residuals(obs, model, a.d_hat);
    csikit::save_json(csikit::decomposition_to_json(dec, model, a.user), a.out_path);
    if (!a.evr_path.empty())
        csikit::write_text_file(a.evr_path, csikit::explained_variance_csv(model));
    std::cout << "wrote " << a.out_path << " (d_hat=" << a.d_hat << ", user=" << a.user
              << ")\n";
    return 0;
}

struct CorrArgs {
    std::string scene_path;
    std::string out_path;
    std::string summary_path;
    std::string user = "b";
    std::string features = "magnitude";
    int d_hat = -1;
    int neighbors = 9;
};

int run_corr(const CorrArgs& a) {
    const csikit::Scene scene = load_scene(a.scene_path);
    const csikit::LocationGrid grid = scene.grid();
    const csikit::NeighborMap nmap = csikit::knn(grid, a.neighbors);
    const csikit::CMatrix mat = stage_matrix(scene, parse_user(a.user), a.d_hat);

    csikit::CorrFeatures features;
    if (a.features == "magnitude") features = csikit::CorrFeatures::magnitude;
    else if (a.features == "complex") features = csikit::CorrFeatures::complex_modulus;
    else throw csikit::argument_error("features must be 'magnitude' or 'complex'");

    csikit::CorrReport report = csikit::mean_neighbor_corr(mat, nmap, features);
    report.snr_db = scene.csi.snr_db;
    report.scs_hz = scene.channel.scs_hz;
    report.d_hat = a.d_hat;

    csikit::write_text_file(a.out_path, csikit::corr_pairs_csv(report));
    if (!a.summary_path.empty())
        csikit::write_text_file(a.summary_path, csikit::corr_summary_csv({report}));
    std::cout << "mean_abs_rho=" << csikit::fmt_sig6(report.mean_abs_rho) << " over "
              << report.per_pair.size() << " pairs (" << report.undefined_pairs
              << " undefined), wrote " << a.out_path << "\n";
    return 0;
}

struct DhsicArgs {
    std::string scene_path;
    std::string out_path;
    std::string user = "b";
    std::string kind = "neighborhood";
    int d_hat = -1;
    int neighbors = 9;
    double alpha = 0.05;
    int perms = 100;
    std::uint64_t seed = 1;
};

int run_dhsic(const DhsicArgs& a) {
    const csikit::Scene scene = load_scene(a.scene_path);
    const csikit::CMatrix mat = stage_matrix(scene, parse_user(a.user), a.d_hat);
    const csikit::KernelSpec kernel;

    std::vector<csikit::DhsicRow> rows;
    if (a.kind == "neighborhood") {
        const csikit::LocationGrid grid = scene.grid();
        const csikit::NeighborMap nmap = csikit::knn(grid, a.neighbors);
        const auto tests =
            csikit::neighborhood_tests(mat, nmap, kernel, a.alpha, a.perms, a.seed);
        std::size_t rejects = 0;
        for (std::size_t i = 0; i < tests.size(); ++i) {
            rows.push_back({scene.csi.snr_db, scene.channel.scs_hz, a.d_hat, "neighborhood",
                            static_cast<long>(i), tests[i].statistic, tests[i].critical_value,
                            tests[i].alpha, tests[i].B, tests[i].reject});
            if (tests[i].reject) ++rejects;
        }
        std::cout << "rejection_rate="
                  << csikit::fmt_sig6(static_cast<double>(rejects) /
                                      static_cast<double>(tests.size()))
                  << " over " << tests.size() << " locations, wrote " << a.out_path << "\n";
    } else if (a.kind == "subcarrier") {
        const csikit::DhsicTest test =
            csikit::subcarrier_test(mat, kernel, a.alpha, a.perms, a.seed);
        rows.push_back({scene.csi.snr_db, scene.channel.scs_hz, a.d_hat, "subcarrier", -1,
                        test.statistic, test.critical_value, test.alpha, test.B, test.reject});
        std::cout << "statistic=" << csikit::fmt_sig6(test.statistic)
                  << " critical_value=" << csikit::fmt_sig6(test.critical_value)
                  << " reject=" << (test.reject ? 1 : 0) << ", wrote " << a.out_path << "\n";
    } else {
        throw csikit::argument_error("kind must be 'neighborhood' or 'subcarrier'");
    }
    csikit::write_text_file(a.out_path, csikit::dhsic_csv(rows));
    return 0;
}

struct SweepArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool has_seed = false;
};

int run_sweep_cmd(const SweepArgs& a) {
    csikit::ExperimentConfig cfg;
    if (!a.config_path.empty())
        cfg = csikit::experiment_config_from_json(csikit::load_json(a.config_path));
    if (a.has_seed) cfg.master_seed = a.seed;

    const csikit::SweepResult result = csikit::run_sweep(cfg);
    csikit::emit_reports(result, cfg, a.out_dir);
    std::cout << "wrote " << a.out_dir << "/{table1,table2,fig2}.csv and provenance.json ("
              << result.table1_rows.size() << " rows";
    if (!result.cell_errors.empty())
        std::cout << ", " << result.cell_errors.size() << " failed cells";
    std::cout << ")\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthetic multicarrier CSI: scene synthesis, PCA residual extraction, "
                 "spatial correlation and joint independence certification"};
    app.require_subcommand(1);

    SceneArgs scene_args;
    auto* scene = app.add_subcommand("scene", "synthesize a scene and export it as JSON");
    scene->add_option("--config", scene_args.config_path,
                      "scene config JSON (grid, channel, snr_db); defaults used if omitted");
    auto* scene_seed = scene->add_option("--seed", scene_args.seed, "override the channel seed");
    scene->add_option("--snr", scene_args.snr, "override snr_db (number or 'inf')");
    scene->add_option("--out", scene_args.out_path, "output scene JSON path")->required();

    DecomposeArgs dec_args;
    auto* dec = app.add_subcommand("decompose", "PCA decomposition of an observed channel");
    dec->add_option("--scene", dec_args.scene_path, "scene JSON path")->required();
    dec->add_option("--d-hat", dec_args.d_hat, "retained components")->required();
    dec->add_option("--user", dec_args.user, "observation to decompose: a or b");
    dec->add_option("--out", dec_args.out_path, "output decomposition JSON path")->required();
    dec->add_option("--evr-out", dec_args.evr_path, "also write explained-variance CSV here");

    CorrArgs corr_args;
    auto* corr = app.add_subcommand("corr", "neighbor correlation of residual features");
    corr->add_option("--scene", corr_args.scene_path, "scene JSON path")->required();
    corr->add_option("--d-hat", corr_args.d_hat,
                     "retained components; omit or -1 for the raw observed channel");
    corr->add_option("--neighbors", corr_args.neighbors, "neighbors per location");
    corr->add_option("--user", corr_args.user, "observation to use: a or b");
    corr->add_option("--features", corr_args.features, "'magnitude' or 'complex'");
    corr->add_option("--out", corr_args.out_path, "per-pair CSV path")->required();
    corr->add_option("--summary-out", corr_args.summary_path, "one-row summary CSV path");

    DhsicArgs dhsic_args;
    auto* dh = app.add_subcommand("dhsic", "joint independence tests on residuals");
    dh->add_option("--scene", dhsic_args.scene_path, "scene JSON path")->required();
    dh->add_option("--d-hat", dhsic_args.d_hat,
                   "retained components; omit or -1 for the raw observed channel");
    dh->add_option("--kind", dhsic_args.kind, "'neighborhood' or 'subcarrier'");
    dh->add_option("--alpha", dhsic_args.alpha, "significance level");
    dh->add_option("--perms", dhsic_args.perms, "permutation resamples B");
    dh->add_option("--neighbors", dhsic_args.neighbors, "neighbors per location");
    dh->add_option("--user", dhsic_args.user, "observation to use: a or b");
    dh->add_option("--seed", dhsic_args.seed, "permutation seed");
    dh->add_option("--out", dhsic_args.out_path, "result CSV path")->required();

    SweepArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "full SNR x SCS x d_hat campaign");
    sweep->add_option("--config", sweep_args.config_path,
                      "sweep config JSON; defaults used if omitted");
    auto* sweep_seed = sweep->add_option("--seed", sweep_args.seed, "override master_seed");
    sweep->add_option("--out", sweep_args.out_dir, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return 2;
    }

    scene_args.has_seed = scene_seed->count() > 0;
    sweep_args.has_seed = sweep_seed->count() > 0;

    try {
        if (scene->parsed()) return run_scene(scene_args);
        if (dec->parsed()) return run_decompose(dec_args);
        if (corr->parsed()) return run_corr(corr_args);
        if (dh->parsed()) return run_dhsic(dhsic_args);
        if (sweep->parsed()) return run_sweep_cmd(sweep_args);
        print_error("usage", "no subcommand given");
        return 2;
    } catch (const csikit::error& e) {
        print_error(e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        print_error("internal", e.what());
        return 1;
    }
}
