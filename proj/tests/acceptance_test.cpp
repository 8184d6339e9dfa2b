// Acceptance gate: one line per criterion, nonzero exit if any fails.
// Thresholds are pinned here and nowhere else.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "csikit/csikit.hpp"
#include "oracles.hpp"

using namespace csikit;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream ss;
    ss << std::setprecision(4) << v;
    return ss.str();
}

RMatrix randn(Eigen::Index n, Eigen::Index p, std::uint64_t seed) {
    Rng rng(seed);
    RMatrix m(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) m(i, j) = rng.normal();
    return m;
}

CMatrix randc(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
    Rng rng(seed);
    CMatrix out(n, m);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < m; ++j) out(i, j) = rng.cnormal();
    return out;
}

std::vector<RMatrix> grams_of(const SampleBlock& block) {
    std::vector<RMatrix> grams;
    for (const auto& v : block.vars) grams.push_back(gram(v, median_bandwidth(v)));
    return grams;
}

// scene used by the decorrelation trend criteria: default layout, 50 dB
// SNR, narrowband subcarrier spacing so the band stays within one
// coherence bandwidth of the multipath spread
constexpr double kTrendScsHz = 15000.0;
constexpr double kTrendSnrDb = 50.0;
constexpr std::uint64_t kTrendSeed = 1;

Outcome c01_direct_sum() {
    Rng pick(0xA01);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 2 + static_cast<int>(pick.bounded(2));
        const auto n = static_cast<Eigen::Index>(2 + pick.bounded(5));
        const auto p = static_cast<Eigen::Index>(1 + pick.bounded(2));
        SampleBlock block;
        for (int l = 0; l < d; ++l)
            block.vars.push_back(randn(n, p,
                derive_seed(0xA01, {static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(l)})));
        const auto grams = grams_of(block);
        worst = std::max(worst,
                         std::abs(dhsic_statistic(grams) - oracle::dhsic_triple_sum(grams)));
    }
    Outcome o;
    o.ok = worst <= 1e-12;
    o.detail = "max |statistic - direct triple sum| = " + num(worst) + " (limit 1e-12)";
    return o;
}

Outcome c02_nonnegative_and_collapse() {
    Rng pick(0xA02);
    double min_stat = std::numeric_limits<double>::infinity();
    for (int rep = 0; rep < 1000; ++rep) {
        const int d = 2 + static_cast<int>(pick.bounded(3));
        const auto n = static_cast<Eigen::Index>(2 + pick.bounded(7));
        SampleBlock block;
        for (int l = 0; l < d; ++l)
            block.vars.push_back(randn(n, 1,
                derive_seed(0xA02, {static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(l)})));
        min_stat = std::min(min_stat, dhsic_statistic(grams_of(block)));
    }

    double worst_collapse = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto n = static_cast<Eigen::Index>(2 + pick.bounded(7));
        SampleBlock two;
        two.vars = {randn(n, 1, derive_seed(0xB02, {static_cast<std::uint64_t>(rep)})),
                    RMatrix::Constant(n, 1, 3.25)};
        SampleBlock three;
        three.vars = {randn(n, 1, derive_seed(0xC02, {static_cast<std::uint64_t>(rep)})),
                      RMatrix::Constant(n, 1, -1.0), RMatrix::Constant(n, 1, 2.0)};
        worst_collapse = std::max(worst_collapse, std::abs(dhsic_statistic(grams_of(two))));
        worst_collapse = std::max(worst_collapse, std::abs(dhsic_statistic(grams_of(three))));
    }

    Outcome o;
    o.ok = min_stat >= -1e-12 && worst_collapse <= 1e-12;
    o.detail = "min statistic = " + num(min_stat) + " (limit -1e-12), max with constant variable = " +
               num(worst_collapse) + " (limit 1e-12)";
    return o;
}

Outcome c03_null_level() {
    int rejects = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        SampleBlock block;
        for (int l = 0; l < 3; ++l)
            block.vars.push_back(randn(64, 1,
                derive_seed(0xA03, {static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(l)})));
        const DhsicTest test = test_independence(block, KernelSpec{}, 0.05, 200,
                                                 derive_seed(0xB03, {static_cast<std::uint64_t>(t)}));
        if (test.reject) ++rejects;
    }
    const double frac = static_cast<double>(rejects) / trials;
    Outcome o;
    o.ok = frac >= 0.03 && frac <= 0.08;
    o.detail = "rejection fraction = " + num(frac) + " over 400 independent trials (window [0.03, 0.08])";
    return o;
}

Outcome c04_power() {
    int rejects = 0;
    for (int t = 0; t < 100; ++t) {
        const RMatrix x = randn(64, 1, derive_seed(0xA04, {static_cast<std::uint64_t>(t)}));
        SampleBlock block;
        block.vars = {x, x};
        const DhsicTest test = test_independence(block, KernelSpec{}, 0.05, 100,
                                                 derive_seed(0xB04, {static_cast<std::uint64_t>(t)}));
        if (test.reject) ++rejects;
    }
    Outcome o;
    o.ok = rejects >= 95;
    o.detail = "rejected " + std::to_string(rejects) + "/100 duplicated-variable trials (need >= 95)";
    return o;
}

Outcome c05_quantile_rank() {
    Outcome o;
    if (quantile_index(99, 0.05, 0) != 95)
        o = {false, "quantile_index(99, 0.05) != 95"};
    if (quantile_index(10, 0.01, 0) != 11)
        return {false, o.detail + " quantile_index(10, 0.01) != 11"};

    const RMatrix x = randn(16, 1, 0xA05);
    SampleBlock dependent;
    dependent.vars = {x, x};
    const DhsicTest starved = test_independence(dependent, KernelSpec{}, 0.01, 10, 5);
    if (!std::isinf(starved.critical_value) || starved.reject)
        return {false, "B=10 at alpha=0.01 must yield +inf critical value and no rejection"};

    SampleBlock indep;
    indep.vars = {randn(32, 1, 0xB05), randn(32, 1, 0xC05)};
    const DhsicTest t = test_independence(indep, KernelSpec{}, 0.05, 99, 7);
    int ties = 0;
    for (double v : t.resample_values)
        if (v == t.statistic) ++ties;
    if (ties != 0) return {false, "unexpected resample tie in continuous data"};
    if (t.critical_value != t.resample_values[94])
        return {false, "critical value is not the 95th of 99 sorted resamples"};
    if (o.ok) o.detail = "rank arithmetic, starved-resample fallback, and 95th-resample threshold all exact";
    return o;
}

Outcome c06_spectral_split() {
    double worst_energy = 0.0, worst_proj = 0.0, worst_full = 0.0, worst_monotone = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const CMatrix H = randc(100, 16, derive_seed(0xA06, {seed}));
        const PcaModel model = fit_pca(H);
        CMatrix centered = H;
        centered.rowwise() -= model.mean.transpose();
        const double total = centered.squaredNorm();

        double prev = std::numeric_limits<double>::infinity();
        for (int d = 0; d <= 16; ++d) {
            const Decomposition dec = residuals(H, model, d);
            CMatrix core = dec.predictable;
            core.rowwise() -= model.mean.transpose();
            const double split = core.squaredNorm() + dec.residual.squaredNorm();
            worst_energy = std::max(worst_energy, std::abs(total - split) / total);

            const double res_norm = dec.residual.norm();
            if (d >= 1 && d < 16 && res_norm > 0.0)
                worst_proj = std::max(
                    worst_proj,
                    (dec.residual * model.eigenvectors.leftCols(d)).norm() / res_norm);
            if (d == 16) worst_full = std::max(worst_full, res_norm / centered.norm());
            if (res_norm > prev)
                worst_monotone = std::max(worst_monotone, (res_norm - prev) / centered.norm());
            prev = res_norm;
        }
    }
    Outcome o;
    o.ok = worst_energy <= 1e-9 && worst_proj <= 1e-9 && worst_full <= 1e-10 &&
           worst_monotone <= 1e-12;
    o.detail = "energy split rel err " + num(worst_energy) + " (1e-9), retained-direction leak " +
               num(worst_proj) + " (1e-9), full-rank residual " + num(worst_full) +
               " (1e-10), monotonicity slack " + num(worst_monotone) + " (1e-12)";
    return o;
}

Outcome c07_correlation_invariances() {
    RVector a(3), b(3);
    a << 1, 2, 3;
    b << 1, 2, 4;
    const double hand = pearson(a, b);
    if (std::abs(hand - 0.98198) > 1e-5)
        return {false, "three-point example gave " + num(hand) + ", expected 0.98198 +/- 1e-5"};

    double worst = 0.0;
    for (std::uint64_t rep = 0; rep < 1000; ++rep) {
        const RMatrix xm = randn(12, 1, derive_seed(0xA07, {rep}));
        const RMatrix ym = randn(12, 1, derive_seed(0xB07, {rep}));
        const RVector x = xm.col(0), y = ym.col(0);
        const double base = pearson(x, y);
        worst = std::max(worst, std::abs(pearson(y, x) - base));
        worst = std::max(worst, std::abs(pearson((2.5 * x.array() - 7.0).matrix(), y) - base));
        worst = std::max(worst, std::abs(pearson(x, (0.3 * y.array() + 11.0).matrix()) - base));
    }
    Outcome o;
    o.ok = worst <= 1e-10;
    o.detail = "hand example ok; max symmetry/affine deviation = " + num(worst) + " (limit 1e-10)";
    return o;
}

Outcome c08_correlation_trend() {
    GridConfig grid_cfg;  // default 20 x 20 layout, 400 locations
    ChannelConfig ch;
    ch.scs_hz = kTrendScsHz;
    ch.seed = kTrendSeed;
    const LocationGrid grid = build_grid(grid_cfg);
    const CMatrix truth = synthesize_csi(grid, ch);
    const CMatrix obs = observe(truth, kTrendSnrDb, User::b, ch.seed).csi;
    const NeighborMap nmap = knn(grid, 9);
    const PcaModel model = fit_pca(obs);

    const double rho_obs = mean_neighbor_corr(obs, nmap).mean_abs_rho;
    const std::vector<int> dims{1, 2, 3, 4, 8};
    std::vector<double> rho;
    for (int d : dims)
        rho.push_back(mean_neighbor_corr(residuals(obs, model, d).residual, nmap).mean_abs_rho);

    bool chain_ok = true;
    for (std::size_t i = 1; i < rho.size(); ++i)
        if (rho[i] > rho[i - 1] + 0.05) chain_ok = false;

    Outcome o;
    o.ok = rho_obs >= 0.6 && rho[2] <= 0.35 && chain_ok;
    std::string chain = "[";
    for (std::size_t i = 0; i < rho.size(); ++i)
        chain += (i ? " " : "") + num(rho[i]);
    chain += "]";
    o.detail = "observed mean|rho| = " + num(rho_obs) + " (need >= 0.6), at 3 components = " +
               num(rho[2]) + " (need <= 0.35), across {1,2,3,4,8} = " + chain +
               (chain_ok ? " non-increasing" : " NOT non-increasing (slack 0.05)");
    return o;
}

Outcome c09_independence_trend() {
    GridConfig grid_cfg;  // trimmed to 10 x 10 = 100 locations
    grid_cfg.x_max = grid_cfg.x_min + 90.0;
    grid_cfg.y_max = grid_cfg.y_min + 90.0;
    const LocationGrid grid = build_grid(grid_cfg);
    const NeighborMap nmap = knn(grid, 9);
    const KernelSpec kernel;

    const std::vector<int> dims{3, 4, 8};
    double obs_rate = 0.0;
    std::vector<double> res_rate(dims.size(), 0.0);
    const int seeds = 3;
    for (int s = 0; s < seeds; ++s) {
        ChannelConfig ch;
        ch.scs_hz = kTrendScsHz;
        ch.seed = derive_seed(kTrendSeed, {0xC9, static_cast<std::uint64_t>(s)});
        const CMatrix truth = synthesize_csi(grid, ch);
        const CMatrix obs = observe(truth, kTrendSnrDb, User::b, ch.seed).csi;
        const PcaModel model = fit_pca(obs);

        obs_rate += neighborhood_rejection_rate(obs, nmap, kernel, 0.05, 100,
                                                derive_seed(ch.seed, {1}));
        for (std::size_t i = 0; i < dims.size(); ++i)
            res_rate[i] += neighborhood_rejection_rate(
                residuals(obs, model, dims[i]).residual, nmap, kernel, 0.05, 100,
                derive_seed(ch.seed, {2, static_cast<std::uint64_t>(dims[i])}));
    }
    obs_rate /= seeds;
    for (double& r : res_rate) r /= seeds;

    bool residual_ok = true;
    std::string rates = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (res_rate[i] > 0.15) residual_ok = false;
        rates += (i ? " " : "") + num(res_rate[i]);
    }
    rates += "]";

    Outcome o;
    o.ok = obs_rate >= 0.8 && residual_ok;
    o.detail = "observed rejection rate = " + num(obs_rate) +
               " (need >= 0.8), residual rates at {3,4,8} components = " + rates +
               " (each <= 0.15), 3 seeds, alpha 0.05, B=100";
    return o;
}

Outcome c10_byte_identical_sweeps() {
    const char* cli = std::getenv("CSIKIT_CLI");
    if (!cli) return {false, "CSIKIT_CLI not set"};

    const fs::path ws = fs::temp_directory_path() / "csikit_acceptance_sweep";
    fs::remove_all(ws);
    fs::create_directories(ws);

    ExperimentConfig cfg;
    cfg.grid.x_min = 0.0;
    cfg.grid.x_max = 20.0;
    cfg.grid.y_min = 0.0;
    cfg.grid.y_max = 20.0;
    cfg.grid.spacing = 10.0;
    cfg.channel.subcarriers = 4;
    cfg.channel.scatterer_count = 2;
    cfg.snr_list_db = {10.0, 50.0};
    cfg.scs_list_hz = {15000.0, 30000.0};
    cfg.d_hat_list = {1, 2};
    cfg.k_neighbors = 3;
    cfg.permutations = 10;
    cfg.master_seed = 5;
    save_json(experiment_config_to_json(cfg), (ws / "config.json").string());

    for (const char* out : {"run1", "run2"}) {
        const std::string cmd = std::string(cli) + " sweep --config " +
                                (ws / "config.json").string() + " --out " +
                                (ws / out).string() + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        if (status < 0 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
            fs::remove_all(ws);
            return {false, std::string("sweep run into ") + out + " failed"};
        }
    }

    for (const char* name : {"table1.csv", "table2.csv", "fig2.csv"}) {
        const std::string a = read_text_file((ws / "run1" / name).string());
        const std::string b = read_text_file((ws / "run2" / name).string());
        if (a != b || a.empty()) {
            fs::remove_all(ws);
            return {false, std::string(name) + " differs between identical runs"};
        }
    }
    fs::remove_all(ws);
    return {true, "table1.csv, table2.csv, fig2.csv byte-identical across reruns"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* id;
        const char* what;
        Outcome (*fn)();
    };
    const std::vector<Criterion> criteria{
        {"C01", "joint-dependence statistic matches direct triple-sum evaluation", c01_direct_sum},
        {"C02", "statistic nonnegative and collapses to zero for constant variables", c02_nonnegative_and_collapse},
        {"C03", "permutation test holds its level on independent data", c03_null_level},
        {"C04", "permutation test detects duplicated variables", c04_power},
        {"C05", "critical-value rank arithmetic and degenerate fallbacks", c05_quantile_rank},
        {"C06", "principal-component split identities on random complex data", c06_spectral_split},
        {"C07", "correlation coefficient oracle value and invariances", c07_correlation_invariances},
        {"C08", "observed channel spatially correlated, residual decorrelated", c08_correlation_trend},
        {"C09", "neighborhood tests: observed dependent, residual independent", c09_independence_trend},
        {"C10", "campaign outputs byte-identical for fixed config and seed", c10_byte_identical_sweeps},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %s (%5.1fs) %s | %s\n", c.id, o.ok ? "PASS" : "FAIL", secs, c.what,
                    o.detail.c_str());
        std::fflush(stdout);
        if (!o.ok) ++failures;
    }
    std::printf("%d/10 criteria passed\n", 10 - failures);
    return failures == 0 ? 0 : 1;
}
