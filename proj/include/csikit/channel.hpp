#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "csikit/common.hpp"
#include "csikit/rng.hpp"

namespace csikit {

struct Box3 {
    Vec3 min;
    Vec3 max;
};

struct GridConfig {
    double x_min = 100.0;
    double x_max = 290.0;
    double y_min = -100.0;
    double y_max = 90.0;
    double spacing = 10.0;
    double z = 0.0;
    Vec3 receiver = Vec3(0.0, 0.0, 10.0);
};

struct LocationGrid {
    std::vector<Vec3> positions;
    double spacing = 0.0;
    Vec3 receiver_position = Vec3::Zero();

    std::size_t size() const { return positions.size(); }
};

/**
 * Multicarrier channel synthesis parameters.
 *
 * The scene is a fixed receiver plus `scatterer_count` point scatterers
 * drawn uniformly in `scatterer_region`. Each grid location sees a
 * line-of-sight ray and one ray per scatterer; a spatially correlated
 * log-normal shadowing field multiplies each location's response.
 */
struct ChannelConfig {
    double f0_hz = 2.0e9;
    int subcarriers = 32;
    double scs_hz = 15000.0;
    double path_loss_exponent = 2.7;
    int scatterer_count = 20;
    Box3 scatterer_region{Vec3(20.0, -60.0, 0.0), Vec3(120.0, 60.0, 25.0)};
    double shadowing_sigma_db = 4.0;
    double shadowing_corr_distance_m = 50.0;
    std::uint64_t seed = 1;
};

struct Observation {
    CMatrix csi;             // channel estimate after pilot removal
    double snr_db = 0.0;
    double noise_variance = 0.0;  // per complex entry
};

struct CsiSet {
    CMatrix true_csi;
    CMatrix observed_a;
    CMatrix observed_b;
    double snr_db = 0.0;
    double noise_variance = 0.0;
};

enum class User { a, b };

namespace detail {

inline constexpr std::uint64_t kScattererStream = 0x11;
inline constexpr std::uint64_t kShadowingStream = 0x12;
inline constexpr std::uint64_t kObserveStream = 0x13;

inline std::uint64_t user_tag(User u) { return u == User::a ? 0xA1 : 0xB2; }

}  // namespace detail

inline void validate(const GridConfig& g) {
    if (g.spacing <= 0.0) throw config_error("grid spacing must be positive");
    if (g.x_max < g.x_min || g.y_max < g.y_min)
        throw config_error("grid range is empty (max < min)");
}

inline void validate(const ChannelConfig& c) {
    if (c.subcarriers < 1) throw config_error("subcarriers must be >= 1");
    if (c.scs_hz <= 0.0) throw config_error("subcarrier spacing must be positive");
    if (c.f0_hz <= 0.0) throw config_error("carrier frequency must be positive");
    if (c.scatterer_count < 0) throw config_error("scatterer count must be >= 0");
    if (c.shadowing_corr_distance_m <= 0.0)
        throw config_error("shadowing correlation distance must be positive");
    if (c.shadowing_sigma_db < 0.0) throw config_error("shadowing sigma must be >= 0");
    if (c.path_loss_exponent < 0.0) throw config_error("path loss exponent must be >= 0");
    for (int axis = 0; axis < 3; ++axis)
        if (c.scatterer_region.max[axis] < c.scatterer_region.min[axis])
            throw config_error("scatterer region box has max < min");
}

// Rectangular grid of terminal positions, x outer loop, y inner loop.
// Both endpoints are included when the range is an exact multiple of the
// spacing; otherwise the last step short of max is the final point.
inline LocationGrid build_grid(const GridConfig& g) {
    validate(g);
    const auto steps = [&](double lo, double hi) {
        return static_cast<std::size_t>(std::floor((hi - lo) / g.spacing + 1e-9)) + 1;
    };
    const std::size_t nx = steps(g.x_min, g.x_max);
    const std::size_t ny = steps(g.y_min, g.y_max);
    LocationGrid grid;
    grid.spacing = g.spacing;
    grid.receiver_position = g.receiver;
    grid.positions.reserve(nx * ny);
    for (std::size_t i = 0; i < nx; ++i)
        for (std::size_t j = 0; j < ny; ++j)
            grid.positions.emplace_back(g.x_min + static_cast<double>(i) * g.spacing,
                                        g.y_min + static_cast<double>(j) * g.spacing, g.z);
    return grid;
}

namespace detail {

struct Ray {
    double delay_s;
    double amplitude;
    double phase;  // reflection phase, 0 for line of sight
};

// Correlated log-normal shadowing gains, one per location. The log-domain
// field is Gaussian with correlation exp(-d / corr_distance) between
// locations at distance d (exponential decay, the classic outdoor model).
inline RVector shadowing_gains(const LocationGrid& grid, const ChannelConfig& cfg) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    if (cfg.shadowing_sigma_db == 0.0) return RVector::Ones(n);
    RMatrix corr(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        corr(i, i) = 1.0 + 1e-10;  // jitter keeps the Cholesky factor finite
        for (Eigen::Index j = 0; j < i; ++j) {
            const double d = (grid.positions[static_cast<std::size_t>(i)] -
                              grid.positions[static_cast<std::size_t>(j)])
                                 .norm();
            corr(i, j) = corr(j, i) = std::exp(-d / cfg.shadowing_corr_distance_m);
        }
    }
    Eigen::LLT<RMatrix> llt(corr);
    if (llt.info() != Eigen::Success)
        throw config_error("shadowing correlation matrix is not positive definite");
    Rng rng(derive_seed(cfg.seed, {kShadowingStream}));
    RVector white(n);
    for (Eigen::Index i = 0; i < n; ++i) white(i) = rng.normal();
    const RVector field = llt.matrixL() * white;
    RVector gains(n);
    for (Eigen::Index i = 0; i < n; ++i)
        gains(i) = std::pow(10.0, cfg.shadowing_sigma_db * field(i) / 20.0);
    return gains;
}

}  // namespace detail

/**
 * Synthesizes the true frequency response over the grid.
 *
 * For location n and subcarrier m at f_m = f0 + m*scs:
 *
 *   h_n[m] = s_n * sum_p a_p(n) * exp(j*(phi_p - 2*pi*f_m*tau_p(n)))
 *
 * Path 0 is the direct ray: tau_0 = d/c, a_0 = d^(-ple/2) (unit gain at
 * the 1 m reference), phi_0 = 0. Path p >= 1 bounces off scatterer p:
 * tau_p = (d1+d2)/c, a_p = kappa_p * (d1+d2)^(-ple/2) with a per-scatterer
 * reflectivity kappa_p ~ U[0.3,1]/sqrt(max(P,1)) and a random phase phi_p.
 * Scatterer positions, reflectivities and phases are drawn once per scene
 * from the config seed, so every location sees the same environment.
 * s_n is the correlated shadowing gain. Same (grid, cfg) gives
 * bit-identical output.
 */
inline CMatrix synthesize_csi(const LocationGrid& grid, const ChannelConfig& cfg) {
    validate(cfg);
    if (grid.size() == 0) throw config_error("grid has no positions");

    const auto n_loc = static_cast<Eigen::Index>(grid.size());
    const int m_sub = cfg.subcarriers;
    const double ple2 = cfg.path_loss_exponent / 2.0;

    struct Scatterer {
        Vec3 pos;
        double kappa;
        double phase;
    };
    std::vector<Scatterer> scatterers;
    scatterers.reserve(static_cast<std::size_t>(cfg.scatterer_count));
    {
        Rng rng(derive_seed(cfg.seed, {detail::kScattererStream}));
        const double norm = std::sqrt(static_cast<double>(std::max(cfg.scatterer_count, 1)));
        const Box3& box = cfg.scatterer_region;
        for (int p = 0; p < cfg.scatterer_count; ++p) {
            Scatterer s;
            s.pos = Vec3(rng.uniform(box.min.x(), box.max.x()),
                         rng.uniform(box.min.y(), box.max.y()),
                         rng.uniform(box.min.z(), box.max.z()));
            s.kappa = rng.uniform(0.3, 1.0) / norm;
            s.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
            scatterers.push_back(s);
        }
    }

    const RVector shadow = detail::shadowing_gains(grid, cfg);

    CMatrix h(n_loc, m_sub);
    std::vector<detail::Ray> rays(scatterers.size() + 1);
    for (Eigen::Index n = 0; n < n_loc; ++n) {
        const Vec3& x = grid.positions[static_cast<std::size_t>(n)];
        const double d0 = (x - grid.receiver_position).norm();
        if (d0 <= 0.0) throw config_error("a grid position coincides with the receiver");
        rays[0] = {d0 / kSpeedOfLight, std::pow(d0, -ple2), 0.0};
        for (std::size_t p = 0; p < scatterers.size(); ++p) {
            const double d1 = (x - scatterers[p].pos).norm();
            const double d2 = (scatterers[p].pos - grid.receiver_position).norm();
            if (d1 <= 0.0 || d2 <= 0.0)
                throw config_error("a scatterer coincides with a terminal or the receiver");
            rays[p + 1] = {(d1 + d2) / kSpeedOfLight,
                           scatterers[p].kappa * std::pow(d1 + d2, -ple2),
                           scatterers[p].phase};
        }
        for (int m = 0; m < m_sub; ++m) {
            const double fm = cfg.f0_hz + static_cast<double>(m) * cfg.scs_hz;
            Complex acc(0.0, 0.0);
            for (const auto& ray : rays) {
                const double arg = ray.phase - 2.0 * std::numbers::pi * fm * ray.delay_s;
                acc += ray.amplitude * Complex(std::cos(arg), std::sin(arg));
            }
            h(n, m) = shadow(n) * acc;
        }
    }
    return h;
}

/**
 * Noisy pilot observation of a true channel.
 *
 * A BPSK pilot x in {-1,+1} is drawn once, then y = h*x + w with w
 * circularly symmetric complex Gaussian of per-entry variance
 * mean(|h|^2) / 10^(snr_db/10); the returned estimate is y*x = h + x*w.
 * snr_db = +inf is the noiseless sentinel and returns the input exactly.
 * Users a and b consume independent streams derived from (seed, user).
 */
inline Observation observe(const CMatrix& true_csi, double snr_db, User user,
                           std::uint64_t seed) {
    if (!true_csi.allFinite()) throw data_error("true csi contains non-finite entries");
    if (std::isnan(snr_db) || (std::isinf(snr_db) && snr_db < 0.0))
        throw argument_error("snr_db must be finite or +inf");

    Observation out;
    out.snr_db = snr_db;
    if (std::isinf(snr_db)) {
        out.csi = true_csi;
        out.noise_variance = 0.0;
        return out;
    }
    const double mean_power = true_csi.squaredNorm() / static_cast<double>(true_csi.size());
    out.noise_variance = mean_power * std::pow(10.0, -snr_db / 10.0);

    Rng rng(derive_seed(seed, {detail::kObserveStream, detail::user_tag(user)}));
    const double pilot = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const double scale = std::sqrt(out.noise_variance);
    out.csi.resize(true_csi.rows(), true_csi.cols());
    for (Eigen::Index n = 0; n < true_csi.rows(); ++n)
        for (Eigen::Index m = 0; m < true_csi.cols(); ++m) {
            const Complex y = true_csi(n, m) * pilot + scale * rng.cnormal();
            out.csi(n, m) = y * pilot;
        }
    return out;
}

// Reciprocal pair of observations of one true channel.
inline CsiSet make_csi_set(const CMatrix& true_csi, double snr_db, std::uint64_t seed) {
    CsiSet set;
    set.true_csi = true_csi;
    set.snr_db = snr_db;
    Observation a = observe(true_csi, snr_db, User::a, seed);
    Observation b = observe(true_csi, snr_db, User::b, seed);
    set.noise_variance = a.noise_variance;
    set.observed_a = std::move(a.csi);
    set.observed_b = std::move(b.csi);
    return set;
}

}  // namespace csikit
