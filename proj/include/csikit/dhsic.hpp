#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "csikit/common.hpp"
#include "csikit/rng.hpp"
#include "csikit/stats.hpp"

namespace csikit {

// Joint samples of d variables. vars[l] is n x p_l, one row per sample;
// feature dimension may differ between variables.
struct SampleBlock {
    std::vector<RMatrix> vars;

    int d() const { return static_cast<int>(vars.size()); }
    Eigen::Index n() const { return vars.empty() ? 0 : vars.front().rows(); }

    void validate() const {
        if (d() < 2) throw argument_error("need at least 2 variables");
        if (n() < 2) throw insufficient_data_error("need at least 2 joint samples");
        for (const auto& v : vars) {
            if (v.rows() != n()) throw argument_error("variables disagree on sample count");
            if (v.cols() < 1) throw argument_error("variable has no features");
            if (!v.allFinite()) throw data_error("sample block contains non-finite values");
        }
    }
};

struct KernelSpec {
    enum class Bandwidth { median_heuristic, fixed };
    Bandwidth rule = Bandwidth::median_heuristic;
    double sigma = 1.0;          // only used with Bandwidth::fixed
    double epsilon_floor = 1e-9; // bandwidth fallback for degenerate samples
};

struct DhsicTest {
    double statistic = 0.0;
    double critical_value = 0.0;
    double alpha = 0.0;
    int B = 0;
    bool reject = false;
    std::vector<double> resample_values;  // sorted ascending
};

// Median-heuristic kernel bandwidth: sigma = sqrt(median of pairwise
// squared distances / 2). Degenerate samples (all pairs coincide) fall
// back to epsilon_floor.
inline double median_bandwidth(const RMatrix& samples, double epsilon_floor = 1e-9) {
    const Eigen::Index n = samples.rows();
    if (n < 2) throw argument_error("median bandwidth needs at least 2 samples");
    std::vector<double> sq;
    sq.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            sq.push_back((samples.row(i) - samples.row(j)).squaredNorm());
    std::sort(sq.begin(), sq.end());
    const std::size_t c = sq.size();
    const double med = (c % 2 == 1) ? sq[c / 2] : 0.5 * (sq[c / 2 - 1] + sq[c / 2]);
    if (med == 0.0) return epsilon_floor;
    return std::sqrt(med / 2.0);
}

// Gaussian kernel Gram matrix K_ij = exp(-||x_i - x_j||^2 / sigma^2).
inline RMatrix gram(const RMatrix& samples, double sigma) {
    if (sigma <= 0.0) throw argument_error("kernel bandwidth must be positive");
    const Eigen::Index n = samples.rows();
    RMatrix K(n, n);
    const double inv = 1.0 / (sigma * sigma);
    for (Eigen::Index i = 0; i < n; ++i) {
        K(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = std::exp(-(samples.row(i) - samples.row(j)).squaredNorm() * inv);
            K(i, j) = K(j, i) = v;
        }
    }
    return K;
}

namespace detail {

inline constexpr std::uint64_t kPermStream = 0x21;
inline constexpr std::uint64_t kNeighborhoodStream = 0x22;

/**
 * Shared evaluation core for the observed statistic and every permutation
 * resample. Row sums and grand means of each Gram matrix are accumulated
 * once in sorted order; a resample only reindexes rows/columns, so the
 * same precomputed doubles are reused and a resample whose permutations
 * happen to be the identity reproduces the observed statistic bit for bit.
 */
class DhsicEngine {
public:
    explicit DhsicEngine(std::vector<RMatrix> grams) : grams_(std::move(grams)) {
        if (grams_.empty()) throw argument_error("no gram matrices");
        n_ = grams_[0].rows();
        for (const auto& K : grams_) {
            if (K.rows() != n_ || K.cols() != n_)
                throw argument_error("gram matrices disagree on shape");
        }
        const auto d = grams_.size();
        row_means_.resize(d);
        grand_means_.resize(d);
        std::vector<double> buf;
        for (std::size_t l = 0; l < d; ++l) {
            row_means_[l].resize(static_cast<std::size_t>(n_));
            std::vector<double> all;
            all.reserve(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_));
            for (Eigen::Index i = 0; i < n_; ++i) {
                buf.clear();
                for (Eigen::Index j = 0; j < n_; ++j) buf.push_back(grams_[l](i, j));
                for (double v : buf) all.push_back(v);
                row_means_[l][static_cast<std::size_t>(i)] =
                    sorted_sum(buf) / static_cast<double>(n_);
            }
            grand_means_[l] =
                sorted_sum(all) / (static_cast<double>(n_) * static_cast<double>(n_));
        }
        identity_.resize(d);
        for (auto& p : identity_) {
            p.resize(static_cast<std::size_t>(n_));
            for (Eigen::Index i = 0; i < n_; ++i) p[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
        }
    }

    Eigen::Index n() const { return n_; }
    int d() const { return static_cast<int>(grams_.size()); }

    // Canonical three-term V-statistic with each variable's samples
    // reordered by perms[l]. Each term is a mean (or a product of means),
    // never a raw n^(2d)-scaled sum, so deep variable counts stay finite.
    double statistic(const std::vector<std::vector<std::size_t>>& perms) const {
        const auto d = grams_.size();
        const auto n = static_cast<std::size_t>(n_);

        std::vector<double> joint;
        joint.reserve(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double prod = 1.0;
                for (std::size_t l = 0; l < d; ++l)
                    prod *= grams_[l](static_cast<Eigen::Index>(perms[l][i]),
                                      static_cast<Eigen::Index>(perms[l][j]));
                joint.push_back(prod);
            }
        const double term1 = sorted_sum(joint) / (static_cast<double>(n) * static_cast<double>(n));

        double term2 = 1.0;
        for (std::size_t l = 0; l < d; ++l) term2 *= grand_means_[l];

        std::vector<double> cross(n);
        for (std::size_t i = 0; i < n; ++i) {
            double prod = 1.0;
            for (std::size_t l = 0; l < d; ++l) prod *= row_means_[l][perms[l][i]];
            cross[i] = prod;
        }
        const double term3 = 2.0 * sorted_sum(cross) / static_cast<double>(n);

        return term1 + term2 - term3;
    }

    double statistic() const { return statistic(identity_); }

private:
    std::vector<RMatrix> grams_;
    Eigen::Index n_ = 0;
    std::vector<std::vector<double>> row_means_;
    std::vector<double> grand_means_;
    std::vector<std::vector<std::size_t>> identity_;
};

inline double resolve_bandwidth(const RMatrix& samples, const KernelSpec& spec) {
    if (spec.rule == KernelSpec::Bandwidth::fixed) {
        if (spec.sigma <= 0.0) throw argument_error("fixed bandwidth must be positive");
        return spec.sigma;
    }
    return median_bandwidth(samples, spec.epsilon_floor);
}

inline std::vector<RMatrix> build_grams(const SampleBlock& block, const KernelSpec& spec) {
    std::vector<RMatrix> grams;
    grams.reserve(block.vars.size());
    for (const auto& v : block.vars) grams.push_back(gram(v, resolve_bandwidth(v, spec)));
    return grams;
}

}  // namespace detail

// V-statistic estimator of joint dependence across d Gram matrices:
//   (1/n^2) sum_ij prod_l K^l_ij
//   + (1/n^2d) prod_l sum_ij K^l_ij
//   - (2/n^(d+1)) sum_i prod_l sum_j K^l_ij.
// This is a squared RKHS distance, so it is nonnegative up to rounding,
// and it is exactly invariant under any common reordering of the samples.
inline double dhsic_statistic(const std::vector<RMatrix>& grams) {
    detail::DhsicEngine engine(grams);
    return engine.statistic();
}

// Rank of the permutation-test critical value among B sorted resamples:
// q = ceil((B+1)(1-alpha)) + (number of resamples tying the observed
// statistic). The test's critical value is the q-th smallest resample when
// q <= B and +inf otherwise.
inline int quantile_index(int B, double alpha, int tie_count) {
    return static_cast<int>(std::ceil((B + 1) * (1.0 - alpha))) + tie_count;
}

namespace detail {

inline DhsicTest run_permutation_test(const SampleBlock& block, const KernelSpec& spec,
                                      double alpha, int B, std::uint64_t seed) {
    block.validate();
    if (!(alpha > 0.0 && alpha < 1.0)) throw argument_error("alpha must be in (0,1)");
    if (B < 1) throw argument_error("need at least one permutation resample");

    DhsicEngine engine(build_grams(block, spec));
    const auto n = static_cast<std::size_t>(engine.n());
    const auto d = static_cast<std::size_t>(engine.d());

    DhsicTest test;
    test.alpha = alpha;
    test.B = B;
    test.statistic = engine.statistic();

    // Variable 0 keeps the original sample order; permuting the other d-1
    // variables independently already breaks every cross-dependence.
    // Bandwidths and Grams are never recomputed, only reindexed.
    std::vector<std::vector<std::size_t>> perms(d);
    perms[0].resize(n);
    for (std::size_t i = 0; i < n; ++i) perms[0][i] = i;
    test.resample_values.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b) {
        Rng rng(derive_seed(seed, {kPermStream, static_cast<std::uint64_t>(b)}));
        for (std::size_t l = 1; l < d; ++l) perms[l] = rng.permutation(n);
        test.resample_values.push_back(engine.statistic(perms));
    }
    std::sort(test.resample_values.begin(), test.resample_values.end());

    int ties = 0;
    for (double v : test.resample_values)
        if (v == test.statistic) ++ties;
    const int q = quantile_index(B, alpha, ties);
    if (q <= B) {
        test.critical_value = test.resample_values[static_cast<std::size_t>(q - 1)];
        test.reject = test.statistic >= test.critical_value;
    } else {
        test.critical_value = std::numeric_limits<double>::infinity();
        test.reject = false;
    }
    return test;
}

}  // namespace detail

inline std::pair<double, std::vector<double>> permutation_critical_value(
    const SampleBlock& block, const KernelSpec& spec, double alpha, int B,
    std::uint64_t seed) {
    DhsicTest test = detail::run_permutation_test(block, spec, alpha, B, seed);
    return {test.critical_value, std::move(test.resample_values)};
}

// Full independence test: median-heuristic bandwidths on the original
// samples, Gaussian Grams, observed statistic, permutation critical value.
inline DhsicTest test_independence(const SampleBlock& block, const KernelSpec& spec,
                                   double alpha, int B, std::uint64_t seed) {
    return detail::run_permutation_test(block, spec, alpha, B, seed);
}

namespace detail {

inline RMatrix complex_features(const CVector& v) {
    RMatrix f(v.size(), 2);
    f.col(0) = v.real();
    f.col(1) = v.imag();
    return f;
}

}  // namespace detail

/**
 * Per-location joint independence across a neighborhood.
 *
 * For each location the block has d = 1 + k variables: the location's own
 * residual row and its k nearest neighbors' rows, each variable holding
 * n = M per-subcarrier samples embedded as (re, im) pairs. Location i's
 * permutations come from the stream (seed, i), so the result set does not
 * depend on evaluation order.
 */
inline std::vector<DhsicTest> neighborhood_tests(const CMatrix& residual,
                                                 const NeighborMap& nmap,
                                                 const KernelSpec& spec, double alpha, int B,
                                                 std::uint64_t seed) {
    if (residual.rows() != static_cast<Eigen::Index>(nmap.indices.size()))
        throw argument_error("residual row count does not match neighbor map");
    if (nmap.k < 1) throw argument_error("need k >= 1 neighbors (d >= 2 variables)");

    const std::size_t n_loc = nmap.indices.size();
    std::vector<DhsicTest> tests;
    tests.reserve(n_loc);
    for (std::size_t n0 = 0; n0 < n_loc; ++n0) {
        SampleBlock block;
        block.vars.reserve(1 + nmap.indices[n0].size());
        block.vars.push_back(
            detail::complex_features(residual.row(static_cast<Eigen::Index>(n0)).transpose()));
        for (std::size_t nb : nmap.indices[n0])
            block.vars.push_back(
                detail::complex_features(residual.row(static_cast<Eigen::Index>(nb)).transpose()));
        tests.push_back(test_independence(
            block, spec, alpha, B,
            derive_seed(seed, {detail::kNeighborhoodStream, static_cast<std::uint64_t>(n0)})));
    }
    return tests;
}

// Fraction of locations whose neighborhood test rejects H0.
inline double neighborhood_rejection_rate(const CMatrix& residual, const NeighborMap& nmap,
                                          const KernelSpec& spec, double alpha, int B,
                                          std::uint64_t seed) {
    const auto tests = neighborhood_tests(residual, nmap, spec, alpha, B, seed);
    std::size_t rejects = 0;
    for (const auto& t : tests)
        if (t.reject) ++rejects;
    return static_cast<double>(rejects) / static_cast<double>(tests.size());
}

// One joint test across subcarriers: d = M variables, n = N location
// samples per variable, complex entries embedded as (re, im) pairs.
inline DhsicTest subcarrier_test(const CMatrix& residual, const KernelSpec& spec,
                                 double alpha, int B, std::uint64_t seed) {
    if (residual.rows() < 2) throw insufficient_data_error("need at least 2 locations");
    if (residual.cols() < 2) throw argument_error("need at least 2 subcarriers");
    SampleBlock block;
    block.vars.reserve(static_cast<std::size_t>(residual.cols()));
    for (Eigen::Index m = 0; m < residual.cols(); ++m)
        block.vars.push_back(detail::complex_features(residual.col(m)));
    return test_independence(block, spec, alpha, B, seed);
}

}  // namespace csikit
