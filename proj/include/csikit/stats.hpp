#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "csikit/channel.hpp"
#include "csikit/common.hpp"

namespace csikit {

struct NeighborMap {
    int k = 0;
    std::vector<std::vector<std::size_t>> indices;  // per location, k neighbors, nearest first
};

// Exact k-nearest neighbors under Euclidean distance, self excluded,
// distance ties broken by ascending location index. Brute force; the
// grids here are a few hundred points.
inline NeighborMap knn(const LocationGrid& grid, int k) {
    const std::size_t n = grid.size();
    if (k < 1 || static_cast<std::size_t>(k) >= n)
        throw argument_error("k must satisfy 1 <= k < number of locations");

    NeighborMap map;
    map.k = k;
    map.indices.resize(n);
    std::vector<std::pair<double, std::size_t>> order(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t w = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            order[w++] = {(grid.positions[i] - grid.positions[j]).norm(), j};
        }
        std::sort(order.begin(), order.end());
        map.indices[i].resize(static_cast<std::size_t>(k));
        for (int t = 0; t < k; ++t) map.indices[i][static_cast<std::size_t>(t)] = order[static_cast<std::size_t>(t)].second;
    }
    return map;
}

// Sample Pearson correlation with (n-1) normalization in both the
// covariance and the standard deviations. A constant argument leaves the
// coefficient undefined and is reported as such rather than returning NaN.
inline double pearson(const RVector& a, const RVector& b) {
    if (a.size() != b.size()) throw argument_error("pearson inputs must have equal length");
    if (a.size() < 2) throw argument_error("pearson needs at least 2 samples");
    const auto constant = [](const RVector& v) {
        for (Eigen::Index i = 1; i < v.size(); ++i)
            if (v(i) != v(0)) return false;
        return true;
    };
    if (constant(a) || constant(b))
        throw undefined_correlation_error("correlation undefined for constant input");

    const double mu_a = a.mean();
    const double mu_b = b.mean();
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const double da = a(i) - mu_a;
        const double db = b(i) - mu_b;
        cov += da * db;
        va += da * da;
        vb += db * db;
    }
    return cov / std::sqrt(va * vb);
}

// Modulus of the complex correlation coefficient, the alternative feature
// path that keeps residual phase information.
inline double complex_corr_modulus(const CVector& a, const CVector& b) {
    if (a.size() != b.size()) throw argument_error("inputs must have equal length");
    if (a.size() < 2) throw argument_error("need at least 2 samples");
    const auto constant = [](const CVector& v) {
        for (Eigen::Index i = 1; i < v.size(); ++i)
            if (v(i) != v(0)) return false;
        return true;
    };
    if (constant(a) || constant(b))
        throw undefined_correlation_error("correlation undefined for constant input");

    const Complex mu_a = a.mean();
    const Complex mu_b = b.mean();
    Complex cov(0.0, 0.0);
    double va = 0.0, vb = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        const Complex da = a(i) - mu_a;
        const Complex db = b(i) - mu_b;
        cov += da * std::conj(db);
        va += std::norm(da);
        vb += std::norm(db);
    }
    return std::abs(cov) / std::sqrt(va * vb);
}

// Per-subcarrier magnitudes of one residual row.
inline RVector residual_features(const CVector& z_row) {
    return z_row.cwiseAbs();
}

enum class CorrFeatures { magnitude, complex_modulus };

struct PairCorr {
    std::size_t n1;
    std::size_t n2;
    double rho;
};

struct CorrReport {
    std::vector<PairCorr> per_pair;
    double mean_abs_rho = 0.0;
    std::size_t undefined_pairs = 0;
    // sweep cell tags, NaN / -1 when the report is standalone
    double snr_db = std::numeric_limits<double>::quiet_NaN();
    double scs_hz = std::numeric_limits<double>::quiet_NaN();
    int d_hat = -1;
};

/**
 * Mean absolute correlation between each location's feature vector and
 * those of its k nearest neighbors. Every (center, neighbor) pair
 * contributes one coefficient; pairs whose correlation is undefined are
 * excluded from the mean and counted.
 */
inline CorrReport mean_neighbor_corr(const CMatrix& residual, const NeighborMap& nmap,
                                     CorrFeatures features = CorrFeatures::magnitude) {
    if (residual.rows() != static_cast<Eigen::Index>(nmap.indices.size()))
        throw argument_error("residual row count does not match neighbor map");

    CorrReport report;
    double acc = 0.0;
    for (std::size_t n = 0; n < nmap.indices.size(); ++n) {
        for (std::size_t nb : nmap.indices[n]) {
            double rho;
            try {
                if (features == CorrFeatures::magnitude) {
                    rho = pearson(residual_features(residual.row(static_cast<Eigen::Index>(n)).transpose()),
                                  residual_features(residual.row(static_cast<Eigen::Index>(nb)).transpose()));
                } else {
                    rho = complex_corr_modulus(residual.row(static_cast<Eigen::Index>(n)).transpose(),
                                               residual.row(static_cast<Eigen::Index>(nb)).transpose());
                }
            } catch (const undefined_correlation_error&) {
                ++report.undefined_pairs;
                continue;
            }
            report.per_pair.push_back({n, nb, rho});
            acc += std::abs(rho);
        }
    }
    if (report.per_pair.empty())
        throw empty_report_error("correlation undefined for every neighbor pair");
    report.mean_abs_rho = acc / static_cast<double>(report.per_pair.size());
    return report;
}

}  // namespace csikit
