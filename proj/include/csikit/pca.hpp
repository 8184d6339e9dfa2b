#pragma once

#include <Eigen/Eigenvalues>

#include <cmath>

#include "csikit/common.hpp"

namespace csikit {

/**
 * Complex principal-component model of an N x M snapshot matrix.
 *
 * Holds the column mean, the eigenvalues of the Hermitian sample
 * covariance (1/(N-1)) Hc^H Hc in descending order, and the matching
 * orthonormal eigenvector columns. Each eigenvector's phase is fixed by
 * rotating its largest-magnitude entry onto the non-negative real axis,
 * which makes the fit bitwise reproducible.
 */
struct PcaModel {
    CVector mean;         // length M
    RVector eigenvalues;  // length M, descending
    CMatrix eigenvectors; // M x M, column k pairs with eigenvalues(k)

    Eigen::Index dim() const { return mean.size(); }
};

struct Decomposition {
    int d_hat = 0;
    CMatrix scores;       // N x d_hat
    CMatrix predictable;  // N x M, includes the mean
    CMatrix residual;     // N x M
};

namespace detail {

inline void fix_phases(CMatrix& vectors) {
    for (Eigen::Index k = 0; k < vectors.cols(); ++k) {
        Eigen::Index imax = 0;
        double best = -1.0;
        for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
            const double mag = std::abs(vectors(i, k));
            if (mag > best) {
                best = mag;
                imax = i;
            }
        }
        if (best <= 0.0) continue;
        const Complex rot = std::conj(vectors(imax, k)) / best;
        vectors.col(k) *= rot;
        vectors(imax, k) = Complex(std::abs(vectors(imax, k)), 0.0);
    }
}

}  // namespace detail

inline PcaModel fit_pca(const CMatrix& H) {
    if (H.rows() < 2) throw insufficient_data_error("need at least 2 rows to fit");
    if (!H.allFinite()) throw data_error("input contains non-finite entries");

    PcaModel model;
    model.mean = H.colwise().mean().transpose();
    const CMatrix centered = H.rowwise() - model.mean.transpose();
    const CMatrix cov =
        (centered.adjoint() * centered) / static_cast<double>(H.rows() - 1);

    Eigen::SelfAdjointEigenSolver<CMatrix> solver(cov);
    if (solver.info() != Eigen::Success) throw data_error("eigendecomposition failed");

    // Eigen returns ascending order; flip to descending.
    model.eigenvalues = solver.eigenvalues().reverse();
    model.eigenvectors = solver.eigenvectors().rowwise().reverse();
    detail::fix_phases(model.eigenvectors);
    return model;
}

inline void check_d_hat(const PcaModel& model, int d_hat) {
    if (d_hat < 0 || d_hat > model.dim())
        throw argument_error("d_hat out of range [0, M]");
}

// Scores of H in the top-d_hat eigenbasis: (H - mean) * U_d.
inline CMatrix project(const CMatrix& H, const PcaModel& model, int d_hat) {
    check_d_hat(model, d_hat);
    if (H.cols() != model.dim()) throw argument_error("column count does not match model");
    const CMatrix centered = H.rowwise() - model.mean.transpose();
    return centered * model.eigenvectors.leftCols(d_hat);
}

// Predictable part from scores: scores * U_d^H + mean.
inline CMatrix reconstruct(const CMatrix& scores, const PcaModel& model) {
    if (scores.cols() > model.dim())
        throw argument_error("score width exceeds model dimension");
    CMatrix out = scores * model.eigenvectors.leftCols(scores.cols()).adjoint();
    out.rowwise() += model.mean.transpose();
    return out;
}

// Splits H into the rank-d_hat predictable part and the residual.
// predictable + residual gives back H exactly (up to rounding).
inline Decomposition residuals(const CMatrix& H, const PcaModel& model, int d_hat) {
    Decomposition dec;
    dec.d_hat = d_hat;
    dec.scores = project(H, model, d_hat);
    dec.predictable = reconstruct(dec.scores, model);
    dec.residual = H - dec.predictable;
    return dec;
}

// Fraction of total variance carried by each component.
inline RVector explained_variance_ratio(const PcaModel& model) {
    const double total = model.eigenvalues.sum();
    if (total <= 0.0) return RVector::Zero(model.eigenvalues.size());
    return model.eigenvalues / total;
}

}  // namespace csikit
