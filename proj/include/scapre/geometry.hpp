#pragma once

#include <string_view>

#include "scapre/matkernel.hpp"

namespace scapre {

/// Sigma* = W* W*^T and Sigma0 = W0 W0^T.
struct CovariancePair {
    Matrix sigma_star;
    Matrix sigma_zero;

    static CovariancePair from_weights(const Matrix& w_star, const Matrix& w0);
};

enum class InterpolationMode {
    /// ((1-b) S^{1/2} + b (S^{1/2} S0 S^{1/2})^{1/2})^2, evaluated as written.
    paper_literal,
    /// McCann interpolation ((1-b) I + b T) S ((1-b) I + b T) with the optimal map T.
    bw_geodesic,
};

std::string_view to_string(InterpolationMode mode);
InterpolationMode parse_interpolation_mode(std::string_view text);

struct RefinementConfig {
    double beta = 0.5;
    InterpolationMode mode = InterpolationMode::paper_literal;

    void validate() const;
};

struct Interpolation {
    Matrix sigma_plus;
    bool pseudo_inverse = false;  // bw-geodesic on a singular Sigma*
};

struct Refinement {
    Matrix w_tilde;
    Matrix sigma_plus;
    bool degenerate = false;        // Sigma+ = 0, so W~ = 0
    bool rank_deficient_k = false;  // Procrustes factor not unique
    bool pseudo_inverse = false;
    double realization_gap = 0.0;   // |W~ W~^T - Sigma+|_F / |Sigma+|_F
};

/// tr(S1) + tr(S2) - 2 tr((S1^{1/2} S2 S1^{1/2})^{1/2}), clamped at 0.
double bures_distance(const CovariancePair& p);

Interpolation geodesic_interpolate(const CovariancePair& p, const RefinementConfig& cfg);

/// Factor Sigma+ as W~ = U Lambda^{1/2} Q*^T with Q* the Procrustes rotation
/// bringing the factor closest to W*.
Refinement refine_weights(const Matrix& w_star, const Matrix& w0, const RefinementConfig& cfg);

}  // namespace scapre
