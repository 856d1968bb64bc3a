#include "scapre/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scapre/error.hpp"

namespace scapre {

namespace {

// Relative cutoff below which covariance eigenvalues count as zero.
constexpr double rank_cutoff = 1e-12;

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

void require_pair(const CovariancePair& p) {
    if (p.sigma_star.rows() != p.sigma_star.cols() || p.sigma_zero.rows() != p.sigma_zero.cols() ||
        p.sigma_star.rows() != p.sigma_zero.rows()) {
        throw ConfigError("covariance pair must hold two square matrices of equal size");
    }
}

}  // namespace

CovariancePair CovariancePair::from_weights(const Matrix& w_star, const Matrix& w0) {
    if (w_star.rows() != w0.rows() || w_star.cols() != w0.cols()) {
        throw ConfigError("W* and W0 shapes differ");
    }
    return {symmetrize(w_star * w_star.transpose()), symmetrize(w0 * w0.transpose())};
}

std::string_view to_string(InterpolationMode mode) {
    return mode == InterpolationMode::paper_literal ? "paper-literal" : "bw-geodesic";
}

InterpolationMode parse_interpolation_mode(std::string_view text) {
    if (text == "paper-literal") return InterpolationMode::paper_literal;
    if (text == "bw-geodesic") return InterpolationMode::bw_geodesic;
    throw ConfigError("unknown interpolation mode '" + std::string(text) + "'");
}

void RefinementConfig::validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) {
        throw ConfigError("beta must lie in [0, 1], got " + std::to_string(beta));
    }
}

double bures_distance(const CovariancePair& p) {
    require_pair(p);
    const Matrix root = psd_sqrt(p.sigma_star);
    psd_eig(p.sigma_zero);  // validates PSD
    const Matrix inner = psd_sqrt(symmetrize(root * p.sigma_zero * root));
    const double d = p.sigma_star.trace() + p.sigma_zero.trace() - 2.0 * inner.trace();
    const double scale = p.sigma_star.trace() + p.sigma_zero.trace();
    if (d < -1e-8 * std::max(scale, 1.0)) {
        throw NumericalError("Bures distance evaluated to " + std::to_string(d));
    }
    return std::max(0.0, d);
}

Interpolation geodesic_interpolate(const CovariancePair& p, const RefinementConfig& cfg) {
    require_pair(p);
    cfg.validate();
    const double beta = cfg.beta;
    const auto eig = psd_eig(p.sigma_star);
    const Matrix root = symmetrize(eig.eigvecs * eig.eigvals.cwiseSqrt().asDiagonal() *
                                   eig.eigvecs.transpose());
    const Matrix middle = psd_sqrt(symmetrize(root * p.sigma_zero * root));

    Interpolation out;
    if (cfg.mode == InterpolationMode::paper_literal) {
        const Matrix blend = (1.0 - beta) * root + beta * middle;
        out.sigma_plus = symmetrize(blend * blend);
        return out;
    }

    // Pseudo-inverse of Sigma*^{1/2} on the retained spectrum.
    const double top = eig.eigvals.size() > 0 ? eig.eigvals[0] : 0.0;
    Vector inv_root = Vector::Zero(eig.eigvals.size());
    for (Eigen::Index i = 0; i < eig.eigvals.size(); ++i) {
        if (eig.eigvals[i] > rank_cutoff * top && eig.eigvals[i] > 0.0) {
            inv_root[i] = 1.0 / std::sqrt(eig.eigvals[i]);
        } else {
            out.pseudo_inverse = true;
        }
    }
    const Matrix root_pinv = eig.eigvecs * inv_root.asDiagonal() * eig.eigvecs.transpose();
    const Matrix transport = symmetrize(root_pinv * middle * root_pinv);
    Matrix step = beta * transport;
    step.diagonal().array() += 1.0 - beta;
    out.sigma_plus = symmetrize(step * p.sigma_star * step);
    return out;
}

Refinement refine_weights(const Matrix& w_star, const Matrix& w0, const RefinementConfig& cfg) {
    const auto pair = CovariancePair::from_weights(w_star, w0);
    const auto interp = geodesic_interpolate(pair, cfg);

    Refinement out;
    out.sigma_plus = interp.sigma_plus;
    out.pseudo_inverse = interp.pseudo_inverse;

    const auto eig = psd_eig(interp.sigma_plus);
    const double top = eig.eigvals.size() > 0 ? eig.eigvals[0] : 0.0;
    Eigen::Index kept = 0;
    while (kept < eig.eigvals.size() && eig.eigvals[kept] > rank_cutoff * top && top > 0.0) ++kept;

    if (kept == 0) {
        out.w_tilde = Matrix::Zero(w_star.rows(), w_star.cols());
        out.degenerate = true;
        out.rank_deficient_k = true;
        return out;
    }

    // U Lambda^{1/2} on the retained columns.
    const Matrix factor = eig.eigvecs.leftCols(kept) *
                          eig.eigvals.head(kept).cwiseSqrt().asDiagonal();
    const Matrix k = w_star.transpose() * factor;  // d_in x kept
    const auto rotation = procrustes(k);
    out.rank_deficient_k = rotation.rank_deficient;
    out.w_tilde = factor * rotation.q.transpose();

    const Matrix realized = out.w_tilde * out.w_tilde.transpose();
    out.realization_gap = relative_frobenius(realized, interp.sigma_plus);
    return out;
}

}  // namespace scapre
