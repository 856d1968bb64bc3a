#include "scapre/stabilizer.hpp"

#include <cmath>
#include <string>

#include "scapre/error.hpp"

namespace scapre {

ContextFeatureSet::ContextFeatureSet(std::vector<std::vector<Vector>> groups)
    : groups_(std::move(groups)) {
    if (groups_.empty()) throw ConfigError("context feature set has no concept groups");
    for (std::size_t k = 0; k < groups_.size(); ++k) {
        if (groups_[k].empty()) {
            throw ConfigError("concept group " + std::to_string(k) + " has no tokens");
        }
        for (const auto& token : groups_[k]) {
            if (dim_ == 0) dim_ = token.size();
            if (token.size() != dim_ || dim_ == 0) {
                throw ConfigError("context token length " + std::to_string(token.size()) +
                                  " does not match " + std::to_string(dim_));
            }
            if (!token.allFinite()) throw ConfigError("context token has a non-finite entry");
        }
    }
}

std::size_t ContextFeatureSet::token_count() const noexcept {
    std::size_t n = 0;
    for (const auto& g : groups_) n += g.size();
    return n;
}

ConceptMatrix::ConceptMatrix(Matrix columns) : columns_(std::move(columns)) {
    if (columns_.rows() == 0) throw ConfigError("concept embeddings must have positive length");
    if (!columns_.allFinite()) throw ConfigError("concept matrix has a non-finite entry");
    for (Eigen::Index k = 0; k < columns_.cols(); ++k) {
        if (columns_.col(k).norm() == 0.0) {
            throw ConfigError("concept column " + std::to_string(k) + " has zero norm");
        }
    }
}

double LambdaRule::resolve(const Matrix& s) const {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw ConfigError("lambda must be a positive finite number");
    }
    if (kind == Kind::absolute) return value;
    const double mean_diag = s.size() > 0 ? s.diagonal().mean() : 0.0;
    return mean_diag > 0.0 ? value * mean_diag : value;
}

Matrix build_s(const ContextFeatureSet& ctx) {
    const Eigen::Index d = ctx.dim();
    Matrix tokens(d, static_cast<Eigen::Index>(ctx.token_count()));
    Eigen::Index col = 0;
    for (const auto& group : ctx.groups()) {
        for (const auto& token : group) tokens.col(col++) = token;
    }
    Matrix s = tokens * tokens.transpose();
    return 0.5 * (s + s.transpose());
}

Vector gate_singular(const Vector& sigma) {
    Vector out(sigma.size());
    for (Eigen::Index i = 0; i < sigma.size(); ++i) {
        const double x = sigma[i];
        if (!(x >= 0.0)) throw ConfigError("singular values must be nonnegative");
        // 1 - sigmoid(x) = sigmoid(-x) = 1 / (1 + e^x)
        out[i] = x / (1.0 + std::exp(x));
    }
    return out;
}

Matrix build_r(const ConceptMatrix& c_e) {
    const Eigen::Index d = c_e.dim();
    if (c_e.count() == 0) return Matrix::Zero(d, d);
    const auto dec = svd(c_e.matrix());
    const Vector gated = gate_singular(dec.sigma);
    Matrix r = dec.u * gated.asDiagonal() * dec.u.transpose();
    return 0.5 * (r + r.transpose());
}

StabilizerA assemble_a(double lambda, const Matrix& s, const Matrix& r) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("lambda must be positive, got " + std::to_string(lambda));
    }
    if (s.rows() != s.cols() || r.rows() != r.cols() || s.rows() != r.rows()) {
        throw ConfigError("S and R must be square matrices of the same size");
    }
    StabilizerA out{lambda, s, r, s + r};
    out.a.diagonal().array() += lambda;
    return out;
}

}  // namespace scapre
