#pragma once

#include <vector>

#include "scapre/matkernel.hpp"

namespace scapre {

/// Per-concept token features c_{k,t}, grouped by concept.
class ContextFeatureSet {
public:
    /// Every group needs at least one token and all tokens must share a length.
    explicit ContextFeatureSet(std::vector<std::vector<Vector>> groups);

    const std::vector<std::vector<Vector>>& groups() const noexcept { return groups_; }
    Eigen::Index dim() const noexcept { return dim_; }
    std::size_t token_count() const noexcept;

private:
    std::vector<std::vector<Vector>> groups_;
    Eigen::Index dim_ = 0;
};

/// Concept embeddings stacked column-wise (d_in x m). Zero columns are rejected;
/// m = 0 is allowed (e.g. an empty preserved set).
class ConceptMatrix {
public:
    explicit ConceptMatrix(Matrix columns);
    static ConceptMatrix empty(Eigen::Index dim) { return ConceptMatrix(Matrix(dim, 0)); }

    const Matrix& matrix() const noexcept { return columns_; }
    Eigen::Index dim() const noexcept { return columns_.rows(); }
    Eigen::Index count() const noexcept { return columns_.cols(); }

private:
    Matrix columns_;
};

/// A = lambda I + S + R.
struct StabilizerA {
    double lambda = 0.0;
    Matrix s;
    Matrix r;
    Matrix a;
};

/// lambda as an absolute value or as a multiple of S's mean diagonal.
struct LambdaRule {
    enum class Kind { absolute, relative };
    Kind kind = Kind::relative;
    double value = 0.1;

    /// Resolve against S. A relative rule on an all-zero S falls back to `value`.
    double resolve(const Matrix& s) const;
};

/// S = sum_k sum_t c_{k,t} c_{k,t}^T.
Matrix build_s(const ContextFeatureSet& ctx);

/// sigma_i -> (1 - sigmoid(sigma_i)) sigma_i.
Vector gate_singular(const Vector& sigma);

/// R = U diag(gate(sigma)) U^T from the thin SVD of the concept matrix.
Matrix build_r(const ConceptMatrix& c_e);

StabilizerA assemble_a(double lambda, const Matrix& s, const Matrix& r);

}  // namespace scapre
