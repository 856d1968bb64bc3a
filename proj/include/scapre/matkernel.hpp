#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace scapre {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Validated row-major real matrix used at library boundaries (files, CLI,
/// pipeline inputs). Numerical code works on `Matrix` directly.
class DenseMatrix {
public:
    /// Throws ConfigError unless rows, cols > 0, data.size() == rows*cols and
    /// every entry is finite.
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static DenseMatrix from_eigen(const Matrix& m);
    Matrix to_eigen() const;

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const double> data() const noexcept { return data_; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

private:
    std::size_t rows_;
    std::size_t cols_;
    std::vector<double> data_;
};

struct SpectralDecomposition {
    Matrix eigvecs;  // columns, orthonormal
    Vector eigvals;  // descending
};

struct SingularDecomposition {
    Matrix u;      // rows x k
    Vector sigma;  // k = min(rows, cols), descending, >= 0
    Matrix v;      // cols x k
};

struct ProcrustesResult {
    Matrix q;
    bool rank_deficient = false;
};

/// Largest Kronecker product kron_assemble will materialize.
inline constexpr std::uint64_t kron_entry_budget = std::uint64_t{1} << 24;

double relative_frobenius(const Matrix& x, const Matrix& reference);

/// Eigendecomposition of a symmetric matrix (symmetric within 1e-10 relative).
/// Eigenvalues descending, ties keep solver order; each eigenvector has its
/// largest-magnitude entry positive.
SpectralDecomposition sym_eig(const Matrix& m);

/// Thin SVD with the same ordering and sign convention applied to U (V follows).
SingularDecomposition svd(const Matrix& m);

/// Symmetric PSD square root. Eigenvalues in [-1e-10*|m|, 0) are clamped to 0;
/// anything more negative raises NumericalError.
Matrix psd_sqrt(const Matrix& m);

/// Clamped spectrum of a symmetric PSD matrix (same clamp rule as psd_sqrt).
SpectralDecomposition psd_eig(const Matrix& m);

/// Polar factor U_K V_K^T of k.
ProcrustesResult procrustes(const Matrix& k);

/// a (x) b, guarded by kron_entry_budget.
Matrix kron_assemble(const Matrix& a, const Matrix& b);

/// Column-stacking vectorization and its inverse.
Vector vec(const Matrix& m);
Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols);

}  // namespace scapre
