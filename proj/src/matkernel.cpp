#include "scapre/matkernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "scapre/error.hpp"

namespace scapre {

namespace {

constexpr double symmetry_tolerance = 1e-10;
constexpr double psd_clamp = 1e-10;

void require_symmetric(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        throw ConfigError(std::string(what) + ": matrix is " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()) + ", expected square");
    }
    const double scale = m.norm();
    if ((m - m.transpose()).norm() > symmetry_tolerance * std::max(scale, 1e-300)) {
        throw ConfigError(std::string(what) + ": matrix is not symmetric");
    }
}

// Stable descending order of `values`.
std::vector<Eigen::Index> descending_order(const Vector& values) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(values.size()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return values[a] > values[b]; });
    return order;
}

// Flip the sign of column c of `primary` (and `secondary` if given) so that
// its largest-magnitude entry is positive.
void fix_sign(Matrix& primary, Matrix* secondary, Eigen::Index c) {
    Eigen::Index arg = 0;
    primary.col(c).cwiseAbs().maxCoeff(&arg);
    if (primary(arg, c) < 0.0) {
        primary.col(c) *= -1.0;
        if (secondary != nullptr) secondary->col(c) *= -1.0;
    }
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows_ == 0 || cols_ == 0) {
        throw ConfigError("matrix dimensions must be positive");
    }
    if (data_.size() != rows_ * cols_) {
        throw ConfigError("matrix data has " + std::to_string(data_.size()) + " entries, expected " +
                          std::to_string(rows_ * cols_));
    }
    for (double x : data_) {
        if (!std::isfinite(x)) throw ConfigError("matrix contains a non-finite entry");
    }
}

DenseMatrix DenseMatrix::from_eigen(const Matrix& m) {
    std::vector<double> data(static_cast<std::size_t>(m.size()));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data.data(), m.rows(), m.cols()) = m;
    return DenseMatrix(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()),
                       std::move(data));
}

Matrix DenseMatrix::to_eigen() const {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
}

double relative_frobenius(const Matrix& x, const Matrix& reference) {
    const double denom = reference.norm();
    const double diff = (x - reference).norm();
    return denom > 0.0 ? diff / denom : diff;
}

SpectralDecomposition sym_eig(const Matrix& m) {
    require_symmetric(m, "sym_eig");
    const Matrix sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigensolver did not converge");
    }
    const auto order = descending_order(solver.eigenvalues());
    SpectralDecomposition out{Matrix(m.rows(), m.cols()), Vector(m.rows())};
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const auto src = order[static_cast<std::size_t>(i)];
        out.eigvals[i] = solver.eigenvalues()[src];
        out.eigvecs.col(i) = solver.eigenvectors().col(src);
        fix_sign(out.eigvecs, nullptr, i);
    }
    return out;
}

SingularDecomposition svd(const Matrix& m) {
    Eigen::BDCSVD<Matrix> solver(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("SVD did not converge");
    }
    const auto order = descending_order(solver.singularValues());
    const Eigen::Index k = solver.singularValues().size();
    SingularDecomposition out{Matrix(m.rows(), k), Vector(k), Matrix(m.cols(), k)};
    for (Eigen::Index i = 0; i < k; ++i) {
        const auto src = order[static_cast<std::size_t>(i)];
        out.sigma[i] = std::max(0.0, solver.singularValues()[src]);
        out.u.col(i) = solver.matrixU().col(src);
        out.v.col(i) = solver.matrixV().col(src);
        fix_sign(out.u, &out.v, i);
    }
    return out;
}

SpectralDecomposition psd_eig(const Matrix& m) {
    auto eig = sym_eig(m);
    const double scale = eig.eigvals.size() > 0 ? eig.eigvals.cwiseAbs().maxCoeff() : 0.0;
    // Eigenvalues at the round-off floor are treated as exact zeros; square
    // roots would otherwise blow them up to sqrt(eps) * scale.
    const double floor = static_cast<double>(eig.eigvals.size()) * std::numeric_limits<double>::epsilon() * scale;
    for (Eigen::Index i = 0; i < eig.eigvals.size(); ++i) {
        double& l = eig.eigvals[i];
        if (l <= floor) {
            if (l < -psd_clamp * scale) {
                throw NumericalError("matrix is not PSD (eigenvalue " + std::to_string(l) + ")");
            }
            l = 0.0;
        }
    }
    return eig;
}

Matrix psd_sqrt(const Matrix& m) {
    const auto eig = psd_eig(m);
    const Matrix root =
        eig.eigvecs * eig.eigvals.cwiseSqrt().asDiagonal() * eig.eigvecs.transpose();
    return 0.5 * (root + root.transpose());
}

ProcrustesResult procrustes(const Matrix& k) {
    const auto dec = svd(k);
    ProcrustesResult out{dec.u * dec.v.transpose(), false};
    const double top = dec.sigma.size() > 0 ? dec.sigma[0] : 0.0;
    const double bottom = dec.sigma.size() > 0 ? dec.sigma[dec.sigma.size() - 1] : 0.0;
    out.rank_deficient = top == 0.0 || bottom <= 1e-12 * top;
    return out;
}

Matrix kron_assemble(const Matrix& a, const Matrix& b) {
    const auto entries = static_cast<std::uint64_t>(a.rows()) * static_cast<std::uint64_t>(b.rows()) *
                         static_cast<std::uint64_t>(a.cols()) * static_cast<std::uint64_t>(b.cols());
    if (entries > kron_entry_budget) {
        throw ConfigError("Kronecker product needs " + std::to_string(entries) +
                          " entries, above the budget of " + std::to_string(kron_entry_budget) +
                          "; use the spectral solver path");
    }
    const Eigen::Index p = b.rows();
    const Eigen::Index q = b.cols();
    Matrix out(a.rows() * p, a.cols() * q);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * p, j * q, p, q) = a(i, j) * b;
        }
    }
    return out;
}

Vector vec(const Matrix& m) {
    return Eigen::Map<const Vector>(m.data(), m.size());
}

Matrix unvec(const Vector& v, Eigen::Index rows, Eigen::Index cols) {
    if (v.size() != rows * cols) {
        throw ConfigError("unvec: length " + std::to_string(v.size()) + " does not match " +
                          std::to_string(rows) + "x" + std::to_string(cols));
    }
    return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace scapre
