#include "scapre/solver.hpp"

#include <cmath>
#include <string>

#include "scapre/error.hpp"

namespace scapre {

namespace {

constexpr double min_denominator = 1e-12;

void check_shapes(const Vector& b_diag, const Matrix& a, const Matrix& m) {
    if (a.rows() != a.cols()) throw ConfigError("A must be square");
    if (m.rows() != b_diag.size() || m.cols() != a.rows()) {
        throw ConfigError("M is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                          ", expected " + std::to_string(b_diag.size()) + "x" +
                          std::to_string(a.rows()));
    }
    if ((b_diag.array() < 0.0).any()) throw ConfigError("decoupler weights must be nonnegative");
}

}  // namespace

std::string_view to_string(TargetMode mode) {
    return mode == TargetMode::zero_target ? "zero-target" : "substitute-target";
}

std::string_view to_string(SolvePath path) {
    return path == SolvePath::spectral ? "spectral" : "kronecker";
}

EraseSpec EraseSpec::zero_target(ConceptMatrix c_e, Eigen::Index d_out) {
    const auto m = c_e.count();
    return EraseSpec{std::move(c_e), Matrix::Zero(d_out, m), TargetMode::zero_target, std::nullopt};
}

EraseSpec EraseSpec::substitute(ConceptMatrix c_e, Matrix substitutes) {
    const auto m = c_e.count();
    return EraseSpec{std::move(c_e), Matrix(0, m), TargetMode::substitute_target,
                     std::move(substitutes)};
}

void EraseSpec::validate() const {
    if (mode == TargetMode::zero_target) {
        if (v_star.cols() != c_e.count()) {
            throw ConfigError("v_star has " + std::to_string(v_star.cols()) + " columns, expected " +
                              std::to_string(c_e.count()));
        }
        if (!v_star.isZero(0.0)) throw ConfigError("zero-target mode requires v_star = 0");
        return;
    }
    if (substitutes) {
        if (substitutes->rows() != c_e.dim() || substitutes->cols() != c_e.count()) {
            throw ConfigError("substitute embeddings must be " + std::to_string(c_e.dim()) + "x" +
                              std::to_string(c_e.count()));
        }
    } else if (v_star.cols() != c_e.count()) {
        throw ConfigError("v_star has " + std::to_string(v_star.cols()) + " columns, expected " +
                          std::to_string(c_e.count()));
    }
}

Matrix resolve_targets(const Matrix& w0, const EraseSpec& spec) {
    spec.validate();
    if (w0.cols() != spec.c_e.dim()) {
        throw ConfigError("W0 has " + std::to_string(w0.cols()) + " input columns, concepts have length " +
                          std::to_string(spec.c_e.dim()));
    }
    if (spec.mode == TargetMode::substitute_target && spec.substitutes) {
        return w0 * *spec.substitutes;
    }
    if (spec.v_star.rows() != w0.rows()) {
        throw ConfigError("v_star has " + std::to_string(spec.v_star.rows()) + " rows, W0 has " +
                          std::to_string(w0.rows()));
    }
    return spec.v_star;
}

Matrix assemble_m(const Matrix& w0, const EraseSpec& spec) {
    return resolve_targets(w0, spec) * spec.c_e.matrix().transpose();
}

double sylvester_residual(const Vector& b_diag, const Matrix& a, const Matrix& w, const Matrix& m) {
    const Matrix lhs = b_diag.asDiagonal() * w + w * a;
    const double norm_m = m.norm();
    const double diff = (lhs - m).norm();
    return norm_m > 0.0 ? diff / norm_m : diff;
}

EditSolution sylvester_solve_spectral(const Vector& b_diag, const Matrix& a, const Matrix& m) {
    check_shapes(b_diag, a, m);
    const auto eig = sym_eig(a);
    // sigma(B) >= 0 and sigma(-A) < 0 keeps the solution unique.
    if (!(eig.eigvals.minCoeff() > 0.0)) {
        throw NumericalError("stabilizer A is not positive definite");
    }
    const Matrix m_hat = m * eig.eigvecs;
    Matrix x(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double denom = b_diag[i] + eig.eigvals[j];
            if (!(std::abs(denom) >= min_denominator)) {
                throw NumericalError("Sylvester system is ill-posed: spectra of B and -A intersect");
            }
            x(i, j) = m_hat(i, j) / denom;
        }
    }
    EditSolution out{x * eig.eigvecs.transpose(), 0.0, SolvePath::spectral};
    out.residual = sylvester_residual(b_diag, a, out.w_star, m);
    return out;
}

EditSolution sylvester_solve_spectral(const Vector& b_diag, const StabilizerA& a, const Matrix& m) {
    return sylvester_solve_spectral(b_diag, a.a, m);
}

EditSolution sylvester_solve_kronecker(const Vector& b_diag, const Matrix& a, const Matrix& m) {
    check_shapes(b_diag, a, m);
    const Eigen::Index d_out = m.rows();
    const Eigen::Index d_in = m.cols();
    const Matrix b = b_diag.asDiagonal();
    const Matrix system = kron_assemble(Matrix::Identity(d_in, d_in), b) +
                          kron_assemble(a.transpose(), Matrix::Identity(d_out, d_out));
    const Vector solution = Eigen::PartialPivLU<Matrix>(system).solve(vec(m));
    if (!solution.allFinite()) throw NumericalError("Kronecker system is singular");
    EditSolution out{unvec(solution, d_out, d_in), 0.0, SolvePath::kronecker};
    out.residual = sylvester_residual(b_diag, a, out.w_star, m);
    return out;
}

EditSolution sylvester_solve_kronecker(const Vector& b_diag, const StabilizerA& a, const Matrix& m) {
    return sylvester_solve_kronecker(b_diag, a.a, m);
}

Matrix sylvester_solve_symmetric(const Matrix& b, const Matrix& a, const Matrix& m) {
    if (m.rows() != b.rows() || m.cols() != a.rows()) throw ConfigError("Sylvester shape mismatch");
    const auto eb = sym_eig(b);
    const auto ea = sym_eig(a);
    Matrix x = eb.eigvecs.transpose() * m * ea.eigvecs;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const double denom = eb.eigvals[i] + ea.eigvals[j];
            if (!(std::abs(denom) >= min_denominator)) {
                throw NumericalError("Sylvester system is ill-posed: spectra of B and -A intersect");
            }
            x(i, j) /= denom;
        }
    }
    return eb.eigvecs * x * ea.eigvecs.transpose();
}

double objective_value(const Matrix& w, const Matrix& a, const Vector& b_diag, const Matrix& m) {
    check_shapes(b_diag, a, m);
    if (w.rows() != m.rows() || w.cols() != m.cols()) throw ConfigError("W and M shapes differ");
    const double quad_a = (w * a).cwiseProduct(w).sum();
    const double quad_b = (b_diag.asDiagonal() * w).cwiseProduct(w).sum();
    const double linear = w.cwiseProduct(m).sum();
    return quad_a + quad_b - 2.0 * linear;
}

Matrix baseline_eq2(const Matrix& w0, const EraseSpec& spec, const ConceptMatrix& preserved,
                    double lambda1, double lambda2) {
    if (!(lambda1 >= 0.0)) throw ConfigError("lambda1 must be >= 0");
    if (!(lambda2 > 0.0)) throw ConfigError("lambda2 must be > 0");
    if (preserved.dim() != w0.cols()) throw ConfigError("preserved concepts have the wrong length");
    const Matrix targets = resolve_targets(w0, spec);
    const Matrix& c = spec.c_e.matrix();
    const Matrix& p = preserved.matrix();

    const Matrix rhs = targets * c.transpose() + lambda1 * (w0 * p) * p.transpose() + lambda2 * w0;
    Matrix gram = c * c.transpose() + lambda1 * p * p.transpose();
    gram.diagonal().array() += lambda2;

    // W G = rhs with G symmetric positive definite.
    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) throw NumericalError("baseline normal equations are singular");
    return llt.solve(rhs.transpose()).transpose();
}

}  // namespace scapre
