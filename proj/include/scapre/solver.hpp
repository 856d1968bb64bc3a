#pragma once

#include <optional>
#include <string_view>

#include "scapre/matkernel.hpp"
#include "scapre/stabilizer.hpp"

namespace scapre {

enum class TargetMode { zero_target, substitute_target };
enum class SolvePath { spectral, kronecker };

std::string_view to_string(TargetMode mode);
std::string_view to_string(SolvePath path);

/// Concepts to erase and where they should map.
///
/// In zero-target mode v_star must be zero. In substitute-target mode the
/// targets are W0 c*_k when `substitutes` (d_in x m) is set, otherwise v_star
/// is used as given.
struct EraseSpec {
    ConceptMatrix c_e;
    Matrix v_star;  // d_out x m
    TargetMode mode = TargetMode::substitute_target;
    std::optional<Matrix> substitutes;

    /// Zero-target spec with v_star = 0.
    static EraseSpec zero_target(ConceptMatrix c_e, Eigen::Index d_out);
    /// Substitute-target spec whose targets are resolved against W0 later.
    static EraseSpec substitute(ConceptMatrix c_e, Matrix substitutes);

    void validate() const;
};

struct EditSolution {
    Matrix w_star;
    double residual = 0.0;  // |BW + WA - M|_F / |M|_F (absolute when M = 0)
    SolvePath path = SolvePath::spectral;
};

/// V* after resolving substitute embeddings against W0.
Matrix resolve_targets(const Matrix& w0, const EraseSpec& spec);

/// M = V* C_E^T.
Matrix assemble_m(const Matrix& w0, const EraseSpec& spec);

/// Solves diag(b) W + W A = M with one eigendecomposition of A.
EditSolution sylvester_solve_spectral(const Vector& b_diag, const Matrix& a, const Matrix& m);
EditSolution sylvester_solve_spectral(const Vector& b_diag, const StabilizerA& a, const Matrix& m);

/// Same contract through the dense (I (x) B + A^T (x) I) vec(W) = vec(M) system.
EditSolution sylvester_solve_kronecker(const Vector& b_diag, const Matrix& a, const Matrix& m);
EditSolution sylvester_solve_kronecker(const Vector& b_diag, const StabilizerA& a, const Matrix& m);

/// Two-sided form B W + W A = M for symmetric B and A whose spectra satisfy
/// lambda_B,i + lambda_A,j != 0.
Matrix sylvester_solve_symmetric(const Matrix& b, const Matrix& a, const Matrix& m);

double sylvester_residual(const Vector& b_diag, const Matrix& a, const Matrix& w, const Matrix& m);

/// tr(W A W^T) + tr(W^T B W) - 2 tr(W M^T). Its minimizer satisfies BW + WA = M.
double objective_value(const Matrix& w, const Matrix& a, const Vector& b_diag, const Matrix& m);

/// Ridge-style closed-form editor: minimizes
///   sum_i |W c_i - v*_i|^2 + lambda1 sum_j |W c_j - W0 c_j|^2 + lambda2 |W - W0|_F^2.
Matrix baseline_eq2(const Matrix& w0, const EraseSpec& spec, const ConceptMatrix& preserved,
                    double lambda1, double lambda2);

}  // namespace scapre
