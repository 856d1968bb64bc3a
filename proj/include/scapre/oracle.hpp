#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "scapre/matkernel.hpp"
#include "scapre/stabilizer.hpp"

namespace scapre {

/// Backtracking gradient descent settings.
struct OracleConfig {
    double initial_step = 1.0;
    double shrink = 0.5;
    double armijo = 1e-4;
    int max_iters = 200000;
    double tolerance = 1e-10;  // on |grad f|_F

    void validate() const;
};

/// Minimizes tr(WAW^T) + tr(W^T B W) - 2 tr(W M^T) from W = 0.
/// Throws NumericalError carrying the last gradient norm on non-convergence.
Matrix gd_minimize(const Matrix& a, const Vector& b_diag, const Matrix& m, const OracleConfig& cfg = {});
Matrix gd_minimize(const StabilizerA& a, const Vector& b_diag, const Matrix& m,
                   const OracleConfig& cfg = {});

/// MI (nats) of a list of (z, y) pairs, each in {0, 1}, tabulated directly.
double mi_bruteforce(const std::vector<std::pair<int, int>>& pairs);

/// True iff no sampled unit-Frobenius direction, at step sizes 1e-3, 1e-2 and
/// 1e-1, lowers the objective below its value at w.
bool objective_perturbation_check(const Matrix& w, const Matrix& a, const Vector& b_diag,
                                  const Matrix& m, int trials, std::uint64_t seed = 7);

}  // namespace scapre
