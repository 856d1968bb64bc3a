#include "scapre/oracle.hpp"

#include <cmath>
#include <iomanip>
#include <random>
#include <sstream>
#include <string>

#include "scapre/error.hpp"
#include "scapre/solver.hpp"

namespace scapre {

namespace {

std::string sci(double x) {
    std::ostringstream os;
    os << std::scientific << std::setprecision(3) << x;
    return os.str();
}

}  // namespace

void OracleConfig::validate() const {
    if (!(tolerance > 0.0)) throw ConfigError("oracle tolerance must be positive");
    if (max_iters < 1) throw ConfigError("oracle max_iters must be >= 1");
    if (!(initial_step > 0.0) || !(shrink > 0.0 && shrink < 1.0) || !(armijo > 0.0 && armijo < 1.0)) {
        throw ConfigError("invalid backtracking parameters");
    }
}

Matrix gd_minimize(const Matrix& a, const Vector& b_diag, const Matrix& m, const OracleConfig& cfg) {
    cfg.validate();
    objective_value(Matrix::Zero(m.rows(), m.cols()), a, b_diag, m);  // shape check
    auto grad = [&](const Matrix& w) -> Matrix {
        return 2.0 * (w * a) + 2.0 * (b_diag.asDiagonal() * w) - 2.0 * m;
    };
    // f(W + D) - f(W) = <grad, D> + tr(D A D^T) + tr(D^T B D). Using this instead of
    // differencing f keeps the Armijo test meaningful once the decrease drops
    // below the rounding error of f itself.
    auto curvature = [&](const Matrix& d) {
        return (d * a).cwiseProduct(d).sum() + (b_diag.asDiagonal() * d).cwiseProduct(d).sum();
    };

    Matrix w = Matrix::Zero(m.rows(), m.cols());
    double grad_norm = 0.0;
    for (int it = 0; it < cfg.max_iters; ++it) {
        const Matrix g = grad(w);
        grad_norm = g.norm();
        if (grad_norm <= cfg.tolerance) return w;
        const double g2 = grad_norm * grad_norm;
        const double q = curvature(g);
        double step = cfg.initial_step;
        for (;;) {
            const double decrease = -step * g2 + step * step * q;
            if (decrease <= -cfg.armijo * step * g2) {
                w -= step * g;
                break;
            }
            step *= cfg.shrink;
            if (step < 1e-300) {
                throw NumericalError("gradient descent line search failed; |grad| = " + sci(grad_norm));
            }
        }
    }
    throw NumericalError("gradient descent did not converge in " + std::to_string(cfg.max_iters) +
                         " iterations; last |grad| = " + sci(grad_norm));
}

Matrix gd_minimize(const StabilizerA& a, const Vector& b_diag, const Matrix& m, const OracleConfig& cfg) {
    return gd_minimize(a.a, b_diag, m, cfg);
}

double mi_bruteforce(const std::vector<std::pair<int, int>>& pairs) {
    if (pairs.empty()) throw ConfigError("mi_bruteforce needs at least one pair");
    double table[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (const auto& [z, y] : pairs) {
        if ((z != 0 && z != 1) || (y != 0 && y != 1)) throw ConfigError("pairs must be binary");
        table[z][y] += 1.0;
    }
    const double total = static_cast<double>(pairs.size());
    double result = 0.0;
    for (int z = 0; z <= 1; ++z) {
        const double pz = (table[z][0] + table[z][1]) / total;
        for (int y = 0; y <= 1; ++y) {
            const double joint = table[z][y] / total;
            if (joint > 0.0) {
                const double py = (table[0][y] + table[1][y]) / total;
                result += joint * std::log(joint / (pz * py));
            }
        }
    }
    return result < 0.0 ? 0.0 : result;
}

bool objective_perturbation_check(const Matrix& w, const Matrix& a, const Vector& b_diag,
                                  const Matrix& m, int trials, std::uint64_t seed) {
    if (trials < 1) throw ConfigError("perturbation check needs at least one trial");
    const double base = objective_value(w, a, b_diag, m);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = 0; t < trials; ++t) {
        Matrix delta(w.rows(), w.cols());
        for (Eigen::Index i = 0; i < delta.size(); ++i) delta.data()[i] = normal(rng);
        delta /= delta.norm();
        for (double eps : {1e-3, 1e-2, 1e-1}) {
            if (objective_value(w + eps * delta, a, b_diag, m) < base) return false;
        }
    }
    return true;
}

}  // namespace scapre
