// Acceptance suite: one PASS/FAIL line per criterion.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include "published_scores.hpp"
#include "scapre/error.hpp"
#include "scapre/geometry.hpp"
#include "scapre/harness.hpp"
#include "scapre/informax.hpp"
#include "scapre/io.hpp"
#include "scapre/metrics.hpp"
#include "scapre/oracle.hpp"
#include "scapre/solver.hpp"
#include "scapre/stabilizer.hpp"
#include "test_support.hpp"

using namespace scapre;
using scapre::testing::Gen;
namespace fs = std::filesystem;

namespace {

// pinned tolerances
constexpr double residual_tol = 1e-8;
constexpr double closed_form_budget_s = 30.0;
constexpr double path_tol = 1e-8;
constexpr double gd_tol = 1e-4;
constexpr double psd_tol = 1e-10;
constexpr double a_min_tol = 1e-8;
constexpr double mi_zero_tol = 1e-12;
constexpr double alpha_base_tol = 1e-12;
constexpr int planted_min_hits = 99;
constexpr double bures_tol = 1e-8;
constexpr double beta0_tol = 1e-10;
constexpr double beta1_tol = 1e-6;
constexpr double realization_tol = 1e-8;
constexpr double uq_sigmoid_tol = 0.05;
constexpr double uq_unit_tol = 0.001;
constexpr double overall_tol = 0.05;
constexpr double edit_budget_s = 10.0;
constexpr double erasure_tol = 0.05;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            if (pass) detail << "failed: ";
            else detail << "; ";
            detail << what;
            pass = false;
        }
    }
};

StabilizerA random_stabilizer(Gen& g, Eigen::Index d_in) {
    const int m = g.integer(1, static_cast<int>(std::min<Eigen::Index>(d_in, 8)));
    std::vector<std::vector<Vector>> groups(static_cast<std::size_t>(m));
    const Matrix c = g.matrix(d_in, m);
    for (int k = 0; k < m; ++k)
        for (int t = 0; t < 3; ++t) groups[static_cast<std::size_t>(k)].push_back(c.col(k) + 0.1 * g.vector(d_in));
    const ContextFeatureSet ctx(std::move(groups));
    const Matrix s = build_s(ctx);
    return assemble_a(LambdaRule{}.resolve(s), s, build_r(ConceptMatrix(c)));
}

// 1. closed-form correctness
Outcome closed_form() {
    Outcome o;
    Gen g(1001);
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const Eigen::Index d_out = i == 0 ? 256 : g.integer(1, 256);
        const Eigen::Index d_in = i == 0 ? 128 : g.integer(1, 128);
        const auto a = random_stabilizer(g, d_in);
        const Vector b = g.nonnegative(d_out);
        const Matrix m = g.matrix(d_out, d_in);
        const auto sol = sylvester_solve_spectral(b, a, m);
        const double r = (b.asDiagonal() * sol.w_star + sol.w_star * a.a - m).norm() / m.norm();
        worst = std::max(worst, r);
    }
    const double elapsed = seconds_since(t0);
    o.require(worst <= residual_tol, "residual above tolerance");
    o.require(elapsed < closed_form_budget_s, "over time budget");
    o.detail << (o.pass ? "" : " | ") << "max residual " << worst << ", " << elapsed << " s";
    return o;
}

// 2. spectral vs kronecker
Outcome path_equivalence() {
    Outcome o;
    double worst = 0.0;
    for (Eigen::Index d_out = 1; d_out <= 12; ++d_out) {
        for (Eigen::Index d_in = 1; d_in <= 12; ++d_in) {
            for (int seed = 0; seed < 20; ++seed) {
                Gen g(static_cast<std::uint64_t>(10000 * d_out + 100 * d_in + seed));
                const auto a = random_stabilizer(g, d_in);
                const Vector b = g.nonnegative(d_out);
                const Matrix m = g.matrix(d_out, d_in);
                const Matrix s = sylvester_solve_spectral(b, a, m).w_star;
                const Matrix k = sylvester_solve_kronecker(b, a, m).w_star;
                worst = std::max(worst, relative_frobenius(s, k));
            }
        }
    }
    o.require(worst <= path_tol, "paths disagree");
    o.detail << (o.pass ? "" : " | ") << "2880 solves, max relative difference " << worst;
    return o;
}

// 3. oracle agreement
Outcome oracle_agreement() {
    Outcome o;
    Gen g(1003);
    double worst = 0.0;
    int perturb_fail = 0;
    for (int i = 0; i < 50; ++i) {
        const Eigen::Index d_out = g.integer(1, 32);
        const Eigen::Index d_in = g.integer(1, 32);
        const auto a = random_stabilizer(g, d_in);
        const Vector b = g.nonnegative(d_out);
        const Matrix m = g.matrix(d_out, d_in);
        const Matrix w = sylvester_solve_spectral(b, a, m).w_star;
        worst = std::max(worst, relative_frobenius(gd_minimize(a, b, m), w));
        if (!objective_perturbation_check(w, a.a, b, m, 100, static_cast<std::uint64_t>(i))) ++perturb_fail;
    }
    o.require(worst <= gd_tol, "gradient descent disagrees");
    o.require(perturb_fail == 0, "perturbation check failed");
    o.detail << (o.pass ? "" : " | ") << "max GD difference " << worst << ", perturbation failures "
             << perturb_fail;
    return o;
}

// 4. stabilizer soundness
Outcome stabilizer_soundness() {
    Outcome o;
    Gen g(1004);
    double worst_psd = 0.0, worst_a = 0.0;
    for (int i = 0; i < 100; ++i) {
        const Eigen::Index d = g.integer(1, 48);
        const int m = g.integer(1, 10);
        std::vector<std::vector<Vector>> groups(static_cast<std::size_t>(m));
        for (auto& grp : groups)
            for (int t = g.integer(1, 5); t > 0; --t) grp.push_back(g.vector(d) * g.uniform(0.1, 10.0));
        const ContextFeatureSet ctx(std::move(groups));
        const ConceptMatrix ce(g.matrix(d, m) * g.uniform(0.1, 10.0));
        const Matrix s = build_s(ctx);
        const Matrix r = build_r(ce);
        const double lambda = LambdaRule{}.resolve(s);
        const auto a = assemble_a(lambda, s, r);
        const auto scaled = [](const Matrix& x) {
            return testing::min_eigenvalue(x) / std::max(1.0, x.norm());
        };
        worst_psd = std::min({worst_psd, scaled(s), scaled(r)});
        worst_a = std::min(worst_a, testing::min_eigenvalue(a.a) - lambda);
    }
    o.require(worst_psd >= -psd_tol, "S or R not PSD");
    o.require(worst_a >= -a_min_tol, "A below lambda");
    o.detail << (o.pass ? "" : " | ") << "min scaled eig(S,R) " << worst_psd << ", min eig(A) - lambda " << worst_a;
    return o;
}

// 5. informax
Outcome informax() {
    Outcome o;
    Gen g(1005);
    int mismatches = 0;
    for (int t = 0; t < 1000; ++t) {
        JointCounts c;
        std::vector<std::pair<int, int>> pairs;
        std::uint64_t* cells[4] = {&c.n00, &c.n01, &c.n10, &c.n11};
        for (int z = 0; z < 2; ++z)
            for (int y = 0; y < 2; ++y) {
                const int n = g.integer(z + y == 0 ? 1 : 0, 60);
                *cells[2 * z + y] = static_cast<std::uint64_t>(n);
                for (int k = 0; k < n; ++k) pairs.emplace_back(z, y);
            }
        std::shuffle(pairs.begin(), pairs.end(), g.engine());
        if (channel_mi(c) != mi_bruteforce(pairs)) ++mismatches;
    }
    o.require(mismatches == 0, "MI differs from brute force");
    o.require(std::abs(channel_mi({25, 25, 25, 25})) <= mi_zero_tol, "independence not 0");
    o.require(std::abs(channel_mi({50, 0, 0, 50}) - std::log(2.0)) <= mi_zero_tol, "dependence not ln 2");

    double base_diff = 0.0;
    for (int t = 0; t < 20; ++t) {
        const Matrix w = g.matrix(16, 8);
        std::vector<ActivationSample> samples;
        for (int i = 0; i < 120; ++i) samples.push_back({g.vector(8), i % 4});
        const auto e = build_decoupler(w, samples);
        const auto two = build_decoupler(w, samples, {2.0});
        const auto ten = build_decoupler(w, samples, {10.0});
        base_diff = std::max({base_diff, (e.alpha - two.alpha).cwiseAbs().maxCoeff(),
                              (e.alpha - ten.alpha).cwiseAbs().maxCoeff()});
    }
    o.require(base_diff <= alpha_base_tol, "alpha depends on log base");

    int hits = 0;
    for (int t = 0; t < 100; ++t) {
        const Eigen::Index d = 12;
        const Matrix w = g.matrix(10, d);
        const int planted = g.integer(0, 9);
        const Vector dir = w.completeOrthogonalDecomposition().pseudoInverse().col(planted);
        const double snr = 10.0 * w.row(planted).norm();
        std::vector<ActivationSample> samples;
        for (int i = 0; i < 60; ++i) samples.push_back({g.vector(d), 0});
        for (int i = 0; i < 60; ++i) samples.push_back({g.vector(d) + snr * dir, 1});
        Eigen::Index arg = 0;
        build_decoupler(w, samples).alpha.maxCoeff(&arg);
        hits += arg == planted;
    }
    o.require(hits >= planted_min_hits, "planted channel recovery too low");
    o.detail << (o.pass ? "" : " | ") << "brute-force mismatches " << mismatches << ", log-base diff " << base_diff
             << ", planted recovery " << hits << "/100";
    return o;
}

// 6. geometry
Outcome geometry() {
    Outcome o;
    Gen g(1006);
    double commuting = 0.0, beta0 = 0.0, beta1 = 0.0, realization = 0.0;
    int procrustes_beaten = 0, realized = 0;
    for (int t = 0; t < 50; ++t) {
        const Eigen::Index n = g.integer(1, 12);
        const Matrix q = g.orthonormal(n, n);
        const Vector a = g.nonnegative(n, 10.0);
        const Vector b = g.nonnegative(n, 10.0);
        const double expect = (a.cwiseSqrt() - b.cwiseSqrt()).squaredNorm();
        const CovariancePair cp{q * a.asDiagonal() * q.transpose(), q * b.asDiagonal() * q.transpose()};
        commuting = std::max(commuting, std::abs(bures_distance(cp) - expect) / std::max(1.0, expect));

        const CovariancePair p{g.psd(n), g.psd(n)};
        for (auto mode : {InterpolationMode::paper_literal, InterpolationMode::bw_geodesic}) {
            const Matrix s = geodesic_interpolate(p, {0.0, mode}).sigma_plus;
            beta0 = std::max(beta0, (s - p.sigma_star).norm() / std::max(1.0, p.sigma_star.norm()));
        }
        const Matrix one = geodesic_interpolate(p, {1.0, InterpolationMode::bw_geodesic}).sigma_plus;
        beta1 = std::max(beta1, relative_frobenius(one, p.sigma_zero));

        const Eigen::Index d_out = g.integer(1, 10);
        const Eigen::Index d_in = d_out + g.integer(0, 10);
        const auto mode = t % 2 ? InterpolationMode::bw_geodesic : InterpolationMode::paper_literal;
        const auto r = refine_weights(g.matrix(d_out, d_in), g.matrix(d_out, d_in), {g.uniform(), mode});
        if (!r.rank_deficient_k && !r.degenerate) {
            ++realized;
            realization = std::max(realization, relative_frobenius(r.w_tilde * r.w_tilde.transpose(), r.sigma_plus));
        }
    }
    for (int t = 0; t < 10; ++t) {
        const Matrix ws = g.matrix(8, 16);
        const auto r = refine_weights(ws, g.matrix(8, 16), {0.5, InterpolationMode::paper_literal});
        Eigen::SelfAdjointEigenSolver<Matrix> es(r.sigma_plus);
        const Matrix f = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
        const double best = (r.w_tilde - ws).norm();
        for (int k = 0; k < 1000; ++k) {
            if ((f * g.orthonormal(16, 8).transpose() - ws).norm() < best) ++procrustes_beaten;
        }
    }
    o.require(commuting <= bures_tol, "Bures closed form");
    o.require(beta0 <= beta0_tol, "beta = 0 endpoint");
    o.require(beta1 <= beta1_tol, "beta = 1 endpoint");
    o.require(realized > 0 && realization <= realization_tol, "covariance realization");
    o.require(procrustes_beaten == 0, "Procrustes beaten by a random rotation");
    o.detail << (o.pass ? "" : " | ") << "Bures " << commuting << ", beta0 " << beta0 << ", beta1 " << beta1
             << ", realization " << realization << " (" << realized << " cases), Procrustes losses "
             << procrustes_beaten << "/10000";
    return o;
}

// 7. metric reproduction
Outcome metrics() {
    Outcome o;
    const auto scores = testing::imagenette_scores();
    const auto sig = uq_sigmoid(scores, true);
    const auto mm = uq_minmax(scores);
    const auto rk = uq_rank(scores);
    const double scapre = *sig.value_of("ScaPre"), rece = *sig.value_of("RECE");
    const double mm_s = *mm.value_of("ScaPre"), mm_f = *mm.value_of("FMN"), mm_m = *mm.value_of("MACE");
    const double rk_s = *rk.value_of("ScaPre");
    const double oa1 = overall_accuracy(5.8, 76.3), oa2 = overall_accuracy(55.6, 57.7);
    o.require(std::abs(scapre - 64.09) <= uq_sigmoid_tol, "sigmoid ScaPre");
    o.require(std::abs(rece - 32.60) <= uq_sigmoid_tol, "sigmoid RECE");
    o.require(std::abs(mm_s - 0.800) <= uq_unit_tol, "minmax ScaPre");
    o.require(std::abs(mm_f - 0.153) <= uq_unit_tol, "minmax FMN");
    o.require(std::abs(mm_m - 0.000) <= uq_unit_tol, "minmax MACE");
    o.require(std::abs(rk_s - 0.727) <= uq_unit_tol, "rank ScaPre");
    o.require(std::abs(oa1 - 84.3) <= overall_tol, "overall 5.8/76.3");
    o.require(std::abs(oa2 - 50.2) <= overall_tol, "overall 55.6/57.7");
    o.detail << (o.pass ? "" : " | ") << "sigmoid " << scapre << "/" << rece << ", minmax " << mm_s << "/" << mm_f
             << "/" << mm_m << ", rank " << rk_s << ", overall " << oa1 << "/" << oa2;
    return o;
}

// 8. desk-scale edit
Outcome end_to_end() {
    Outcome o;
    SyntheticModelSpec spec;
    spec.d_in = 768;
    spec.d_out = 320;
    spec.m_targets = 50;
    spec.m_preserved = 20;
    const auto model = generate_model(spec);
    EditConfig cfg;
    cfg.beta = 0.0;
    const auto t0 = Clock::now();
    const auto first = run_edit(model.inputs(), cfg);
    const double elapsed = seconds_since(t0);
    const auto second = run_edit(model.inputs(), cfg);
    const bool identical = first.w_tilde.size() == second.w_tilde.size() &&
                           std::memcmp(first.w_tilde.data(), second.w_tilde.data(),
                                       sizeof(double) * static_cast<std::size_t>(first.w_tilde.size())) == 0;
    o.require(elapsed < edit_budget_s, "over time budget");
    o.require(first.report.max_erasure_err <= erasure_tol, "erasure error");
    o.require(first.report.sylvester_residual <= residual_tol, "residual");
    o.require(identical, "runs differ");
    o.detail << (o.pass ? "" : " | ") << elapsed << " s, max erasure " << first.report.max_erasure_err
             << ", residual " << first.report.sylvester_residual << ", bit-identical " << (identical ? "yes" : "no");
    return o;
}

int run_cli(const std::string& args, const fs::path& dir) {
    const std::string cmd = std::string(SCAPRE_CLI) + " " + args + " > " + (dir / "out.txt").string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 9. I/O
Outcome io() {
    Outcome o;
    const fs::path dir = fs::temp_directory_path() / "scapre_acceptance";
    fs::create_directories(dir);

    const double tiny = std::ldexp(1.0, -1074);
    const DenseMatrix edge(2, 2, {-0.0, tiny, -tiny, 0.0});
    const auto back = smat_roundtrip(dir / "edge.smat", edge);
    o.require(std::memcmp(back.data().data(), edge.data().data(), 4 * sizeof(double)) == 0, "edge round trip");
    o.require(fs::file_size(dir / "edge.smat") == 24 + 8 * 4, "edge size");

    Gen g(1009);
    const auto big = DenseMatrix::from_eigen(g.matrix(100, 64));
    const auto big_back = smat_roundtrip(dir / "big.smat", big);
    o.require(std::memcmp(big_back.data().data(), big.data().data(), 6400 * sizeof(double)) == 0, "random round trip");
    o.require(fs::file_size(dir / "big.smat") == 24 + 51200, "random size");

    const fs::path gen = dir / "gen";
    fs::remove_all(gen);
    const int gen_code = run_cli("gen --out-dir " + gen.string() + " --targets 3 --d-in 24 --d-out 12 --preserved 2", dir);
    const int ok = run_cli("edit " + (gen / "manifest.json").string(), dir);

    std::ifstream in(gen / "manifest.json");
    std::stringstream text;
    text << in.rdbuf();
    std::string typo = text.str();
    typo.insert(typo.find('{') + 1, "\"lamda\": 1.0,");
    std::ofstream(gen / "typo.json") << typo;
    const int config = run_cli("edit " + (gen / "typo.json").string(), dir);

    write_smat(dir / "b.smat", DenseMatrix(1, 1, {1.0}));
    write_smat(dir / "a.smat", DenseMatrix(1, 1, {-2.0}));
    write_smat(dir / "m.smat", DenseMatrix(1, 1, {1.0}));
    const int numerical = run_cli("solve --b " + (dir / "b.smat").string() + " --a " + (dir / "a.smat").string() +
                                      " --m " + (dir / "m.smat").string() + " --out " + (dir / "x.smat").string(),
                                  dir);
    const int missing = run_cli("solve --b " + (dir / "nope.smat").string() + " --a " + (dir / "a.smat").string() +
                                    " --m " + (dir / "m.smat").string() + " --out " + (dir / "x.smat").string(),
                                dir);
    o.require(gen_code == 0 && ok == 0, "success exit");
    o.require(config == 2, "config exit");
    o.require(numerical == 3, "numerical exit");
    o.require(missing == 4, "I/O exit");
    o.detail << (o.pass ? "" : " | ") << "round trips bit-identical, exit codes " << ok << "/" << config << "/"
             << numerical << "/" << missing;
    return o;
}

}  // namespace

int main() {
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"closed-form residual", closed_form},
        {"spectral/kronecker agreement", path_equivalence},
        {"oracle agreement", oracle_agreement},
        {"stabilizer soundness", stabilizer_soundness},
        {"informax correctness", informax},
        {"geometry", geometry},
        {"metric reproduction", metrics},
        {"desk-scale edit", end_to_end},
        {"I/O bit-exactness and exit codes", io},
    };
    int failures = 0;
    int index = 0;
    for (const auto& [name, fn] : criteria) {
        ++index;
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "threw: " << e.what();
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << index << ". " << name << ": " << o.detail.str()
                  << std::endl;
    }
    std::cout << (9 - failures) << "/9 criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
