#include <doctest.h>

#include <cmath>

#include "scapre/error.hpp"
#include "scapre/harness.hpp"
#include "scapre/pipeline.hpp"
#include "test_support.hpp"

using namespace scapre;
using scapre::testing::Gen;

namespace {

EditConfig config(double beta, InterpolationMode mode = InterpolationMode::paper_literal) {
    EditConfig cfg;
    cfg.beta = beta;
    cfg.interpolation = mode;
    return cfg;
}

SyntheticModel small_model(std::uint64_t seed = 3) {
    SyntheticModelSpec spec;
    spec.d_in = 32;
    spec.d_out = 16;
    spec.m_targets = 3;
    spec.m_preserved = 4;
    spec.seed = seed;
    return generate_model(spec);
}

Error capture(const EditInputs& in, const EditConfig& cfg) {
    try {
        run_edit(in, cfg);
    } catch (const Error& e) {
        return e;
    }
    FAIL("run_edit should have thrown");
    return Error(ErrorKind::config, "unreachable");
}

}  // namespace

TEST_CASE("an empty erase set is rejected") {
    auto model = small_model();
    auto in = model.inputs();
    in.spec = EraseSpec::substitute(ConceptMatrix::empty(32), Matrix(32, 0));
    const Error e = capture(in, config(0.5));
    CHECK(e.kind() == ErrorKind::config);
    CHECK(e.stage() == "config");
    CHECK(std::string(e.what()).find("no targets") != std::string::npos);
}

TEST_CASE("stage failures are tagged") {
    auto model = small_model();
    auto in = model.inputs();
    in.samples.push_back({Vector::Ones(5), 0});
    const Error e = capture(in, config(0.5));
    CHECK(e.stage() == "informax");
    CHECK(e.kind() == ErrorKind::config);

    auto mismatched = model.inputs();
    EditConfig cfg = config(0.5);
    cfg.target_mode = TargetMode::zero_target;
    CHECK(capture(mismatched, cfg).stage() == "config");
    cfg = config(1.5);
    CHECK(capture(model.inputs(), cfg).kind() == ErrorKind::config);
}

TEST_CASE("self-substitute concept matches direct evaluation") {
    Gen g(81);
    const Eigen::Index d_in = 12, d_out = 6;
    const Matrix w0 = g.matrix(d_out, d_in);
    const Vector c = 3.0 * g.vector(d_in).normalized();
    std::vector<ActivationSample> samples;
    for (int i = 0; i < 20; ++i) samples.push_back({g.vector(d_in), 0});
    for (int i = 0; i < 20; ++i) samples.push_back({c + 0.1 * g.vector(d_in), 1});
    const EditInputs in{w0, EraseSpec::substitute(ConceptMatrix(c), c), ContextFeatureSet({{c}}), samples,
                        ConceptMatrix::empty(d_in)};
    const auto res = run_edit(in, config(0.0));

    // With S = c c^T and R = gate(|c|) u u^T, A c = a c, so (B + a I) W c = |c|^2 W0 c.
    const double r = c.norm();
    const double lambda = 0.1 * r * r / static_cast<double>(d_in);
    const double a = lambda + r * r + r / (1.0 + std::exp(r));
    const Vector b = res.intermediates.decoupler.alpha;
    Vector expect(d_out);
    for (Eigen::Index i = 0; i < d_out; ++i) expect[i] = r * r * (w0.row(i).dot(c)) / (b[i] + a);

    CHECK(res.report.lambda_effective == doctest::Approx(lambda).epsilon(1e-12));
    CHECK(((res.intermediates.w_star * c) - expect).norm() <= 1e-10 * expect.norm());
    CHECK(((res.w_tilde * c) - expect).norm() <= 1e-8 * expect.norm());
}

TEST_CASE("report consistency") {
    const auto model = small_model();
    for (double beta : {0.0, 0.3, 1.0}) {
        const auto res = run_edit(model.inputs(), config(beta, InterpolationMode::bw_geodesic));
        const auto& mid = res.intermediates;
        const double resid = sylvester_residual(mid.decoupler.alpha, mid.stabilizer.a, mid.w_star, mid.m);
        CHECK(std::abs(resid - res.report.sylvester_residual) <= 1e-12);
        CHECK(res.report.sylvester_residual <= 1e-8);
        if (beta > 0.0) CHECK(res.report.bures_after <= res.report.bures_before + 1e-9);
        CHECK(res.report.m == 3);
        CHECK(res.report.d_in == 32);
        CHECK(res.report.d_out == 16);
        CHECK(res.report.probes.erasure.size() == 3);
        CHECK(res.report.probes.preservation.size() == 4);
        CHECK(std::isfinite(res.report.bures_before));
        CHECK(std::isfinite(res.report.wall_ms));
    }
    const auto literal = run_edit(model.inputs(), config(0.5));
    CHECK(std::isfinite(literal.report.bures_after));
}

TEST_CASE("zero-target edit warns") {
    SyntheticModelSpec spec;
    spec.d_in = 16;
    spec.d_out = 8;
    spec.m_targets = 2;
    spec.m_preserved = 2;
    spec.target_mode = TargetMode::zero_target;
    const auto model = generate_model(spec);
    EditConfig cfg = config(0.5);
    cfg.target_mode = TargetMode::zero_target;
    const auto res = run_edit(model.inputs(), cfg);
    CHECK(res.report.flags.zero_target);
    CHECK(res.report.flags.refinement_degenerate);
    CHECK(res.intermediates.w_star.isZero(0.0));
    CHECK_FALSE(res.report.warnings.empty());
}

TEST_CASE("run_edit is deterministic") {
    const auto model = small_model(9);
    const auto a = run_edit(model.inputs(), config(0.5));
    const auto b = run_edit(model.inputs(), config(0.5));
    CHECK(a.w_tilde == b.w_tilde);
    CHECK(a.intermediates.w_star == b.intermediates.w_star);
}

TEST_CASE("kronecker path gives the same edit") {
    const auto model = small_model();
    EditConfig cfg = config(0.5);
    cfg.path = SolvePath::kronecker;
    const auto k = run_edit(model.inputs(), cfg);
    const auto s = run_edit(model.inputs(), config(0.5));
    CHECK(relative_frobenius(k.intermediates.w_star, s.intermediates.w_star) <= 1e-8);
}

TEST_CASE("ReportSet merge") {
    EditReport r;
    ReportSet a, b, c;
    a.add("q", r);
    b.add("k", r);
    c.add("v", r);
    CHECK_THROWS_AS(a.add("q", r), ConfigError);

    ReportSet ab_c = a;
    ab_c.merge(b);
    ab_c.merge(c);
    ReportSet bc = b;
    bc.merge(c);
    ReportSet a_bc = a;
    a_bc.merge(bc);
    ReportSet cba = c;
    cba.merge(b);
    cba.merge(a);
    auto keys = [](const ReportSet& s) {
        std::vector<std::string> out;
        for (const auto& [k, v] : s.reports()) out.push_back(k);
        return out;
    };
    CHECK(keys(ab_c) == keys(a_bc));
    CHECK(keys(ab_c) == keys(cba));
    CHECK(keys(ab_c).size() == 3);

    ReportSet clash = a;
    CHECK_THROWS_AS(clash.merge(a), ConfigError);
    CHECK(clash.reports().size() == 1);
}
