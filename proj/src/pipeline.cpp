#include "scapre/pipeline.hpp"

#include <chrono>
#include <utility>

#include "scapre/error.hpp"

namespace scapre {

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw Error(e.kind(), e.what(), name);
    }
}

}  // namespace

void EditConfig::validate() const {
    RefinementConfig{beta, interpolation}.validate();
    if (!(lambda.value > 0.0)) throw ConfigError("lambda must be positive");
}

EditResult run_edit(const EditInputs& in, const EditConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    stage("config", [&] {
        cfg.validate();
        if (in.spec.c_e.count() == 0) throw ConfigError("no targets: the erase set is empty");
        if (in.spec.mode != cfg.target_mode) {
            throw ConfigError("erase spec mode does not match the configured target mode");
        }
        if (in.w0.cols() != in.spec.c_e.dim() || in.context.dim() != in.w0.cols()) {
            throw ConfigError("W0, concepts and context features disagree on d_in");
        }
        if (in.preserved.count() > 0 && in.preserved.dim() != in.w0.cols()) {
            throw ConfigError("preserved probes disagree on d_in");
        }
        if (!in.w0.allFinite()) throw ConfigError("W0 has a non-finite entry");
    });

    EditResult out;
    auto& report = out.report;
    auto& mid = out.intermediates;
    report.config = cfg;
    report.m = in.spec.c_e.count();
    report.d_in = in.w0.cols();
    report.d_out = in.w0.rows();

    mid.stabilizer = stage("stabilizer", [&] {
        const Matrix s = build_s(in.context);
        const Matrix r = build_r(in.spec.c_e);
        return assemble_a(cfg.lambda.resolve(s), s, r);
    });
    report.lambda_effective = mid.stabilizer.lambda;

    mid.decoupler = stage("informax", [&] { return build_decoupler(in.w0, in.samples); });
    report.flags.decoupler_degenerate = mid.decoupler.degenerate;
    if (mid.decoupler.degenerate) {
        report.warnings.emplace_back("decoupler has zero mutual information on every channel; B = 0");
    }

    mid.m = stage("solver", [&] { return assemble_m(in.w0, in.spec); });
    const auto solution = stage("solver", [&] {
        return cfg.path == SolvePath::spectral
                   ? sylvester_solve_spectral(mid.decoupler.alpha, mid.stabilizer, mid.m)
                   : sylvester_solve_kronecker(mid.decoupler.alpha, mid.stabilizer, mid.m);
    });
    mid.w_star = solution.w_star;
    report.sylvester_residual = solution.residual;
    if (mid.m.isZero(0.0)) {
        report.flags.zero_target = true;
        report.warnings.emplace_back("M = 0: the closed-form solution is W* = 0");
    }

    const auto refined = stage("geometry", [&] {
        return refine_weights(mid.w_star, in.w0, RefinementConfig{cfg.beta, cfg.interpolation});
    });
    out.w_tilde = refined.w_tilde;
    report.flags.refinement_degenerate = refined.degenerate;
    report.flags.rank_deficient_k = refined.rank_deficient_k;
    report.flags.pseudo_inverse = refined.pseudo_inverse;
    report.realization_gap = refined.realization_gap;
    report.flags.realization_incomplete = report.d_out > report.d_in || refined.rank_deficient_k;
    if (refined.degenerate) report.warnings.emplace_back("refined covariance is zero; W~ = 0");

    stage("geometry", [&] {
        report.bures_before = bures_distance(CovariancePair::from_weights(mid.w_star, in.w0));
        report.bures_after = bures_distance(CovariancePair::from_weights(out.w_tilde, in.w0));
    });

    report.probes = stage("metrics", [&] {
        const auto& preserved =
            in.preserved.count() > 0 ? in.preserved : ConceptMatrix::empty(in.w0.cols());
        return probe_scores(out.w_tilde, in.w0, in.spec, preserved);
    });
    report.max_erasure_err = report.probes.max_erasure();
    report.median_preserve_err = report.probes.median_preservation();

    report.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
                         .count();
    return out;
}

void ReportSet::add(std::string layer, EditReport report) {
    auto [it, inserted] = reports_.emplace(std::move(layer), std::move(report));
    if (!inserted) throw ConfigError("duplicate report for layer '" + it->first + "'");
}

void ReportSet::merge(const ReportSet& other) {
    for (const auto& [layer, report] : other.reports_) {
        if (reports_.contains(layer)) throw ConfigError("duplicate report for layer '" + layer + "'");
    }
    reports_.insert(other.reports_.begin(), other.reports_.end());
}

}  // namespace scapre
