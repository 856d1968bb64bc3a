#pragma once

#include <map>
#include <string>
#include <vector>

#include "scapre/geometry.hpp"
#include "scapre/informax.hpp"
#include "scapre/metrics.hpp"
#include "scapre/solver.hpp"
#include "scapre/stabilizer.hpp"

namespace scapre {

struct EditConfig {
    LambdaRule lambda{};  // default: 0.1 x mean diag(S)
    double beta = 0.5;
    InterpolationMode interpolation = InterpolationMode::paper_literal;
    TargetMode target_mode = TargetMode::substitute_target;
    SolvePath path = SolvePath::spectral;

    void validate() const;
};

struct EditInputs {
    Matrix w0;
    EraseSpec spec;
    ContextFeatureSet context;
    std::vector<ActivationSample> samples;
    ConceptMatrix preserved = ConceptMatrix::empty(0);
};

struct EditFlags {
    bool zero_target = false;         // M = 0, so W* = 0
    bool decoupler_degenerate = false;
    bool refinement_degenerate = false;
    bool rank_deficient_k = false;
    bool pseudo_inverse = false;
    bool realization_incomplete = false;  // d_out > d_in or K rank deficient
};

struct EditReport {
    EditConfig config;
    double lambda_effective = 0.0;
    Eigen::Index m = 0;
    Eigen::Index d_in = 0;
    Eigen::Index d_out = 0;
    double sylvester_residual = 0.0;
    double bures_before = 0.0;  // Bures(W* W*^T, W0 W0^T)
    double bures_after = 0.0;   // Bures(W~ W~^T, W0 W0^T)
    double realization_gap = 0.0;
    EditFlags flags;
    ProbeScores probes;
    double max_erasure_err = 0.0;
    double median_preserve_err = 0.0;
    double wall_ms = 0.0;
    std::vector<std::string> warnings;
};

struct EditIntermediates {
    StabilizerA stabilizer;
    DecouplerAlpha decoupler;
    Matrix m;
    Matrix w_star;
};

struct EditResult {
    Matrix w_tilde;
    EditReport report;
    EditIntermediates intermediates;
};

/// build_s -> build_r -> assemble_a -> build_decoupler -> assemble_m ->
/// Sylvester solve -> refine_weights. Stage failures are rethrown tagged
/// with the stage name.
EditResult run_edit(const EditInputs& inputs, const EditConfig& cfg);

/// Reports keyed by layer name. Merging disjoint sets is associative and
/// commutative; a shared key is an error.
class ReportSet {
public:
    void add(std::string layer, EditReport report);
    void merge(const ReportSet& other);
    const std::map<std::string, EditReport>& reports() const noexcept { return reports_; }

private:
    std::map<std::string, EditReport> reports_;
};

}  // namespace scapre
