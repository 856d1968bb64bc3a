#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scapre/pipeline.hpp"

namespace scapre {

/// Toy concept model. Concepts come in groups of `group_size` consecutive
/// vectors (targets first, then preserved) with pairwise cosine `similarity`
/// inside a group and orthogonality across groups.
struct SyntheticModelSpec {
    Eigen::Index d_in = 64;
    Eigen::Index d_out = 32;
    Eigen::Index m_targets = 4;
    Eigen::Index m_preserved = 4;
    double similarity = 0.0;
    Eigen::Index group_size = 5;
    double noise_scale = 0.01;      // token perturbation norm relative to the embedding norm
    double embedding_scale = 10.0;  // concept embedding norm
    int tokens_per_concept = 1;
    int samples_per_concept = 8;
    int neutral_samples = 64;
    TargetMode target_mode = TargetMode::substitute_target;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SyntheticModel {
    Matrix w0;
    EraseSpec spec;
    ContextFeatureSet context;
    ConceptMatrix preserved;
    std::vector<ActivationSample> samples;
    Vector anchor;  // substitute embedding shared by every target

    EditInputs inputs() const { return {w0, spec, context, samples, preserved}; }
};

SyntheticModel generate_model(const SyntheticModelSpec& spec);

struct SweepRow {
    std::string run_id;
    Eigen::Index m = 0;
    Eigen::Index d_in = 0;
    Eigen::Index d_out = 0;
    double lambda = 0.0;
    double beta = 0.0;
    std::string mode;
    double sylvester_residual = 0.0;
    double bures_before = 0.0;
    double bures_after = 0.0;
    double max_erasure_err = 0.0;
    double median_preserve_err = 0.0;
    double wall_ms = 0.0;
    std::optional<std::string> error;
};

/// One pipeline run per concept count, in ascending order. A failing row keeps
/// its error and the sweep continues. Rows may run on `threads` workers
/// (0 = hardware concurrency); output order always follows `counts`.
std::vector<SweepRow> scaling_sweep(const SyntheticModelSpec& base, const std::vector<Eigen::Index>& counts,
                                    const EditConfig& cfg, unsigned threads = 1);

struct ConfuseSpec {
    Eigen::Index d_in = 64;
    Eigen::Index d_out = 32;
    int groups = 5;
    int targets_per_group = 2;
    int preserved_per_group = 3;
    double similarity = 0.8;
    double noise_scale = 0.01;
    double embedding_scale = 10.0;
    int samples_per_concept = 8;
    int neutral_samples = 64;
    std::uint64_t seed = 1;

    void validate() const;
};

struct ConfuseRow {
    int group = 0;
    int concept_index = 0;  // within its role
    bool target = false;
    double error = 0.0;     // erasure error for targets, preservation error otherwise
    bool still_recognized = false;  // output nearer W0 c than the substitute output
};

struct ConfuseReport {
    std::vector<ConfuseRow> rows;
    double unlearn_acc = 0.0;   // % of targets still recognized
    double preserve_acc = 0.0;  // % of preserved concepts still recognized
    double overall_acc = 0.0;
    EditReport edit;
};

/// Two-role benchmark on groups of confusable concepts.
ConfuseReport confuse_benchmark(const ConfuseSpec& spec, const EditConfig& cfg);

/// Fixed CSV schema shared with the CLI.
inline constexpr const char* sweep_csv_header =
    "run_id,m,d_in,d_out,lambda,beta,mode,sylvester_residual,bures_before,bures_after,"
    "max_erasure_err,median_preserve_err,wall_ms";

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, bool header = true);
SweepRow sweep_row_from_report(std::string run_id, const EditReport& report);

}  // namespace scapre
