#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scapre/matkernel.hpp"
#include "scapre/solver.hpp"
#include "scapre/stabilizer.hpp"

namespace scapre {

/// One method's row in a comparison table.
struct MethodScore {
    std::string label;
    double unlearn = 0.0;  // lower is better (e.g. residual accuracy %)
    double quality = 0.0;  // higher is better (CLIP score, or -FID)
    bool baseline = false; // the unedited model
};

enum class Normalization { sigmoid, minmax, rank };

std::string_view to_string(Normalization n);
Normalization parse_normalization(std::string_view text);

struct UQResult {
    Normalization normalization = Normalization::sigmoid;
    bool baseline_in_population = false;
    std::vector<std::string> labels;
    /// Empty for baseline rows, which receive no score.
    std::vector<std::optional<double>> values;

    std::optional<double> value_of(std::string_view label) const;
};

/// 100 * harmonic mean of sigmoid-normalized z-scores, population (1/N) std.
/// With include_baseline the baseline rows enter mu and sigma.
UQResult uq_sigmoid(const std::vector<MethodScore>& scores, bool include_baseline);

/// Harmonic mean of min-max normalized scores; baseline rows are excluded.
UQResult uq_minmax(const std::vector<MethodScore>& scores);

/// Harmonic mean of rank-normalized scores; baseline rows are excluded and
/// ties go to the earlier row.
UQResult uq_rank(const std::vector<MethodScore>& scores);

/// 2 (100 - A) P / ((100 - A) + P); 0 when the denominator vanishes.
double overall_accuracy(double unlearn_acc, double preserve_acc);

/// Relative probe errors. Entries whose reference output W0 c has zero norm
/// are NaN and listed in the matching `excluded_*` vector.
struct ProbeScores {
    std::vector<double> erasure;
    std::vector<double> preservation;
    std::vector<std::size_t> excluded_targets;
    std::vector<std::size_t> excluded_probes;

    double max_erasure() const;
    double median_preservation() const;
};

/// erasure_k = |W c_k - v*_k| / |W0 c_k|, preservation_j = |W c_j - W0 c_j| / |W0 c_j|.
ProbeScores probe_scores(const Matrix& w_edited, const Matrix& w0, const EraseSpec& targets,
                         const ConceptMatrix& preserved);

}  // namespace scapre
