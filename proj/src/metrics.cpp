#include "scapre/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "scapre/error.hpp"

namespace scapre {

namespace {

double harmonic(double a, double c) {
    const double sum = a + c;
    return sum > 0.0 ? 2.0 * a * c / sum : 0.0;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

std::vector<std::size_t> scored_rows(const std::vector<MethodScore>& scores) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i].unlearn) || !std::isfinite(scores[i].quality)) {
            throw ConfigError("score for '" + scores[i].label + "' is not finite");
        }
        if (!scores[i].baseline) rows.push_back(i);
    }
    return rows;
}

UQResult empty_result(const std::vector<MethodScore>& scores, Normalization n) {
    UQResult out;
    out.normalization = n;
    out.values.resize(scores.size());
    for (const auto& s : scores) out.labels.push_back(s.label);
    return out;
}

// 1-based ranks in `order`, best first; stable so ties favor the earlier row.
std::vector<double> rank_scores(const std::vector<std::size_t>& rows,
                                const std::vector<MethodScore>& scores, bool lower_better) {
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto key = [&](std::size_t k) {
        const auto& s = scores[rows[k]];
        return lower_better ? s.unlearn : -s.quality;
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
    const double n = static_cast<double>(rows.size());
    std::vector<double> normalized(rows.size());
    for (std::size_t r = 0; r < order.size(); ++r) {
        normalized[order[r]] = 1.0 - static_cast<double>(r) / (n - 1.0);
    }
    return normalized;
}

}  // namespace

std::string_view to_string(Normalization n) {
    switch (n) {
        case Normalization::sigmoid: return "sigmoid";
        case Normalization::minmax: return "minmax";
        case Normalization::rank: return "rank";
    }
    return "sigmoid";
}

Normalization parse_normalization(std::string_view text) {
    if (text == "sigmoid") return Normalization::sigmoid;
    if (text == "minmax") return Normalization::minmax;
    if (text == "rank") return Normalization::rank;
    throw ConfigError("unknown normalization '" + std::string(text) + "'");
}

std::optional<double> UQResult::value_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == label) return values[i];
    }
    return std::nullopt;
}

UQResult uq_sigmoid(const std::vector<MethodScore>& scores, bool include_baseline) {
    const auto rows = scored_rows(scores);
    std::vector<std::size_t> population = rows;
    if (include_baseline) {
        population.resize(scores.size());
        std::iota(population.begin(), population.end(), std::size_t{0});
    }
    if (population.size() < 2) throw ConfigError("UQ needs at least two scores");

    const double n = static_cast<double>(population.size());
    double mean_a = 0.0;
    double mean_c = 0.0;
    for (auto i : population) {
        mean_a += scores[i].unlearn;
        mean_c += scores[i].quality;
    }
    mean_a /= n;
    mean_c /= n;
    double var_a = 0.0;
    double var_c = 0.0;
    for (auto i : population) {
        var_a += (scores[i].unlearn - mean_a) * (scores[i].unlearn - mean_a);
        var_c += (scores[i].quality - mean_c) * (scores[i].quality - mean_c);
    }
    const double std_a = std::sqrt(var_a / n);
    const double std_c = std::sqrt(var_c / n);
    if (!(std_a > 0.0) || !(std_c > 0.0)) throw ConfigError("UQ scores have zero variance");

    auto out = empty_result(scores, Normalization::sigmoid);
    out.baseline_in_population = include_baseline;
    for (auto i : rows) {
        const double a = sigmoid((mean_a - scores[i].unlearn) / std_a);
        const double c = sigmoid((scores[i].quality - mean_c) / std_c);
        out.values[i] = 100.0 * harmonic(a, c);
    }
    return out;
}

UQResult uq_minmax(const std::vector<MethodScore>& scores) {
    const auto rows = scored_rows(scores);
    if (rows.size() < 2) throw ConfigError("UQ needs at least two non-baseline scores");
    double a_min = std::numeric_limits<double>::infinity();
    double a_max = -a_min;
    double c_min = a_min;
    double c_max = -a_min;
    for (auto i : rows) {
        a_min = std::min(a_min, scores[i].unlearn);
        a_max = std::max(a_max, scores[i].unlearn);
        c_min = std::min(c_min, scores[i].quality);
        c_max = std::max(c_max, scores[i].quality);
    }
    if (!(a_max > a_min) || !(c_max > c_min)) throw ConfigError("UQ scores have a degenerate range");

    auto out = empty_result(scores, Normalization::minmax);
    for (auto i : rows) {
        const double a = (a_max - scores[i].unlearn) / (a_max - a_min);
        const double c = (scores[i].quality - c_min) / (c_max - c_min);
        out.values[i] = harmonic(a, c);
    }
    return out;
}

UQResult uq_rank(const std::vector<MethodScore>& scores) {
    const auto rows = scored_rows(scores);
    if (rows.size() < 2) throw ConfigError("UQ needs at least two non-baseline scores");
    const auto a = rank_scores(rows, scores, true);
    const auto c = rank_scores(rows, scores, false);
    auto out = empty_result(scores, Normalization::rank);
    for (std::size_t k = 0; k < rows.size(); ++k) out.values[rows[k]] = harmonic(a[k], c[k]);
    return out;
}

double overall_accuracy(double unlearn_acc, double preserve_acc) {
    if (!(unlearn_acc >= 0.0 && unlearn_acc <= 100.0) || !(preserve_acc >= 0.0 && preserve_acc <= 100.0)) {
        throw ConfigError("accuracies must lie in [0, 100]");
    }
    return harmonic(100.0 - unlearn_acc, preserve_acc);
}

double ProbeScores::max_erasure() const {
    double worst = 0.0;
    for (double e : erasure) {
        if (!std::isnan(e)) worst = std::max(worst, e);
    }
    return worst;
}

double ProbeScores::median_preservation() const {
    std::vector<double> kept;
    for (double p : preservation) {
        if (!std::isnan(p)) kept.push_back(p);
    }
    if (kept.empty()) return 0.0;
    std::sort(kept.begin(), kept.end());
    const std::size_t n = kept.size();
    return n % 2 == 1 ? kept[n / 2] : (kept[n / 2 - 1] + kept[n / 2]) / 2.0;
}

ProbeScores probe_scores(const Matrix& w_edited, const Matrix& w0, const EraseSpec& targets,
                         const ConceptMatrix& preserved) {
    if (w_edited.rows() != w0.rows() || w_edited.cols() != w0.cols()) {
        throw ConfigError("edited and reference weights differ in shape");
    }
    if (preserved.count() > 0 && preserved.dim() != w0.cols()) {
        throw ConfigError("preserved probes have the wrong length");
    }
    const Matrix v_star = resolve_targets(w0, targets);
    const Matrix& c = targets.c_e.matrix();
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();

    ProbeScores out;
    for (Eigen::Index k = 0; k < c.cols(); ++k) {
        const double ref = (w0 * c.col(k)).norm();
        if (ref == 0.0) {
            out.erasure.push_back(nan);
            out.excluded_targets.push_back(static_cast<std::size_t>(k));
            continue;
        }
        out.erasure.push_back((w_edited * c.col(k) - v_star.col(k)).norm() / ref);
    }
    const Matrix& p = preserved.matrix();
    for (Eigen::Index j = 0; j < p.cols(); ++j) {
        const Vector original = w0 * p.col(j);
        const double ref = original.norm();
        if (ref == 0.0) {
            out.preservation.push_back(nan);
            out.excluded_probes.push_back(static_cast<std::size_t>(j));
            continue;
        }
        out.preservation.push_back((w_edited * p.col(j) - original).norm() / ref);
    }
    return out;
}

}  // namespace scapre
