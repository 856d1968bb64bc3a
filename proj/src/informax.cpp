#include "scapre/informax.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "scapre/error.hpp"

namespace scapre {

namespace {

void validate_samples(const Matrix& w, const std::vector<ActivationSample>& samples) {
    if (samples.size() < 2) throw ConfigError("need at least two activation samples");
    bool any_target = false;
    bool any_neutral = false;
    for (const auto& smp : samples) {
        if (smp.s.size() != w.cols()) {
            throw ConfigError("activation sample has length " + std::to_string(smp.s.size()) +
                              ", weight matrix expects " + std::to_string(w.cols()));
        }
        if (smp.label < 0) throw ConfigError("activation labels must be >= 0");
        if (!smp.s.allFinite()) throw ConfigError("activation sample has a non-finite entry");
        (smp.label == 0 ? any_neutral : any_target) = true;
    }
    if (!any_target || !any_neutral) {
        throw ConfigError("activation samples must include both neutral and target inputs");
    }
}

// samples x channels
Matrix activations(const Matrix& w, const std::vector<ActivationSample>& samples) {
    Matrix inputs(w.cols(), static_cast<Eigen::Index>(samples.size()));
    for (std::size_t j = 0; j < samples.size(); ++j) {
        inputs.col(static_cast<Eigen::Index>(j)) = samples[j].s;
    }
    return (w * inputs).transpose();
}

double median_of(std::vector<double> values) {
    const std::size_t n = values.size();
    const auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    if (n % 2 == 1) return *mid;
    const double upper = *mid;
    const double lower = *std::max_element(values.begin(), mid);
    return (lower + upper) / 2.0;
}

Vector thresholds_from(const Matrix& act) {
    Vector tau(act.cols());
    std::vector<double> column(static_cast<std::size_t>(act.rows()));
    for (Eigen::Index i = 0; i < act.cols(); ++i) {
        for (Eigen::Index j = 0; j < act.rows(); ++j) column[static_cast<std::size_t>(j)] = act(j, i);
        tau[i] = median_of(column);
    }
    return tau;
}

double mi_with_log(const JointCounts& c, double (*log_fn)(double), double log_scale) {
    const std::uint64_t k = c.total();
    if (k == 0) return 0.0;
    const double n = static_cast<double>(k);
    const double cells[2][2] = {{static_cast<double>(c.n00), static_cast<double>(c.n01)},
                                {static_cast<double>(c.n10), static_cast<double>(c.n11)}};
    double mi = 0.0;
    for (int z = 0; z < 2; ++z) {
        for (int y = 0; y < 2; ++y) {
            const double p_zy = cells[z][y] / n;
            if (p_zy == 0.0) continue;
            const double p_z = (cells[z][0] + cells[z][1]) / n;
            const double p_y = (cells[0][y] + cells[1][y]) / n;
            mi += p_zy * log_fn(p_zy / (p_z * p_y)) / log_scale;
        }
    }
    // Rounding can leave a tiny negative value on independent tables.
    return std::max(0.0, mi);
}

double natural_log(double x) { return std::log(x); }

}  // namespace

Vector channel_thresholds(const Matrix& w, const std::vector<ActivationSample>& samples) {
    validate_samples(w, samples);
    return thresholds_from(activations(w, samples));
}

double channel_mi(const JointCounts& counts) {
    return mi_with_log(counts, natural_log, 1.0);
}

double channel_mi(const JointCounts& counts, double log_base) {
    if (!(log_base > 0.0) || log_base == 1.0) throw ConfigError("invalid logarithm base");
    return mi_with_log(counts, natural_log, std::log(log_base));
}

DecouplerAlpha build_decoupler(const Matrix& w, const std::vector<ActivationSample>& samples,
                               const DecouplerOptions& options) {
    validate_samples(w, samples);
    const Matrix act = activations(w, samples);
    const Vector tau = thresholds_from(act);

    int concepts = 0;
    for (const auto& smp : samples) concepts = std::max(concepts, smp.label);

    const Eigen::Index channels = w.rows();
    DecouplerAlpha out;
    out.per_concept_mi = Matrix::Zero(channels, concepts);
    out.mi_raw = Vector::Zero(channels);

    for (Eigen::Index i = 0; i < channels; ++i) {
        // Neutral counts are shared by every concept's table.
        std::uint64_t neutral_on = 0;
        std::uint64_t neutral_off = 0;
        std::vector<std::uint64_t> target_on(static_cast<std::size_t>(concepts) + 1, 0);
        std::vector<std::uint64_t> target_off(static_cast<std::size_t>(concepts) + 1, 0);
        for (std::size_t j = 0; j < samples.size(); ++j) {
            const bool on = act(static_cast<Eigen::Index>(j), i) > tau[i];
            const int label = samples[j].label;
            if (label == 0) {
                ++(on ? neutral_on : neutral_off);
            } else {
                ++(on ? target_on : target_off)[static_cast<std::size_t>(label)];
            }
        }
        for (int k = 1; k <= concepts; ++k) {
            const auto ku = static_cast<std::size_t>(k);
            if (target_on[ku] + target_off[ku] == 0) continue;
            const JointCounts table{neutral_off, target_off[ku], neutral_on, target_on[ku]};
            const double mi = options.log_base == 0.0 ? channel_mi(table)
                                                      : channel_mi(table, options.log_base);
            out.per_concept_mi(i, k - 1) = mi;
        }
        if (concepts > 0) out.mi_raw[i] = out.per_concept_mi.row(i).maxCoeff();
    }

    const double peak = channels > 0 ? out.mi_raw.maxCoeff() : 0.0;
    if (peak > 0.0) {
        out.alpha = out.mi_raw / peak;
    } else {
        out.alpha = Vector::Zero(channels);
        out.degenerate = true;
    }
    return out;
}

}  // namespace scapre
