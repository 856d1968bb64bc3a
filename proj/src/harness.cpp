#include "scapre/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "scapre/error.hpp"

namespace scapre {

namespace {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }

    Matrix gaussian(Eigen::Index rows, Eigen::Index cols) {
        Matrix m(rows, cols);
        for (Eigen::Index j = 0; j < cols; ++j) {
            for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal();
        }
        return m;
    }

    Vector gaussian(Eigen::Index n) { return gaussian(n, 1).col(0); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

Matrix orthonormal_columns(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::HouseholderQR<Matrix> qr(rng.gaussian(rows, cols));
    Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
    return q;
}

/// W0 = U diag(s) V^T with s log-uniform in [0.1, 10].
Matrix controlled_spectrum(Rng& rng, Eigen::Index d_out, Eigen::Index d_in) {
    const Eigen::Index k = std::min(d_out, d_in);
    const Matrix u = orthonormal_columns(rng, d_out, k);
    const Matrix v = orthonormal_columns(rng, d_in, k);
    Vector s(k);
    for (Eigen::Index i = 0; i < k; ++i) s[i] = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
    return u * s.asDiagonal() * v.transpose();
}

struct ConceptLayout {
    Matrix concepts;  // d_in x n, laid out group after group
    Vector anchor;
};

/// Unit vectors sqrt(s) g + sqrt(1 - s) e_i per group, scaled to `scale`,
/// plus one anchor orthogonal to all of them.
ConceptLayout concept_design(Rng& rng, Eigen::Index d_in, const std::vector<Eigen::Index>& group_sizes,
                             double similarity, double scale) {
    Eigen::Index n = 0;
    for (auto g : group_sizes) n += g;
    const bool shared = similarity > 0.0;
    const Eigen::Index needed = n + 1 + (shared ? static_cast<Eigen::Index>(group_sizes.size()) : 0);
    if (needed > d_in) {
        throw ConfigError("similarity design needs " + std::to_string(needed) +
                          " orthogonal directions but d_in is " + std::to_string(d_in));
    }
    const Matrix basis = orthonormal_columns(rng, d_in, needed);
    ConceptLayout out{Matrix(d_in, n), scale * basis.col(0)};
    const double a = std::sqrt(similarity);
    const double b = std::sqrt(1.0 - similarity);
    Eigen::Index next = 1;
    Eigen::Index col = 0;
    for (auto size : group_sizes) {
        Vector common = Vector::Zero(d_in);
        if (shared) common = basis.col(next++);
        for (Eigen::Index i = 0; i < size; ++i) {
            out.concepts.col(col++) = scale * (a * common + b * basis.col(next++));
        }
    }
    return out;
}

Vector perturbed(Rng& rng, const Vector& center, double noise_scale, double embedding_scale) {
    const double sd = noise_scale * embedding_scale / std::sqrt(static_cast<double>(center.size()));
    if (sd == 0.0) return center;
    return center + sd * rng.gaussian(center.size());
}

struct Assembled {
    ContextFeatureSet context;
    std::vector<ActivationSample> samples;
};

Assembled assemble_observations(Rng& rng, const Matrix& targets, int tokens, int per_concept, int neutral,
                                double noise_scale, double embedding_scale) {
    const Eigen::Index d_in = targets.rows();
    std::vector<std::vector<Vector>> groups;
    std::vector<ActivationSample> samples;
    for (Eigen::Index k = 0; k < targets.cols(); ++k) {
        std::vector<Vector> group;
        for (int t = 0; t < tokens; ++t) group.push_back(perturbed(rng, targets.col(k), noise_scale, embedding_scale));
        groups.push_back(std::move(group));
    }
    for (Eigen::Index k = 0; k < targets.cols(); ++k) {
        for (int s = 0; s < per_concept; ++s) {
            samples.push_back({perturbed(rng, targets.col(k), noise_scale, embedding_scale),
                               static_cast<int>(k + 1)});
        }
    }
    const double neutral_sd = embedding_scale / std::sqrt(static_cast<double>(d_in));
    for (int s = 0; s < neutral; ++s) samples.push_back({neutral_sd * rng.gaussian(d_in), 0});
    return {ContextFeatureSet(std::move(groups)), std::move(samples)};
}

EraseSpec make_spec(const Matrix& targets, const Vector& anchor, TargetMode mode, Eigen::Index d_out) {
    if (mode == TargetMode::zero_target) return EraseSpec::zero_target(ConceptMatrix(targets), d_out);
    return EraseSpec::substitute(ConceptMatrix(targets), anchor.replicate(1, targets.cols()));
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

}  // namespace

void SyntheticModelSpec::validate() const {
    if (d_in < 1 || d_out < 1) throw ConfigError("model dimensions must be >= 1");
    if (m_targets < 0 || m_preserved < 0) throw ConfigError("concept counts must be >= 0");
    if (!(similarity >= 0.0 && similarity < 1.0)) throw ConfigError("similarity must lie in [0, 1)");
    if (group_size < 1) throw ConfigError("group_size must be >= 1");
    if (!(noise_scale >= 0.0) || !(embedding_scale > 0.0)) throw ConfigError("invalid noise or embedding scale");
    if (tokens_per_concept < 1 || samples_per_concept < 1 || neutral_samples < 1) {
        throw ConfigError("token and sample counts must be >= 1");
    }
}

SyntheticModel generate_model(const SyntheticModelSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Matrix w0 = controlled_spectrum(rng, spec.d_out, spec.d_in);

    const Eigen::Index n = spec.m_targets + spec.m_preserved;
    std::vector<Eigen::Index> sizes;
    if (spec.similarity > 0.0) {
        for (Eigen::Index left = n; left > 0; left -= spec.group_size) sizes.push_back(std::min(left, spec.group_size));
    } else if (n > 0) {
        sizes.push_back(n);
    }
    const auto layout = concept_design(rng, spec.d_in, sizes, spec.similarity, spec.embedding_scale);
    const Matrix targets = layout.concepts.leftCols(spec.m_targets);
    const Matrix preserved = layout.concepts.rightCols(spec.m_preserved);

    // An empty target set still needs a context group for the ContextFeatureSet
    // invariants; the anchor stands in and the pipeline rejects the edit anyway.
    const Matrix observed = spec.m_targets > 0 ? targets : Matrix(layout.anchor);
    auto obs = assemble_observations(rng, observed, spec.tokens_per_concept, spec.samples_per_concept,
                                     spec.neutral_samples, spec.noise_scale, spec.embedding_scale);
    return SyntheticModel{w0,
                          make_spec(targets, layout.anchor, spec.target_mode, spec.d_out),
                          std::move(obs.context),
                          ConceptMatrix(preserved),
                          std::move(obs.samples),
                          layout.anchor};
}

SweepRow sweep_row_from_report(std::string run_id, const EditReport& report) {
    SweepRow row;
    row.run_id = std::move(run_id);
    row.m = report.m;
    row.d_in = report.d_in;
    row.d_out = report.d_out;
    row.lambda = report.lambda_effective;
    row.beta = report.config.beta;
    row.mode = std::string(to_string(report.config.interpolation));
    row.sylvester_residual = report.sylvester_residual;
    row.bures_before = report.bures_before;
    row.bures_after = report.bures_after;
    row.max_erasure_err = report.max_erasure_err;
    row.median_preserve_err = report.median_preserve_err;
    row.wall_ms = report.wall_ms;
    return row;
}

std::vector<SweepRow> scaling_sweep(const SyntheticModelSpec& base, const std::vector<Eigen::Index>& counts,
                                    const EditConfig& cfg, unsigned threads) {
    if (!std::is_sorted(counts.begin(), counts.end())) throw ConfigError("sweep counts must be ascending");
    auto run_one = [&](Eigen::Index m) {
        const std::string id = "sweep-m" + std::to_string(m);
        try {
            auto spec = base;
            spec.m_targets = m;
            spec.target_mode = cfg.target_mode;
            const auto model = generate_model(spec);
            const auto result = run_edit(model.inputs(), cfg);
            return sweep_row_from_report(id, result.report);
        } catch (const std::exception& e) {
            constexpr double nan = std::numeric_limits<double>::quiet_NaN();
            SweepRow row{id, m, base.d_in, base.d_out, nan, cfg.beta,
                         std::string(to_string(cfg.interpolation)), nan, nan, nan, nan, nan, nan, e.what()};
            return row;
        }
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::vector<SweepRow> rows(counts.size());
    if (threads == 1) {
        for (std::size_t i = 0; i < counts.size(); ++i) rows[i] = run_one(counts[i]);
        return rows;
    }
    // Rows land in their own slots, so completion order does not matter.
    for (std::size_t start = 0; start < counts.size(); start += threads) {
        std::vector<std::future<SweepRow>> batch;
        for (std::size_t i = start; i < std::min(counts.size(), start + threads); ++i) {
            batch.push_back(std::async(std::launch::async, run_one, counts[i]));
        }
        for (std::size_t i = 0; i < batch.size(); ++i) rows[start + i] = batch[i].get();
    }
    return rows;
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows, bool header) {
    if (header) os << sweep_csv_header << '\n';
    for (const auto& r : rows) {
        os << r.run_id << ',' << r.m << ',' << r.d_in << ',' << r.d_out << ',' << format_double(r.lambda) << ','
           << format_double(r.beta) << ',' << r.mode << ',' << format_double(r.sylvester_residual) << ','
           << format_double(r.bures_before) << ',' << format_double(r.bures_after) << ','
           << format_double(r.max_erasure_err) << ',' << format_double(r.median_preserve_err) << ','
           << format_double(r.wall_ms) << '\n';
    }
}

void ConfuseSpec::validate() const {
    if (groups < 1) throw ConfigError("confuse benchmark needs at least one group");
    if (targets_per_group < 1 || preserved_per_group < 1 || targets_per_group + preserved_per_group < 3) {
        throw ConfigError("each group needs >= 3 concepts with >= 1 target and >= 1 preserved");
    }
    if (!(similarity >= 0.0 && similarity < 1.0)) throw ConfigError("similarity must lie in [0, 1)");
    if (d_in < 1 || d_out < 1) throw ConfigError("model dimensions must be >= 1");
}

ConfuseReport confuse_benchmark(const ConfuseSpec& spec, const EditConfig& cfg) {
    spec.validate();
    Rng rng(spec.seed);
    const Matrix w0 = controlled_spectrum(rng, spec.d_out, spec.d_in);
    const Eigen::Index per_group = spec.targets_per_group + spec.preserved_per_group;
    const std::vector<Eigen::Index> sizes(static_cast<std::size_t>(spec.groups), per_group);
    const auto layout = concept_design(rng, spec.d_in, sizes, spec.similarity, spec.embedding_scale);

    Matrix targets(spec.d_in, spec.groups * spec.targets_per_group);
    Matrix preserved(spec.d_in, spec.groups * spec.preserved_per_group);
    for (int g = 0; g < spec.groups; ++g) {
        const Eigen::Index base = g * per_group;
        targets.middleCols(g * spec.targets_per_group, spec.targets_per_group) =
            layout.concepts.middleCols(base, spec.targets_per_group);
        preserved.middleCols(g * spec.preserved_per_group, spec.preserved_per_group) =
            layout.concepts.middleCols(base + spec.targets_per_group, spec.preserved_per_group);
    }

    auto obs = assemble_observations(rng, targets, 1, spec.samples_per_concept, spec.neutral_samples,
                                     spec.noise_scale, spec.embedding_scale);
    const EditInputs inputs{w0, make_spec(targets, layout.anchor, TargetMode::substitute_target, spec.d_out),
                            std::move(obs.context), std::move(obs.samples), ConceptMatrix(preserved)};
    auto run_cfg = cfg;
    run_cfg.target_mode = TargetMode::substitute_target;
    const auto result = run_edit(inputs, run_cfg);

    ConfuseReport out;
    out.edit = result.report;
    const Vector substitute_out = w0 * layout.anchor;
    auto recognized = [&](const Vector& c) {
        const Vector edited = result.w_tilde * c;
        return (edited - w0 * c).norm() < (edited - substitute_out).norm();
    };
    int targets_recognized = 0;
    int preserved_recognized = 0;
    for (Eigen::Index k = 0; k < targets.cols(); ++k) {
        ConfuseRow row{static_cast<int>(k / spec.targets_per_group), static_cast<int>(k), true,
                       result.report.probes.erasure[static_cast<std::size_t>(k)], recognized(targets.col(k))};
        targets_recognized += row.still_recognized ? 1 : 0;
        out.rows.push_back(row);
    }
    for (Eigen::Index j = 0; j < preserved.cols(); ++j) {
        ConfuseRow row{static_cast<int>(j / spec.preserved_per_group), static_cast<int>(j), false,
                       result.report.probes.preservation[static_cast<std::size_t>(j)],
                       recognized(preserved.col(j))};
        preserved_recognized += row.still_recognized ? 1 : 0;
        out.rows.push_back(row);
    }
    out.unlearn_acc = 100.0 * targets_recognized / static_cast<double>(targets.cols());
    out.preserve_acc = 100.0 * preserved_recognized / static_cast<double>(preserved.cols());
    out.overall_acc = overall_accuracy(out.unlearn_acc, out.preserve_acc);
    return out;
}

}  // namespace scapre
