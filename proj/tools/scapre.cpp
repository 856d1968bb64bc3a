// scapre: closed-form concept erasure on projection matrices.
//
// Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scapre/error.hpp"
#include "scapre/harness.hpp"
#include "scapre/informax.hpp"
#include "scapre/io.hpp"
#include "scapre/metrics.hpp"
#include "scapre/oracle.hpp"
#include "scapre/pipeline.hpp"
#include "scapre/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scapre;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_config = 2;
constexpr int exit_numerical = 3;
constexpr int exit_io = 4;

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::config: return exit_config;
        case ErrorKind::numerical: return exit_numerical;
        case ErrorKind::io: return exit_io;
    }
    return exit_numerical;
}

unsigned thread_hint() {
    const char* env = std::getenv("SCAPRE_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    try {
        const long v = std::stol(env);
        return v < 0 ? 1u : static_cast<unsigned>(v);
    } catch (const std::exception&) {
        throw ConfigError(std::string("SCAPRE_THREADS must be an integer, got '") + env + "'");
    }
}

// Output directories are created on demand.
void ensure_parent(const fs::path& path) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
}

std::ofstream open_text(const fs::path& path) {
    ensure_parent(path);
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void write_matrix(const fs::path& path, const Matrix& m) {
    ensure_parent(path);
    write_smat(path, DenseMatrix::from_eigen(m));
}

Matrix random_spd(std::mt19937_64& rng, Eigen::Index n, double shift) {
    std::normal_distribution<double> normal;
    Matrix g(n, n);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
    Matrix a = g * g.transpose() / static_cast<double>(n);
    a.diagonal().array() += shift;
    return a;
}

int run_edit_command(const fs::path& manifest_path) {
    const auto manifest = load_manifest(manifest_path);
    const auto inputs = load_edit_inputs(manifest);
    const auto result = run_edit(inputs, manifest.config);

    write_matrix(manifest.outputs.w_edited, result.w_tilde);
    open_text(manifest.outputs.report_json) << report_to_json(result.report, &manifest) << '\n';
    auto csv = open_text(manifest.outputs.report_csv);
    write_sweep_csv(csv, {sweep_row_from_report(manifest.outputs.w_edited.stem().string(), result.report)});
    for (const auto& w : result.report.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << "sylvester_residual=" << result.report.sylvester_residual
              << " max_erasure_err=" << result.report.max_erasure_err << '\n';
    return exit_ok;
}

struct SolveArgs {
    std::string b, a, m, out, path = "spectral";
};

int run_solve(const SolveArgs& args) {
    const Matrix b = read_smat(args.b).to_eigen();
    if (b.cols() != 1) throw ConfigError("--b must be a d_out x 1 column of decoupler weights");
    const Matrix a = read_smat(args.a).to_eigen();
    const Matrix m = read_smat(args.m).to_eigen();
    const Vector b_diag = b.col(0);
    if (args.path != "spectral" && args.path != "kronecker") {
        throw ConfigError("unknown --path '" + args.path + "'");
    }
    EditSolution solution;
    try {
        solution = args.path == "kronecker" ? sylvester_solve_kronecker(b_diag, a, m)
                                            : sylvester_solve_spectral(b_diag, a, m);
    } catch (const Error& e) {
        throw Error(e.kind(), e.what(), "solver");
    }
    write_matrix(args.out, solution.w_star);
    std::cout << json{{"path", std::string(to_string(solution.path))}, {"residual", solution.residual}}.dump()
              << '\n';
    return exit_ok;
}

struct MiArgs {
    std::string w, samples, labels, out;
};

int run_mi(const MiArgs& args) {
    const Matrix w = read_smat(args.w).to_eigen();
    const Matrix rows = read_smat(args.samples).to_eigen();
    const Matrix labels = read_smat(args.labels).to_eigen();
    if (labels.cols() != 1 || labels.rows() != rows.rows()) throw ConfigError("--labels must be K x 1");
    std::vector<ActivationSample> samples;
    for (Eigen::Index j = 0; j < rows.rows(); ++j) {
        samples.push_back({rows.row(j).transpose(), static_cast<int>(labels(j, 0))});
    }
    DecouplerAlpha alpha;
    try {
        alpha = build_decoupler(w, samples);
    } catch (const Error& e) {
        throw Error(e.kind(), e.what(), "informax");
    }
    if (!args.out.empty()) write_matrix(args.out, alpha.alpha);
    std::vector<double> a(alpha.alpha.data(), alpha.alpha.data() + alpha.alpha.size());
    std::vector<double> mi(alpha.mi_raw.data(), alpha.mi_raw.data() + alpha.mi_raw.size());
    std::cout << json{{"alpha", a}, {"mi", mi}, {"degenerate", alpha.degenerate}}.dump() << '\n';
    return exit_ok;
}

struct EvalArgs {
    std::string scores, norm = "sigmoid", out;
    bool include_baseline = true;
    std::vector<double> overall;
};

int run_eval(const EvalArgs& args) {
    if (!args.overall.empty()) {
        if (args.overall.size() != 2) throw ConfigError("--overall takes UNLEARN PRESERVE");
        std::cout << overall_accuracy(args.overall[0], args.overall[1]) << '\n';
        if (args.scores.empty()) return exit_ok;
    }
    if (args.scores.empty()) throw ConfigError("eval needs --scores or --overall");
    std::ifstream in(args.scores);
    if (!in) throw IoError("cannot open '" + args.scores + "'");
    const auto scores = read_scores_csv(in);
    const auto norm = parse_normalization(args.norm);
    const auto result = norm == Normalization::sigmoid ? uq_sigmoid(scores, args.include_baseline)
                        : norm == Normalization::minmax ? uq_minmax(scores)
                                                        : uq_rank(scores);
    if (args.out.empty()) {
        write_uq_csv(std::cout, scores, result);
    } else {
        auto out = open_text(args.out);
        write_uq_csv(out, scores, result);
    }
    return exit_ok;
}

struct OracleArgs {
    std::string kind = "gd";
    std::uint64_t seed = 1;
    Eigen::Index rows = 10;
    Eigen::Index cols = 8;
    int trials = 100;
};

int run_oracle(const OracleArgs& args) {
    std::mt19937_64 rng(args.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal;
    json out{{"kind", args.kind}, {"seed", args.seed}};
    bool agree = true;
    if (args.kind == "gd" || args.kind == "perturb") {
        const Matrix a = random_spd(rng, args.cols, 0.5);
        Vector b(args.rows);
        for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = unit(rng);
        Matrix m(args.rows, args.cols);
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
        const auto closed = sylvester_solve_spectral(b, a, m);
        if (args.kind == "gd") {
            const Matrix gd = gd_minimize(a, b, m);
            const double rel = relative_frobenius(gd, closed.w_star);
            agree = rel <= 1e-4;
            out["relative_difference"] = rel;
        } else {
            agree = objective_perturbation_check(closed.w_star, a, b, m, args.trials, args.seed);
        }
    } else if (args.kind == "mi") {
        int mismatches = 0;
        for (int t = 0; t < args.trials; ++t) {
            std::vector<std::pair<int, int>> pairs;
            JointCounts counts;
            const int n = 1 + static_cast<int>(unit(rng) * 200);
            for (int i = 0; i < n; ++i) {
                const int z = unit(rng) < 0.5 ? 0 : 1;
                const int y = unit(rng) < 0.5 ? 0 : 1;
                pairs.emplace_back(z, y);
                (z == 0 ? (y == 0 ? counts.n00 : counts.n01) : (y == 0 ? counts.n10 : counts.n11)) += 1;
            }
            if (mi_bruteforce(pairs) != channel_mi(counts)) ++mismatches;
        }
        agree = mismatches == 0;
        out["mismatches"] = mismatches;
    } else {
        throw ConfigError("unknown oracle kind '" + args.kind + "'");
    }
    out["agree"] = agree;
    std::cout << out.dump() << '\n';
    return agree ? exit_ok : exit_numerical;
}

struct GenArgs {
    SyntheticModelSpec spec;
    std::string out_dir;
    std::string target_mode = "substitute-target";
    double beta = 0.5;
    std::string interpolation = "paper-literal";
};

int run_gen(GenArgs args) {
    if (args.target_mode == "zero-target") {
        args.spec.target_mode = TargetMode::zero_target;
    } else if (args.target_mode != "substitute-target") {
        throw ConfigError("unknown --target-mode '" + args.target_mode + "'");
    }
    (void)parse_interpolation_mode(args.interpolation);
    const auto model = generate_model(args.spec);
    const fs::path dir(args.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());

    write_matrix(dir / "w0.smat", model.w0);
    write_matrix(dir / "concepts.smat", model.spec.c_e.matrix());
    const Eigen::Index tokens = static_cast<Eigen::Index>(model.context.token_count());
    Matrix context(tokens, args.spec.d_in);
    Matrix context_labels(tokens, 1);
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < model.context.groups().size(); ++k) {
        for (const auto& token : model.context.groups()[k]) {
            context.row(row) = token.transpose();
            context_labels(row++, 0) = static_cast<double>(k + 1);
        }
    }
    write_matrix(dir / "context.smat", context);
    write_matrix(dir / "context_labels.smat", context_labels);
    Matrix samples(static_cast<Eigen::Index>(model.samples.size()), args.spec.d_in);
    Matrix sample_labels(samples.rows(), 1);
    for (std::size_t j = 0; j < model.samples.size(); ++j) {
        samples.row(static_cast<Eigen::Index>(j)) = model.samples[j].s.transpose();
        sample_labels(static_cast<Eigen::Index>(j), 0) = model.samples[j].label;
    }
    write_matrix(dir / "samples.smat", samples);
    write_matrix(dir / "sample_labels.smat", sample_labels);

    json inputs{{"w0", "w0.smat"},
                {"concepts", "concepts.smat"},
                {"context", "context.smat"},
                {"context_labels", "context_labels.smat"},
                {"samples", "samples.smat"},
                {"sample_labels", "sample_labels.smat"}};
    if (model.spec.mode == TargetMode::substitute_target) {
        write_matrix(dir / "substitutes.smat", *model.spec.substitutes);
        inputs["substitutes"] = "substitutes.smat";
    }
    if (model.preserved.count() > 0) {
        write_matrix(dir / "preserved.smat", model.preserved.matrix());
        inputs["preserved"] = "preserved.smat";
    }
    json manifest{{"lambda", {{"relative", 0.1}}},
                  {"beta", args.beta},
                  {"interpolation_mode", args.interpolation},
                  {"target_mode", args.target_mode},
                  {"seed", args.spec.seed},
                  {"inputs", inputs},
                  {"outputs",
                   {{"w_edited", "w_edited.smat"}, {"report_json", "report.json"}, {"report_csv", "report.csv"}}}};
    open_text(dir / "manifest.json") << manifest.dump(2) << '\n';
    std::cout << (dir / "manifest.json").string() << '\n';
    return exit_ok;
}

struct SweepArgs {
    SyntheticModelSpec spec;
    std::vector<Eigen::Index> counts{5, 10, 25, 50};
    double beta = 0.5;
    std::string interpolation = "paper-literal";
    std::string out;
};

int run_sweep(SweepArgs args) {
    EditConfig cfg;
    cfg.beta = args.beta;
    cfg.interpolation = parse_interpolation_mode(args.interpolation);
    const auto rows = scaling_sweep(args.spec, args.counts, cfg, thread_hint());
    int failures = 0;
    for (const auto& r : rows) {
        if (r.error) {
            ++failures;
            std::cerr << r.run_id << ": " << *r.error << '\n';
        }
    }
    if (args.out.empty()) {
        write_sweep_csv(std::cout, rows);
    } else {
        auto out = open_text(args.out);
        write_sweep_csv(out, rows);
    }
    return failures == 0 ? exit_ok : exit_numerical;
}

void add_model_options(CLI::App* cmd, SyntheticModelSpec& spec) {
    cmd->add_option("--d-in", spec.d_in, "input dimension")->check(CLI::PositiveNumber);
    cmd->add_option("--d-out", spec.d_out, "output dimension")->check(CLI::PositiveNumber);
    cmd->add_option("--preserved", spec.m_preserved, "preserved probe concepts")->check(CLI::NonNegativeNumber);
    cmd->add_option("--similarity", spec.similarity, "pairwise cosine inside a group");
    cmd->add_option("--group-size", spec.group_size, "concepts per similarity group");
    cmd->add_option("--noise", spec.noise_scale, "token noise relative to embedding norm");
    cmd->add_option("--embedding-scale", spec.embedding_scale, "concept embedding norm");
    cmd->add_option("--tokens", spec.tokens_per_concept, "context tokens per concept");
    cmd->add_option("--seed", spec.seed, "generator seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Closed-form concept erasure for projection matrices"};
    app.require_subcommand(1);

    std::string manifest_path;
    auto* edit = app.add_subcommand("edit", "run one edit described by a JSON manifest");
    edit->add_option("manifest", manifest_path, "manifest path")->required();

    SolveArgs solve_args;
    auto* solve = app.add_subcommand("solve", "solve diag(b) W + W A = M");
    solve->add_option("--b", solve_args.b, "d_out x 1 decoupler weights (SMAT)")->required();
    solve->add_option("--a", solve_args.a, "d_in x d_in stabilizer (SMAT)")->required();
    solve->add_option("--m", solve_args.m, "d_out x d_in right-hand side (SMAT)")->required();
    solve->add_option("--out", solve_args.out, "solution path (SMAT)")->required();
    solve->add_option("--path", solve_args.path, "spectral or kronecker");

    MiArgs mi_args;
    auto* mi = app.add_subcommand("mi", "informax decoupler weights");
    mi->add_option("--w", mi_args.w, "weights (SMAT)")->required();
    mi->add_option("--samples", mi_args.samples, "K x d_in samples (SMAT)")->required();
    mi->add_option("--labels", mi_args.labels, "K x 1 labels (SMAT)")->required();
    mi->add_option("--out", mi_args.out, "alpha output (SMAT)");

    EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "UQ metrics and overall accuracy");
    eval->add_option("--scores", eval_args.scores, "CSV: label,unlearn,quality[,baseline]");
    eval->add_option("--norm", eval_args.norm, "sigmoid, minmax or rank");
    eval->add_flag("--exclude-baseline{false}", eval_args.include_baseline,
                   "leave baseline rows out of the sigmoid statistics");
    eval->add_option("--overall", eval_args.overall, "UNLEARN PRESERVE accuracies")->expected(2);
    eval->add_option("--out", eval_args.out, "output CSV");

    OracleArgs oracle_args;
    auto* oracle = app.add_subcommand("oracle", "brute-force cross-checks on random instances");
    oracle->add_option("kind", oracle_args.kind, "gd, perturb or mi");
    oracle->add_option("--seed", oracle_args.seed);
    oracle->add_option("--rows", oracle_args.rows)->check(CLI::PositiveNumber);
    oracle->add_option("--cols", oracle_args.cols)->check(CLI::PositiveNumber);
    oracle->add_option("--trials", oracle_args.trials)->check(CLI::PositiveNumber);

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen", "write a synthetic model and manifest");
    gen->add_option("--out-dir", gen_args.out_dir, "output directory")->required();
    gen->add_option("--targets", gen_args.spec.m_targets, "target concepts")->check(CLI::NonNegativeNumber);
    gen->add_option("--target-mode", gen_args.target_mode, "zero-target or substitute-target");
    gen->add_option("--beta", gen_args.beta);
    gen->add_option("--interpolation", gen_args.interpolation, "paper-literal or bw-geodesic");
    add_model_options(gen, gen_args.spec);

    SweepArgs sweep_args;
    sweep_args.spec.d_in = 768;
    sweep_args.spec.d_out = 320;
    sweep_args.spec.m_preserved = 20;
    auto* sweep = app.add_subcommand("sweep", "scaling sweep over concept counts (CSV)");
    sweep->add_option("--counts", sweep_args.counts, "ascending concept counts")->delimiter(',');
    sweep->add_option("--beta", sweep_args.beta);
    sweep->add_option("--interpolation", sweep_args.interpolation);
    sweep->add_option("--out", sweep_args.out, "output CSV (stdout if omitted)");
    add_model_options(sweep, sweep_args.spec);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_config;
    }

    try {
        if (*edit) return run_edit_command(manifest_path);
        if (*solve) return run_solve(solve_args);
        if (*mi) return run_mi(mi_args);
        if (*eval) return run_eval(eval_args);
        if (*oracle) return run_oracle(oracle_args);
        if (*gen) return run_gen(gen_args);
        if (*sweep) return run_sweep(sweep_args);
    } catch (const Error& e) {
        std::cerr << "error";
        if (!e.stage().empty()) std::cerr << " [stage " << e.stage() << "]";
        std::cerr << ": " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numerical;
    }
    return exit_config;
}
