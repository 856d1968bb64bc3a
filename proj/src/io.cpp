#include "scapre/io.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "scapre/error.hpp"

namespace scapre {

namespace {

using json = nlohmann::json;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xFFu));
    }
}

template <typename T>
T get_le(const std::vector<std::uint8_t>& in, std::size_t offset) {
    T value = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        value |= static_cast<T>(static_cast<T>(in[offset + i]) << (8 * i));
    }
    return value;
}

void reject_unknown(const json& object, const std::set<std::string>& allowed, const std::string& where) {
    if (!object.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : object.items()) {
        (void)value;
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

std::filesystem::path resolve(const std::filesystem::path& base, const json& value, const std::string& key) {
    if (!value.is_string()) throw ConfigError("key '" + key + "' must be a path string");
    std::filesystem::path p = value.get<std::string>();
    if (p.empty()) throw ConfigError("key '" + key + "' is empty");
    return p.is_absolute() ? p.lexically_normal() : (base / p).lexically_normal();
}

double number(const json& value, const std::string& key) {
    if (!value.is_number()) throw ConfigError("key '" + key + "' must be a number");
    return value.get<double>();
}

std::string text(const json& value, const std::string& key) {
    if (!value.is_string()) throw ConfigError("key '" + key + "' must be a string");
    return value.get<std::string>();
}

TargetMode parse_target_mode(const std::string& s) {
    if (s == "zero-target") return TargetMode::zero_target;
    if (s == "substitute-target") return TargetMode::substitute_target;
    throw ConfigError("unknown target_mode '" + s + "'");
}

SolvePath parse_solve_path(const std::string& s) {
    if (s == "spectral") return SolvePath::spectral;
    if (s == "kronecker") return SolvePath::kronecker;
    throw ConfigError("unknown solve_path '" + s + "'");
}

std::vector<int> read_labels(const std::filesystem::path& path) {
    const Matrix m = read_smat(path).to_eigen();
    if (m.cols() != 1) throw ConfigError(path.string() + ": label file must have one column");
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const double v = m(i, 0);
        if (v != std::floor(v) || v < 0.0 || v > 1e9) {
            throw ConfigError(path.string() + ": labels must be nonnegative integers");
        }
        labels.push_back(static_cast<int>(v));
    }
    return labels;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json vector_json(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(finite_or_null(x));
    return out;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

std::vector<std::uint8_t> encode_smat(const DenseMatrix& m) {
    std::vector<std::uint8_t> out;
    out.reserve(smat_header_bytes + 8 * m.data().size());
    for (char c : {'S', 'M', 'A', 'T'}) out.push_back(static_cast<std::uint8_t>(c));
    put_le<std::uint16_t>(out, smat_version);
    put_le<std::uint16_t>(out, 0);
    put_le<std::uint64_t>(out, m.rows());
    put_le<std::uint64_t>(out, m.cols());
    for (double x : m.data()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(x));
    return out;
}

DenseMatrix decode_smat(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < smat_header_bytes) {
        throw IoError("truncated SMAT header: expected at least " + std::to_string(smat_header_bytes) +
                      " bytes, got " + std::to_string(bytes.size()));
    }
    if (bytes[0] != 'S' || bytes[1] != 'M' || bytes[2] != 'A' || bytes[3] != 'T') {
        throw IoError("not a SMAT file (bad magic)");
    }
    const auto version = get_le<std::uint16_t>(bytes, 4);
    const auto flags = get_le<std::uint16_t>(bytes, 6);
    if (version != smat_version) throw IoError("unsupported SMAT version " + std::to_string(version));
    if (flags != 0) throw IoError("unsupported SMAT flags " + std::to_string(flags));
    const auto rows = get_le<std::uint64_t>(bytes, 8);
    const auto cols = get_le<std::uint64_t>(bytes, 16);
    if (rows == 0 || cols == 0 || rows > (std::uint64_t{1} << 40) / cols) {
        throw IoError("invalid SMAT dimensions " + std::to_string(rows) + "x" + std::to_string(cols));
    }
    const std::uint64_t expected = smat_header_bytes + 8 * rows * cols;
    if (bytes.size() != expected) {
        throw IoError("SMAT size mismatch: expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(bytes.size()));
    }
    std::vector<double> data(rows * cols);
    for (std::size_t i = 0; i < data.size(); ++i) {
        data[i] = std::bit_cast<double>(get_le<std::uint64_t>(bytes, smat_header_bytes + 8 * i));
    }
    try {
        return DenseMatrix(rows, cols, std::move(data));
    } catch (const ConfigError& e) {
        throw IoError(std::string("SMAT payload rejected: ") + e.what());
    }
}

void write_smat(const std::filesystem::path& path, const DenseMatrix& m) {
    const auto bytes = encode_smat(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

DenseMatrix read_smat(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_smat(bytes);
    } catch (const IoError& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

DenseMatrix smat_roundtrip(const std::filesystem::path& path, const DenseMatrix& m) {
    write_smat(path, m);
    return read_smat(path);
}

RunManifest parse_manifest(const std::string& content, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(content);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
    }
    reject_unknown(doc,
                   {"lambda", "beta", "interpolation_mode", "target_mode", "solve_path", "seed", "inputs",
                    "outputs"},
                   "manifest");

    RunManifest out;
    auto& cfg = out.config;
    if (doc.contains("lambda")) {
        const auto& l = doc["lambda"];
        if (l.is_number()) {
            cfg.lambda = {LambdaRule::Kind::absolute, l.get<double>()};
        } else if (l.is_object()) {
            reject_unknown(l, {"relative"}, "lambda");
            if (!l.contains("relative")) throw ConfigError("key 'lambda' object needs 'relative'");
            cfg.lambda = {LambdaRule::Kind::relative, number(l["relative"], "lambda.relative")};
        } else {
            throw ConfigError("key 'lambda' must be a number or {\"relative\": number}");
        }
    }
    if (doc.contains("beta")) cfg.beta = number(doc["beta"], "beta");
    if (doc.contains("interpolation_mode")) {
        cfg.interpolation = parse_interpolation_mode(text(doc["interpolation_mode"], "interpolation_mode"));
    }
    if (doc.contains("target_mode")) cfg.target_mode = parse_target_mode(text(doc["target_mode"], "target_mode"));
    if (doc.contains("solve_path")) cfg.path = parse_solve_path(text(doc["solve_path"], "solve_path"));
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned()) throw ConfigError("key 'seed' must be a nonnegative integer");
        out.seed = doc["seed"].get<std::uint64_t>();
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    }

    if (!doc.contains("inputs")) throw ConfigError("manifest is missing key 'inputs'");
    if (!doc.contains("outputs")) throw ConfigError("manifest is missing key 'outputs'");
    const auto& in = doc["inputs"];
    reject_unknown(in,
                   {"w0", "concepts", "substitutes", "v_star", "context", "context_labels", "samples",
                    "sample_labels", "preserved"},
                   "inputs");
    for (const char* key : {"w0", "concepts", "samples", "sample_labels"}) {
        if (!in.contains(key)) throw ConfigError(std::string("inputs is missing key '") + key + "'");
    }
    auto& paths = out.inputs;
    paths.w0 = resolve(base_dir, in["w0"], "inputs.w0");
    paths.concepts = resolve(base_dir, in["concepts"], "inputs.concepts");
    paths.samples = resolve(base_dir, in["samples"], "inputs.samples");
    paths.sample_labels = resolve(base_dir, in["sample_labels"], "inputs.sample_labels");
    auto optional_path = [&](const char* key) -> std::optional<std::filesystem::path> {
        if (!in.contains(key)) return std::nullopt;
        return resolve(base_dir, in[key], std::string("inputs.") + key);
    };
    paths.substitutes = optional_path("substitutes");
    paths.v_star = optional_path("v_star");
    paths.context = optional_path("context");
    paths.context_labels = optional_path("context_labels");
    paths.preserved = optional_path("preserved");
    if (paths.context.has_value() != paths.context_labels.has_value()) {
        throw ConfigError("inputs.context and inputs.context_labels must be given together");
    }
    if (cfg.target_mode == TargetMode::substitute_target && !paths.substitutes && !paths.v_star) {
        throw ConfigError("substitute-target mode needs inputs.substitutes or inputs.v_star");
    }
    if (cfg.target_mode == TargetMode::zero_target && (paths.substitutes || paths.v_star)) {
        throw ConfigError("zero-target mode takes neither inputs.substitutes nor inputs.v_star");
    }

    const auto& outs = doc["outputs"];
    reject_unknown(outs, {"w_edited", "report_json", "report_csv"}, "outputs");
    for (const char* key : {"w_edited", "report_json", "report_csv"}) {
        if (!outs.contains(key)) throw ConfigError(std::string("outputs is missing key '") + key + "'");
    }
    out.outputs.w_edited = resolve(base_dir, outs["w_edited"], "outputs.w_edited");
    out.outputs.report_json = resolve(base_dir, outs["report_json"], "outputs.report_json");
    out.outputs.report_csv = resolve(base_dir, outs["report_csv"], "outputs.report_csv");
    return out;
}

RunManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_manifest(buffer.str(), std::filesystem::absolute(path).parent_path());
}

EditInputs load_edit_inputs(const RunManifest& manifest) {
    const auto& p = manifest.inputs;
    const Matrix w0 = read_smat(p.w0).to_eigen();
    ConceptMatrix concepts(read_smat(p.concepts).to_eigen());
    const Eigen::Index d_in = w0.cols();
    if (concepts.dim() != d_in) throw ConfigError("concepts must have d_in rows");
    const Eigen::Index m = concepts.count();

    EraseSpec spec = manifest.config.target_mode == TargetMode::zero_target
                         ? EraseSpec::zero_target(concepts, w0.rows())
                         : (p.substitutes ? EraseSpec::substitute(concepts, read_smat(*p.substitutes).to_eigen())
                                          : EraseSpec{concepts, read_smat(*p.v_star).to_eigen(),
                                                      TargetMode::substitute_target, std::nullopt});
    spec.validate();

    std::vector<std::vector<Vector>> groups(static_cast<std::size_t>(m));
    if (p.context) {
        const Matrix tokens = read_smat(*p.context).to_eigen();
        const auto labels = read_labels(*p.context_labels);
        if (tokens.cols() != d_in || static_cast<std::size_t>(tokens.rows()) != labels.size()) {
            throw ConfigError("context must be tokens x d_in with one label per token");
        }
        for (std::size_t t = 0; t < labels.size(); ++t) {
            if (labels[t] < 1 || labels[t] > m) throw ConfigError("context labels must lie in 1..m");
            groups[static_cast<std::size_t>(labels[t] - 1)].push_back(tokens.row(static_cast<Eigen::Index>(t)).transpose());
        }
    } else {
        for (Eigen::Index k = 0; k < m; ++k) groups[static_cast<std::size_t>(k)].push_back(concepts.matrix().col(k));
    }

    const Matrix sample_rows = read_smat(p.samples).to_eigen();
    const auto sample_labels = read_labels(p.sample_labels);
    if (sample_rows.cols() != d_in || static_cast<std::size_t>(sample_rows.rows()) != sample_labels.size()) {
        throw ConfigError("samples must be K x d_in with one label per sample");
    }
    std::vector<ActivationSample> samples;
    for (std::size_t j = 0; j < sample_labels.size(); ++j) {
        if (sample_labels[j] > m) throw ConfigError("sample labels must lie in 0..m");
        samples.push_back({sample_rows.row(static_cast<Eigen::Index>(j)).transpose(), sample_labels[j]});
    }

    ConceptMatrix preserved = p.preserved ? ConceptMatrix(read_smat(*p.preserved).to_eigen())
                                          : ConceptMatrix::empty(d_in);
    if (preserved.dim() != d_in) throw ConfigError("preserved probes must have d_in rows");
    return EditInputs{w0, std::move(spec), ContextFeatureSet(std::move(groups)), std::move(samples),
                      std::move(preserved)};
}

std::string report_to_json(const EditReport& r, const RunManifest* manifest) {
    json cfg{
        {"lambda_rule", r.config.lambda.kind == LambdaRule::Kind::absolute ? "absolute" : "relative"},
        {"lambda_value", r.config.lambda.value},
        {"lambda_effective", r.lambda_effective},
        {"beta", r.config.beta},
        {"interpolation_mode", std::string(to_string(r.config.interpolation))},
        {"target_mode", std::string(to_string(r.config.target_mode))},
        {"solve_path", std::string(to_string(r.config.path))},
        {"sylvester_equation", "BW + WA = M"},
        {"objective", "tr(WAW^T) + tr(W^T B W) - 2 tr(W M^T)"},
    };
    if (manifest != nullptr) {
        cfg["seed"] = manifest->seed;
        const auto& in = manifest->inputs;
        json inputs{{"w0", in.w0.string()},
                    {"concepts", in.concepts.string()},
                    {"samples", in.samples.string()},
                    {"sample_labels", in.sample_labels.string()}};
        if (in.substitutes) inputs["substitutes"] = in.substitutes->string();
        if (in.v_star) inputs["v_star"] = in.v_star->string();
        if (in.context) inputs["context"] = in.context->string();
        if (in.context_labels) inputs["context_labels"] = in.context_labels->string();
        if (in.preserved) inputs["preserved"] = in.preserved->string();
        cfg["inputs"] = inputs;
        cfg["outputs"] = json{{"w_edited", manifest->outputs.w_edited.string()},
                              {"report_json", manifest->outputs.report_json.string()},
                              {"report_csv", manifest->outputs.report_csv.string()}};
    }
    json flags{{"zero_target", r.flags.zero_target},
               {"decoupler_degenerate", r.flags.decoupler_degenerate},
               {"refinement_degenerate", r.flags.refinement_degenerate},
               {"rank_deficient_k", r.flags.rank_deficient_k},
               {"pseudo_inverse", r.flags.pseudo_inverse},
               {"realization_incomplete", r.flags.realization_incomplete}};
    json doc{{"config", cfg},
             {"m", r.m},
             {"d_in", r.d_in},
             {"d_out", r.d_out},
             {"sylvester_residual", finite_or_null(r.sylvester_residual)},
             {"bures_before", finite_or_null(r.bures_before)},
             {"bures_after", finite_or_null(r.bures_after)},
             {"realization_gap", finite_or_null(r.realization_gap)},
             {"flags", flags},
             {"erasure_errors", vector_json(r.probes.erasure)},
             {"preservation_errors", vector_json(r.probes.preservation)},
             {"max_erasure_err", finite_or_null(r.max_erasure_err)},
             {"median_preserve_err", finite_or_null(r.median_preserve_err)},
             {"wall_ms", r.wall_ms},
             {"warnings", r.warnings}};
    return doc.dump(2);
}

std::vector<MethodScore> read_scores_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("score CSV is empty");
    const auto header = split_csv(line);
    const bool has_baseline = header.size() == 4 && header[3] == "baseline";
    if (header.size() < 3 || header[0] != "label" || header[1] != "unlearn" || header[2] != "quality" ||
        (header.size() == 4 && !has_baseline) || header.size() > 4) {
        throw ConfigError("score CSV header must be 'label,unlearn,quality[,baseline]'");
    }
    std::vector<MethodScore> out;
    int line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size()) {
            throw ConfigError("score CSV line " + std::to_string(line_no) + " has " +
                              std::to_string(cells.size()) + " cells");
        }
        MethodScore s;
        s.label = cells[0];
        try {
            std::size_t used = 0;
            s.unlearn = std::stod(cells[1], &used);
            if (used != cells[1].size()) throw std::invalid_argument("trailing");
            s.quality = std::stod(cells[2], &used);
            if (used != cells[2].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ConfigError("score CSV line " + std::to_string(line_no) + " has a malformed number");
        }
        if (has_baseline) {
            if (cells[3] != "0" && cells[3] != "1") {
                throw ConfigError("score CSV line " + std::to_string(line_no) + ": baseline must be 0 or 1");
            }
            s.baseline = cells[3] == "1";
        }
        out.push_back(std::move(s));
    }
    return out;
}

void write_uq_csv(std::ostream& os, const std::vector<MethodScore>& scores, const UQResult& result) {
    os << "label,unlearn,quality,uq_" << to_string(result.normalization) << '\n';
    for (std::size_t i = 0; i < scores.size(); ++i) {
        os << scores[i].label << ',' << std::setprecision(17) << scores[i].unlearn << ',' << scores[i].quality
           << ',';
        if (result.values[i]) os << *result.values[i];
        os << '\n';
    }
}

}  // namespace scapre
