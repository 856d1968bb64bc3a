#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "scapre/matkernel.hpp"
#include "scapre/metrics.hpp"
#include "scapre/pipeline.hpp"

namespace scapre {

// SMAT layout (all little-endian):
//   0  char[4]  "SMAT"
//   4  u16      version = 1
//   6  u16      flags = 0
//   8  u64      rows
//   16 u64      cols
//   24 f64[rows*cols] row-major payload
inline constexpr std::uint16_t smat_version = 1;
inline constexpr std::size_t smat_header_bytes = 24;

std::vector<std::uint8_t> encode_smat(const DenseMatrix& m);
DenseMatrix decode_smat(const std::vector<std::uint8_t>& bytes);

void write_smat(const std::filesystem::path& path, const DenseMatrix& m);
DenseMatrix read_smat(const std::filesystem::path& path);

/// Writes m and reads it back.
DenseMatrix smat_roundtrip(const std::filesystem::path& path, const DenseMatrix& m);

struct ManifestInputs {
    std::filesystem::path w0;
    std::filesystem::path concepts;        // d_in x m
    std::optional<std::filesystem::path> substitutes;  // d_in x m
    std::optional<std::filesystem::path> v_star;       // d_out x m
    std::optional<std::filesystem::path> context;         // tokens x d_in
    std::optional<std::filesystem::path> context_labels;  // tokens x 1, values 1..m
    std::filesystem::path samples;         // K x d_in
    std::filesystem::path sample_labels;   // K x 1, values 0..m
    std::optional<std::filesystem::path> preserved;       // d_in x p
};

struct ManifestOutputs {
    std::filesystem::path w_edited;
    std::filesystem::path report_json;
    std::filesystem::path report_csv;
};

struct RunManifest {
    EditConfig config;
    std::uint64_t seed = 0;
    ManifestInputs inputs;
    ManifestOutputs outputs;
};

/// Parses a manifest; relative paths resolve against the manifest's directory.
/// Unknown keys and malformed values raise ConfigError naming the key.
RunManifest parse_manifest(const std::string& text, const std::filesystem::path& base_dir);
RunManifest load_manifest(const std::filesystem::path& path);

/// Loads every input file and assembles the pipeline inputs.
EditInputs load_edit_inputs(const RunManifest& manifest);

std::string report_to_json(const EditReport& report, const RunManifest* manifest = nullptr);

/// CSV with header `label,unlearn,quality[,baseline]`.
std::vector<MethodScore> read_scores_csv(std::istream& is);
void write_uq_csv(std::ostream& os, const std::vector<MethodScore>& scores, const UQResult& result);

}  // namespace scapre
