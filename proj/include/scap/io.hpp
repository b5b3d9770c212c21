#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "scap/analysis.hpp"
#include "scap/calib.hpp"
#include "scap/model.hpp"

namespace scap {

// ---------------------------------------------------------------------------
// Weight container
//
// Layout: 8-byte magic "SCAPWTS1", u64 little-endian manifest length, the
// manifest as UTF-8 JSON with sorted keys, then the blob of little-endian f32.
// Manifest: {"format_version": 1, "config": {...},
//            "tensors": {name: {"shape": [...], "dtype": "f32",
//                               "byte_offset": n, "byte_len": n}}}

inline constexpr char kContainerMagic[8] = {'S', 'C', 'A', 'P', 'W', 'T', 'S', '1'};
inline constexpr int kContainerVersion = 1;

struct StoredTensor {
    std::vector<std::size_t> shape;
    std::vector<float> values;

    bool operator==(const StoredTensor&) const = default;
};

struct Container {
    nlohmann::json config = nlohmann::json::object();
    std::map<std::string, StoredTensor> tensors;
};

std::string encode_container(const Container& c);
/// Throws FormatError with a code naming what is wrong with the bytes.
Container decode_container(std::string_view bytes);

/// Glues a manifest text and blob together with the container framing.
std::string frame_container(std::string_view manifest, std::string_view blob);

Container model_to_container(const Model& model);
Model model_from_container(const Container& c);

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

nlohmann::json config_to_json(const BlockConfig& config);
BlockConfig config_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Reports

inline constexpr const char* kReportSchema = "scap-report/1";

struct Report {
    std::string command;
    nlohmann::json config = nlohmann::json::object();  // effective run configuration
    std::vector<LayerCalibration> calibration;
    std::map<std::string, PruneSpec> specs;  // keyed by hook id
    nlohmann::json results = nlohmann::json::object();  // command-specific payload

    bool operator==(const Report&) const = default;
};

nlohmann::json report_to_json(const Report& report);
/// Throws FormatError(schema_violation) or FormatError(unsupported_version).
Report report_from_json(const nlohmann::json& j);

/// Canonical text: sorted keys, two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& j);

void save_report(const Report& report, const std::filesystem::path& path);
Report load_report(const std::filesystem::path& path);

nlohmann::json to_json(const LayerCalibration& layer);
nlohmann::json to_json(const SparsityReport& report);
nlohmann::json to_json(const SweepResult& sweep);
nlohmann::json to_json(const AblationResult& ablation);
nlohmann::json to_json(const OverlapCurve& curve);

/// Writes the whole string or throws FormatError(io).
void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace scap
