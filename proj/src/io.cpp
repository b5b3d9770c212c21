#include "scap/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "scap/error.hpp"

namespace scap {

using nlohmann::json;

namespace {

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::string_view in) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(in[i]);
    return v;
}

void put_f32(std::string& out, float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

float get_f32(const char* p) {
    std::uint32_t bits = 0;
    for (int i = 3; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
    return std::bit_cast<float>(bits);
}

[[noreturn]] void malformed(const std::string& what) {
    throw FormatError(FormatErrc::malformed_manifest, what);
}

[[noreturn]] void violation(const std::string& what) {
    throw FormatError(FormatErrc::schema_violation, what);
}

std::uint64_t element_count(const std::vector<std::size_t>& shape) {
    std::uint64_t n = 1;
    for (auto s : shape) n *= s;
    return n;
}

StoredTensor stored(const DenseMatrix& m) {
    return {{m.rows(), m.cols()}, std::vector<float>(m.data().begin(), m.data().end())};
}

StoredTensor stored(const DenseVector& v) {
    return {{v.len()}, std::vector<float>(v.data().begin(), v.data().end())};
}

const StoredTensor& need(const Container& c, const std::string& name, std::size_t rank) {
    auto it = c.tensors.find(name);
    if (it == c.tensors.end()) malformed("missing tensor '" + name + "'");
    if (it->second.shape.size() != rank) malformed("tensor '" + name + "' has the wrong rank");
    return it->second;
}

DenseMatrix matrix(const Container& c, const std::string& name) {
    const auto& t = need(c, name, 2);
    return DenseMatrix(t.shape[0], t.shape[1], t.values);
}

DenseVector vector_of(const Container& c, const std::string& name) {
    const auto& t = need(c, name, 1);
    DenseVector v(t.shape[0]);
    std::copy(t.values.begin(), t.values.end(), v.data().begin());
    return v;
}

// Typed field access for report validation.
const json& field(const json& j, const char* key, json::value_t type, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) violation(where + ": missing '" + key + "'");
    const json& v = j.at(key);
    const bool ok = type == json::value_t::number_float ? v.is_number()
                    : type == json::value_t::number_unsigned
                        ? v.is_number_unsigned()
                        : v.type() == type;
    if (!ok) violation(where + ": '" + key + "' has the wrong type");
    return v;
}

double number(const json& j, const char* key, const std::string& where) {
    return field(j, key, json::value_t::number_float, where).get<double>();
}

std::uint64_t count(const json& j, const char* key, const std::string& where) {
    return field(j, key, json::value_t::number_unsigned, where).get<std::uint64_t>();
}

std::string text(const json& j, const char* key, const std::string& where) {
    return field(j, key, json::value_t::string, where).get<std::string>();
}

LayerCalibration layer_from_json(const json& j) {
    const std::string where = "calibration entry";
    LayerCalibration l;
    l.layer_id = text(j, "layer_id", where);
    l.seen_count = count(j, "seen_count", where);
    l.seed = count(j, "seed", where);
    for (const auto& p : field(j, "tau_by_sparsity", json::value_t::array, where)) {
        l.tau_by_sparsity.emplace_back(number(p, "sparsity", where), number(p, "tau", where));
    }
    const json& eta = field(j, "eta", json::value_t::object, where);
    l.eta.mean = number(eta, "mean", where);
    l.eta.median = number(eta, "median", where);
    l.eta.kde = number(eta, "kde", where);
    return l;
}

json to_json(const PruneSpec& s) {
    return {{"layer_id", s.layer_id}, {"tau", s.tau}, {"eta", s.eta},
            {"target_sparsity", s.target_sparsity}};
}

}  // namespace

std::string frame_container(std::string_view manifest, std::string_view blob) {
    std::string out(kContainerMagic, sizeof kContainerMagic);
    put_u64(out, manifest.size());
    out.append(manifest);
    out.append(blob);
    return out;
}

std::string encode_container(const Container& c) {
    json tensors = json::object();
    std::string blob;
    for (const auto& [name, t] : c.tensors) {
        if (element_count(t.shape) != t.values.size()) {
            throw ShapeError("tensor '" + name + "' shape does not match its values");
        }
        const std::uint64_t offset = blob.size();
        for (float v : t.values) put_f32(blob, v);
        tensors[name] = {{"shape", t.shape},
                         {"dtype", "f32"},
                         {"byte_offset", offset},
                         {"byte_len", blob.size() - offset}};
    }
    const json manifest = {
        {"format_version", kContainerVersion}, {"config", c.config}, {"tensors", tensors}};
    return frame_container(manifest.dump(), blob);
}

Container decode_container(std::string_view bytes) {
    constexpr std::size_t header = sizeof kContainerMagic + 8;
    if (bytes.size() < header || std::memcmp(bytes.data(), kContainerMagic, sizeof kContainerMagic) != 0) {
        malformed("not a weight container (bad magic)");
    }
    const std::uint64_t mlen = get_u64(bytes.substr(sizeof kContainerMagic, 8));
    if (mlen > bytes.size() - header) {
        throw FormatError(FormatErrc::truncated_blob, "manifest runs past the end of the file");
    }
    const std::string_view blob = bytes.substr(header + mlen);

    json manifest;
    try {
        manifest = json::parse(bytes.substr(header, mlen));
    } catch (const json::parse_error& e) {
        malformed(std::string("manifest is not valid JSON: ") + e.what());
    }
    if (!manifest.is_object()) malformed("manifest is not an object");
    if (!manifest.contains("format_version") || !manifest["format_version"].is_number_integer()) {
        malformed("manifest lacks format_version");
    }
    if (manifest["format_version"].get<long long>() != kContainerVersion) {
        throw FormatError(FormatErrc::unsupported_version,
                          "container version " + manifest["format_version"].dump());
    }
    if (!manifest.contains("tensors") || !manifest["tensors"].is_object()) {
        malformed("manifest lacks a tensors table");
    }

    Container c;
    if (manifest.contains("config")) c.config = manifest["config"];

    struct Extent {
        std::uint64_t begin, end;
        std::string name;
    };
    std::vector<Extent> extents;
    for (const auto& [name, e] : manifest["tensors"].items()) {
        if (!e.is_object() || !e.contains("shape") || !e["shape"].is_array() ||
            !e.contains("byte_offset") || !e["byte_offset"].is_number_unsigned() ||
            !e.contains("byte_len") || !e["byte_len"].is_number_unsigned() ||
            e.value("dtype", std::string{}) != "f32") {
            malformed("bad entry for tensor '" + name + "'");
        }
        StoredTensor t;
        for (const auto& s : e["shape"]) {
            if (!s.is_number_unsigned()) malformed("bad shape for tensor '" + name + "'");
            t.shape.push_back(s.get<std::size_t>());
        }
        const auto offset = e["byte_offset"].get<std::uint64_t>();
        const auto len = e["byte_len"].get<std::uint64_t>();
        if (len != 4 * element_count(t.shape)) {
            malformed("byte_len of tensor '" + name + "' does not match its shape");
        }
        if (offset > blob.size() || len > blob.size() - offset) {
            throw FormatError(FormatErrc::truncated_blob, "tensor '" + name + "' runs past the blob");
        }
        extents.push_back({offset, offset + len, name});
        t.values.resize(len / 4);
        for (std::size_t i = 0; i < t.values.size(); ++i) {
            t.values[i] = get_f32(blob.data() + offset + 4 * i);
            if (!std::isfinite(t.values[i])) {
                throw FormatError(FormatErrc::bad_data, "tensor '" + name + "' holds NaN or Inf");
            }
        }
        c.tensors.emplace(name, std::move(t));
    }
    std::sort(extents.begin(), extents.end(),
              [](const Extent& a, const Extent& b) { return a.begin < b.begin; });
    for (std::size_t i = 1; i < extents.size(); ++i) {
        if (extents[i].begin < extents[i - 1].end) {
            throw FormatError(FormatErrc::offset_overlap,
                              "tensors '" + extents[i - 1].name + "' and '" + extents[i].name + "' overlap");
        }
    }
    return c;
}

json config_to_json(const BlockConfig& config) {
    return {{"ffn", to_string(config.ffn_kind)}, {"d_model", config.d_model},
            {"d_hidden", config.d_hidden},       {"n_blocks", config.n_blocks},
            {"residual", config.residual},       {"rmsnorm", config.rmsnorm},
            {"up_bias_offset", config.up_bias_offset}, {"init_gain", config.init_gain}};
}

BlockConfig config_from_json(const json& j) {
    BlockConfig c;
    try {
        c.ffn_kind = parse_ffn_kind(j.at("ffn").get<std::string>());
        c.d_model = j.at("d_model").get<std::size_t>();
        c.d_hidden = j.at("d_hidden").get<std::size_t>();
        c.n_blocks = j.at("n_blocks").get<std::size_t>();
        c.residual = j.at("residual").get<bool>();
        c.rmsnorm = j.at("rmsnorm").get<bool>();
        c.up_bias_offset = j.at("up_bias_offset").get<double>();
        c.init_gain = j.at("init_gain").get<double>();
    } catch (const json::exception& e) {
        malformed(std::string("bad model config: ") + e.what());
    } catch (const DomainError& e) {
        malformed(std::string("bad model config: ") + e.what());
    }
    return c;
}

Container model_to_container(const Model& model) {
    Container c;
    c.config = config_to_json(model.config());
    for (std::size_t b = 0; b < model.blocks().size(); ++b) {
        const auto& block = model.blocks()[b];
        const std::string p = "block" + std::to_string(b) + ".";
        if (const auto* w = std::get_if<SwiGluWeights>(&block.ffn)) {
            c.tensors[p + "w_gate"] = stored(w->w_gate);
            c.tensors[p + "w_up"] = stored(w->w_up);
            c.tensors[p + "w_down"] = stored(w->w_down);
        } else {
            const auto& g = std::get<GeluMlpWeights>(block.ffn);
            c.tensors[p + "w_up"] = stored(g.w_up);
            c.tensors[p + "b_up"] = stored(g.b_up);
            c.tensors[p + "w_down"] = stored(g.w_down);
            c.tensors[p + "b_down"] = stored(g.b_down);
        }
        if (block.norm_gain.len() > 0) c.tensors[p + "norm_gain"] = stored(block.norm_gain);
    }
    return c;
}

Model model_from_container(const Container& c) {
    const BlockConfig config = config_from_json(c.config);
    std::vector<Block> blocks;
    try {
        for (std::size_t b = 0; b < config.n_blocks; ++b) {
            const std::string p = "block" + std::to_string(b) + ".";
            Block block;
            if (config.ffn_kind == FfnKind::SwiGlu) {
                block.ffn = SwiGluWeights{matrix(c, p + "w_gate"), matrix(c, p + "w_up"),
                                          matrix(c, p + "w_down")};
            } else {
                block.ffn = GeluMlpWeights{matrix(c, p + "w_up"), vector_of(c, p + "b_up"),
                                           matrix(c, p + "w_down"), vector_of(c, p + "b_down")};
            }
            if (config.rmsnorm) block.norm_gain = vector_of(c, p + "norm_gain");
            blocks.push_back(std::move(block));
        }
        return Model(config, std::move(blocks));
    } catch (const ShapeError& e) {
        malformed(std::string("weights do not fit the config: ") + e.what());
    }
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(FormatErrc::io, "cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw FormatError(FormatErrc::io, "failed writing '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(FormatErrc::io, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw FormatError(FormatErrc::io, "failed reading '" + path.string() + "'");
    return ss.str();
}

void save_model(const Model& model, const std::filesystem::path& path) {
    write_file(path, encode_container(model_to_container(model)));
}

Model load_model(const std::filesystem::path& path) {
    return model_from_container(decode_container(read_file(path)));
}

std::string dump_json(const json& j) {
    return j.dump(2) + "\n";
}

json to_json(const LayerCalibration& l) {
    json taus = json::array();
    for (const auto& [s, tau] : l.tau_by_sparsity) taus.push_back({{"sparsity", s}, {"tau", tau}});
    return {{"layer_id", l.layer_id},
            {"seen_count", l.seen_count},
            {"tau_by_sparsity", taus},
            {"eta", {{"mean", l.eta.mean}, {"median", l.eta.median}, {"kde", l.eta.kde}}},
            {"seed", l.seed}};
}

json report_to_json(const Report& r) {
    json cal = json::array();
    for (const auto& l : r.calibration) cal.push_back(to_json(l));
    json specs = json::object();
    for (const auto& [id, s] : r.specs) specs[id] = to_json(s);
    return {{"schema", kReportSchema}, {"command", r.command}, {"config", r.config},
            {"calibration", cal},      {"specs", specs},       {"results", r.results}};
}

Report report_from_json(const json& j) {
    const std::string where = "report";
    if (!j.is_object()) violation("report is not a JSON object");
    const std::string schema = text(j, "schema", where);
    if (schema != kReportSchema) {
        if (schema.rfind("scap-report/", 0) == 0) {
            throw FormatError(FormatErrc::unsupported_version, "report schema '" + schema + "'");
        }
        violation("unknown report schema '" + schema + "'");
    }
    Report r;
    r.command = text(j, "command", where);
    r.config = field(j, "config", json::value_t::object, where);
    r.results = field(j, "results", json::value_t::object, where);
    for (const auto& l : field(j, "calibration", json::value_t::array, where)) {
        r.calibration.push_back(layer_from_json(l));
    }
    for (const auto& [id, s] : field(j, "specs", json::value_t::object, where).items()) {
        const std::string w = "spec '" + id + "'";
        PruneSpec spec;
        spec.layer_id = text(s, "layer_id", w);
        spec.tau = number(s, "tau", w);
        spec.eta = number(s, "eta", w);
        spec.target_sparsity = number(s, "target_sparsity", w);
        r.specs.emplace(id, std::move(spec));
    }
    return r;
}

void save_report(const Report& report, const std::filesystem::path& path) {
    write_file(path, dump_json(report_to_json(report)));
}

Report load_report(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        violation(std::string("report is not valid JSON: ") + e.what());
    }
    return report_from_json(j);
}

json to_json(const SparsityReport& r) {
    json hooks = json::array();
    for (const auto& h : r.hooks) {
        hooks.push_back({{"hook", h.hook.id()},
                         {"target_sparsity", h.target_sparsity},
                         {"observed_sparsity", h.observed_sparsity},
                         {"pruned", h.tally.pruned},
                         {"total", h.tally.total}});
    }
    return {{"hooks", hooks},
            {"up_gate", {{"target", r.up_gate_target}, {"observed", r.up_gate_observed}}},
            {"down", {{"target", r.down_target}, {"observed", r.down_observed}}},
            {"ffn_sparsity", r.ffn_sparsity},
            {"macs_ratio", r.macs_ratio},
            {"macs", r.ops.macs},
            {"dense_macs", r.ops.dense_macs},
            {"sample_count", r.sample_count}};
}

json to_json(const SweepResult& sweep) {
    json entries = json::array();
    for (const auto& e : sweep.entries) {
        entries.push_back({{"target_up_gate", e.target_up_gate},
                           {"target_down", e.target_down},
                           {"report", to_json(e.report)},
                           {"reconstruction_error", e.reconstruction_error},
                           {"quality", e.quality}});
    }
    return {{"entries", entries}, {"dominant", sweep.dominant}};
}

json to_json(const AblationResult& ablation) {
    json rows = json::array();
    for (const auto& r : ablation.rows) {
        rows.push_back({{"target", r.target},
                        {"observed_with", r.observed_with},
                        {"observed_without", r.observed_without},
                        {"err_with", r.err_with},
                        {"err_without", r.err_without},
                        {"eta", r.eta}});
    }
    return {{"rows", rows}};
}

json to_json(const OverlapCurve& curve) {
    json points = json::array();
    for (std::size_t i = 0; i < curve.batch_sizes.size(); ++i) {
        points.push_back({{"batch_size", curve.batch_sizes[i]},
                          {"overlap_sparsity", curve.overlap_sparsity[i]}});
    }
    return {{"points", points}, {"per_vector_sparsity", curve.per_vector_sparsity}};
}

}  // namespace scap
