#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "doctest.h"
#include "scap/error.hpp"
#include "scap/io.hpp"

using namespace scap;
using nlohmann::json;

namespace {

FormatErrc decode_error(std::string_view bytes) {
    try {
        decode_container(bytes);
    } catch (const FormatError& e) {
        return e.code();
    }
    FAIL("decode succeeded");
    return FormatErrc::io;
}

FormatErrc report_error(const json& j) {
    try {
        report_from_json(j);
    } catch (const FormatError& e) {
        return e.code();
    }
    FAIL("report accepted");
    return FormatErrc::io;
}

std::string floats(std::initializer_list<float> v) {
    std::string out(v.size() * 4, '\0');
    std::memcpy(out.data(), std::data(v), out.size());
    return out;
}

json tensor_entry(std::vector<std::size_t> shape, std::size_t offset, std::size_t len) {
    return {{"shape", shape}, {"dtype", "f32"}, {"byte_offset", offset}, {"byte_len", len}};
}

json manifest(json tensors) {
    return {{"format_version", 1}, {"config", json::object()}, {"tensors", std::move(tensors)}};
}

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("scap_test_" + name);
}

bool bitwise_equal(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() &&
           std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(float)) == 0;
}

Model swiglu(std::size_t d, std::size_t h, std::size_t blocks, bool norm) {
    BlockConfig c;
    c.d_model = d;
    c.d_hidden = h;
    c.n_blocks = blocks;
    c.rmsnorm = norm;
    c.residual = norm;
    return init_weights(c, 31);
}

}  // namespace

TEST_CASE("save then load gives bitwise-equal weights") {
    for (auto kind : {FfnKind::SwiGlu, FfnKind::GeluMlp}) {
        BlockConfig c;
        c.ffn_kind = kind;
        c.d_model = 12;
        c.d_hidden = 20;
        c.n_blocks = 2;
        c.rmsnorm = true;
        c.up_bias_offset = 0.75;
        const auto m = init_weights(c, 5);
        const auto path = temp_path(std::string("roundtrip_") + to_string(kind) + ".scapw");
        save_model(m, path);
        const auto back = load_model(path);
        CHECK(back == m);
        CHECK(back.config() == c);
        for (std::size_t i = 0; i < 2; ++i) {
            std::visit(
                [&](const auto& w) {
                    using W = std::decay_t<decltype(w)>;
                    const auto& o = std::get<W>(back.blocks()[i].ffn);
                    CHECK(bitwise_equal(w.w_up, o.w_up));
                    CHECK(bitwise_equal(w.w_down, o.w_down));
                },
                m.blocks()[i].ffn);
        }
        CHECK(encode_container(model_to_container(back)) == read_file(path));
        std::filesystem::remove(path);
    }
}

TEST_CASE("one-block SwiGLU blob size is four bytes per weight") {
    const auto bytes = encode_container(model_to_container(swiglu(8, 16, 1, false)));
    std::uint64_t manifest_len = 0;
    for (int i = 0; i < 8; ++i) manifest_len |= std::uint64_t(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
    CHECK(bytes.size() == 16 + manifest_len + 4 * (8 * 16 * 2 + 16 * 8));
    CHECK(bytes.compare(0, 8, "SCAPWTS1") == 0);
}

TEST_CASE("container encoding is deterministic and sorted") {
    const auto m = swiglu(8, 16, 2, true);
    const auto a = encode_container(model_to_container(m));
    CHECK(a == encode_container(model_to_container(swiglu(8, 16, 2, true))));
    const auto c = decode_container(a);
    CHECK(c.tensors.size() == 8);
    CHECK(c.tensors.count("block1.norm_gain") == 1);
    CHECK(c.tensors.at("block0.w_gate").shape == std::vector<std::size_t>{8, 16});
}

TEST_CASE("overlapping offsets are rejected") {
    const auto blob = floats({1, 2, 3, 4});
    const auto m = manifest({{"a", tensor_entry({2}, 0, 8)}, {"b", tensor_entry({2}, 4, 8)}});
    CHECK(decode_error(frame_container(m.dump(), blob)) == FormatErrc::offset_overlap);
    const auto ok = manifest({{"a", tensor_entry({2}, 0, 8)}, {"b", tensor_entry({2}, 8, 8)}});
    CHECK(decode_container(frame_container(ok.dump(), blob)).tensors.at("b").values == std::vector<float>{3, 4});
}

TEST_CASE("tensors past the blob are rejected as truncated") {
    const auto m = manifest({{"a", tensor_entry({3}, 0, 12)}});
    CHECK(decode_error(frame_container(m.dump(), floats({1, 2}))) == FormatErrc::truncated_blob);
    const auto full = frame_container(m.dump(), floats({1, 2, 3}));
    CHECK(decode_error(std::string_view(full).substr(0, 20)) == FormatErrc::truncated_blob);
}

TEST_CASE("malformed manifests have their own error") {
    const auto blob = floats({1, 2});
    CHECK(decode_error(frame_container("{not json", blob)) == FormatErrc::malformed_manifest);
    CHECK(decode_error(frame_container(manifest({{"a", tensor_entry({2}, 0, 4)}}).dump(), blob)) ==
          FormatErrc::malformed_manifest);
    auto bad_dtype = manifest({{"a", tensor_entry({2}, 0, 8)}});
    bad_dtype["tensors"]["a"]["dtype"] = "f16";
    CHECK(decode_error(frame_container(bad_dtype.dump(), blob)) == FormatErrc::malformed_manifest);
    json no_tensors = {{"format_version", 1}, {"config", json::object()}};
    CHECK(decode_error(frame_container(no_tensors.dump(), blob)) == FormatErrc::malformed_manifest);
    CHECK(decode_error("NOTSCAP!xxxxxxxx") == FormatErrc::malformed_manifest);
}

TEST_CASE("non-finite weights are rejected") {
    const auto m = manifest({{"a", tensor_entry({2}, 0, 8)}});
    CHECK(decode_error(frame_container(m.dump(), floats({1, std::numeric_limits<float>::quiet_NaN()}))) ==
          FormatErrc::bad_data);
    CHECK(decode_error(frame_container(m.dump(), floats({std::numeric_limits<float>::infinity(), 1}))) ==
          FormatErrc::bad_data);
}

TEST_CASE("unknown container version is rejected") {
    auto m = manifest({{"a", tensor_entry({1}, 0, 4)}});
    m["format_version"] = 2;
    CHECK(decode_error(frame_container(m.dump(), floats({1}))) == FormatErrc::unsupported_version);
}

TEST_CASE("container missing a weight cannot become a model") {
    auto c = model_to_container(swiglu(4, 8, 1, false));
    c.tensors.erase("block0.w_up");
    CHECK_THROWS_AS(model_from_container(c), FormatError);
}

TEST_CASE("empty report round-trips") {
    const Report r;
    const auto back = report_from_json(json::parse(dump_json(report_to_json(r))));
    CHECK(back == r);
    CHECK(report_to_json(r)["schema"] == kReportSchema);
}

TEST_CASE("report with three hooks is byte-identical across saves") {
    Report r;
    r.command = "calibrate";
    r.config = {{"seed", 7}, {"d_model", 8}, {"estimator", "kde"}};
    for (std::size_t i = 0; i < 3; ++i) {
        const HookPoint h{i, HookKind::DownInput};
        LayerCalibration lc;
        lc.layer_id = h.id();
        lc.seen_count = 100 + i;
        lc.tau_by_sparsity = {{0.25, 0.1 * static_cast<double>(i + 1)}, {0.5, 0.3}};
        lc.eta = {0.01, -0.02, 1.0 / 3.0};
        lc.seed = 99 + i;
        r.calibration.push_back(lc);
        r.specs[h.id()] = PruneSpec{h.id(), 0.3, 1.0 / 7.0, 0.5};
    }
    r.results = {{"note", "x"}, {"values", {1.5, 2.5}}};
    const auto a = temp_path("report_a.json"), b = temp_path("report_b.json");
    save_report(r, a);
    save_report(load_report(a), b);
    CHECK(read_file(a) == read_file(b));
    CHECK(load_report(b) == r);
    std::filesystem::remove(a);
    std::filesystem::remove(b);
}

TEST_CASE("report version mismatch is reported as such") {
    auto j = report_to_json(Report{});
    j["schema"] = "scap-report/2";
    CHECK(report_error(j) == FormatErrc::unsupported_version);
}

TEST_CASE("schema violations are rejected") {
    auto j = report_to_json(Report{});
    j["schema"] = "something-else";
    CHECK(report_error(j) == FormatErrc::schema_violation);
    j = report_to_json(Report{});
    j.erase("command");
    CHECK(report_error(j) == FormatErrc::schema_violation);
    j = report_to_json(Report{});
    j["specs"] = {{"block0.down_in", {{"tau", "high"}}}};
    CHECK(report_error(j) == FormatErrc::schema_violation);
    CHECK(report_error(json::array()) == FormatErrc::schema_violation);
}

TEST_CASE("block config survives json") {
    BlockConfig c;
    c.ffn_kind = FfnKind::GeluMlp;
    c.n_blocks = 3;
    c.residual = true;
    c.up_bias_offset = 1.25;
    CHECK(config_from_json(config_to_json(c)) == c);
}

TEST_CASE("reading a missing file is an io error") {
    try {
        read_file(temp_path("does_not_exist"));
        FAIL("no error");
    } catch (const FormatError& e) {
        CHECK(e.code() == FormatErrc::io);
    }
}
