// scap: batch front end for calibration, sweeps, kernel accounting and checks.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <type_traits>
#include <algorithm>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "scap/analysis.hpp"
#include "scap/calibrate.hpp"
#include "scap/error.hpp"
#include "scap/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace scap;

namespace {

struct RunConfig {
    std::uint64_t seed = kDefaultSeed;
    std::string out = "scap-out";
    std::string config_file;
    std::string model_path;  // load weights instead of initializing them

    std::size_t d_model = 64;
    std::size_t d_hidden = 256;
    std::size_t blocks = 1;
    std::string ffn = "swiglu";
    bool residual = false;
    bool rmsnorm = false;
    double up_bias_offset = 0.0;
    double init_gain = 0.8;

    std::string estimator = "mean";
    std::string scope = "layer";
    bool sequential = true;
    std::size_t reservoir = LayerStats::kDefaultCapacity;
    std::size_t calib_seqs = 64;
    std::size_t eval_seqs = 16;
    std::size_t seq_len = 256;

    double target_up_gate = 0.4;
    double target_down = 0.6;
    std::vector<double> sparsity_grid = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::vector<double> grid_up = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    std::vector<double> grid_down = {0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};

    std::vector<double> ffn_targets = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    std::vector<std::size_t> batches = {1, 8};
    std::string timing_file;

    std::string hook = "block0.up_gate_in";
    std::vector<double> rho = {0.0, 0.5, 0.9};
    std::vector<std::size_t> batch_sizes = {1, 2, 4, 8, 16};
    std::size_t trials = 32;
    double target = 0.5;

    double error_budget = 0.15;
};

template <class T>
struct is_vector : std::false_type {};
template <class T>
struct is_vector<std::vector<T>> : std::true_type {};

/// Binds one option to a RunConfig field and remembers how to read the same
/// key from a config file, so flags can take precedence over the file.
class Binder {
public:
    explicit Binder(CLI::App& app) : app_(app) {}

    template <class T>
    CLI::Option* add(const std::string& name, T& field, const std::string& help) {
        auto* opt = app_.add_option("--" + name, field, help)->capture_default_str();
        if constexpr (is_vector<T>::value) opt->delimiter(',');
        std::string key = name;
        for (char& c : key) c = c == '-' ? '_' : c;
        entries_.push_back({key, opt, [&field](const json& j) { field = j.get<T>(); },
                            [&field] { return json(field); }});
        return opt;
    }

    CLI::Option* flag(const std::string& name, bool& field, const std::string& help) {
        auto* opt = app_.add_flag("--" + name + ",!--no-" + name, field, help);
        std::string key = name;
        for (char& c : key) c = c == '-' ? '_' : c;
        entries_.push_back({key, opt, [&field](const json& j) { field = j.get<bool>(); },
                            [&field] { return json(field); }});
        return opt;
    }

    /// Applies keys from the config file for every option not given on the command line.
    void apply_file(const std::string& path) {
        if (path.empty()) return;
        json j;
        try {
            j = json::parse(read_file(path));
        } catch (const json::parse_error& e) {
            throw DomainError("config file '" + path + "' is not valid JSON");
        }
        if (!j.is_object()) throw DomainError("config file must hold a JSON object");
        for (const auto& [key, value] : j.items()) {
            auto it = std::find_if(entries_.begin(), entries_.end(),
                                   [&](const Entry& e) { return e.key == key; });
            if (it == entries_.end()) throw DomainError("unknown config key '" + key + "'");
            if (it->option->count() > 0) continue;
            try {
                it->load(value);
            } catch (const json::exception&) {
                throw DomainError("config key '" + key + "' has the wrong type");
            }
        }
    }

    /// Effective configuration; the output directory and config path are left
    /// out so runs into different directories stay byte-comparable.
    json effective() const {
        json j = json::object();
        for (const auto& e : entries_) {
            if (e.key == "out" || e.key == "config") continue;
            j[e.key] = e.dump();
        }
        return j;
    }

private:
    struct Entry {
        std::string key;
        CLI::Option* option;
        std::function<void(const json&)> load;
        std::function<json()> dump;
    };

    CLI::App& app_;
    std::vector<Entry> entries_;
};

void add_common(Binder& b, RunConfig& c) {
    b.add("seed", c.seed, "Base random seed");
    b.add("out", c.out, "Output directory");
    b.add("config", c.config_file, "JSON file with option values (flags take precedence)");
    b.add("model", c.model_path, "Load weights from a container; its architecture replaces the model flags");
    b.add("d-model", c.d_model, "Model width");
    b.add("d-hidden", c.d_hidden, "FFN hidden width");
    b.add("blocks", c.blocks, "Number of FFN blocks");
    b.add("ffn", c.ffn, "FFN kind")->check(CLI::IsMember({"swiglu", "gelu"}));
    b.flag("residual", c.residual, "Residual connection around each block");
    b.flag("rmsnorm", c.rmsnorm, "RMSNorm before each block");
    b.add("up-bias-offset", c.up_bias_offset, "Constant added to GELU-MLP Up biases");
    b.add("init-gain", c.init_gain, "Weight init gain (std = gain / sqrt(fan_in))");
    b.add("estimator", c.estimator, "Mode estimator")->check(CLI::IsMember({"mean", "median", "kde"}));
    b.add("scope", c.scope, "Threshold scope")->check(CLI::IsMember({"layer", "group"}));
    b.flag("sequential", c.sequential, "Calibrate hooks in forward order on pruned upstream");
    b.add("reservoir", c.reservoir, "Reservoir capacity per hook");
    b.add("calib-seqs", c.calib_seqs, "Calibration sequences");
    b.add("eval-seqs", c.eval_seqs, "Held-out evaluation sequences");
    b.add("seq-len", c.seq_len, "Vectors per sequence");
}

BlockConfig block_config(const RunConfig& c) {
    BlockConfig b;
    b.ffn_kind = parse_ffn_kind(c.ffn);
    b.d_model = c.d_model;
    b.d_hidden = c.d_hidden;
    b.n_blocks = c.blocks;
    b.residual = c.residual;
    b.rmsnorm = c.rmsnorm;
    b.up_bias_offset = c.up_bias_offset;
    b.init_gain = c.init_gain;
    b.validate();
    return b;
}

Model build_model(const RunConfig& c) {
    if (!c.model_path.empty()) return load_model(c.model_path);
    return init_weights(block_config(c), c.seed);
}

/// A loaded container fixes the architecture; copy it so the echoed config matches.
void adopt_model_config(RunConfig& c) {
    if (c.model_path.empty()) return;
    const BlockConfig b = load_model(c.model_path).config();
    c.ffn = to_string(b.ffn_kind);
    c.d_model = b.d_model;
    c.d_hidden = b.d_hidden;
    c.blocks = b.n_blocks;
    c.residual = b.residual;
    c.rmsnorm = b.rmsnorm;
    c.up_bias_offset = b.up_bias_offset;
    c.init_gain = b.init_gain;
}

ModeEstimator estimator_of(const RunConfig& c) {
    switch (parse_mode_kind(c.estimator)) {
        case ModeKind::Mean: return ModeEstimator::mean();
        case ModeKind::Median: return ModeEstimator::median();
        case ModeKind::Kde: return ModeEstimator::kde();
    }
    return {};
}

CalibrationPlan plan_of(const RunConfig& c) {
    CalibrationPlan p;
    p.estimator = estimator_of(c);
    p.scope = c.scope == "group" ? ThresholdScope::PooledGroup : ThresholdScope::PerLayer;
    p.sequential = c.sequential;
    p.reservoir_capacity = c.reservoir;
    p.seed = c.seed;
    p.report_sparsities = c.sparsity_grid;
    return p;
}

// Distinct streams for calibration and evaluation, both derived from the seed.
ActivationStream calib_stream(const RunConfig& c, std::size_t d) {
    return gaussian_stream(c.calib_seqs, c.seq_len, d, c.seed ^ 0xC0FFEEULL);
}

ActivationStream eval_stream(const RunConfig& c, std::size_t d) {
    return gaussian_stream(c.eval_seqs, c.seq_len, d, c.seed ^ 0xE7A1ULL);
}

void check_unit(const std::vector<double>& v, const char* what) {
    for (double s : v) {
        if (!(s >= 0.0 && s <= 1.0)) throw DomainError(std::string(what) + " values must lie in [0, 1]");
    }
}

fs::path prepare_out(const RunConfig& c) {
    const fs::path dir(c.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw FormatError(FormatErrc::io, "cannot create output directory '" + c.out + "'");
    }
    return dir;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

class Csv {
public:
    explicit Csv(const json& config) { text_ = "# config " + config.dump() + "\n"; }

    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }

    const std::string& str() const { return text_; }

private:
    std::string text_;
};

Report base_report(const char* command, const json& config) {
    Report r;
    r.command = command;
    r.config = config;
    return r;
}

void save_checked(const Report& r, const fs::path& path) {
    save_report(r, path);
    if (!(load_report(path) == r)) throw FormatError(FormatErrc::io, "report did not survive re-reading");
}

// ---------------------------------------------------------------------------

void cmd_calibrate(const RunConfig& c, const json& config) {
    check_unit(c.sparsity_grid, "--sparsity-grid");
    check_unit({c.target_up_gate, c.target_down}, "targets");
    const fs::path dir = prepare_out(c);
    const Model model = build_model(c);
    auto plan = plan_of(c);
    plan.targets = {{HookKind::UpGateInput, c.target_up_gate}, {HookKind::DownInput, c.target_down}};
    const auto cal = calibrate(model, calib_stream(c, model.config().d_model), plan);

    Report r = base_report("calibrate", config);
    r.calibration = cal.layers;
    for (const auto& [h, s] : cal.specs) r.specs.emplace(h.id(), s);
    const PrunedModel pruned(model, cal.specs);
    r.results = {{"held_out", to_json(measure_sparsity(pruned, eval_stream(c, model.config().d_model)))}};
    save_checked(r, dir / "calibration.json");
}

void cmd_sweep(const RunConfig& c, const json& config) {
    check_unit(c.grid_up, "--grid-up");
    check_unit(c.grid_down, "--grid-down");
    const fs::path dir = prepare_out(c);
    const Model model = build_model(c);
    const std::size_t d = model.config().d_model;
    const auto sweep = pareto_sweep(model, calib_stream(c, d), eval_stream(c, d), c.grid_up,
                                    c.grid_down, plan_of(c));

    Report r = base_report("sweep", config);
    r.results = to_json(sweep);
    save_checked(r, dir / "sweep.json");

    Csv csv(config);
    csv.row({"target_up_gate", "target_down", "observed_up", "observed_gate", "observed_down",
             "ffn_sparsity", "macs_ratio", "reconstruction_error", "quality", "dominant"});
    for (std::size_t i = 0; i < sweep.entries.size(); ++i) {
        const auto& e = sweep.entries[i];
        const bool dom = std::find(sweep.dominant.begin(), sweep.dominant.end(), i) != sweep.dominant.end();
        csv.row({fmt(e.target_up_gate), fmt(e.target_down), fmt(e.report.up_gate_observed),
                 fmt(e.report.up_gate_observed), fmt(e.report.down_observed), fmt(e.report.ffn_sparsity),
                 fmt(e.report.macs_ratio), fmt(e.reconstruction_error), fmt(e.quality), dom ? "1" : "0"});
    }
    write_file(dir / "sweep.csv", csv.str());
}

double abs_quantile(const DenseMatrix& m, double q) {
    std::vector<double> a;
    a.reserve(m.data().size());
    for (float v : m.data()) a.push_back(std::fabs(static_cast<double>(v)));
    std::sort(a.begin(), a.end());
    return sorted_quantile(a, q);
}

void cmd_bench(const RunConfig& c, const json& config) {
    check_unit(c.ffn_targets, "--ffn-targets");
    if (c.ffn != "swiglu") throw DomainError("bench measures SwiGLU kernels; use --ffn swiglu");
    const fs::path dir = prepare_out(c);
    BlockConfig bc = block_config(c);
    bc.n_blocks = 1;
    const Model model = init_weights(bc, c.seed);
    const auto& w = std::get<SwiGluWeights>(model.blocks()[0].ffn);
    const std::size_t d = bc.d_model, h = bc.d_hidden;

    // Thresholds come from a calibration batch; counts from a fresh batch.
    const DenseMatrix xc = gaussian_stream(1, 4096, d, c.seed ^ 0xB1ULL)[0];
    const DenseMatrix silu_c = silu(matmul(xc, w.w_gate));

    Csv csv(config);
    csv.row({"scheme", "d", "h", "batch", "target_sparsity", "observed_sparsity", "macs",
             "dense_macs", "macs_ratio"});
    Csv timing(config);
    timing.row({"scheme", "batch", "target_sparsity", "seconds"});

    auto emit = [&](const char* scheme, std::size_t batch, double target, double observed,
                    const OpCount& ops) {
        csv.row({scheme, std::to_string(d), std::to_string(h), std::to_string(batch), fmt(target),
                 fmt(observed), std::to_string(ops.macs), std::to_string(ops.dense_macs),
                 fmt(ops.macs_ratio())});
    };
    auto timed = [&](const char* scheme, std::size_t batch, double target, auto&& fn) {
        const auto t0 = std::chrono::steady_clock::now();
        auto r = fn();
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        timing.row({scheme, std::to_string(batch), fmt(target), fmt(secs)});
        return r;
    };

    for (std::size_t batch : c.batches) {
        if (batch == 0) throw DomainError("--batches values must be >= 1");
        const DenseMatrix x = gaussian_stream(1, batch, d, c.seed ^ (0xB2ULL + batch))[0];
        const auto dense = timed("dense", batch, 0.0, [&] { return dense_swiglu(x, w); });
        emit("dense", batch, 0.0, 0.0, dense.ops);
        for (double s : c.ffn_targets) {
            const double tau_x = abs_quantile(xc, s);
            const auto probe = scap_swiglu(tau_x, 0.0, xc, w);
            const double tau_g = abs_quantile(probe.hidden_values, s);
            const auto r = timed("scap", batch, s, [&] { return scap_swiglu(tau_x, tau_g, x, w); });
            emit("scap", batch, s, ffn_sparsity(r.input.sparsity(), r.hidden.sparsity()), r.ops);

            const double s_silu = std::min(1.0, 1.5 * s);
            const double tau_s = abs_quantile(silu_c, s_silu);
            const auto k = timed("cats", batch, s, [&] { return cats_swiglu(tau_s, x, w); });
            emit("cats", batch, s, cats_ffn_sparsity(k.hidden.sparsity()), k.ops);
        }
    }
    write_file(dir / "bench.csv", csv.str());
    if (!c.timing_file.empty()) write_file(dir / c.timing_file, timing.str());
}

void cmd_overlap(const RunConfig& c, const json& config) {
    check_unit(c.rho, "--rho");
    check_unit({c.target}, "--target");
    if (c.trials == 0) throw DomainError("--trials must be >= 1");
    const fs::path dir = prepare_out(c);
    const Model model = build_model(c);
    const HookPoint hook = HookPoint::parse(c.hook);
    model.check_hook(hook);
    auto plan = plan_of(c);
    plan.targets = {{hook.kind, c.target}};
    const auto cal = calibrate(model, calib_stream(c, model.config().d_model), plan);
    const PrunedModel pruned(model, cal.specs);

    auto sizes = c.batch_sizes;
    std::sort(sizes.begin(), sizes.end());
    Csv csv(config);
    csv.row({"rho", "batch_size", "overlap_sparsity", "per_vector_sparsity", "independent_baseline"});
    json curves = json::array();
    for (std::size_t i = 0; i < c.rho.size(); ++i) {
        CorrelatedBatchGenerator gen(model.config().d_model, c.rho[i], c.seed + 1 + i);
        const auto curve = overlap_curve(pruned, hook, gen, sizes, c.trials);
        for (std::size_t k = 0; k < sizes.size(); ++k) {
            csv.row({fmt(c.rho[i]), std::to_string(sizes[k]), fmt(curve.overlap_sparsity[k]),
                     fmt(curve.per_vector_sparsity),
                     fmt(std::pow(curve.per_vector_sparsity, static_cast<double>(sizes[k])))});
        }
        json cj = to_json(curve);
        cj["rho"] = c.rho[i];
        curves.push_back(cj);
    }
    Report r = base_report("overlap", config);
    for (const auto& [h, s] : cal.specs) r.specs.emplace(h.id(), s);
    r.results = {{"hook", hook.id()}, {"curves", curves}};
    save_checked(r, dir / "overlap.json");
    write_file(dir / "overlap.csv", csv.str());
}

void cmd_ablate(const RunConfig& c, const json& config) {
    check_unit(c.sparsity_grid, "--sparsity-grid");
    const fs::path dir = prepare_out(c);
    const Model model = build_model(c);
    if (model.config().ffn_kind != FfnKind::GeluMlp) {
        throw DomainError("ablate-mode needs GELU-MLP blocks (--ffn gelu)");
    }
    const std::size_t d = model.config().d_model;
    const auto ab = mode_centering_ablation(model, calib_stream(c, d), eval_stream(c, d),
                                            c.sparsity_grid, estimator_of(c), c.reservoir);
    std::vector<CurvePoint> with, without;
    Csv csv(config);
    csv.row({"target", "observed_with", "observed_without", "err_with", "err_without"});
    for (const auto& row : ab.rows) {
        csv.row({fmt(row.target), fmt(row.observed_with), fmt(row.observed_without), fmt(row.err_with),
                 fmt(row.err_without)});
        with.push_back({row.observed_with, row.err_with});
        without.push_back({row.observed_without, row.err_without});
    }
    Report r = base_report("ablate-mode", config);
    r.results = to_json(ab);
    const double aw = achievable_sparsity(with, c.error_budget);
    const double ao = achievable_sparsity(without, c.error_budget);
    r.results["error_budget"] = c.error_budget;
    r.results["achievable_with"] = aw;
    r.results["achievable_without"] = ao;
    r.results["gain"] = aw - ao;
    save_checked(r, dir / "ablation.json");
    write_file(dir / "ablation.csv", csv.str());
}

void cmd_roundtrip(const RunConfig& c, const json& config) {
    const fs::path dir = prepare_out(c);
    const Model model = build_model(c);
    const fs::path path = dir / "model.scapw";
    save_model(model, path);
    const std::string first = read_file(path);
    const Model back = load_model(path);
    if (!(back == model)) throw FormatError(FormatErrc::bad_data, "reloaded weights differ");
    save_model(back, dir / "model.resaved.scapw");
    const std::string second = read_file(dir / "model.resaved.scapw");
    fs::remove(dir / "model.resaved.scapw");
    if (first != second) throw FormatError(FormatErrc::bad_data, "re-encoded container differs");

    Report r = base_report("roundtrip-check", config);
    std::size_t tensors = model_to_container(model).tensors.size();
    r.results = {{"bytes", first.size()}, {"tensors", tensors}, {"bitwise_equal", true}};
    save_checked(r, dir / "roundtrip.json");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Statistical calibrated activation pruning toolkit"};
    app.require_subcommand(1);

    struct Command {
        CLI::App* app;
        RunConfig cfg;
        std::unique_ptr<Binder> binder;
        void (*run)(const RunConfig&, const json&);
    };
    std::map<std::string, Command> commands;
    auto make = [&](const std::string& name, const std::string& help,
                    void (*run)(const RunConfig&, const json&)) -> Command& {
        Command& cmd = commands[name];
        cmd.app = app.add_subcommand(name, help);
        cmd.run = run;
        cmd.binder = std::make_unique<Binder>(*cmd.app);
        return cmd;
    };

    {
        auto& cmd = make("calibrate", "Calibrate thresholds and mode shifts; write a report", cmd_calibrate);
        add_common(*cmd.binder, cmd.cfg);
        cmd.binder->add("sparsity-grid", cmd.cfg.sparsity_grid, "Sparsities tabulated per hook");
        cmd.binder->add("target-up-gate", cmd.cfg.target_up_gate, "Target sparsity at Up/Gate inputs");
        cmd.binder->add("target-down", cmd.cfg.target_down, "Target sparsity at Down inputs");
    }
    {
        auto& cmd = make("sweep", "Grid search over (up/gate, down) targets with a Pareto front", cmd_sweep);
        cmd.cfg.sequential = false;
        cmd.cfg.calib_seqs = 16;
        cmd.cfg.eval_seqs = 8;
        add_common(*cmd.binder, cmd.cfg);
        cmd.binder->add("grid-up", cmd.cfg.grid_up, "Up/Gate target sparsities");
        cmd.binder->add("grid-down", cmd.cfg.grid_down, "Down target sparsities");
    }
    {
        auto& cmd = make("bench", "MAC accounting of dense, CATS and SCAP SwiGLU kernels", cmd_bench);
        add_common(*cmd.binder, cmd.cfg);
        cmd.binder->add("ffn-targets", cmd.cfg.ffn_targets, "Target FFN sparsities");
        cmd.binder->add("batches", cmd.cfg.batches, "Batch sizes");
        cmd.binder->add("timing-file", cmd.cfg.timing_file,
                        "Also write wall-clock timings to this file in the output directory");
    }
    {
        auto& cmd = make("overlap", "Overlapping sparsity versus batch size", cmd_overlap);
        cmd.cfg.calib_seqs = 16;
        add_common(*cmd.binder, cmd.cfg);
        cmd.binder->add("hook", cmd.cfg.hook, "Hook to measure, e.g. block0.up_gate_in");
        cmd.binder->add("rho", cmd.cfg.rho, "Correlations of the batch generator");
        cmd.binder->add("batch-sizes", cmd.cfg.batch_sizes, "Batch sizes");
        cmd.binder->add("trials", cmd.cfg.trials, "Batches per correlation");
        cmd.binder->add("target", cmd.cfg.target, "Target sparsity at the hook");
    }
    {
        auto& cmd = make("ablate-mode", "Down-input pruning with and without mode centering", cmd_ablate);
        cmd.cfg.ffn = "gelu";
        cmd.cfg.up_bias_offset = 2.0;
        cmd.cfg.estimator = "kde";
        cmd.cfg.calib_seqs = 16;
        cmd.cfg.eval_seqs = 8;
        cmd.cfg.sparsity_grid = {0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45, 0.5,
                                 0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95};
        add_common(*cmd.binder, cmd.cfg);
        cmd.binder->add("sparsity-grid", cmd.cfg.sparsity_grid, "Target Down-input sparsities");
        cmd.binder->add("error-budget", cmd.cfg.error_budget,
                        "Relative L2 error budget for the achievable-sparsity summary");
    }
    {
        auto& cmd = make("roundtrip-check", "Save, reload and compare the weight container", cmd_roundtrip);
        add_common(*cmd.binder, cmd.cfg);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "scap: error: " << e.what() << "\n";
        return 2;
    }

    for (auto& [name, cmd] : commands) {
        if (!cmd.app->parsed()) continue;
        try {
            cmd.binder->apply_file(cmd.cfg.config_file);
            adopt_model_config(cmd.cfg);
            const json config = cmd.binder->effective();
            cmd.run(cmd.cfg, config);
        } catch (const std::exception& e) {
            std::string msg = e.what();
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            std::cerr << "scap " << name << ": error: " << msg << "\n";
            return 1;
        }
    }
    return 0;
}
