#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sgdkit/config.hpp"
#include "sgdkit/core.hpp"
#include "sgdkit/data.hpp"
#include "sgdkit/metrics.hpp"
#include "sgdkit/models.hpp"
#include "sgdkit/optim.hpp"
#include "sgdkit/synthetic.hpp"

namespace sgdkit {

namespace detail {

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_num(const std::string& key, const std::string& value) {
    char* end = nullptr;
    const double v = std::strtod(value.c_str(), &end);
    if (end != value.c_str() + value.size() || value.empty())
        throw ConfigError("config: bad numeric value for '" + key + "': " + value);
    return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    const double v = parse_num(key, value);
    if (v < 0 || v != std::floor(v))
        throw ConfigError("config: '" + key + "' must be a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV persistence. Metadata rides in '#'-prefixed comment lines, then the
// fixed header; reals use 17 significant digits so parsing is lossless.
// ---------------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "kind,epoch,iteration,loss,accuracy,grad_norm,lr,guarded";

inline std::size_t write_csv(const MetricLog& log, std::ostream& out) {
    std::string s;
    for (const auto& [k, v] : log.metadata) {
        s += "# ";
        s += k;
        s += "=";
        s += v;
        s += "\n";
    }
    s += kCsvHeader;
    s += "\n";
    auto cell = [&s](const std::optional<double>& v) {
        s += ",";
        if (v) s += detail::fmt17(*v);
    };
    for (const MetricRecord& r : log.records) {
        s += (r.kind == MetricRecord::Kind::epoch) ? "epoch" : "iteration";
        s += ",";
        s += detail::fmt17(r.epoch);
        s += ",";
        s += std::to_string(r.iteration);
        cell(r.loss);
        cell(r.accuracy);
        cell(r.grad_norm);
        cell(r.lr);
        s += ",";
        if (r.guarded) s += (*r.guarded ? "1" : "0");
        s += "\n";
    }
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
    if (!out) throw DataError("write_csv: sink write failure");
    return s.size();
}

inline MetricLog read_csv(std::istream& in) {
    MetricLog log;
    std::string line;
    bool saw_header = false;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::size_t start = line.find_first_not_of("# ");
            if (start == std::string::npos) continue;
            const std::string body = line.substr(start);
            const std::size_t eq = body.find('=');
            if (eq != std::string::npos) log.meta(body.substr(0, eq), body.substr(eq + 1));
            continue;
        }
        if (!saw_header) {
            if (line != kCsvHeader)
                throw DataError("csv: unexpected header at line " + std::to_string(line_no));
            saw_header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const std::size_t comma = line.find(',', start);
            cells.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (cells.size() != 8)
            throw DataError("csv: expected 8 cells at line " + std::to_string(line_no));
        MetricRecord r;
        if (cells[0] == "epoch")
            r.kind = MetricRecord::Kind::epoch;
        else if (cells[0] == "iteration")
            r.kind = MetricRecord::Kind::iteration;
        else
            throw DataError("csv: unknown record kind at line " + std::to_string(line_no));
        r.epoch = detail::parse_num("epoch", cells[1]);
        r.iteration = detail::parse_uint("iteration", cells[2]);
        auto opt = [&](const std::string& cell) -> std::optional<double> {
            if (cell.empty()) return std::nullopt;
            return detail::parse_num("cell", cell);
        };
        r.loss = opt(cells[3]);
        r.accuracy = opt(cells[4]);
        r.grad_norm = opt(cells[5]);
        r.lr = opt(cells[6]);
        if (!cells[7].empty()) r.guarded = (cells[7] != "0");
        log.records.push_back(r);
    }
    if (!saw_header) throw DataError("csv: missing header");
    return log;
}

// ---------------------------------------------------------------------------
// Dataset loading. Paths are either real files (LIBSVM text, or an IDX pair
// when labels_path is set) or generated stand-ins:
//   synth:blobs:m=10000,d=784,k=10,noise=0.35,flip=0.05,seed=1
//   synth:sparse:m=5000,d=123,nnz=14,flip=0.05,seed=1
//   synth:lsq:m=500,d=20,a=1,seed=1
// ---------------------------------------------------------------------------

namespace detail {

inline std::map<std::string, double> parse_synth_args(const std::string& text) {
    std::map<std::string, double> args;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t comma = text.find(',', start);
        if (comma == std::string::npos) comma = text.size();
        const std::string piece = text.substr(start, comma - start);
        const std::size_t eq = piece.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: bad synth argument '" + piece + "'");
        args[piece.substr(0, eq)] = parse_num(piece, piece.substr(eq + 1));
        start = comma + 1;
    }
    return args;
}

inline double synth_arg(std::map<std::string, double>& args, const std::string& key, double dflt) {
    const auto it = args.find(key);
    if (it == args.end()) return dflt;
    const double v = it->second;
    args.erase(it);
    return v;
}

inline Dataset load_synth(const std::string& uri) {
    const std::size_t colon = uri.find(':', 6);
    const std::string kind = uri.substr(6, colon == std::string::npos ? std::string::npos : colon - 6);
    auto args = parse_synth_args(colon == std::string::npos ? "" : uri.substr(colon + 1));
    Dataset ds = [&] {
        if (kind == "blobs") {
            RngState rng(static_cast<std::uint64_t>(synth_arg(args, "seed", 1)));
            return make_blobs(rng, static_cast<std::size_t>(synth_arg(args, "m", 10000)),
                              static_cast<std::size_t>(synth_arg(args, "d", 784)),
                              static_cast<std::size_t>(synth_arg(args, "k", 10)),
                              synth_arg(args, "noise", 0.35), synth_arg(args, "flip", 0.05),
                              synth_arg(args, "zeros", 0.0));
        }
        if (kind == "sparse") {
            RngState rng(static_cast<std::uint64_t>(synth_arg(args, "seed", 1)));
            return make_sparse_binary(rng, static_cast<std::size_t>(synth_arg(args, "m", 5000)),
                                      static_cast<std::size_t>(synth_arg(args, "d", 123)),
                                      static_cast<std::size_t>(synth_arg(args, "nnz", 14)),
                                      synth_arg(args, "flip", 0.05));
        }
        if (kind == "lsq") {
            RngState rng(static_cast<std::uint64_t>(synth_arg(args, "seed", 1)));
            return gen_least_squares(rng, static_cast<std::size_t>(synth_arg(args, "m", 500)),
                                     static_cast<std::size_t>(synth_arg(args, "d", 20)),
                                     synth_arg(args, "a", 1.0))
                .dataset;
        }
        throw ConfigError("config: unknown synth dataset kind '" + kind + "'");
    }();
    if (!args.empty())
        throw ConfigError("config: unknown synth argument '" + args.begin()->first + "'");
    return ds;
}

inline bool basename_contains(const std::string& path, const std::string& needle) {
    const std::size_t slash = path.find_last_of("/\\");
    const std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    return base.find(needle) != std::string::npos;
}

}  // namespace detail

inline Dataset load_dataset(const RunConfig& cfg) {
    if (cfg.data_path.empty()) throw ConfigError("config: data path is required");
    if (cfg.data_path.rfind("synth:", 0) == 0) {
        Dataset ds = detail::load_synth(cfg.data_path);
        if (cfg.limit && *cfg.limit < ds.m()) return head(ds, *cfg.limit);
        return ds;
    }
    if (!cfg.labels_path.empty()) {
        std::ifstream images(cfg.data_path, std::ios::binary);
        if (!images) throw DataError("cannot open image file: " + cfg.data_path);
        std::ifstream labels(cfg.labels_path, std::ios::binary);
        if (!labels) throw DataError("cannot open label file: " + cfg.labels_path);
        return load_mnist_idx(images, labels, cfg.limit.value_or(0));
    }
    std::ifstream in(cfg.data_path);
    if (!in) throw DataError("cannot open data file: " + cfg.data_path);
    std::optional<std::size_t> force_d = cfg.dims;
    if (!force_d && detail::basename_contains(cfg.data_path, "a8a")) force_d = 123;
    Dataset ds = parse_libsvm(in, force_d);
    if (cfg.limit && *cfg.limit < ds.m()) return head(ds, *cfg.limit);
    return ds;
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct RunOutput {
    MetricLog log;
    ParamVector final;
    ParamVector averaged;
    ModelSpec spec;
};

inline ModelSpec make_model_spec(const RunConfig& cfg, const Dataset& data) {
    ModelSpec spec;
    spec.kind = cfg.model;
    spec.d_in = data.d();
    spec.hidden = cfg.hidden;
    spec.classes = data.task() == Task::multiclass ? data.classes() : cfg.classes;
    spec.l2 = cfg.l2 ? *cfg.l2 : default_l2(cfg.model, data.m());

    if (cfg.model == ModelKind::mlp && data.task() != Task::multiclass)
        throw ConfigError("config: model mlp requires a multiclass dataset");
    if ((cfg.model == ModelKind::logistic || cfg.model == ModelKind::svm) &&
        data.task() != Task::binary)
        throw ConfigError("config: model " + std::string(model_kind_name(cfg.model)) +
                          " requires a binary dataset");
    return spec;
}

inline RunOutput run_experiment_full(const RunConfig& cfg, const Dataset& data) {
    validate(cfg);
    const ModelSpec spec = make_model_spec(cfg, data);

    RngState rng(cfg.seed);
    TrainResult trained = train(spec, data, cfg, rng);

    // config echo ahead of the training counters
    std::vector<std::pair<std::string, std::string>> meta;
    auto add = [&meta](std::string k, std::string v) { meta.emplace_back(std::move(k), std::move(v)); };
    add("model", std::string(model_kind_name(cfg.model)));
    if (cfg.model == ModelKind::mlp) {
        add("hidden", std::to_string(spec.hidden));
        add("classes", std::to_string(spec.classes));
    }
    add("l2", detail::fmt17(spec.l2));
    add("data", cfg.data_path);
    if (!cfg.labels_path.empty()) add("labels", cfg.labels_path);
    if (cfg.dims) add("dims", std::to_string(*cfg.dims));
    if (cfg.limit) add("limit", std::to_string(*cfg.limit));
    add("m", std::to_string(data.m()));
    add("d", std::to_string(data.d()));
    add("task", std::string(task_name(data.task())));
    const bool idx = !cfg.labels_path.empty();
    const bool synth = cfg.data_path.rfind("synth:", 0) == 0;
    add("normalization", idx ? "x/255" : (synth ? "generated" : "as-distributed"));
    add("optimizer", std::string(optimizer_name(cfg.optimizer)));
    if (cfg.optimizer == OptimizerKind::sgdm) add("beta", detail::fmt17(cfg.beta));
    add("regime", std::string(lr_kind_name(cfg.regime.kind)));
    switch (cfg.regime.kind) {
        case LrKind::constant: add("lr", detail::fmt17(cfg.regime.alpha)); break;
        case LrKind::diminishing: add("c", detail::fmt17(cfg.regime.c)); break;
        case LrKind::bb: add("gamma", detail::fmt17(cfg.regime.gamma)); break;
        case LrKind::polyak:
            add("c", detail::fmt17(cfg.regime.c));
            add("f_star", detail::fmt17(cfg.regime.f_star));
            break;
        case LrKind::multiplicative:
            add("d_factor", detail::fmt17(cfg.regime.d));
            add("u_factor", detail::fmt17(cfg.regime.u));
            add("alpha0", detail::fmt17(cfg.regime.alpha0));
            break;
        case LrKind::adaptive: break;
    }
    add("b", std::to_string(cfg.b));
    if (regime_uses_bh(cfg.regime.kind)) add("bh", std::to_string(cfg.b_h));
    add("epochs", std::to_string(cfg.epochs));
    add("seed", std::to_string(cfg.seed));
    add("log_every", std::to_string(cfg.log_every));
    add("average", cfg.average_output ? "1" : "0");
    add("rng", std::string(RngState::generator_name()));
    add("version", std::string(kVersion));

    trained.log.metadata.insert(trained.log.metadata.begin(), meta.begin(), meta.end());
    return RunOutput{std::move(trained.log), std::move(trained.final), std::move(trained.averaged),
                     spec};
}

inline RunOutput run_experiment_full(const RunConfig& cfg) {
    const Dataset data = load_dataset(cfg);
    return run_experiment_full(cfg, data);
}

inline MetricLog run_experiment(const RunConfig& cfg) { return run_experiment_full(cfg).log; }

// ---------------------------------------------------------------------------
// Constant-LR grid search: one run per candidate under the same seed, winner
// by final-epoch training loss, ties to the smaller LR.
// ---------------------------------------------------------------------------

struct GridResult {
    double best_lr = 0.0;
    std::vector<RunOutput> runs;  // input order
};

inline GridResult grid_search(const RunConfig& base, const std::vector<double>& lrs,
                              const Dataset& data) {
    if (lrs.empty()) throw ConfigError("grid_search: candidate list is empty");
    if (base.regime.kind != LrKind::constant)
        throw ConfigError("grid_search: base regime must be constant");
    GridResult result;
    result.best_lr = std::numeric_limits<double>::infinity();
    double best_loss = std::numeric_limits<double>::infinity();
    for (const double lr : lrs) {
        RunConfig cfg = base;
        cfg.regime.alpha = lr;
        result.runs.push_back(run_experiment_full(cfg, data));
        const double loss =
            result.runs.back().log.final_epoch_loss().value_or(std::numeric_limits<double>::infinity());
        if (loss < best_loss || (loss == best_loss && lr < result.best_lr)) {
            best_loss = loss;
            result.best_lr = lr;
        }
    }
    return result;
}

inline GridResult grid_search(const RunConfig& base, const std::vector<double>& lrs) {
    const Dataset data = load_dataset(base);
    return grid_search(base, lrs, data);
}

// ---------------------------------------------------------------------------
// Flat key=value configuration files; CLI flags override file values.
// ---------------------------------------------------------------------------

inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    auto fail = [&](const std::string& what) {
        throw ConfigError("config: " + what + " for key '" + key + "': " + value);
    };
    if (key == "model") {
        if (value == "logistic") cfg.model = ModelKind::logistic;
        else if (value == "svm") cfg.model = ModelKind::svm;
        else if (value == "mlp") cfg.model = ModelKind::mlp;
        else if (value == "least_squares" || value == "lsq") cfg.model = ModelKind::least_squares;
        else fail("unknown model");
    } else if (key == "data") {
        cfg.data_path = value;
    } else if (key == "labels") {
        cfg.labels_path = value;
    } else if (key == "optimizer") {
        if (value == "sgd") cfg.optimizer = OptimizerKind::sgd;
        else if (value == "sgdm") cfg.optimizer = OptimizerKind::sgdm;
        else if (value == "signsgd") cfg.optimizer = OptimizerKind::signsgd;
        else fail("unknown optimizer");
    } else if (key == "regime") {
        if (value == "adaptive") cfg.regime.kind = LrKind::adaptive;
        else if (value == "constant") cfg.regime.kind = LrKind::constant;
        else if (value == "diminishing") cfg.regime.kind = LrKind::diminishing;
        else if (value == "bb") cfg.regime.kind = LrKind::bb;
        else if (value == "polyak") cfg.regime.kind = LrKind::polyak;
        else if (value == "multiplicative") cfg.regime.kind = LrKind::multiplicative;
        else throw ConfigError("config: unknown regime '" + value + "'");
    } else if (key == "lr") {
        cfg.regime.alpha = detail::parse_num(key, value);
    } else if (key == "c") {
        cfg.regime.c = detail::parse_num(key, value);
    } else if (key == "gamma") {
        cfg.regime.gamma = detail::parse_num(key, value);
    } else if (key == "f_star") {
        cfg.regime.f_star = detail::parse_num(key, value);
    } else if (key == "d") {
        cfg.regime.d = detail::parse_num(key, value);
    } else if (key == "u") {
        cfg.regime.u = detail::parse_num(key, value);
    } else if (key == "alpha0") {
        cfg.regime.alpha0 = detail::parse_num(key, value);
    } else if (key == "b") {
        cfg.b = static_cast<std::size_t>(detail::parse_uint(key, value));
    } else if (key == "bh") {
        cfg.b_h = static_cast<std::size_t>(detail::parse_uint(key, value));
    } else if (key == "epochs") {
        cfg.epochs = static_cast<std::size_t>(detail::parse_uint(key, value));
    } else if (key == "seed") {
        cfg.seed = detail::parse_uint(key, value);
    } else if (key == "beta") {
        cfg.beta = detail::parse_num(key, value);
    } else if (key == "log_every") {
        cfg.log_every = static_cast<std::size_t>(detail::parse_uint(key, value));
    } else if (key == "average") {
        if (value == "1" || value == "true") cfg.average_output = true;
        else if (value == "0" || value == "false") cfg.average_output = false;
        else fail("expected boolean");
    } else if (key == "hidden") {
        cfg.hidden = static_cast<std::size_t>(detail::parse_uint(key, value));
    } else if (key == "classes") {
        cfg.classes = static_cast<std::size_t>(detail::parse_uint(key, value));
    } else if (key == "l2") {
        cfg.l2 = detail::parse_num(key, value);
    } else if (key == "dims") {
        cfg.dims = static_cast<std::size_t>(detail::parse_uint(key, value));
    } else if (key == "limit") {
        cfg.limit = static_cast<std::size_t>(detail::parse_uint(key, value));
    } else {
        throw ConfigError("config: unknown key '" + key + "'");
    }
}

inline void load_config_stream(RunConfig& cfg, std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const std::size_t last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config: expected key=value at line " + std::to_string(line_no));
        std::string key = line.substr(0, eq);
        std::string value = line.substr(eq + 1);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        const std::size_t vfirst = value.find_first_not_of(" \t");
        value = vfirst == std::string::npos ? "" : value.substr(vfirst);
        apply_config_entry(cfg, key, value);
    }
}

inline void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open file " + path);
    load_config_stream(cfg, in);
}

}  // namespace sgdkit
