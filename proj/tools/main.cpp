// sgdkit benchmark CLI: train / grid / compare / bh-sweep / plot.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sgdkit/sgdkit.hpp"

namespace {

using namespace sgdkit;

struct CliOptions {
    std::string config_path;
    std::optional<std::string> model, data, labels, optimizer, regime;
    std::optional<double> lr, c, gamma, f_star, d, u, alpha0, beta, l2;
    std::optional<std::uint64_t> b, bh, epochs, seed, log_every, hidden, dims, limit;
    bool average = false;

    std::string out;
    std::string plot_path;
    std::string lrs = "0.001,0.01,0.05,0.1";
    std::string cs = "0.01,0.1,1";
    std::string bhs = "10,50,100,150";
    std::string style = "loss";
    std::vector<std::string> inputs;
};

void add_run_options(CLI::App* cmd, CliOptions& opt) {
    cmd->add_option("--config", opt.config_path, "key=value configuration file");
    cmd->add_option("--model", opt.model, "logistic | svm | mlp | least_squares");
    cmd->add_option("--data", opt.data, "dataset path (LIBSVM text, IDX images, or synth:...)");
    cmd->add_option("--labels", opt.labels, "IDX label path (enables the MNIST loader)");
    cmd->add_option("--optimizer", opt.optimizer, "sgd | sgdm | signsgd");
    cmd->add_option("--regime", opt.regime,
                    "adaptive | constant | diminishing | bb | polyak | multiplicative");
    cmd->add_option("--lr", opt.lr, "constant LR");
    cmd->add_option("--c", opt.c, "diminishing/polyak constant");
    cmd->add_option("--gamma", opt.gamma, "bb constant");
    cmd->add_option("--f-star", opt.f_star, "polyak optimal value (default 0)");
    cmd->add_option("--d", opt.d, "multiplicative shrink factor");
    cmd->add_option("--u", opt.u, "multiplicative growth factor");
    cmd->add_option("--alpha0", opt.alpha0, "multiplicative initial LR");
    cmd->add_option("--b", opt.b, "gradient batch size");
    cmd->add_option("--bh", opt.bh, "LR batch size");
    cmd->add_option("--epochs", opt.epochs, "epoch count");
    cmd->add_option("--beta", opt.beta, "momentum coefficient");
    cmd->add_option("--seed", opt.seed, "run seed");
    cmd->add_option("--log-every", opt.log_every, "iteration-record cadence");
    cmd->add_option("--hidden", opt.hidden, "MLP hidden width");
    cmd->add_option("--l2", opt.l2, "l2 weight (default 1/m for logistic and svm)");
    cmd->add_option("--dims", opt.dims, "force the LIBSVM feature dimension");
    cmd->add_option("--limit", opt.limit, "use only the first N examples");
    cmd->add_flag("--average", opt.average, "evaluate the averaged iterate as well");
}

RunConfig build_config(const CliOptions& opt) {
    RunConfig cfg;
    if (!opt.config_path.empty()) load_config_file(cfg, opt.config_path);
    auto render = [](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, double>) return detail::fmt17(v);
        else if constexpr (std::is_same_v<T, std::string>) return v;
        else return std::to_string(v);
    };
    auto set = [&cfg, &render](const char* key, const auto& maybe) {
        if (maybe) apply_config_entry(cfg, key, render(*maybe));
    };
    set("model", opt.model);
    set("data", opt.data);
    set("labels", opt.labels);
    set("optimizer", opt.optimizer);
    set("regime", opt.regime);
    set("lr", opt.lr);
    set("c", opt.c);
    set("gamma", opt.gamma);
    set("f_star", opt.f_star);
    set("d", opt.d);
    set("u", opt.u);
    set("alpha0", opt.alpha0);
    set("b", opt.b);
    set("bh", opt.bh);
    set("epochs", opt.epochs);
    set("seed", opt.seed);
    set("beta", opt.beta);
    set("log_every", opt.log_every);
    set("hidden", opt.hidden);
    set("l2", opt.l2);
    set("dims", opt.dims);
    set("limit", opt.limit);
    if (opt.average) cfg.average_output = true;
    validate(cfg);
    return cfg;
}

void write_csv_to(const MetricLog& log, const std::string& path) {
    if (path.empty() || path == "-") {
        write_csv(log, std::cout);
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open output file: " + path);
    write_csv(log, out);
}

void write_plot_to(const std::vector<PlotSeries>& series, PlotStyle style,
                   const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open plot file: " + path);
    emit_plot(series, style, out);
}

PlotSeries epoch_loss_series(const MetricLog& log, const std::string& name) {
    PlotSeries s;
    s.name = name;
    for (const auto& r : log.records) {
        if (r.kind != MetricRecord::Kind::epoch || !r.loss) continue;
        s.x.push_back(r.epoch);
        s.y.push_back(*r.loss);
    }
    return s;
}

std::vector<PlotSeries> lr_gradnorm_series(const MetricLog& log) {
    PlotSeries gnorm, lr;
    gnorm.name = "grad_norm";
    lr.name = "lr";
    for (const auto& r : log.records) {
        if (r.kind != MetricRecord::Kind::iteration) continue;
        if (r.grad_norm) {
            gnorm.x.push_back(double(r.iteration));
            gnorm.y.push_back(*r.grad_norm);
        }
        if (r.lr) {
            lr.x.push_back(double(r.iteration));
            lr.y.push_back(*r.lr);
        }
    }
    std::vector<PlotSeries> out;
    if (!gnorm.x.empty()) out.push_back(std::move(gnorm));
    if (!lr.x.empty()) out.push_back(std::move(lr));
    return out;
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> values;
    std::stringstream in(text);
    std::string piece;
    while (std::getline(in, piece, ','))
        if (!piece.empty()) values.push_back(detail::parse_num(what, piece));
    if (values.empty()) throw ConfigError(std::string("config: empty list for ") + what);
    return values;
}

std::string describe(const RunOutput& run) {
    std::ostringstream out;
    const auto loss = run.log.final_epoch_loss();
    out << "final loss ";
    if (loss)
        out << detail::fmt17(*loss);
    else
        out << "n/a";
    return out.str();
}

int cmd_train(const CliOptions& opt) {
    const RunConfig cfg = build_config(opt);
    const RunOutput run = run_experiment_full(cfg);
    write_csv_to(run.log, opt.out);
    if (!opt.plot_path.empty())
        write_plot_to({epoch_loss_series(run.log, "training loss")}, PlotStyle::loss_vs_epoch,
                      opt.plot_path);
    std::cerr << "train: " << describe(run) << "\n";
    return 0;
}

int cmd_grid(const CliOptions& opt) {
    RunConfig cfg = build_config(opt);
    cfg.regime.kind = LrKind::constant;
    const std::vector<double> lrs = parse_list(opt.lrs, "lrs");
    const GridResult grid = grid_search(cfg, lrs);
    for (std::size_t i = 0; i < lrs.size(); ++i) {
        std::cout << "lr=" << lrs[i] << "  " << describe(grid.runs[i]) << "\n";
        if (!opt.out.empty() && opt.out != "-")
            write_csv_to(grid.runs[i].log, opt.out + "_lr" + std::to_string(lrs[i]) + ".csv");
    }
    std::cout << "best_lr=" << grid.best_lr << "\n";
    return 0;
}

int cmd_compare(const CliOptions& opt) {
    const RunConfig base = build_config(opt);
    const Dataset data = load_dataset(base);
    const std::string prefix = opt.out.empty() || opt.out == "-" ? "compare" : opt.out;

    struct Entry {
        std::string name;
        RunOutput run;
    };
    std::vector<Entry> entries;

    RunConfig adaptive = base;
    adaptive.regime.kind = LrKind::adaptive;
    entries.push_back({"adaptive", run_experiment_full(adaptive, data)});

    auto short_num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return std::string(buf);
    };

    for (const double c : parse_list(opt.cs, "cs")) {
        RunConfig cfg = base;
        cfg.regime.kind = LrKind::diminishing;
        cfg.regime.c = c;
        entries.push_back({"diminishing_c" + short_num(c), run_experiment_full(cfg, data)});
    }

    RunConfig constant = base;
    constant.regime.kind = LrKind::constant;
    const std::vector<double> lrs = parse_list(opt.lrs, "lrs");
    GridResult grid = grid_search(constant, lrs, data);
    for (std::size_t i = 0; i < grid.runs.size(); ++i)
        entries.push_back({"constant_lr" + short_num(lrs[i]), std::move(grid.runs[i])});

    // per-run CSVs plus one merged CSV with a leading run column
    std::ofstream merged(prefix + "_merged.csv", std::ios::binary);
    if (!merged) throw DataError("cannot open output file: " + prefix + "_merged.csv");
    merged << "run," << kCsvHeader << "\n";
    std::vector<PlotSeries> loss_series;
    for (const Entry& e : entries) {
        write_csv_to(e.run.log, prefix + "_" + e.name + ".csv");
        std::ostringstream body;
        write_csv(e.run.log, body);
        std::istringstream lines(body.str());
        std::string line;
        bool past_header = false;
        while (std::getline(lines, line)) {
            if (line.rfind("#", 0) == 0) continue;
            if (!past_header) {
                past_header = true;
                continue;
            }
            merged << e.name << "," << line << "\n";
        }
        loss_series.push_back(epoch_loss_series(e.run.log, e.name));
        std::cout << e.name << ": " << describe(e.run) << "\n";
    }
    std::cout << "grid best_lr=" << grid.best_lr << "\n";

    write_plot_to(loss_series, PlotStyle::loss_vs_epoch, prefix + "_loss.svg");
    write_plot_to(lr_gradnorm_series(entries.front().run.log), PlotStyle::lr_and_gradnorm_vs_iter,
                  prefix + "_lr.svg");
    return 0;
}

int cmd_bh_sweep(const CliOptions& opt) {
    RunConfig base = build_config(opt);
    base.regime.kind = LrKind::adaptive;
    const Dataset data = load_dataset(base);
    const std::string prefix = opt.out.empty() || opt.out == "-" ? "bh_sweep" : opt.out;

    std::vector<PlotSeries> loss_series;
    double lo = 0.0, hi = 0.0, sum = 0.0;
    const std::vector<double> bhs = parse_list(opt.bhs, "bhs");
    for (std::size_t i = 0; i < bhs.size(); ++i) {
        RunConfig cfg = base;
        cfg.b_h = static_cast<std::size_t>(bhs[i]);
        const RunOutput run = run_experiment_full(cfg, data);
        const double loss = run.log.final_epoch_loss().value_or(
            std::numeric_limits<double>::quiet_NaN());
        std::cout << "bh=" << cfg.b_h << "  " << describe(run) << "\n";
        write_csv_to(run.log, prefix + "_bh" + std::to_string(cfg.b_h) + ".csv");
        loss_series.push_back(epoch_loss_series(run.log, "bh=" + std::to_string(cfg.b_h)));
        lo = (i == 0) ? loss : std::min(lo, loss);
        hi = (i == 0) ? loss : std::max(hi, loss);
        sum += loss;
    }
    std::cout << "relative spread=" << detail::fmt17((hi - lo) / (sum / double(bhs.size())))
              << "\n";
    write_plot_to(loss_series, PlotStyle::loss_vs_epoch, prefix + "_loss.svg");
    return 0;
}

int cmd_plot(const CliOptions& opt) {
    if (opt.inputs.empty()) throw ConfigError("plot: at least one CSV input is required");
    std::vector<PlotSeries> series;
    for (const std::string& path : opt.inputs) {
        std::ifstream in(path);
        if (!in) throw DataError("cannot open CSV file: " + path);
        const MetricLog log = read_csv(in);
        const std::size_t slash = path.find_last_of("/\\");
        const std::string stem = slash == std::string::npos ? path : path.substr(slash + 1);
        if (opt.style == "loss") {
            series.push_back(epoch_loss_series(log, stem));
        } else if (opt.style == "lr") {
            for (auto& s : lr_gradnorm_series(log)) {
                if (opt.inputs.size() > 1) s.name = stem + " " + s.name;
                series.push_back(std::move(s));
            }
        } else {
            throw ConfigError("plot: unknown style '" + opt.style + "' (use loss or lr)");
        }
    }
    const PlotStyle style =
        opt.style == "loss" ? PlotStyle::loss_vs_epoch : PlotStyle::lr_and_gradnorm_vs_iter;
    if (opt.out.empty() || opt.out == "-") {
        emit_plot(series, style, std::cout);
    } else {
        write_plot_to(series, style, opt.out);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stochastic optimization benchmark with gradient-driven learning rates"};
    app.require_subcommand(1);
    CliOptions opt;

    CLI::App* train_cmd = app.add_subcommand("train", "run one experiment and write its CSV");
    add_run_options(train_cmd, opt);
    train_cmd->add_option("--out", opt.out, "CSV output path ('-' for stdout)");
    train_cmd->add_option("--plot", opt.plot_path, "also write a loss-vs-epoch SVG");

    CLI::App* grid_cmd = app.add_subcommand("grid", "constant-LR grid search");
    add_run_options(grid_cmd, opt);
    grid_cmd->add_option("--lrs", opt.lrs, "comma-separated candidate LRs");
    grid_cmd->add_option("--out", opt.out, "per-run CSV path prefix");

    CLI::App* compare_cmd = app.add_subcommand(
        "compare", "adaptive vs diminishing vs grid-best constant for one optimizer");
    add_run_options(compare_cmd, opt);
    compare_cmd->add_option("--lrs", opt.lrs, "constant-LR grid");
    compare_cmd->add_option("--cs", opt.cs, "diminishing-rule constants");
    compare_cmd->add_option("--out", opt.out, "output path prefix");

    CLI::App* bh_cmd = app.add_subcommand("bh-sweep", "adaptive runs across LR batch sizes");
    add_run_options(bh_cmd, opt);
    bh_cmd->add_option("--bhs", opt.bhs, "comma-separated bh values");
    bh_cmd->add_option("--out", opt.out, "output path prefix");

    CLI::App* plot_cmd = app.add_subcommand("plot", "render CSV logs as an SVG");
    plot_cmd->add_option("inputs", opt.inputs, "CSV files");
    plot_cmd->add_option("--style", opt.style, "loss | lr");
    plot_cmd->add_option("--out", opt.out, "SVG output path ('-' for stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;  // flag/parse problems are config errors
    }

    try {
        if (train_cmd->parsed()) return cmd_train(opt);
        if (grid_cmd->parsed()) return cmd_grid(opt);
        if (compare_cmd->parsed()) return cmd_compare(opt);
        if (bh_cmd->parsed()) return cmd_bh_sweep(opt);
        if (plot_cmd->parsed()) return cmd_plot(opt);
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
