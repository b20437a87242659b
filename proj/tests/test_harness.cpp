#include <future>
#include <sstream>
#include <string>

#include "doctest.h"
#include "sgdkit/harness.hpp"
#include "sgdkit/plot.hpp"

using namespace sgdkit;

namespace {

std::string to_csv(const MetricLog& log) {
    std::ostringstream out;
    const std::size_t n = write_csv(log, out);
    CHECK(n == out.str().size());
    return out.str();
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

RunConfig tiny_adaptive_config() {
    RunConfig cfg;
    cfg.model = ModelKind::logistic;
    cfg.data_path = "synth:sparse:m=1000,d=20,nnz=5,flip=0.05,seed=2";
    cfg.regime.kind = LrKind::adaptive;
    cfg.b = 50;
    cfg.b_h = 50;
    cfg.epochs = 3;
    cfg.seed = 42;
    return cfg;
}

}  // namespace

TEST_CASE("empty log serializes to metadata plus header") {
    MetricLog log;
    log.meta("model", "logistic");
    const std::string text = to_csv(log);
    CHECK(text == "# model=logistic\nkind,epoch,iteration,loss,accuracy,grad_norm,lr,guarded\n");
}

TEST_CASE("epoch records leave the iteration-only cells empty") {
    MetricLog log;
    log.add_epoch(1.0, 100, 0.5, 0.9);
    const std::string text = to_csv(log);
    CHECK(text.find("epoch,1,100,0.5,0.90000000000000002,,,\n") != std::string::npos);
}

TEST_CASE("csv write/read round-trips records and metadata") {
    MetricLog log;
    log.meta("alpha", "0.1");
    log.meta("note", "x=y");
    log.add_iteration(0.25, 10, 0.125, 1.0 / 3.0, true);
    log.add_epoch(1.0, 40, 0.6931471805599453, 0.5);
    const std::string text = to_csv(log);
    std::istringstream in(text);
    const MetricLog back = read_csv(in);
    CHECK(to_csv(back) == text);
    REQUIRE(back.records.size() == 2);
    CHECK(back.records[0].lr == 1.0 / 3.0);
    CHECK(back.records[0].guarded == true);
    CHECK(!back.records[0].loss.has_value());
    CHECK(back.records[1].loss == 0.6931471805599453);
}

TEST_CASE("read_csv rejects malformed input") {
    std::istringstream bad_header("kind,epoch\n");
    CHECK_THROWS_AS(read_csv(bad_header), DataError);
    std::istringstream bad_row(std::string(kCsvHeader) + "\nepoch,1\n");
    CHECK_THROWS_AS(read_csv(bad_row), DataError);
    std::istringstream empty("");
    CHECK_THROWS_AS(read_csv(empty), DataError);
}

TEST_CASE("identical configs produce byte-identical csv") {
    const RunConfig cfg = tiny_adaptive_config();
    const std::string a = to_csv(run_experiment(cfg));
    const std::string b = to_csv(run_experiment(cfg));
    CHECK(a == b);
    CHECK(a.find("# rng=xoshiro256**\n") != std::string::npos);
}

TEST_CASE("record cadence follows the epoch accounting") {
    RunConfig cfg = tiny_adaptive_config();
    cfg.log_every = 10;
    const MetricLog log = run_experiment(cfg);
    // m/(b+bh) = 10 iterations/epoch, 3 epochs -> 30 iterations
    std::size_t epochs = 0, iters = 0;
    for (const auto& r : log.records)
        (r.kind == MetricRecord::Kind::epoch ? epochs : iters) += 1;
    CHECK(epochs == 3);
    CHECK(iters == 3);
    double prev = -1.0;
    for (const auto& r : log.records) {
        CHECK(double(r.iteration) >= prev);
        prev = double(r.iteration);
    }
}

TEST_CASE("grid search returns the dominating lr with ties to the smaller value") {
    RunConfig base = tiny_adaptive_config();
    base.regime.kind = LrKind::constant;
    base.epochs = 5;
    const std::vector<double> lrs{0.001, 0.01, 0.05, 0.1};
    const GridResult grid = grid_search(base, lrs);
    REQUIRE(grid.runs.size() == 4);
    double best_loss = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lrs.size(); ++i) {
        const double loss = grid.runs[i].log.final_epoch_loss().value();
        if (lrs[i] == grid.best_lr) best_loss = loss;
    }
    for (const auto& run : grid.runs)
        CHECK(best_loss <= run.log.final_epoch_loss().value());

    const GridResult one = grid_search(base, {0.007});
    CHECK(one.best_lr == 0.007);
    CHECK_THROWS_AS(grid_search(base, {}), ConfigError);
    RunConfig wrong = base;
    wrong.regime.kind = LrKind::adaptive;
    CHECK_THROWS_AS(grid_search(wrong, lrs), ConfigError);
}

TEST_CASE("run config carries the benchmark defaults") {
    const RunConfig cfg;
    CHECK(cfg.beta == 0.9);
    CHECK(cfg.b == 100);
    CHECK(cfg.b_h == 100);
    CHECK(cfg.epochs == 30);
    CHECK(cfg.log_every == 10);
    CHECK(cfg.hidden == 300);
    CHECK(!cfg.average_output);
}

TEST_CASE("config files parse, override, and reject unknown keys") {
    RunConfig cfg;
    std::istringstream file(
        "# experiment\n"
        "model = svm\n"
        "regime=diminishing\n"
        "c = 0.5   # inline comment\n"
        "b=32\n"
        "average=true\n"
        "seed=7\n");
    load_config_stream(cfg, file);
    CHECK(cfg.model == ModelKind::svm);
    CHECK(cfg.regime.kind == LrKind::diminishing);
    CHECK(cfg.regime.c == 0.5);
    CHECK(cfg.b == 32);
    CHECK(cfg.average_output);
    CHECK(cfg.seed == 7);

    CHECK_THROWS_WITH_AS(apply_config_entry(cfg, "regime", "adamw"),
                         doctest::Contains("unknown regime"), ConfigError);
    CHECK_THROWS_WITH_AS(apply_config_entry(cfg, "warmup", "5"), doctest::Contains("unknown key"),
                         ConfigError);
    CHECK_THROWS_AS(apply_config_entry(cfg, "b", "few"), ConfigError);
}

TEST_CASE("config validation names the offending field") {
    RunConfig cfg = tiny_adaptive_config();
    cfg.b = 0;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("b must be"), ConfigError);
    cfg = tiny_adaptive_config();
    cfg.beta = 1.0;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("beta"), ConfigError);
    cfg = tiny_adaptive_config();
    cfg.b_h = 0;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("bh"), ConfigError);
    cfg = tiny_adaptive_config();
    cfg.regime.kind = LrKind::constant;
    cfg.regime.alpha = -0.1;
    CHECK_THROWS_WITH_AS(validate(cfg), doctest::Contains("lr"), ConfigError);
}

TEST_CASE("synthetic dataset URIs") {
    RunConfig cfg;
    cfg.data_path = "synth:blobs:m=60,d=8,k=3,seed=5";
    const Dataset blobs = load_dataset(cfg);
    CHECK(blobs.m() == 60);
    CHECK(blobs.d() == 8);
    CHECK(blobs.task() == Task::multiclass);

    cfg.data_path = "synth:sparse:m=40,d=12,nnz=3,seed=5";
    cfg.limit = 25;
    const Dataset sparse = load_dataset(cfg);
    CHECK(sparse.m() == 25);

    cfg.limit.reset();
    cfg.data_path = "synth:lsq:m=30,d=5,a=2,seed=5";
    const Dataset lsq = load_dataset(cfg);
    CHECK(lsq.task() == Task::regression);

    cfg.data_path = "synth:stars:m=5";
    CHECK_THROWS_WITH_AS(load_dataset(cfg), doctest::Contains("unknown synth"), ConfigError);
    cfg.data_path = "synth:blobs:m=5,weird=1";
    CHECK_THROWS_WITH_AS(load_dataset(cfg), doctest::Contains("weird"), ConfigError);
    cfg.data_path = "missing_file.libsvm";
    CHECK_THROWS_AS(load_dataset(cfg), DataError);
}

TEST_CASE("model/task mismatches are rejected up front") {
    RunConfig cfg = tiny_adaptive_config();
    cfg.model = ModelKind::mlp;
    CHECK_THROWS_WITH_AS(run_experiment(cfg), doctest::Contains("multiclass"), ConfigError);
    cfg = tiny_adaptive_config();
    cfg.model = ModelKind::logistic;
    cfg.data_path = "synth:blobs:m=50,d=6,k=3,seed=1";
    CHECK_THROWS_WITH_AS(run_experiment(cfg), doctest::Contains("binary"), ConfigError);
}

TEST_CASE("concurrent runs on one shared dataset stay deterministic") {
    RunConfig cfg = tiny_adaptive_config();
    const Dataset data = load_dataset(cfg);
    auto serialize_run = [&]() {
        std::ostringstream out;
        write_csv(run_experiment_full(cfg, data).log, out);
        return out.str();
    };
    auto a = std::async(std::launch::async, serialize_run);
    auto b = std::async(std::launch::async, serialize_run);
    const std::string ra = a.get(), rb = b.get();
    CHECK(ra == rb);
    CHECK(ra == serialize_run());
}

TEST_CASE("plots contain one polyline per series and are deterministic") {
    std::vector<PlotSeries> series{{"run a", {0.0, 1.0}, {1.0, 0.5}}};
    std::ostringstream one;
    emit_plot(series, PlotStyle::loss_vs_epoch, one);
    CHECK(count_occurrences(one.str(), "<polyline") == 1);
    CHECK(one.str().rfind("<svg", 0) == 0);

    series.push_back({"run b", {0.0, 0.5, 1.0}, {2.0, 1.5, 1.2}});
    std::ostringstream two_a, two_b;
    emit_plot(series, PlotStyle::loss_vs_epoch, two_a);
    emit_plot(series, PlotStyle::loss_vs_epoch, two_b);
    CHECK(two_a.str() == two_b.str());
    CHECK(count_occurrences(two_a.str(), "<polyline") == 2);
}

TEST_CASE("plot validation") {
    std::ostringstream out;
    CHECK_THROWS_AS(emit_plot({}, PlotStyle::loss_vs_epoch, out), ConfigError);
    std::vector<PlotSeries> empty_series{{"x", {}, {}}};
    CHECK_THROWS_AS(emit_plot(empty_series, PlotStyle::loss_vs_epoch, out), ConfigError);
    std::vector<PlotSeries> non_monotone{{"x", {0.0, 0.0}, {1.0, 2.0}}};
    CHECK_THROWS_AS(emit_plot(non_monotone, PlotStyle::loss_vs_epoch, out), ConfigError);
}

TEST_CASE("gradient-norm panel switches to log scale") {
    std::vector<PlotSeries> series{{"grad_norm", {1.0, 2.0, 3.0}, {1.0, 0.1, 0.001}},
                                   {"lr", {1.0, 2.0, 3.0}, {0.1, 0.2, 0.4}}};
    std::ostringstream out;
    emit_plot(series, PlotStyle::lr_and_gradnorm_vs_iter, out);
    const std::string svg = out.str();
    CHECK(svg.find("log scale") != std::string::npos);
    CHECK(count_occurrences(svg, "<polyline") == 2);
    CHECK(svg.find("learning rate") != std::string::npos);
}
