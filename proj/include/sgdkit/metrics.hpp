#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace sgdkit {

// One logged event. Epoch records carry the full-dataset loss/accuracy;
// iteration records carry the sampled gradient norm and the emitted LR.
struct MetricRecord {
    enum class Kind { epoch, iteration };

    Kind kind = Kind::iteration;
    double epoch = 0.0;  // fractional epochs elapsed (example touches / m)
    std::uint64_t iteration = 0;
    std::optional<double> loss;
    std::optional<double> accuracy;
    std::optional<double> grad_norm;
    std::optional<double> lr;
    std::optional<bool> guarded;
};

struct MetricLog {
    std::vector<std::pair<std::string, std::string>> metadata;  // ordered key=value
    std::vector<MetricRecord> records;

    void meta(std::string key, std::string value) {
        metadata.emplace_back(std::move(key), std::move(value));
    }

    void add_epoch(double epoch, std::uint64_t iteration, double loss, double accuracy) {
        MetricRecord r;
        r.kind = MetricRecord::Kind::epoch;
        r.epoch = epoch;
        r.iteration = iteration;
        r.loss = loss;
        r.accuracy = accuracy;
        records.push_back(r);
    }

    void add_iteration(double epoch, std::uint64_t iteration, double grad_norm, double lr,
                       bool guarded) {
        MetricRecord r;
        r.kind = MetricRecord::Kind::iteration;
        r.epoch = epoch;
        r.iteration = iteration;
        r.grad_norm = grad_norm;
        r.lr = lr;
        r.guarded = guarded;
        records.push_back(r);
    }

    std::optional<double> final_epoch_loss() const {
        for (auto it = records.rbegin(); it != records.rend(); ++it)
            if (it->kind == MetricRecord::Kind::epoch) return it->loss;
        return std::nullopt;
    }
};

}  // namespace sgdkit
