#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "sgdkit/core.hpp"
#include "sgdkit/lr.hpp"
#include "sgdkit/models.hpp"

namespace sgdkit {

enum class OptimizerKind { sgd, sgdm, signsgd };

inline std::string_view optimizer_name(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::sgd: return "sgd";
        case OptimizerKind::sgdm: return "sgdm";
        case OptimizerKind::signsgd: return "signsgd";
    }
    return "?";
}

// Full description of one experiment. The dataset decides the model's input
// dimension, so the model here is kind + hyperparameters; l2 left unset
// means the benchmark default (1/m for logistic and SVM, 0 otherwise).
struct RunConfig {
    ModelKind model = ModelKind::logistic;
    std::size_t hidden = 300;
    std::size_t classes = 10;
    std::optional<double> l2;

    std::string data_path;
    std::string labels_path;  // IDX label stream, when loading MNIST
    std::optional<std::size_t> dims;   // force LIBSVM feature dimension
    std::optional<std::size_t> limit;  // use only the first `limit` examples

    OptimizerKind optimizer = OptimizerKind::sgd;
    LrConfig regime;

    std::size_t b = 100;
    std::size_t b_h = 100;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;
    double beta = 0.9;
    std::size_t log_every = 10;
    bool average_output = false;
};

inline bool regime_uses_bh(LrKind kind) {
    return kind == LrKind::adaptive || kind == LrKind::bb;
}

inline void validate(const RunConfig& cfg) {
    if (cfg.b < 1) throw ConfigError("config: b must be >= 1");
    if (cfg.log_every < 1) throw ConfigError("config: log_every must be >= 1");
    if (cfg.beta < 0.0 || cfg.beta >= 1.0) throw ConfigError("config: beta must lie in [0,1)");
    if (regime_uses_bh(cfg.regime.kind) && cfg.b_h < 1)
        throw ConfigError("config: bh must be >= 1 for the adaptive and bb regimes");
    if (cfg.model == ModelKind::mlp && cfg.hidden < 1)
        throw ConfigError("config: hidden must be >= 1");
    if (cfg.l2 && *cfg.l2 < 0.0) throw ConfigError("config: l2 must be >= 0");

    switch (cfg.regime.kind) {
        case LrKind::constant:
            if (cfg.regime.alpha <= 0.0) throw ConfigError("config: lr must be > 0");
            break;
        case LrKind::diminishing:
            if (cfg.regime.c <= 0.0) throw ConfigError("config: c must be > 0");
            break;
        case LrKind::bb:
            if (cfg.regime.gamma <= 0.0) throw ConfigError("config: gamma must be > 0");
            break;
        case LrKind::polyak:
            if (cfg.regime.c <= 0.0) throw ConfigError("config: c must be > 0");
            break;
        case LrKind::multiplicative:
            if (cfg.regime.d <= 0.0 || cfg.regime.d >= 1.0)
                throw ConfigError("config: d must lie in (0,1)");
            if (cfg.regime.u <= 1.0) throw ConfigError("config: u must be > 1");
            if (cfg.regime.alpha0 <= 0.0) throw ConfigError("config: alpha0 must be > 0");
            break;
        case LrKind::adaptive:
            break;
    }
}

}  // namespace sgdkit
