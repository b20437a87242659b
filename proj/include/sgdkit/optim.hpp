#pragma once

#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <string>

#include "sgdkit/config.hpp"
#include "sgdkit/core.hpp"
#include "sgdkit/lr.hpp"
#include "sgdkit/metrics.hpp"
#include "sgdkit/models.hpp"

namespace sgdkit {

// Anything with per-batch loss/gradient and a full-dataset evaluation can be
// trained; models bind through ModelObjective, tests plug in closed-form
// objectives directly.
template <typename F>
concept Objective = requires(const F& f, const ParamVector& x, const IndexBatch& batch) {
    { f.sample_count() } -> std::convertible_to<std::size_t>;
    { f.dim() } -> std::convertible_to<std::size_t>;
    { f.loss_grad(x, batch) } -> std::convertible_to<LossGrad>;
    { f.evaluate(x) } -> std::convertible_to<EvalResult>;
};

// ---------------------------------------------------------------------------
// Step rules
// ---------------------------------------------------------------------------

inline ParamVector sgd_step(const ParamVector& x, const ParamVector& g, double alpha) {
    if (x.size() != g.size()) throw ShapeError("sgd_step: dimension mismatch");
    ParamVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - alpha * g[i];
    return out;
}

// heavy ball: x - alpha g + beta (x - x_prev)
inline ParamVector sgdm_step(const ParamVector& x, const ParamVector& x_prev,
                             const ParamVector& g, double alpha, double beta) {
    if (x.size() != g.size() || x.size() != x_prev.size())
        throw ShapeError("sgdm_step: dimension mismatch");
    ParamVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = x[i] - alpha * g[i] + beta * (x[i] - x_prev[i]);
    return out;
}

inline ParamVector signsgd_step(const ParamVector& x, const ParamVector& g, double alpha) {
    if (x.size() != g.size()) throw ShapeError("signsgd_step: dimension mismatch");
    ParamVector out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
        out[i] = x[i] - alpha * s;
    }
    return out;
}

inline ParamVector average_iterates(const ParamVector& sum, std::size_t n) {
    if (n == 0) throw ConfigError("average_iterates: n must be >= 1");
    ParamVector out(sum);
    scale(out, 1.0 / static_cast<double>(n));
    return out;
}

struct TrainResult {
    ParamVector final;
    ParamVector averaged;
    MetricLog log;
};

// ---------------------------------------------------------------------------
// Training loop. Per iteration the adaptive regime samples S_H, evaluates
// the S_H gradient at the iterate and at the probe point x + g, and turns
// them into the step size; every regime then samples S and applies the
// configured step rule. Epoch accounting follows the fairness convention:
// floor(m/(b+b_H)) iterations per epoch for the adaptive regime, floor(m/b)
// otherwise (clamped to at least one iteration).
// ---------------------------------------------------------------------------

template <typename F>
    requires Objective<F>
TrainResult train(const F& objective, const ParamVector& x0, const RunConfig& cfg,
                  RngState& rng) {
    validate(cfg);
    const std::size_t m = objective.sample_count();
    if (x0.size() != objective.dim()) throw ShapeError("train: x0 dimension mismatch");

    const bool adaptive = cfg.regime.kind == LrKind::adaptive;
    const bool uses_bh = regime_uses_bh(cfg.regime.kind);
    const std::size_t budget = adaptive ? cfg.b + cfg.b_h : cfg.b;
    const std::size_t iters_per_epoch = std::max<std::size_t>(1, m / budget);
    const double epoch_per_iter = static_cast<double>(budget) / static_cast<double>(m);

    ParamVector x = x0;
    ParamVector x_prev = x0;
    ParamVector running_sum(x0.size(), 0.0);
    LrController controller(cfg.regime, cfg.b, cfg.b_h);

    TrainResult result;
    MetricLog& log = result.log;
    std::uint64_t t = 0;
    std::uint64_t grad_examples = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t i = 0; i < iters_per_epoch; ++i) {
            ++t;
            LrController::Inputs inputs;
            LossGrad lg_bh, lg_probe, lg_bh_prev;
            if (uses_bh) {
                const IndexBatch s_h = sample_batch(rng, m, cfg.b_h);
                lg_bh = objective.loss_grad(x, s_h);
                grad_examples += cfg.b_h;
                inputs.g_bh = &lg_bh.grad;
                if (adaptive) {
                    ParamVector probe = x;
                    axpy(1.0, lg_bh.grad, probe);
                    lg_probe = objective.loss_grad(probe, s_h);
                    grad_examples += cfg.b_h;
                    inputs.g_probe = &lg_probe.grad;
                } else if (t > 1) {
                    lg_bh_prev = objective.loss_grad(x_prev, s_h);
                    grad_examples += cfg.b_h;
                    inputs.x = &x;
                    inputs.x_prev = &x_prev;
                    inputs.g_bh_prev = &lg_bh_prev.grad;
                }
            }

            const IndexBatch s = sample_batch(rng, m, cfg.b);
            const LossGrad lg = objective.loss_grad(x, s);
            grad_examples += cfg.b;
            inputs.batch_loss = lg.loss;
            inputs.g_batch = &lg.grad;

            const auto [alpha, guarded] = controller.next(inputs);

            ParamVector next;
            switch (cfg.optimizer) {
                case OptimizerKind::sgd: next = sgd_step(x, lg.grad, alpha); break;
                case OptimizerKind::sgdm: next = sgdm_step(x, x_prev, lg.grad, alpha, cfg.beta); break;
                case OptimizerKind::signsgd: next = signsgd_step(x, lg.grad, alpha); break;
            }

            if (!std::isfinite(lg.loss) || !all_finite(next))
                throw DivergenceError("non-finite loss or parameter at iteration " +
                                          std::to_string(t),
                                      t);

            x_prev = std::move(x);
            x = std::move(next);
            axpy(1.0, x, running_sum);

            if (t % cfg.log_every == 0) {
                const double gnorm = uses_bh ? norm(lg_bh.grad) : norm(lg.grad);
                log.add_iteration(static_cast<double>(t) * epoch_per_iter, t, gnorm, alpha,
                                  guarded);
            }
        }

        const EvalResult ev = objective.evaluate(x);
        if (!std::isfinite(ev.loss))
            throw DivergenceError("non-finite training loss after iteration " + std::to_string(t),
                                  t);
        log.add_epoch(static_cast<double>(t) * epoch_per_iter, t, ev.loss, ev.accuracy);
    }

    result.final = x;
    result.averaged = (t > 0) ? average_iterates(running_sum, t) : x0;

    log.meta("iterations", std::to_string(t));
    log.meta("iters_per_epoch", std::to_string(cfg.epochs > 0 ? iters_per_epoch : 0));
    log.meta("guard_events", std::to_string(controller.guard_events()));
    log.meta("cap_events", std::to_string(controller.cap_events()));
    log.meta("grad_examples", std::to_string(grad_examples));
    log.meta("budget_examples", std::to_string(t * budget));
    if (cfg.average_output && t > 0) {
        const EvalResult avg = objective.evaluate(result.averaged);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", avg.loss);
        log.meta("averaged_loss", buf);
        std::snprintf(buf, sizeof buf, "%.17g", avg.accuracy);
        log.meta("averaged_accuracy", buf);
    }
    return result;
}

// Model-bound convenience wrapper: seeds the parameters from the run's RNG
// and trains on the dataset.
inline TrainResult train(const ModelSpec& spec, const Dataset& data, const RunConfig& cfg,
                         RngState& rng) {
    const ModelObjective objective{&spec, &data};
    const ParamVector x0 = init_params(spec, rng);
    return train(objective, x0, cfg, rng);
}

}  // namespace sgdkit
