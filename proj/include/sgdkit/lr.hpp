#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "sgdkit/core.hpp"

namespace sgdkit {

// ---------------------------------------------------------------------------
// Learning-rate regimes. The adaptive rule reads two gradients of the same
// LR sample S_H: g at the iterate and g_probe at the probe point x + g.
// With shat = g and yhat = g_probe - g,
//     alpha = (1/sqrt(b_H)) * ||shat||^2 / (<yhat, shat> + ||shat||^2)
// and the denominator collapses to <g_probe, g>.
// ---------------------------------------------------------------------------

enum class LrKind { adaptive, constant, diminishing, bb, polyak, multiplicative };

inline std::string_view lr_kind_name(LrKind k) {
    switch (k) {
        case LrKind::adaptive: return "adaptive";
        case LrKind::constant: return "constant";
        case LrKind::diminishing: return "diminishing";
        case LrKind::bb: return "bb";
        case LrKind::polyak: return "polyak";
        case LrKind::multiplicative: return "multiplicative";
    }
    return "?";
}

struct LrConfig {
    LrKind kind = LrKind::adaptive;
    double alpha = 0.1;    // constant
    double c = 1.0;        // diminishing / polyak
    double gamma = 1.0;    // bb
    double f_star = 0.0;   // polyak
    double d = 0.95;       // multiplicative shrink
    double u = 1.01;       // multiplicative growth
    double alpha0 = 0.1;   // multiplicative initial LR
};

// Guard policy: degenerate gradients or denominators fall back to the
// previously emitted LR (1/(2 sqrt(b_H)) before any emission); adaptive and
// BB values are capped at 10/sqrt(b_H).
inline constexpr double kEpsGrad = 1e-12;
inline constexpr double kEpsDenom = 1e-12;

inline double lr_cap(std::size_t b_h) { return 10.0 / std::sqrt(static_cast<double>(b_h)); }
inline double lr_initial_fallback(std::size_t b_h) {
    return 0.5 / std::sqrt(static_cast<double>(b_h));
}

struct AdaptiveLrStep {
    double alpha;
    bool guarded;
    bool capped;
};

inline AdaptiveLrStep adaptive_lr(const ParamVector& g, const ParamVector& g_probe,
                                  std::size_t b_h, double fallback_lr) {
    if (b_h == 0) throw ConfigError("adaptive_lr: b_h must be positive");
    if (g.size() != g_probe.size())
        throw ShapeError("adaptive_lr: gradient dimension mismatch");
    const double gg = squared_norm(g);
    const double denom = dot(g_probe, g);
    if (gg < kEpsGrad || denom < kEpsDenom) return {fallback_lr, true, false};
    const double raw = gg / denom / std::sqrt(static_cast<double>(b_h));
    const double cap = lr_cap(b_h);
    if (raw > cap) return {cap, false, true};
    return {raw, false, false};
}

inline double diminishing_lr(double c, std::uint64_t t) {
    if (c <= 0.0) throw ConfigError("diminishing_lr: c must be > 0");
    return c / static_cast<double>(t + 1);
}

// Stochastic BB step: (gamma/b_H) ||x_t - x_prev||^2 / <g_t - g_prev, x_t - x_prev>,
// both gradients taken on the same S_H sample. nullopt signals a degenerate
// displacement or denominator; the caller falls back.
inline std::optional<double> bb_lr(const ParamVector& x_t, const ParamVector& x_prev,
                                   const ParamVector& g_t, const ParamVector& g_prev,
                                   double gamma, std::size_t b_h) {
    if (gamma <= 0.0) throw ConfigError("bb_lr: gamma must be > 0");
    if (b_h == 0) throw ConfigError("bb_lr: b_h must be positive");
    if (x_t.size() != x_prev.size() || g_t.size() != g_prev.size() || x_t.size() != g_t.size())
        throw ShapeError("bb_lr: dimension mismatch");
    double ss = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x_t.size(); ++i) {
        const double s = x_t[i] - x_prev[i];
        ss += s * s;
        sy += (g_t[i] - g_prev[i]) * s;
    }
    if (ss < kEpsGrad) return std::nullopt;   // zero displacement
    if (sy <= kEpsDenom) return std::nullopt; // non-positive curvature estimate
    return gamma / static_cast<double>(b_h) * ss / sy;
}

// Stochastic Polyak step: (f_i - f_star) / (c ||grad||^2). Returns 0 exactly
// at the optimum; nullopt when the gradient vanished away from it.
inline std::optional<double> polyak_lr(double f_i, double f_star, double grad_norm_sq, double c) {
    if (c <= 0.0) throw ConfigError("polyak_lr: c must be > 0");
    if (f_i < f_star) throw ConfigError("polyak_lr: requires f_i >= f_star");
    if (f_i == f_star) return 0.0;
    if (grad_norm_sq <= kEpsGrad) return std::nullopt;
    return (f_i - f_star) / (c * grad_norm_sq);
}

// Grow by u while consecutive stochastic gradients agree, shrink by d when
// they oppose; the scalar sign test generalized to an inner product.
inline double multiplicative_lr(double alpha_prev, const ParamVector& g_t,
                                const ParamVector& g_prev, double d, double u) {
    if (alpha_prev <= 0.0) throw ConfigError("multiplicative_lr: alpha_prev must be > 0");
    if (d <= 0.0 || d >= 1.0) throw ConfigError("multiplicative_lr: d must lie in (0,1)");
    if (u <= 1.0) throw ConfigError("multiplicative_lr: u must be > 1");
    return (dot(g_t, g_prev) > 0.0) ? u * alpha_prev : d * alpha_prev;
}

// ---------------------------------------------------------------------------
// LrController: owns one regime's mutable state inside a training run and
// applies the guard policy uniformly. Inputs are regime-specific; the
// training loop fills only what the configured regime reads.
// ---------------------------------------------------------------------------

class LrController {
public:
    struct Inputs {
        const ParamVector* g_bh = nullptr;       // adaptive/bb: grad on S_H at x_t
        const ParamVector* g_probe = nullptr;    // adaptive: grad on S_H at x_t + g_bh
        const ParamVector* x = nullptr;          // bb
        const ParamVector* x_prev = nullptr;     // bb (null on the first iteration)
        const ParamVector* g_bh_prev = nullptr;  // bb: grad on the same S_H at x_prev
        double batch_loss = 0.0;                 // polyak
        const ParamVector* g_batch = nullptr;    // polyak / multiplicative
    };

    struct Emitted {
        double alpha;
        bool guarded;
    };

    LrController(const LrConfig& cfg, std::size_t b, std::size_t b_h)
        : cfg_(cfg), b_h_(b_h), initial_fallback_(lr_initial_fallback(b_h > 0 ? b_h : b)) {}

    Emitted next(const Inputs& in) {
        Emitted out{0.0, false};
        switch (cfg_.kind) {
            case LrKind::constant:
                out.alpha = cfg_.alpha;
                break;
            case LrKind::diminishing:
                out.alpha = diminishing_lr(cfg_.c, t_);
                break;
            case LrKind::adaptive: {
                const AdaptiveLrStep step = adaptive_lr(*in.g_bh, *in.g_probe, b_h_, fallback());
                out.alpha = step.alpha;
                out.guarded = step.guarded;
                if (step.capped) ++cap_events_;
                break;
            }
            case LrKind::bb: {
                std::optional<double> alpha;
                if (in.x_prev != nullptr && in.g_bh_prev != nullptr)
                    alpha = bb_lr(*in.x, *in.x_prev, *in.g_bh, *in.g_bh_prev, cfg_.gamma, b_h_);
                if (alpha) {
                    const double cap = lr_cap(b_h_);
                    if (*alpha > cap) {
                        out.alpha = cap;
                        ++cap_events_;
                    } else {
                        out.alpha = *alpha;
                    }
                } else {
                    out.alpha = fallback();
                    out.guarded = true;
                }
                break;
            }
            case LrKind::polyak: {
                const std::optional<double> alpha =
                    polyak_lr(in.batch_loss, cfg_.f_star, squared_norm(*in.g_batch), cfg_.c);
                if (alpha && *alpha > 0.0) {
                    out.alpha = *alpha;
                } else {
                    out.alpha = fallback();
                    out.guarded = true;
                }
                break;
            }
            case LrKind::multiplicative: {
                if (t_ == 0) {
                    out.alpha = cfg_.alpha0;
                } else {
                    out.alpha = multiplicative_lr(prev_alpha_, *in.g_batch, prev_g_batch_, cfg_.d,
                                                  cfg_.u);
                }
                prev_g_batch_ = *in.g_batch;
                break;
            }
        }
        if (!(out.alpha > 0.0) || !std::isfinite(out.alpha))
            throw DivergenceError("learning rate became non-positive or non-finite", t_ + 1);
        prev_alpha_ = out.alpha;
        ++t_;
        if (out.guarded) ++guard_events_;
        return out;
    }

    std::uint64_t guard_events() const { return guard_events_; }
    std::uint64_t cap_events() const { return cap_events_; }

private:
    double fallback() const { return prev_alpha_ > 0.0 ? prev_alpha_ : initial_fallback_; }

    LrConfig cfg_;
    std::size_t b_h_;
    double initial_fallback_;
    double prev_alpha_ = -1.0;
    ParamVector prev_g_batch_;
    std::uint64_t t_ = 0;
    std::uint64_t guard_events_ = 0;
    std::uint64_t cap_events_ = 0;
};

}  // namespace sgdkit
