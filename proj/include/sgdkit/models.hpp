#pragma once

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "sgdkit/core.hpp"
#include "sgdkit/data.hpp"
#include "sgdkit/parallel.hpp"

namespace sgdkit {

// ---------------------------------------------------------------------------
// Model families. The linear kinds (logistic, squared-hinge SVM, least
// squares) keep all d_in weights in one flat vector; the MLP flattens
// [W1 | b1 | W2 | b2] with row-major weight blocks.
// ---------------------------------------------------------------------------

enum class ModelKind { logistic, svm, mlp, least_squares };

inline std::string_view model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::logistic: return "logistic";
        case ModelKind::svm: return "svm";
        case ModelKind::mlp: return "mlp";
        case ModelKind::least_squares: return "least_squares";
    }
    return "?";
}

struct ModelSpec {
    ModelKind kind = ModelKind::logistic;
    std::size_t d_in = 0;
    std::size_t hidden = 300;   // mlp only
    std::size_t classes = 10;   // mlp only
    double l2 = 0.0;

    std::size_t param_count() const {
        if (kind == ModelKind::mlp) return hidden * d_in + hidden + classes * hidden + classes;
        return d_in;
    }
};

// benchmark convention: 1/m for the convex models, none for the MLP
inline double default_l2(ModelKind kind, std::size_t m) {
    if (kind == ModelKind::logistic || kind == ModelKind::svm) return 1.0 / static_cast<double>(m);
    return 0.0;
}

struct LossGrad {
    double loss = 0.0;
    ParamVector grad;
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

namespace detail {

inline double stable_sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// ln(1 + e^t) without overflow
inline double log1pexp(double t) {
    if (t <= -37.0) return std::exp(t);
    if (t <= 18.0) return std::log1p(std::exp(t));
    if (t <= 33.3) return t + std::exp(-t);
    return t;
}

inline void check_batch(const Dataset& data, const IndexBatch& batch) {
    if (batch.size() == 0) throw ConfigError("loss_grad: empty batch");
    if (batch.source_size != data.m())
        throw ShapeError("loss_grad: batch was sampled from a different dataset size");
}

inline void check_binary_label(double y) {
    if (y != 1.0 && y != -1.0)
        throw DataError("task-mismatch: binary model requires labels in {-1,+1}, got " +
                        std::to_string(y));
}

// Fixed chunking plus in-order combination keeps batch reductions
// bit-identical for any worker count.
template <typename Body>
void run_chunked(std::size_t n, const ChunkPlan& plan, Body&& body) {
    std::function<void(std::size_t)> task = [&](std::size_t c) {
        body(c, plan.begin(c), plan.end(c, n));
    };
    ThreadPool::instance().run(plan.chunks, task);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear-model oracles
// ---------------------------------------------------------------------------

namespace detail {

enum class LinearLoss { logistic, squared_hinge, half_squared };

// per-example loss and d(loss)/dz at margin/residual z
inline void linear_loss_terms(LinearLoss kind, double z, double y, double& loss, double& dz) {
    switch (kind) {
        case LinearLoss::logistic: {
            check_binary_label(y);
            const double t = -y * z;
            loss = log1pexp(t);
            dz = -y * stable_sigmoid(t);
            break;
        }
        case LinearLoss::squared_hinge: {
            check_binary_label(y);
            const double margin = 1.0 - y * z;
            if (margin > 0.0) {
                loss = margin * margin;
                dz = -2.0 * margin * y;
            } else {
                loss = 0.0;
                dz = 0.0;
            }
            break;
        }
        case LinearLoss::half_squared: {
            const double r = z - y;
            loss = 0.5 * r * r;
            dz = r;
            break;
        }
    }
}

inline LinearLoss linear_loss_of(ModelKind kind) {
    switch (kind) {
        case ModelKind::logistic: return LinearLoss::logistic;
        case ModelKind::svm: return LinearLoss::squared_hinge;
        case ModelKind::least_squares: return LinearLoss::half_squared;
        default: throw ConfigError("not a linear model");
    }
}

inline LossGrad linear_loss_grad(const ModelSpec& spec, const ParamVector& w, const Dataset& data,
                                 const IndexBatch& batch) {
    if (w.size() != spec.param_count())
        throw ShapeError("loss_grad: parameter vector has dim " + std::to_string(w.size()) +
                         ", model expects " + std::to_string(spec.param_count()));
    check_batch(data, batch);
    const LinearLoss lk = linear_loss_of(spec.kind);
    const std::size_t n = batch.size();
    const ChunkPlan plan = plan_chunks(n);

    std::vector<double> losses(plan.chunks, 0.0);
    std::vector<ParamVector> grads(plan.chunks, ParamVector(w.size(), 0.0));
    run_chunked(n, plan, [&](std::size_t c, std::size_t lo, std::size_t hi) {
        double loss_sum = 0.0;
        ParamVector& g = grads[c];
        for (std::size_t k = lo; k < hi; ++k) {
            const std::size_t i = batch.indices[k];
            const double z = data.row_dot(i, w);
            double loss, dz;
            linear_loss_terms(lk, z, data.label(i), loss, dz);
            loss_sum += loss;
            if (dz != 0.0) data.row_axpy(i, dz, g);
        }
        losses[c] = loss_sum;
    });

    LossGrad out;
    out.grad.assign(w.size(), 0.0);
    double loss_sum = 0.0;
    for (std::size_t c = 0; c < plan.chunks; ++c) {
        loss_sum += losses[c];
        for (std::size_t j = 0; j < w.size(); ++j) out.grad[j] += grads[c][j];
    }
    const double inv = 1.0 / static_cast<double>(n);
    out.loss = loss_sum * inv;
    scale(out.grad, inv);
    if (spec.l2 > 0.0) {
        out.loss += 0.5 * spec.l2 * squared_norm(w);
        axpy(spec.l2, w, out.grad);
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// MLP oracle: sigmoid hidden layer, softmax output, mean cross-entropy.
// Examples are processed in small blocks so weight rows stay cache-hot.
// ---------------------------------------------------------------------------

namespace detail {

constexpr std::size_t kMlpBlock = 16;

// independent accumulators so the reduction is not FMA-latency bound
inline double dot_n(const double* a, const double* b, std::size_t n) {
    double acc[8] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    std::size_t t = 0;
    for (; t + 8 <= n; t += 8)
        for (int k = 0; k < 8; ++k) acc[k] += a[t + k] * b[t + k];
    double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (; t < n; ++t) s += a[t] * b[t];
    return s;
}

inline void axpy_n(double c, const double* x, double* y, std::size_t n) {
    for (std::size_t t = 0; t < n; ++t) y[t] += c * x[t];
}

struct MlpLayout {
    std::size_t d, h, k;
    std::size_t w1 = 0, b1, w2, b2, total;

    explicit MlpLayout(const ModelSpec& spec)
        : d(spec.d_in), h(spec.hidden), k(spec.classes) {
        b1 = h * d;
        w2 = b1 + h;
        b2 = w2 + k * h;
        total = b2 + k;
    }
};

// forward one block; rows of X/H/P are contiguous. Returns summed loss.
// When grad_w1 != nullptr also accumulates the (unscaled) gradient.
inline double mlp_block(const MlpLayout& L, const double* theta, const Dataset& data,
                        const std::uint32_t* idx, std::size_t nb, double* X, double* H, double* P,
                        double* dA, double* grad, std::size_t* correct) {
    const double* W1 = theta;
    const double* B1 = theta + L.b1;
    const double* W2 = theta + L.w2;
    const double* B2 = theta + L.b2;

    for (std::size_t b = 0; b < nb; ++b) data.row_copy(idx[b], X + b * L.d);

    // H = sigmoid(X W1^T + b1); W1 row reused across the block
    for (std::size_t j = 0; j < L.h; ++j) {
        const double* w = W1 + j * L.d;
        for (std::size_t b = 0; b < nb; ++b)
            H[b * L.h + j] = stable_sigmoid(dot_n(w, X + b * L.d, L.d) + B1[j]);
    }

    // logits + row softmax
    for (std::size_t j = 0; j < L.k; ++j) {
        const double* w = W2 + j * L.h;
        for (std::size_t b = 0; b < nb; ++b)
            P[b * L.k + j] = dot_n(w, H + b * L.h, L.h) + B2[j];
    }

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
        double* p = P + b * L.k;
        double zmax = p[0];
        for (std::size_t j = 1; j < L.k; ++j) zmax = std::max(zmax, p[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < L.k; ++j) {
            p[j] = std::exp(p[j] - zmax);
            denom += p[j];
        }
        const double label = data.label(idx[b]);
        const auto y = static_cast<std::size_t>(label);
        if (label < 0 || y >= L.k || label != static_cast<double>(y))
            throw DataError("task-mismatch: mlp expects class labels 0-" + std::to_string(L.k - 1));
        loss_sum += std::log(denom) - std::log(p[y]);
        const double inv = 1.0 / denom;
        for (std::size_t j = 0; j < L.k; ++j) p[j] *= inv;
        if (correct) {
            std::size_t argmax = 0;
            for (std::size_t j = 1; j < L.k; ++j)
                if (p[j] > p[argmax]) argmax = j;
            if (argmax == y) ++(*correct);
        }
        if (grad) p[y] -= 1.0;  // dZ row
    }
    if (!grad) return loss_sum;

    double* gW1 = grad;
    double* gB1 = grad + L.b1;
    double* gW2 = grad + L.w2;
    double* gB2 = grad + L.b2;

    // gW2 += dZ^T H, gb2 += colsum dZ
    for (std::size_t j = 0; j < L.k; ++j) {
        double* gw = gW2 + j * L.h;
        for (std::size_t b = 0; b < nb; ++b) {
            const double c = P[b * L.k + j];
            gB2[j] += c;
            if (c != 0.0) axpy_n(c, H + b * L.h, gw, L.h);
        }
    }

    // dA = (dZ W2) * H * (1 - H)
    for (std::size_t b = 0; b < nb; ++b) {
        double* da = dA + b * L.h;
        std::memset(da, 0, L.h * sizeof(double));
        const double* pz = P + b * L.k;
        for (std::size_t j = 0; j < L.k; ++j) {
            if (pz[j] != 0.0) axpy_n(pz[j], W2 + j * L.h, da, L.h);
        }
        const double* h = H + b * L.h;
        for (std::size_t t = 0; t < L.h; ++t) da[t] *= h[t] * (1.0 - h[t]);
    }

    // gW1 += dA^T X, gb1 += colsum dA; gW1 row reused across the block
    for (std::size_t j = 0; j < L.h; ++j) {
        double* gw = gW1 + j * L.d;
        for (std::size_t b = 0; b < nb; ++b) {
            const double c = dA[b * L.h + j];
            gB1[j] += c;
            if (c != 0.0) axpy_n(c, X + b * L.d, gw, L.d);
        }
    }
    return loss_sum;
}

struct MlpScratch {
    std::vector<double> X, H, P, dA;
    explicit MlpScratch(const MlpLayout& L)
        : X(kMlpBlock * L.d), H(kMlpBlock * L.h), P(kMlpBlock * L.k), dA(kMlpBlock * L.h) {}
};

inline LossGrad mlp_loss_grad_impl(const ModelSpec& spec, const ParamVector& theta,
                                   const Dataset& data, const IndexBatch& batch) {
    const MlpLayout L(spec);
    if (theta.size() != L.total)
        throw ShapeError("mlp: parameter vector has dim " + std::to_string(theta.size()) +
                         ", expected " + std::to_string(L.total));
    check_batch(data, batch);
    if (data.d() != L.d) throw ShapeError("mlp: dataset dimension does not match d_in");

    const std::size_t n = batch.size();
    const ChunkPlan plan = plan_chunks(n);
    std::vector<double> losses(plan.chunks, 0.0);
    std::vector<ParamVector> grads(plan.chunks, ParamVector(L.total, 0.0));

    run_chunked(n, plan, [&](std::size_t c, std::size_t lo, std::size_t hi) {
        MlpScratch s(L);
        double loss_sum = 0.0;
        for (std::size_t pos = lo; pos < hi; pos += kMlpBlock) {
            const std::size_t nb = std::min(kMlpBlock, hi - pos);
            loss_sum += mlp_block(L, theta.data(), data, batch.indices.data() + pos, nb,
                                  s.X.data(), s.H.data(), s.P.data(), s.dA.data(),
                                  grads[c].data(), nullptr);
        }
        losses[c] = loss_sum;
    });

    LossGrad out;
    out.grad.assign(L.total, 0.0);
    double loss_sum = 0.0;
    for (std::size_t c = 0; c < plan.chunks; ++c) {
        loss_sum += losses[c];
        for (std::size_t j = 0; j < L.total; ++j) out.grad[j] += grads[c][j];
    }
    const double inv = 1.0 / static_cast<double>(n);
    out.loss = loss_sum * inv;
    scale(out.grad, inv);
    if (spec.l2 > 0.0) {
        out.loss += 0.5 * spec.l2 * squared_norm(theta);
        axpy(spec.l2, theta, out.grad);
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Public oracles
// ---------------------------------------------------------------------------

inline LossGrad logistic_loss_grad(const ModelSpec& spec, const ParamVector& w,
                                   const Dataset& data, const IndexBatch& batch) {
    if (spec.kind != ModelKind::logistic) throw ConfigError("logistic_loss_grad: wrong model kind");
    return detail::linear_loss_grad(spec, w, data, batch);
}

inline LossGrad svm_loss_grad(const ModelSpec& spec, const ParamVector& w, const Dataset& data,
                              const IndexBatch& batch) {
    if (spec.kind != ModelKind::svm) throw ConfigError("svm_loss_grad: wrong model kind");
    return detail::linear_loss_grad(spec, w, data, batch);
}

inline LossGrad least_squares_loss_grad(const ModelSpec& spec, const ParamVector& w,
                                        const Dataset& data, const IndexBatch& batch) {
    if (spec.kind != ModelKind::least_squares)
        throw ConfigError("least_squares_loss_grad: wrong model kind");
    return detail::linear_loss_grad(spec, w, data, batch);
}

inline LossGrad mlp_loss_grad(const ModelSpec& spec, const ParamVector& theta, const Dataset& data,
                              const IndexBatch& batch) {
    if (spec.kind != ModelKind::mlp) throw ConfigError("mlp_loss_grad: wrong model kind");
    return detail::mlp_loss_grad_impl(spec, theta, data, batch);
}

inline LossGrad loss_grad(const ModelSpec& spec, const ParamVector& params, const Dataset& data,
                          const IndexBatch& batch) {
    if (spec.kind == ModelKind::mlp) return detail::mlp_loss_grad_impl(spec, params, data, batch);
    return detail::linear_loss_grad(spec, params, data, batch);
}

// Full-dataset objective and classification accuracy. Binary prediction is
// sign(w.x) with sign(0) -> +1; MLP prediction is argmax with lowest-index
// tie-break. Regression reports accuracy 0.
inline EvalResult evaluate(const ModelSpec& spec, const ParamVector& params, const Dataset& data) {
    if (params.size() != spec.param_count())
        throw ShapeError("evaluate: parameter vector has dim " + std::to_string(params.size()) +
                         ", model expects " + std::to_string(spec.param_count()));
    const std::size_t n = data.m();
    const ChunkPlan plan = plan_chunks(n);
    std::vector<double> losses(plan.chunks, 0.0);
    std::vector<std::size_t> corrects(plan.chunks, 0);

    if (spec.kind == ModelKind::mlp) {
        const detail::MlpLayout L(spec);
        if (data.d() != L.d) throw ShapeError("mlp: dataset dimension does not match d_in");
        detail::run_chunked(n, plan, [&](std::size_t c, std::size_t lo, std::size_t hi) {
            detail::MlpScratch s(L);
            std::vector<std::uint32_t> idx(detail::kMlpBlock);
            double loss_sum = 0.0;
            std::size_t correct = 0;
            for (std::size_t pos = lo; pos < hi; pos += detail::kMlpBlock) {
                const std::size_t nb = std::min(detail::kMlpBlock, hi - pos);
                for (std::size_t b = 0; b < nb; ++b)
                    idx[b] = static_cast<std::uint32_t>(pos + b);
                loss_sum += detail::mlp_block(L, params.data(), data, idx.data(), nb, s.X.data(),
                                              s.H.data(), s.P.data(), s.dA.data(), nullptr,
                                              &correct);
            }
            losses[c] = loss_sum;
            corrects[c] = correct;
        });
    } else {
        const detail::LinearLoss lk = detail::linear_loss_of(spec.kind);
        detail::run_chunked(n, plan, [&](std::size_t c, std::size_t lo, std::size_t hi) {
            double loss_sum = 0.0;
            std::size_t correct = 0;
            for (std::size_t i = lo; i < hi; ++i) {
                const double z = data.row_dot(i, params);
                double loss, dz;
                detail::linear_loss_terms(lk, z, data.label(i), loss, dz);
                loss_sum += loss;
                if (spec.kind != ModelKind::least_squares) {
                    const double pred = (z >= 0.0) ? 1.0 : -1.0;
                    if (pred == data.label(i)) ++correct;
                }
            }
            losses[c] = loss_sum;
            corrects[c] = correct;
        });
    }

    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t c = 0; c < plan.chunks; ++c) {
        loss_sum += losses[c];
        correct += corrects[c];
    }
    EvalResult out;
    out.loss = loss_sum / static_cast<double>(n);
    if (spec.l2 > 0.0) out.loss += 0.5 * spec.l2 * squared_norm(params);
    out.accuracy = (spec.kind == ModelKind::least_squares)
                       ? 0.0
                       : static_cast<double>(correct) / static_cast<double>(n);
    return out;
}

// Deterministic parameter initialization: zeros for the convex models,
// per-layer uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) for the MLP.
inline ParamVector init_params(const ModelSpec& spec, RngState& rng) {
    ParamVector theta(spec.param_count(), 0.0);
    if (spec.kind == ModelKind::mlp) {
        const detail::MlpLayout L(spec);
        const double r1 = 1.0 / std::sqrt(static_cast<double>(L.d));
        const double r2 = 1.0 / std::sqrt(static_cast<double>(L.h));
        for (std::size_t i = 0; i < L.w2; ++i) theta[i] = rng.uniform(-r1, r1);
        for (std::size_t i = L.w2; i < L.total; ++i) theta[i] = rng.uniform(-r2, r2);
    }
    return theta;
}

// Adapter binding a model spec to a dataset; satisfies the training loop's
// objective interface.
struct ModelObjective {
    const ModelSpec* spec;
    const Dataset* data;

    std::size_t sample_count() const { return data->m(); }
    std::size_t dim() const { return spec->param_count(); }
    LossGrad loss_grad(const ParamVector& x, const IndexBatch& batch) const {
        return sgdkit::loss_grad(*spec, x, *data, batch);
    }
    EvalResult evaluate(const ParamVector& x) const { return sgdkit::evaluate(*spec, x, *data); }
};

}  // namespace sgdkit
