#pragma once

#include <cmath>
#include <vector>

#include "sgdkit/core.hpp"
#include "sgdkit/data.hpp"
#include "sgdkit/models.hpp"

namespace sgdkit {

// Least-squares instance with an analytically known optimum; the oracle
// behind the learning-rate and convergence-trend tests.
struct SyntheticProblem {
    Dataset dataset;
    ParamVector optimum;
    double optimal_value = 0.0;
};

// Rows are scaled basis vectors e_{i mod d}; each direction j gets
// sum-of-squares a*m, so the objective (1/m) sum 1/2 (a_i.x - b_i)^2 has
// Hessian exactly a*I for any m >= d.
inline Dataset least_squares_design(std::size_t m, std::size_t d, double hessian_scale,
                                    const std::vector<double>& rhs) {
    if (hessian_scale <= 0.0) throw ConfigError("least_squares_design: hessian scale must be > 0");
    if (d == 0 || m < d) throw ConfigError("least_squares_design: need m >= d >= 1");
    if (rhs.size() != m) throw ConfigError("least_squares_design: rhs length must equal m");

    std::vector<std::size_t> counts(d, 0);
    for (std::size_t i = 0; i < m; ++i) ++counts[i % d];

    std::vector<SparseExample> rows(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i % d;
        const double s =
            std::sqrt(hessian_scale * static_cast<double>(m) / static_cast<double>(counts[j]));
        rows[i].label = rhs[i];
        rows[i].features.emplace_back(static_cast<std::uint32_t>(j), s);
    }
    return Dataset::from_sparse(std::move(rows), d, Task::regression);
}

// Pure quadratic F(x) = 1/2 a ||x||^2 (all right-hand sides zero).
inline Dataset quadratic_design(std::size_t m, std::size_t d, double hessian_scale) {
    return least_squares_design(m, d, hessian_scale, std::vector<double>(m, 0.0));
}

inline SyntheticProblem gen_least_squares(RngState& rng, std::size_t m, std::size_t d,
                                          double hessian_scale) {
    if (hessian_scale <= 0.0)
        throw ConfigError("gen_least_squares: hessian scale must be > 0");
    if (d == 0 || m < d) throw ConfigError("gen_least_squares: need m >= d >= 1 (underdetermined)");

    std::vector<double> rhs(m);
    for (auto& b : rhs) b = rng.uniform(-1.0, 1.0);

    SyntheticProblem problem{least_squares_design(m, d, hessian_scale, rhs), {}, 0.0};

    // With Hessian a*I the normal equations reduce to x* = (1/(a m)) sum b_i a_i.
    ParamVector opt(d, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const auto& [j, s] = problem.dataset.sparse_row(i).features[0];
        opt[j] += s * rhs[i];
    }
    scale(opt, 1.0 / (hessian_scale * static_cast<double>(m)));
    problem.optimum = std::move(opt);

    ModelSpec spec{ModelKind::least_squares, d};
    problem.optimal_value = evaluate(spec, problem.optimum, problem.dataset).loss;

    RngState probe_rng(0);
    IndexBatch full = sample_batch(probe_rng, m, m);
    const LossGrad at_opt = loss_grad(spec, problem.optimum, problem.dataset, full);
    if (norm(at_opt.grad) > 1e-10)
        throw DataError("gen_least_squares: optimum failed the gradient check");
    return problem;
}

// ---------------------------------------------------------------------------
// Classification stand-ins for benchmark datasets that are not shipped:
// prototype blobs in [0,1]^d (MNIST-shaped when d=784, k=10) and sparse
// 0/1 rows labeled by a random hyperplane (a8a-shaped when d=123).
// ---------------------------------------------------------------------------

// zero_frac controls stroke-style sparsity: that fraction of each prototype
// is exact-zero background, and background pixels stay 0 in every example
// (image-like inputs where most features vanish identically).
inline Dataset make_blobs(RngState& rng, std::size_t m, std::size_t d, std::size_t k,
                          double noise = 0.35, double label_flip = 0.05,
                          double zero_frac = 0.0) {
    if (m == 0 || d == 0 || k < 2) throw ConfigError("make_blobs: need m >= 1, d >= 1, k >= 2");
    if (zero_frac < 0.0 || zero_frac >= 1.0)
        throw ConfigError("make_blobs: zero_frac must lie in [0,1)");
    std::vector<double> prototypes(k * d);
    for (auto& p : prototypes) {
        const double u = rng.next_double();
        p = (u < zero_frac) ? 0.0 : (u - zero_frac) / (1.0 - zero_frac);
    }

    std::vector<double> values(m * d);
    std::vector<double> labels(m);
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t c = i % k;
        const double* proto = &prototypes[c * d];
        double* row = &values[i * d];
        for (std::size_t j = 0; j < d; ++j) {
            if (proto[j] == 0.0) {
                row[j] = 0.0;
                continue;
            }
            const double v = proto[j] + rng.uniform(-noise, noise);
            row[j] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        }
        std::size_t label = c;
        if (label_flip > 0.0 && rng.next_double() < label_flip)
            label = static_cast<std::size_t>(rng.bounded(k));
        labels[i] = static_cast<double>(label);
    }
    return Dataset::from_dense(std::move(values), std::move(labels), d, Task::multiclass, k);
}

inline Dataset make_sparse_binary(RngState& rng, std::size_t m, std::size_t d, std::size_t nnz,
                                  double label_flip = 0.05) {
    if (m == 0 || d == 0 || nnz == 0 || nnz > d)
        throw ConfigError("make_sparse_binary: need m >= 1 and 1 <= nnz <= d");
    ParamVector w_true(d);
    for (auto& w : w_true) w = rng.uniform(-1.0, 1.0);

    std::vector<SparseExample> rows(m);
    for (std::size_t i = 0; i < m; ++i) {
        IndexBatch active = sample_batch(rng, d, nnz);
        std::sort(active.indices.begin(), active.indices.end());
        double z = 0.0;
        for (auto j : active.indices) {
            rows[i].features.emplace_back(j, 1.0);
            z += w_true[j];
        }
        double y = (z >= 0.0) ? 1.0 : -1.0;
        if (label_flip > 0.0 && rng.next_double() < label_flip) y = -y;
        rows[i].label = y;
    }
    return Dataset::from_sparse(std::move(rows), d, Task::binary);
}

}  // namespace sgdkit
