#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sgdkit/core.hpp"

namespace sgdkit {

enum class Task { binary, multiclass, regression };

inline std::string_view task_name(Task t) {
    switch (t) {
        case Task::binary: return "binary";
        case Task::multiclass: return "multiclass";
        case Task::regression: return "regression";
    }
    return "?";
}

struct SparseExample {
    double label = 0.0;
    std::vector<std::pair<std::uint32_t, double>> features;  // strictly increasing indices
};

// Immutable after construction; shared read-only across concurrent runs.
// Either sparse rows (LIBSVM) or a dense row-major matrix (IDX / synthetic).
class Dataset {
public:
    static Dataset from_sparse(std::vector<SparseExample> examples, std::size_t d, Task task,
                               std::size_t classes = 2) {
        Dataset ds;
        ds.sparse_ = std::move(examples);
        ds.m_ = ds.sparse_.size();
        ds.d_ = d;
        ds.task_ = task;
        ds.classes_ = classes;
        for (std::size_t i = 0; i < ds.m_; ++i) {
            for (const auto& [idx, val] : ds.sparse_[i].features) {
                if (idx >= d)
                    throw DataError("dataset: feature index " + std::to_string(idx) +
                                    " out of range for d=" + std::to_string(d));
                if (!std::isfinite(val)) throw DataError("dataset: non-finite feature value");
            }
            ds.check_label(ds.sparse_[i].label);
        }
        return ds;
    }

    static Dataset from_dense(std::vector<double> values, std::vector<double> labels,
                              std::size_t d, Task task, std::size_t classes = 2) {
        Dataset ds;
        if (d == 0 || values.size() != labels.size() * d)
            throw DataError("dataset: dense payload size does not match m*d");
        ds.dense_ = std::move(values);
        ds.labels_ = std::move(labels);
        ds.m_ = ds.labels_.size();
        ds.d_ = d;
        ds.task_ = task;
        ds.classes_ = classes;
        ds.dense_mode_ = true;
        for (double l : ds.labels_) ds.check_label(l);
        return ds;
    }

    std::size_t m() const { return m_; }
    std::size_t d() const { return d_; }
    Task task() const { return task_; }
    std::size_t classes() const { return classes_; }
    bool dense() const { return dense_mode_; }

    double label(std::size_t i) const { return dense_mode_ ? labels_[i] : sparse_[i].label; }

    const SparseExample& sparse_row(std::size_t i) const { return sparse_[i]; }

    // <x_i, w>
    double row_dot(std::size_t i, const ParamVector& w) const {
        double s = 0.0;
        if (dense_mode_) {
            const double* row = &dense_[i * d_];
            for (std::size_t j = 0; j < d_; ++j) s += row[j] * w[j];
        } else {
            for (const auto& [idx, val] : sparse_[i].features) s += val * w[idx];
        }
        return s;
    }

    // out += coef * x_i
    void row_axpy(std::size_t i, double coef, ParamVector& out) const {
        if (dense_mode_) {
            const double* row = &dense_[i * d_];
            for (std::size_t j = 0; j < d_; ++j) out[j] += coef * row[j];
        } else {
            for (const auto& [idx, val] : sparse_[i].features) out[idx] += coef * val;
        }
    }

    // scatter x_i into a dense buffer of length d
    void row_copy(std::size_t i, double* out) const {
        if (dense_mode_) {
            const double* row = &dense_[i * d_];
            std::copy(row, row + d_, out);
        } else {
            std::fill(out, out + d_, 0.0);
            for (const auto& [idx, val] : sparse_[i].features) out[idx] = val;
        }
    }

private:
    void check_label(double l) const {
        if (!std::isfinite(l)) throw DataError("dataset: non-finite label");
        if (task_ == Task::multiclass) {
            if (l < 0 || l >= static_cast<double>(classes_) || l != static_cast<int>(l))
                throw DataError("dataset: multiclass label out of range");
        }
    }

    std::vector<SparseExample> sparse_;
    std::vector<double> dense_;
    std::vector<double> labels_;
    bool dense_mode_ = false;
    std::size_t m_ = 0;
    std::size_t d_ = 0;
    Task task_ = Task::binary;
    std::size_t classes_ = 2;
};

// First n examples, same dimension and task.
inline Dataset head(const Dataset& ds, std::size_t n) {
    if (n == 0 || n > ds.m()) throw ConfigError("head: need 1 <= n <= m");
    if (ds.dense()) {
        std::vector<double> values(n * ds.d());
        std::vector<double> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            ds.row_copy(i, &values[i * ds.d()]);
            labels[i] = ds.label(i);
        }
        return Dataset::from_dense(std::move(values), std::move(labels), ds.d(), ds.task(),
                                   ds.classes());
    }
    std::vector<SparseExample> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = ds.sparse_row(i);
    return Dataset::from_sparse(std::move(rows), ds.d(), ds.task(), ds.classes());
}

// ---------------------------------------------------------------------------
// LIBSVM text format: "<label> <idx>:<val> ...", 1-based ascending indices.
// ---------------------------------------------------------------------------

namespace detail {

inline bool parse_double(const std::string& tok, double& out) {
    const char* s = tok.c_str();
    char* end = nullptr;
    out = std::strtod(s, &end);
    return end == s + tok.size() && tok.size() > 0;
}

}  // namespace detail

// Binary-label convention: {-1,+1} kept as-is; a {1,2} label set (covtype)
// is remapped to 1 -> +1, 2 -> -1. Indices become 0-based. d defaults to
// 1 + max index seen; pass force_d for datasets with a fixed dimension.
inline Dataset parse_libsvm(std::istream& in, std::optional<std::size_t> force_d = {}) {
    std::vector<SparseExample> rows;
    std::set<double> label_values;
    std::uint32_t max_index = 0;  // 0-based
    bool any_feature = false;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        // tokenize on whitespace
        std::size_t pos = 0;
        auto next_token = [&](std::string& tok) {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t' || line[pos] == '\r'))
                ++pos;
            if (pos >= line.size()) return false;
            const std::size_t start = pos;
            while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t' && line[pos] != '\r')
                ++pos;
            tok = line.substr(start, pos - start);
            return true;
        };

        std::string tok;
        if (!next_token(tok)) continue;  // blank line
        if (tok[0] == '#') continue;

        SparseExample ex;
        if (!detail::parse_double(tok, ex.label))
            throw DataError("libsvm parse error at line " + std::to_string(line_no) +
                            ": bad label token '" + tok + "'");

        std::int64_t prev_index = 0;  // 1-based; indices must strictly increase
        while (next_token(tok)) {
            const std::size_t colon = tok.find(':');
            if (colon == std::string::npos || colon == 0 || colon + 1 >= tok.size())
                throw DataError("libsvm parse error at line " + std::to_string(line_no) +
                                ": bad feature token '" + tok + "'");
            double idx_val = 0.0, feat_val = 0.0;
            if (!detail::parse_double(tok.substr(0, colon), idx_val) ||
                idx_val != static_cast<std::int64_t>(idx_val) || idx_val < 1)
                throw DataError("libsvm parse error at line " + std::to_string(line_no) +
                                ": bad feature index in '" + tok + "'");
            if (!detail::parse_double(tok.substr(colon + 1), feat_val))
                throw DataError("libsvm parse error at line " + std::to_string(line_no) +
                                ": bad feature value in '" + tok + "'");
            const auto index = static_cast<std::int64_t>(idx_val);
            if (index <= prev_index)
                throw DataError("libsvm parse error at line " + std::to_string(line_no) +
                                ": feature indices must be strictly ascending");
            prev_index = index;
            const auto zero_based = static_cast<std::uint32_t>(index - 1);
            max_index = std::max(max_index, zero_based);
            any_feature = true;
            ex.features.emplace_back(zero_based, feat_val);
        }
        label_values.insert(ex.label);
        rows.push_back(std::move(ex));
    }

    if (rows.empty()) throw DataError("libsvm parse error: empty stream");

    const bool plus_minus = std::all_of(label_values.begin(), label_values.end(),
                                        [](double l) { return l == 1.0 || l == -1.0; });
    const bool one_two = std::all_of(label_values.begin(), label_values.end(),
                                     [](double l) { return l == 1.0 || l == 2.0; });
    if (!plus_minus && one_two) {
        for (auto& row : rows) row.label = (row.label == 1.0) ? 1.0 : -1.0;
    }

    std::size_t d = any_feature ? max_index + 1 : 1;
    if (force_d) {
        if (any_feature && *force_d < max_index + 1)
            throw DataError("libsvm: forced dimension " + std::to_string(*force_d) +
                            " smaller than max feature index " + std::to_string(max_index + 1));
        d = *force_d;
    }
    return Dataset::from_sparse(std::move(rows), d, Task::binary);
}

// Inverse of parse_libsvm: emits 1-based indices, one example per line.
inline void write_libsvm(const Dataset& ds, std::ostream& out) {
    if (ds.dense()) throw DataError("write_libsvm: dense datasets are not serialized to LIBSVM text");
    char buf[64];
    for (std::size_t i = 0; i < ds.m(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", ds.label(i));
        out << buf;
        for (const auto& [idx, val] : ds.sparse_row(i).features) {
            std::snprintf(buf, sizeof buf, " %u:%.17g", idx + 1, val);
            out << buf;
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// IDX binary format (MNIST): big-endian magic + dims + uint8 payload.
// Pixels are scaled to [0,1] by /255.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const char* field) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw DataError(std::string("idx: truncated while reading ") + field);
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) | (std::uint32_t(b[2]) << 8) |
           std::uint32_t(b[3]);
}

}  // namespace detail

inline Dataset load_mnist_idx(std::istream& images, std::istream& labels,
                              std::size_t limit = 0) {
    if (detail::read_be_u32(images, "image magic") != 0x00000803u)
        throw DataError("idx: bad image magic");
    const std::uint32_t n_images = detail::read_be_u32(images, "image count");
    const std::uint32_t rows = detail::read_be_u32(images, "image rows");
    const std::uint32_t cols = detail::read_be_u32(images, "image cols");

    if (detail::read_be_u32(labels, "label magic") != 0x00000801u)
        throw DataError("idx: bad label magic");
    const std::uint32_t n_labels = detail::read_be_u32(labels, "label count");

    if (n_images != n_labels)
        throw DataError("idx: image count " + std::to_string(n_images) +
                        " does not match label count " + std::to_string(n_labels));

    std::size_t m = n_images;
    if (limit > 0 && limit < m) m = limit;
    const std::size_t d = static_cast<std::size_t>(rows) * cols;

    std::vector<double> values(m * d);
    std::vector<unsigned char> raw(d);
    for (std::size_t i = 0; i < m; ++i) {
        if (!images.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(d)))
            throw DataError("idx: truncated image payload");
        for (std::size_t j = 0; j < d; ++j) values[i * d + j] = raw[j] / 255.0;
    }
    std::vector<double> label_values(m);
    for (std::size_t i = 0; i < m; ++i) {
        char c;
        if (!labels.read(&c, 1)) throw DataError("idx: truncated label payload");
        const auto l = static_cast<unsigned char>(c);
        if (l > 9) throw DataError("idx: label out of range 0-9");
        label_values[i] = l;
    }
    return Dataset::from_dense(std::move(values), std::move(label_values), d, Task::multiclass, 10);
}

}  // namespace sgdkit
