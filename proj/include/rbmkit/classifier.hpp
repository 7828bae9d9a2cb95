#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "detail/binary_io.hpp"
#include "errors.hpp"
#include "math.hpp"
#include "rng.hpp"

namespace rbmkit {

// One hidden layer, logistic activation, softmax output. Stands in for a
// "source classifier" wherever accuracy under domain shift is measured.
struct MlpParams {
    std::size_t d = 0;          // input dimension
    std::size_t hidden = 0;
    std::size_t n_classes = 0;
    std::vector<double> w1;     // d x hidden
    std::vector<double> b1;     // hidden
    std::vector<double> w2;     // hidden x n_classes
    std::vector<double> b2;     // n_classes
};

struct ClfConfig {
    std::size_t hidden_units = 128;
    double learning_rate = 0.5;
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    std::uint64_t seed = 0;
};

inline void validate(const MlpParams& p) {
    if (p.d == 0 || p.hidden == 0 || p.n_classes == 0 ||
        p.w1.size() != p.d * p.hidden || p.b1.size() != p.hidden ||
        p.w2.size() != p.hidden * p.n_classes ||
        p.b2.size() != p.n_classes) {
        throw DimensionError("inconsistent mlp parameter shapes");
    }
    if (!all_finite(p.w1) || !all_finite(p.b1) || !all_finite(p.w2) ||
        !all_finite(p.b2)) {
        throw NumericError("mlp parameters contain non-finite values");
    }
}

inline void validate(const ClfConfig& cfg) {
    if (cfg.hidden_units == 0 || cfg.epochs == 0 || cfg.batch_size == 0) {
        throw ConfigError("hidden_units, epochs, batch_size must be positive");
    }
    if (!(cfg.learning_rate >= 0.0)) {
        throw ConfigError("learning rate must be non-negative");
    }
}

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) weights, zero biases.
inline MlpParams clf_init(std::size_t d, std::size_t n_classes,
                          const ClfConfig& cfg, Rng& rng) {
    if (d == 0 || n_classes == 0) {
        throw DimensionError("mlp dimensions must be positive");
    }
    validate(cfg);
    MlpParams p;
    p.d = d;
    p.hidden = cfg.hidden_units;
    p.n_classes = n_classes;
    p.w1.resize(d * p.hidden);
    p.b1.assign(p.hidden, 0.0);
    p.w2.resize(p.hidden * n_classes);
    p.b2.assign(n_classes, 0.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& w : p.w1) {
        w = rng.uniform(-s1, s1);
    }
    const double s2 = 1.0 / std::sqrt(static_cast<double>(p.hidden));
    for (double& w : p.w2) {
        w = rng.uniform(-s2, s2);
    }
    return p;
}

namespace detail {

// a1 = sigmoid(W1'x + b1); z2 = W2'a1 + b2 (pre-softmax).
inline void mlp_hidden(const MlpParams& p, std::span<const double> x,
                       std::vector<double>& a1) {
    a1.assign(p.hidden, 0.0);
    for (std::size_t i = 0; i < p.d; ++i) {
        const double xi = x[i];
        if (xi == 0.0) {
            continue;
        }
        const double* row = p.w1.data() + i * p.hidden;
        for (std::size_t j = 0; j < p.hidden; ++j) {
            a1[j] += xi * row[j];
        }
    }
    for (std::size_t j = 0; j < p.hidden; ++j) {
        a1[j] = sigmoid(a1[j] + p.b1[j]);
    }
}

inline void mlp_logits(const MlpParams& p, const std::vector<double>& a1,
                       std::vector<double>& z2) {
    z2 = p.b2;
    for (std::size_t j = 0; j < p.hidden; ++j) {
        const double aj = a1[j];
        if (aj == 0.0) {
            continue;
        }
        const double* row = p.w2.data() + j * p.n_classes;
        for (std::size_t k = 0; k < p.n_classes; ++k) {
            z2[k] += aj * row[k];
        }
    }
}

// In-place stable softmax.
inline void softmax(std::vector<double>& z) {
    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& x : z) {
        x = std::exp(x - zmax);
        total += x;
    }
    for (double& x : z) {
        x /= total;
    }
}

} // namespace detail

// Class probabilities; entries sum to 1.
inline std::vector<double> clf_forward(const MlpParams& p,
                                       std::span<const double> x) {
    if (x.size() != p.d) {
        throw DimensionError("input length does not match mlp input size");
    }
    std::vector<double> a1;
    detail::mlp_hidden(p, x, a1);
    std::vector<double> z2;
    detail::mlp_logits(p, a1, z2);
    detail::softmax(z2);
    return z2;
}

// Argmax class; ties resolve to the lowest index.
inline int clf_predict(const MlpParams& p, std::span<const double> x) {
    const std::vector<double> probs = clf_forward(p, x);
    int best = 0;
    for (std::size_t k = 1; k < probs.size(); ++k) {
        if (probs[k] > probs[best]) {
            best = static_cast<int>(k);
        }
    }
    return best;
}

struct MlpGrad {
    std::vector<double> dw1;
    std::vector<double> db1;
    std::vector<double> dw2;
    std::vector<double> db2;
};

// Mean cross-entropy over the dataset.
inline double clf_loss(const MlpParams& p, const ImageDataset& data) {
    if (data.n == 0) {
        throw ConfigError("loss needs a nonempty dataset");
    }
    if (data.dim() != p.d) {
        throw DimensionError("dataset dimension does not match mlp input");
    }
    double total = 0.0;
    for (std::size_t t = 0; t < data.n; ++t) {
        const std::vector<double> probs = clf_forward(p, data.row(t));
        total -= std::log(std::max(probs[data.labels[t]], 1e-300));
    }
    return total / static_cast<double>(data.n);
}

// Backpropagated gradient of the mean cross-entropy over the given rows.
inline MlpGrad clf_gradient(const MlpParams& p,
                            const std::vector<std::span<const double>>& rows,
                            const std::vector<int>& labels) {
    if (rows.empty() || rows.size() != labels.size()) {
        throw ConfigError("gradient needs matching nonempty rows and labels");
    }
    MlpGrad g;
    g.dw1.assign(p.w1.size(), 0.0);
    g.db1.assign(p.b1.size(), 0.0);
    g.dw2.assign(p.w2.size(), 0.0);
    g.db2.assign(p.b2.size(), 0.0);
    std::vector<double> a1;
    std::vector<double> probs;
    std::vector<double> delta1(p.hidden);
    for (std::size_t t = 0; t < rows.size(); ++t) {
        const auto x = rows[t];
        if (x.size() != p.d) {
            throw DimensionError("row length does not match mlp input size");
        }
        const int y = labels[t];
        if (y < 0 || static_cast<std::size_t>(y) >= p.n_classes) {
            throw FormatError("label outside [0, n_classes)");
        }
        detail::mlp_hidden(p, x, a1);
        detail::mlp_logits(p, a1, probs);
        detail::softmax(probs);
        probs[y] -= 1.0;  // delta2 = softmax - onehot
        for (std::size_t j = 0; j < p.hidden; ++j) {
            const double aj = a1[j];
            double* row = g.dw2.data() + j * p.n_classes;
            double acc = 0.0;
            const double* w_row = p.w2.data() + j * p.n_classes;
            for (std::size_t k = 0; k < p.n_classes; ++k) {
                row[k] += aj * probs[k];
                acc += w_row[k] * probs[k];
            }
            delta1[j] = acc * aj * (1.0 - aj);
        }
        for (std::size_t k = 0; k < p.n_classes; ++k) {
            g.db2[k] += probs[k];
        }
        for (std::size_t i = 0; i < p.d; ++i) {
            const double xi = x[i];
            if (xi == 0.0) {
                continue;
            }
            double* row = g.dw1.data() + i * p.hidden;
            for (std::size_t j = 0; j < p.hidden; ++j) {
                row[j] += xi * delta1[j];
            }
        }
        for (std::size_t j = 0; j < p.hidden; ++j) {
            g.db1[j] += delta1[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& x : g.dw1) {
        x *= inv;
    }
    for (double& x : g.db1) {
        x *= inv;
    }
    for (double& x : g.dw2) {
        x *= inv;
    }
    for (double& x : g.db2) {
        x *= inv;
    }
    return g;
}

// Minibatch gradient descent on mean cross-entropy; epoch shuffles and
// init weights all come from the config seed.
inline MlpParams clf_train(const ImageDataset& data, const ClfConfig& cfg) {
    validate(cfg);
    if (data.n == 0) {
        throw ConfigError("cannot train on an empty dataset");
    }
    Rng rng(cfg.seed);
    MlpParams p = clf_init(data.dim(), data.n_classes, cfg, rng);
    std::vector<std::size_t> order(data.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::span<const double>> rows;
    std::vector<int> labels;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t first = 0; first < data.n;
             first += cfg.batch_size) {
            const std::size_t count =
                std::min(cfg.batch_size, data.n - first);
            rows.clear();
            labels.clear();
            for (std::size_t i = 0; i < count; ++i) {
                rows.push_back(data.row(order[first + i]));
                labels.push_back(data.labels[order[first + i]]);
            }
            const MlpGrad g = clf_gradient(p, rows, labels);
            for (std::size_t i = 0; i < p.w1.size(); ++i) {
                p.w1[i] -= cfg.learning_rate * g.dw1[i];
            }
            for (std::size_t i = 0; i < p.b1.size(); ++i) {
                p.b1[i] -= cfg.learning_rate * g.db1[i];
            }
            for (std::size_t i = 0; i < p.w2.size(); ++i) {
                p.w2[i] -= cfg.learning_rate * g.dw2[i];
            }
            for (std::size_t i = 0; i < p.b2.size(); ++i) {
                p.b2[i] -= cfg.learning_rate * g.db2[i];
            }
        }
    }
    return p;
}

// Fraction of argmax predictions matching the labels.
inline double accuracy(const MlpParams& p, const ImageDataset& data) {
    if (data.n == 0) {
        throw ConfigError("accuracy needs a nonempty dataset");
    }
    if (data.dim() != p.d) {
        throw DimensionError("dataset dimension does not match mlp input");
    }
    std::size_t hits = 0;
    for (std::size_t t = 0; t < data.n; ++t) {
        if (clf_predict(p, data.row(t)) == data.labels[t]) {
            ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(data.n);
}

// --- model file, magic "MLP1" ---
// u32 d, hidden, n_classes, then w1, b1, w2, b2 as little-endian f64.

inline void save_mlp(const MlpParams& p, const std::string& path) {
    validate(p);
    auto os = detail::open_output(path);
    detail::write_bytes(os, "MLP1", 4);
    detail::write_u32_le(os, static_cast<std::uint32_t>(p.d));
    detail::write_u32_le(os, static_cast<std::uint32_t>(p.hidden));
    detail::write_u32_le(os, static_cast<std::uint32_t>(p.n_classes));
    for (const auto* arr : {&p.w1, &p.b1, &p.w2, &p.b2}) {
        for (double x : *arr) {
            detail::write_f64_le(os, x);
        }
    }
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

inline MlpParams load_mlp(const std::string& path) {
    auto is = detail::open_input(path);
    char magic[4];
    detail::read_bytes(is, magic, 4, "mlp magic");
    if (std::string(magic, 4) != "MLP1") {
        throw FormatError("bad magic in mlp file (want MLP1): " + path);
    }
    MlpParams p;
    p.d = detail::read_u32_le(is, "mlp input size");
    p.hidden = detail::read_u32_le(is, "mlp hidden size");
    p.n_classes = detail::read_u32_le(is, "mlp class count");
    if (p.d == 0 || p.hidden == 0 || p.n_classes == 0) {
        throw FormatError("mlp file has zero-sized layer: " + path);
    }
    p.w1.resize(p.d * p.hidden);
    p.b1.resize(p.hidden);
    p.w2.resize(p.hidden * p.n_classes);
    p.b2.resize(p.n_classes);
    for (auto* arr : {&p.w1, &p.b1, &p.w2, &p.b2}) {
        for (double& x : *arr) {
            x = detail::read_f64_le(is, "mlp parameters");
        }
    }
    validate(p);
    return p;
}

} // namespace rbmkit
