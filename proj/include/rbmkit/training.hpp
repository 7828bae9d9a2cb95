#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "errors.hpp"
#include "math.hpp"
#include "partition.hpp"
#include "rbm.hpp"
#include "rng.hpp"

namespace rbmkit {

enum class TrainAlgorithm { cd, pcd };

struct TrainConfig {
    TrainAlgorithm algorithm = TrainAlgorithm::pcd;
    std::size_t k = 1;            // Gibbs steps per gradient estimate
    double learning_rate = 0.05;
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    double weight_decay = 1e-4;   // L2 pull on W only
    double momentum = 0.5;
    double init_weight_scale = 0.01;
    std::uint64_t seed = 0;
    bool track_exact_ll = false;  // per-epoch likelihood; tiny models only
};

inline void validate(const TrainConfig& cfg) {
    if (cfg.k == 0 || cfg.epochs == 0 || cfg.batch_size == 0) {
        throw ConfigError("k, epochs and batch_size must be positive");
    }
    if (!(cfg.learning_rate >= 0.0) || !(cfg.weight_decay >= 0.0) ||
        !(cfg.init_weight_scale >= 0.0)) {
        throw ConfigError("rates and scales must be non-negative");
    }
    if (!(cfg.momentum >= 0.0 && cfg.momentum < 1.0)) {
        throw ConfigError("momentum must lie in [0,1)");
    }
}

// Gradient of the mean log-likelihood; same shapes as RbmParams, ascent
// direction.
struct GradEstimate {
    std::vector<double> dw;
    std::vector<double> db;
    std::vector<double> dc;
};

// Persistent fantasy chains for PCD, one row per chain, binary entries.
struct PcdState {
    std::size_t n_chains = 0;
    std::size_t n_visible = 0;
    std::vector<double> fantasy_v;  // n_chains x n_visible

    std::span<double> chain(std::size_t i) {
        return {fantasy_v.data() + i * n_visible, n_visible};
    }
    std::span<const double> chain(std::size_t i) const {
        return {fantasy_v.data() + i * n_visible, n_visible};
    }
};

struct EpochStats {
    std::size_t epoch = 0;
    double recon_error = 0.0;  // mean squared v vs one-step p_v, per pixel
    std::optional<double> exact_ll;
    double wall_ms = 0.0;
};

struct TrainingHistory {
    std::vector<EpochStats> epochs;
};

using Batch = std::vector<std::span<const double>>;

// W ~ uniform(-s, s), biases zero.
inline RbmParams init_params(std::size_t n_visible, std::size_t n_hidden,
                             const TrainConfig& cfg, Rng& rng) {
    RbmParams p = make_rbm(n_visible, n_hidden);
    for (double& w : p.w) {
        w = rng.uniform(-cfg.init_weight_scale, cfg.init_weight_scale);
    }
    return p;
}

// Data-aware variant: visible biases start at the logit of the clamped
// per-pixel mean, the ML solution of the zero-weight model.
inline RbmParams init_params(const ImageDataset& data, std::size_t n_hidden,
                             const TrainConfig& cfg, Rng& rng) {
    if (data.n == 0) {
        throw ConfigError("cannot initialize from an empty dataset");
    }
    RbmParams p = init_params(data.dim(), n_hidden, cfg, rng);
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        double mean = 0.0;
        for (std::size_t t = 0; t < data.n; ++t) {
            mean += data.pixels[t * data.dim() + i];
        }
        mean /= static_cast<double>(data.n);
        p.b[i] = logit(std::clamp(mean, 0.01, 0.99));
    }
    return p;
}

namespace detail {

inline void check_batch(const RbmParams& p, const Batch& batch) {
    if (batch.empty()) {
        throw ConfigError("gradient estimate needs a nonempty batch");
    }
    for (const auto& row : batch) {
        if (row.size() != p.n_visible) {
            throw DimensionError("batch row length does not match n_visible");
        }
    }
}

inline GradEstimate zero_grad(const RbmParams& p) {
    GradEstimate g;
    g.dw.assign(p.n_visible * p.n_hidden, 0.0);
    g.db.assign(p.n_visible, 0.0);
    g.dc.assign(p.n_hidden, 0.0);
    return g;
}

// stats dw += v p_h', db += v, dc += p_h (one sample's worth, unscaled)
inline void accumulate_stats(const RbmParams& p, std::span<const double> v,
                             std::span<const double> p_h, GradEstimate& g) {
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        const double vi = v[i];
        if (vi == 0.0) {
            continue;
        }
        double* gw = g.dw.data() + i * p.n_hidden;
        for (std::size_t j = 0; j < p.n_hidden; ++j) {
            gw[j] += vi * p_h[j];
        }
    }
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        g.db[i] += v[i];
    }
    for (std::size_t j = 0; j < p.n_hidden; ++j) {
        g.dc[j] += p_h[j];
    }
}

inline void scale_grad(GradEstimate& g, double s) {
    for (double& x : g.dw) {
        x *= s;
    }
    for (double& x : g.db) {
        x *= s;
    }
    for (double& x : g.dc) {
        x *= s;
    }
}

inline void subtract_grad(GradEstimate& g, const GradEstimate& other) {
    for (std::size_t i = 0; i < g.dw.size(); ++i) {
        g.dw[i] -= other.dw[i];
    }
    for (std::size_t i = 0; i < g.db.size(); ++i) {
        g.db[i] -= other.db[i];
    }
    for (std::size_t i = 0; i < g.dc.size(); ++i) {
        g.dc[i] -= other.dc[i];
    }
}

// Negative statistics read off a chain's final state. The visible factor
// is the activation probability (Rao-Blackwellized over the last visible
// draw); the hidden factor in the weight term stays the sampled h, which
// keeps the estimator's stationary expectation exactly E[v h'].
inline void accumulate_negative(const RbmParams& p, const GibbsState& st,
                                GradEstimate& g) {
    for (std::size_t j = 0; j < p.n_hidden; ++j) {
        if (st.h[j] == 0.0) {
            continue;
        }
        for (std::size_t i = 0; i < p.n_visible; ++i) {
            g.dw[i * p.n_hidden + j] += st.p_v[i];
        }
    }
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        g.db[i] += st.p_v[i];
    }
    for (std::size_t j = 0; j < p.n_hidden; ++j) {
        g.dc[j] += st.p_h[j];
    }
}

} // namespace detail

// Data-dependent statistics: dw = mean v p_h(v)', db = mean v,
// dc = mean p_h(v).
inline GradEstimate positive_phase(const RbmParams& p, const Batch& batch) {
    detail::check_batch(p, batch);
    GradEstimate g = detail::zero_grad(p);
    std::vector<double> p_h(p.n_hidden);
    for (const auto& v : batch) {
        detail::hidden_preacts(p, v, 1.0, p_h.data());
        for (double& x : p_h) {
            x = sigmoid(x);
        }
        detail::accumulate_stats(p, v, p_h, g);
    }
    detail::scale_grad(g, 1.0 / static_cast<double>(batch.size()));
    return g;
}

// CD-k: negative chains start at the batch rows themselves.
inline GradEstimate cd_gradient(const RbmParams& p, const Batch& batch,
                                std::size_t k, Rng& rng) {
    if (k == 0) {
        throw ConfigError("cd requires k >= 1");
    }
    GradEstimate g = positive_phase(p, batch);
    GradEstimate neg = detail::zero_grad(p);
    GibbsState st = detail::make_state(p, batch[0]);
    for (const auto& v : batch) {
        st.v.assign(v.begin(), v.end());
        for (std::size_t step = 0; step < k; ++step) {
            detail::gibbs_step_inplace(p, st, rng);
        }
        detail::accumulate_negative(p, st, neg);
    }
    detail::scale_grad(neg, 1.0 / static_cast<double>(batch.size()));
    detail::subtract_grad(g, neg);
    return g;
}

inline PcdState make_pcd_state(const RbmParams& p, std::size_t n_chains,
                               Rng& rng) {
    if (n_chains == 0) {
        throw ConfigError("pcd needs at least one fantasy chain");
    }
    PcdState st;
    st.n_chains = n_chains;
    st.n_visible = p.n_visible;
    st.fantasy_v.resize(n_chains * p.n_visible);
    for (double& x : st.fantasy_v) {
        x = rng.next_double() < 0.5 ? 1.0 : 0.0;
    }
    return st;
}

// PCD-k: negative chains continue from wherever the fantasy particles
// left off; the batch only feeds the positive phase. Updates state.
inline GradEstimate pcd_gradient(const RbmParams& p, const Batch& batch,
                                 PcdState& state, std::size_t k, Rng& rng) {
    if (k == 0) {
        throw ConfigError("pcd requires k >= 1");
    }
    if (state.n_visible != p.n_visible || state.n_chains == 0 ||
        state.fantasy_v.size() != state.n_chains * state.n_visible) {
        throw DimensionError("pcd state does not match model shape");
    }
    GradEstimate g = positive_phase(p, batch);
    GradEstimate neg = detail::zero_grad(p);
    GibbsState st = detail::make_state(p, state.chain(0));
    for (std::size_t c = 0; c < state.n_chains; ++c) {
        const auto chain = state.chain(c);
        st.v.assign(chain.begin(), chain.end());
        for (std::size_t step = 0; step < k; ++step) {
            detail::gibbs_step_inplace(p, st, rng);
        }
        std::copy(st.v.begin(), st.v.end(), chain.begin());
        detail::accumulate_negative(p, st, neg);
    }
    detail::scale_grad(neg, 1.0 / static_cast<double>(state.n_chains));
    detail::subtract_grad(g, neg);
    return g;
}

// Exact gradient by enumeration: negative statistics are true model
// expectations E[v h'], E[v], E[h], summed over the smaller layer with
// the other layer handled through its conditional means.
inline GradEstimate exact_gradient(const RbmParams& p,
                                   const ImageDataset& data) {
    validate(p);
    detail::check_enumerable(p);
    if (data.dim() != p.n_visible) {
        throw DimensionError("dataset dimension does not match n_visible");
    }
    if (data.n == 0) {
        throw ConfigError("exact gradient needs a nonempty dataset");
    }
    Batch batch;
    batch.reserve(data.n);
    for (std::size_t t = 0; t < data.n; ++t) {
        batch.push_back(data.row(t));
    }
    GradEstimate g = positive_phase(p, batch);

    const double log_z = exact_log_partition(p);
    GradEstimate neg = detail::zero_grad(p);
    if (p.n_visible <= p.n_hidden) {
        std::vector<double> v(p.n_visible);
        std::vector<double> p_h(p.n_hidden);
        const std::size_t states = std::size_t{1} << p.n_visible;
        for (std::size_t s = 0; s < states; ++s) {
            detail::unpack_bits(s, v);
            const double weight = std::exp(-free_energy(p, v) - log_z);
            detail::hidden_preacts(p, v, 1.0, p_h.data());
            for (double& x : p_h) {
                x = sigmoid(x);
            }
            for (std::size_t i = 0; i < p.n_visible; ++i) {
                if (v[i] == 0.0) {
                    continue;
                }
                neg.db[i] += weight;
                double* gw = neg.dw.data() + i * p.n_hidden;
                for (std::size_t j = 0; j < p.n_hidden; ++j) {
                    gw[j] += weight * p_h[j];
                }
            }
            for (std::size_t j = 0; j < p.n_hidden; ++j) {
                neg.dc[j] += weight * p_h[j];
            }
        }
    } else {
        std::vector<double> h(p.n_hidden);
        std::vector<double> p_v(p.n_visible);
        const std::size_t states = std::size_t{1} << p.n_hidden;
        for (std::size_t s = 0; s < states; ++s) {
            detail::unpack_bits(s, h);
            const double weight =
                std::exp(-detail::hidden_free_energy(p, h) - log_z);
            detail::visible_preacts(p, h, 1.0, p_v.data());
            for (double& x : p_v) {
                x = sigmoid(x);
            }
            for (std::size_t i = 0; i < p.n_visible; ++i) {
                neg.db[i] += weight * p_v[i];
            }
            for (std::size_t j = 0; j < p.n_hidden; ++j) {
                if (h[j] == 0.0) {
                    continue;
                }
                neg.dc[j] += weight;
                for (std::size_t i = 0; i < p.n_visible; ++i) {
                    neg.dw[i * p.n_hidden + j] += weight * p_v[i];
                }
            }
        }
    }
    detail::subtract_grad(g, neg);
    return g;
}

namespace detail {

// Mean squared error between data rows and their one-step reconstruction
// probabilities, averaged per pixel.
inline double reconstruction_error(const RbmParams& p,
                                   const ImageDataset& data, Rng& rng) {
    GibbsState st = make_state(p, data.row(0));
    double total = 0.0;
    for (std::size_t t = 0; t < data.n; ++t) {
        const auto v = data.row(t);
        st.v.assign(v.begin(), v.end());
        gibbs_step_inplace(p, st, rng);
        for (std::size_t i = 0; i < p.n_visible; ++i) {
            const double d = v[i] - st.p_v[i];
            total += d * d;
        }
    }
    return total / static_cast<double>(data.n * p.n_visible);
}

} // namespace detail

// Stochastic gradient ascent with momentum; weight decay pulls W (only)
// toward zero. One Rng drives init, epoch shuffles, chain sampling and
// the per-epoch reconstruction pass, so a seed pins the whole run.
inline std::pair<RbmParams, TrainingHistory> train(const ImageDataset& data,
                                                   std::size_t n_hidden,
                                                   const TrainConfig& cfg) {
    validate(cfg);
    if (data.n == 0) {
        throw ConfigError("cannot train on an empty dataset");
    }
    Rng rng(cfg.seed);
    RbmParams params = init_params(data, n_hidden, cfg, rng);

    PcdState state;
    if (cfg.algorithm == TrainAlgorithm::pcd) {
        // fantasy particles start as Bernoulli draws of the first rows
        state.n_chains = cfg.batch_size;
        state.n_visible = params.n_visible;
        state.fantasy_v.resize(state.n_chains * state.n_visible);
        for (std::size_t c = 0; c < state.n_chains; ++c) {
            const auto row = data.row(c % data.n);
            auto chain = state.chain(c);
            for (std::size_t i = 0; i < params.n_visible; ++i) {
                chain[i] = rng.next_double() < row[i] ? 1.0 : 0.0;
            }
        }
    }

    std::vector<double> vel_w(params.w.size(), 0.0);
    std::vector<double> vel_b(params.b.size(), 0.0);
    std::vector<double> vel_c(params.c.size(), 0.0);
    std::vector<std::size_t> order(data.n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainingHistory history;
    history.epochs.reserve(cfg.epochs);
    Batch batch;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        shuffle(order, rng);
        for (std::size_t first = 0; first < data.n;
             first += cfg.batch_size) {
            const std::size_t count =
                std::min(cfg.batch_size, data.n - first);
            batch.clear();
            for (std::size_t i = 0; i < count; ++i) {
                batch.push_back(data.row(order[first + i]));
            }
            const GradEstimate g =
                cfg.algorithm == TrainAlgorithm::cd
                    ? cd_gradient(params, batch, cfg.k, rng)
                    : pcd_gradient(params, batch, state, cfg.k, rng);
            for (std::size_t i = 0; i < params.w.size(); ++i) {
                vel_w[i] = cfg.momentum * vel_w[i] +
                           (g.dw[i] - cfg.weight_decay * params.w[i]);
                params.w[i] += cfg.learning_rate * vel_w[i];
            }
            for (std::size_t i = 0; i < params.b.size(); ++i) {
                vel_b[i] = cfg.momentum * vel_b[i] + g.db[i];
                params.b[i] += cfg.learning_rate * vel_b[i];
            }
            for (std::size_t j = 0; j < params.c.size(); ++j) {
                vel_c[j] = cfg.momentum * vel_c[j] + g.dc[j];
                params.c[j] += cfg.learning_rate * vel_c[j];
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.recon_error = detail::reconstruction_error(params, data, rng);
        if (cfg.track_exact_ll) {
            stats.exact_ll = exact_log_likelihood(params, data);
        }
        const auto t1 = std::chrono::steady_clock::now();
        stats.wall_ms =
            std::chrono::duration<double, std::milli>(t1 - t0).count();
        history.epochs.push_back(stats);
    }
    return {std::move(params), std::move(history)};
}

// Per-epoch CSV; the likelihood column appears only when tracked.
inline void write_history_csv(const TrainingHistory& history,
                              const std::string& path) {
    auto os = detail::open_output(path);
    bool has_ll = false;
    for (const auto& e : history.epochs) {
        has_ll = has_ll || e.exact_ll.has_value();
    }
    os << (has_ll ? "epoch,recon_error,exact_ll,wall_ms\n"
                  : "epoch,recon_error,wall_ms\n");
    os.precision(17);
    for (const auto& e : history.epochs) {
        os << e.epoch << ',' << e.recon_error << ',';
        if (has_ll) {
            if (e.exact_ll) {
                os << *e.exact_ll;
            }
            os << ',';
        }
        os << e.wall_ms << '\n';
    }
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

} // namespace rbmkit
