#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "dataset.hpp"
#include "detail/parallel.hpp"
#include "errors.hpp"
#include "math.hpp"
#include "rbm.hpp"
#include "rng.hpp"

namespace rbmkit {

// Exact enumeration sums over the smaller layer; 2^24 states is the
// ceiling (about 16M terms, seconds at desk scale).
inline constexpr std::size_t kExactEnumerationMaxLayer = 24;

namespace detail {

inline void check_enumerable(const RbmParams& p) {
    const std::size_t smaller = std::min(p.n_visible, p.n_hidden);
    if (smaller > kExactEnumerationMaxLayer) {
        throw CapacityError(
            "exact enumeration requires min(n_visible, n_hidden) <= " +
            std::to_string(kExactEnumerationMaxLayer) + ", got " +
            std::to_string(smaller));
    }
}

// Writes the bits of `index` into a 0/1 vector, coordinate i = bit i.
inline void unpack_bits(std::size_t index, std::vector<double>& out) {
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = static_cast<double>((index >> i) & 1u);
    }
}

// Dual of the free energy: -log sum_v exp(-E(v,h)) for fixed h.
inline double hidden_free_energy(const RbmParams& p,
                                 std::span<const double> h) {
    std::vector<double> pre(p.n_visible);
    visible_preacts(p, h, 1.0, pre.data());
    double ch = 0.0;
    for (std::size_t j = 0; j < p.n_hidden; ++j) {
        ch += p.c[j] * h[j];
    }
    double sp = 0.0;
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        sp += softplus(pre[i]);
    }
    return -ch - sp;
}

} // namespace detail

// log Z = log sum_{v,h} exp(-E(v,h)), via log-sum-exp over the smaller
// layer with the other layer summed out analytically.
inline double exact_log_partition(const RbmParams& p) {
    validate(p);
    detail::check_enumerable(p);
    LogSumExp acc;
    if (p.n_hidden <= p.n_visible) {
        std::vector<double> h(p.n_hidden);
        const std::size_t states = std::size_t{1} << p.n_hidden;
        for (std::size_t s = 0; s < states; ++s) {
            detail::unpack_bits(s, h);
            acc.add(-detail::hidden_free_energy(p, h));
        }
    } else {
        std::vector<double> v(p.n_visible);
        const std::size_t states = std::size_t{1} << p.n_visible;
        for (std::size_t s = 0; s < states; ++s) {
            detail::unpack_bits(s, v);
            acc.add(-free_energy(p, v));
        }
    }
    return acc.value();
}

enum class AisSchedule { linear, sigmoid_spaced };

struct AisConfig {
    std::size_t n_temperatures = 1000;  // ladder size, endpoints included
    std::size_t n_chains = 100;
    AisSchedule schedule = AisSchedule::linear;
    std::uint64_t seed = 0;
};

struct LogZEstimate {
    double mean_log_z = 0.0;
    double std_err_log_z = 0.0;
    std::size_t n_chains = 0;
};

// Inverse-temperature ladder, strictly increasing from 0 to 1. The
// sigmoid-spaced variant packs temperatures near both endpoints.
inline std::vector<double> ais_schedule(AisSchedule schedule, std::size_t n) {
    if (n < 2) {
        throw ConfigError("ais schedule needs at least 2 temperatures");
    }
    std::vector<double> betas(n);
    const double last = static_cast<double>(n - 1);
    switch (schedule) {
    case AisSchedule::linear:
        for (std::size_t k = 0; k < n; ++k) {
            betas[k] = static_cast<double>(k) / last;
        }
        break;
    case AisSchedule::sigmoid_spaced: {
        const double a = 6.0;
        const double lo = sigmoid(-a);
        const double hi = sigmoid(a);
        for (std::size_t k = 0; k < n; ++k) {
            const double t = static_cast<double>(k) / last;
            betas[k] = (sigmoid(a * (2.0 * t - 1.0)) - lo) / (hi - lo);
        }
        betas.front() = 0.0;
        betas.back() = 1.0;
        break;
    }
    default:
        throw ConfigError("unknown ais schedule");
    }
    return betas;
}

namespace detail {

// Free energy of the beta-scaled model given precomputed t = W'v:
// F_beta(v) = -b.v - sum_j softplus(c_j + beta * t_j).
inline double annealed_free_energy(const RbmParams& p,
                                   std::span<const double> v,
                                   std::span<const double> wt_v, double beta) {
    double bv = 0.0;
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        bv += p.b[i] * v[i];
    }
    double sp = 0.0;
    for (std::size_t j = 0; j < p.n_hidden; ++j) {
        sp += softplus(p.c[j] + beta * wt_v[j]);
    }
    return -bv - sp;
}

// One AIS run: v0 from the base-rate model (W = 0, biases kept), then a
// Gibbs transition at each intermediate beta. Returns the log importance
// weight relative to the base model.
inline double ais_single_run(const RbmParams& p,
                             std::span<const double> betas, Rng& rng) {
    GibbsState st;
    st.v.assign(p.n_visible, 0.0);
    st.h.assign(p.n_hidden, 0.0);
    st.p_h.assign(p.n_hidden, 0.0);
    st.p_v.assign(p.n_visible, 0.0);
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        st.v[i] = rng.next_double() < sigmoid(p.b[i]) ? 1.0 : 0.0;
    }

    std::vector<double> wt_v(p.n_hidden);  // W'v for the current v
    double log_w = 0.0;
    for (std::size_t k = 1; k < betas.size(); ++k) {
        std::fill(wt_v.begin(), wt_v.end(), 0.0);
        for (std::size_t i = 0; i < p.n_visible; ++i) {
            const double vi = st.v[i];
            if (vi == 0.0) {
                continue;
            }
            const double* w_row = p.w.data() + i * p.n_hidden;
            for (std::size_t j = 0; j < p.n_hidden; ++j) {
                wt_v[j] += vi * w_row[j];
            }
        }
        log_w += annealed_free_energy(p, st.v, wt_v, betas[k - 1]) -
                 annealed_free_energy(p, st.v, wt_v, betas[k]);
        if (k + 1 < betas.size()) {
            gibbs_step_inplace(p, st, rng, betas[k]);
        }
    }
    if (!std::isfinite(log_w)) {
        throw NumericError("non-finite ais importance weight");
    }
    return log_w;
}

} // namespace detail

// Annealed importance sampling estimate of log Z. The base distribution is
// the zero-weight model with the target's biases, whose log Z is closed
// form; only the weight term is annealed. Chains use streams derived from
// (seed, chain index), so any execution order gives the same estimate.
inline LogZEstimate ais_log_partition(const RbmParams& p,
                                      const AisConfig& config = {}) {
    validate(p);
    if (config.n_chains == 0) {
        throw ConfigError("ais needs at least one chain");
    }
    const Rng rng(config.seed);
    const std::vector<double> betas =
        ais_schedule(config.schedule, config.n_temperatures);

    double base_log_z = 0.0;
    for (double bi : p.b) {
        base_log_z += softplus(bi);
    }
    for (double cj : p.c) {
        base_log_z += softplus(cj);
    }

    std::vector<double> log_weights(config.n_chains);
    detail::parallel_for(config.n_chains, [&](std::size_t chain) {
        Rng chain_rng = rng.child(chain);
        log_weights[chain] = detail::ais_single_run(p, betas, chain_rng);
    });

    const auto [mean, stddev] = mean_and_stddev(log_weights);
    LogZEstimate est;
    est.mean_log_z = base_log_z + mean;
    est.std_err_log_z =
        config.n_chains > 1
            ? stddev / std::sqrt(static_cast<double>(config.n_chains))
            : 0.0;
    est.n_chains = config.n_chains;
    return est;
}

// Exact average-free-energy likelihood: sum_t [-F(v_t)] - n * log Z.
// Only feasible inside the enumeration guard; larger models go through
// ais_log_partition instead.
inline double exact_log_likelihood(const RbmParams& p,
                                   const ImageDataset& data) {
    validate(p);
    if (data.dim() != p.n_visible) {
        throw DimensionError("dataset dimension does not match n_visible");
    }
    const double log_z = exact_log_partition(p);
    double ll = 0.0;
    for (std::size_t t = 0; t < data.n; ++t) {
        ll -= free_energy(p, data.row(t));
    }
    return ll - static_cast<double>(data.n) * log_z;
}

} // namespace rbmkit
