#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "detail/binary_io.hpp"
#include "errors.hpp"
#include "math.hpp"
#include "rng.hpp"

namespace rbmkit {

// Bipartite binary energy model, E(v,h) = -(b.v + c.h + v'Wh).
// W is n_visible x n_hidden, row-major; immutable while sampling.
struct RbmParams {
    std::size_t n_visible = 0;
    std::size_t n_hidden = 0;
    std::vector<double> w;
    std::vector<double> b;
    std::vector<double> c;
};

inline RbmParams make_rbm(std::size_t n_visible, std::size_t n_hidden) {
    if (n_visible == 0 || n_hidden == 0) {
        throw DimensionError("rbm layer sizes must be positive");
    }
    RbmParams p;
    p.n_visible = n_visible;
    p.n_hidden = n_hidden;
    p.w.assign(n_visible * n_hidden, 0.0);
    p.b.assign(n_visible, 0.0);
    p.c.assign(n_hidden, 0.0);
    return p;
}

inline void validate(const RbmParams& p) {
    if (p.n_visible == 0 || p.n_hidden == 0 ||
        p.w.size() != p.n_visible * p.n_hidden ||
        p.b.size() != p.n_visible || p.c.size() != p.n_hidden) {
        throw DimensionError("inconsistent rbm parameter shapes");
    }
    if (!all_finite(p.w) || !all_finite(p.b) || !all_finite(p.c)) {
        throw NumericError("rbm parameters contain non-finite values");
    }
}

// One transition's worth of state: the visible/hidden samples plus the
// activation probabilities they were drawn from.
struct GibbsState {
    std::vector<double> v;    // binary
    std::vector<double> h;    // binary
    std::vector<double> p_h;  // P(h_j = 1 | input v)
    std::vector<double> p_v;  // P(v_i = 1 | h)
};

namespace detail {

inline void check_visible(const RbmParams& p, std::span<const double> v) {
    if (v.size() != p.n_visible) {
        throw DimensionError("visible vector length does not match n_visible");
    }
}

inline void check_hidden(const RbmParams& p, std::span<const double> h) {
    if (h.size() != p.n_hidden) {
        throw DimensionError("hidden vector length does not match n_hidden");
    }
}

// out_j = c_j + beta * (W'v)_j. beta scales the weight term only; the AIS
// ladder anneals through it.
inline void hidden_preacts(const RbmParams& p, std::span<const double> v,
                           double beta, double* out) {
    for (std::size_t j = 0; j < p.n_hidden; ++j) {
        out[j] = 0.0;
    }
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        const double vi = v[i];
        if (vi == 0.0) {
            continue;
        }
        const double* row = p.w.data() + i * p.n_hidden;
        for (std::size_t j = 0; j < p.n_hidden; ++j) {
            out[j] += vi * row[j];
        }
    }
    for (std::size_t j = 0; j < p.n_hidden; ++j) {
        out[j] = p.c[j] + beta * out[j];
    }
}

// out_i = b_i + beta * (Wh)_i.
inline void visible_preacts(const RbmParams& p, std::span<const double> h,
                            double beta, double* out) {
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        const double* row = p.w.data() + i * p.n_hidden;
        double acc = 0.0;
        for (std::size_t j = 0; j < p.n_hidden; ++j) {
            acc += row[j] * h[j];
        }
        out[i] = p.b[i] + beta * acc;
    }
}

inline void sample_bernoulli_into(std::span<const double> p, Rng& rng,
                                  double* out) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        out[i] = rng.next_double() < p[i] ? 1.0 : 0.0;
    }
}

// Block transition in place: all hidden units from P(h|v), then all
// visible units from P(v|h). Buffers must be pre-sized; no allocation.
inline void gibbs_step_inplace(const RbmParams& rp, GibbsState& st, Rng& rng,
                               double beta = 1.0) {
    hidden_preacts(rp, st.v, beta, st.p_h.data());
    for (std::size_t j = 0; j < rp.n_hidden; ++j) {
        st.p_h[j] = sigmoid(st.p_h[j]);
    }
    sample_bernoulli_into(st.p_h, rng, st.h.data());
    visible_preacts(rp, st.h, beta, st.p_v.data());
    for (std::size_t i = 0; i < rp.n_visible; ++i) {
        st.p_v[i] = sigmoid(st.p_v[i]);
    }
    sample_bernoulli_into(st.p_v, rng, st.v.data());
}

inline GibbsState make_state(const RbmParams& p, std::span<const double> v0) {
    GibbsState st;
    st.v.assign(v0.begin(), v0.end());
    st.h.assign(p.n_hidden, 0.0);
    st.p_h.assign(p.n_hidden, 0.0);
    st.p_v.assign(p.n_visible, 0.0);
    return st;
}

} // namespace detail

inline double energy(const RbmParams& p, std::span<const double> v,
                     std::span<const double> h) {
    detail::check_visible(p, v);
    detail::check_hidden(p, h);
    double bv = 0.0;
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        bv += p.b[i] * v[i];
    }
    double ch = 0.0;
    for (std::size_t j = 0; j < p.n_hidden; ++j) {
        ch += p.c[j] * h[j];
    }
    double vwh = 0.0;
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        const double* row = p.w.data() + i * p.n_hidden;
        double acc = 0.0;
        for (std::size_t j = 0; j < p.n_hidden; ++j) {
            acc += row[j] * h[j];
        }
        vwh += v[i] * acc;
    }
    return -(bv + ch + vwh);
}

// P(h_j = 1 | v), factorized; v may be real-valued in [0,1] (Bernoulli
// means fed straight into the pre-activation).
inline std::vector<double> hidden_probs(const RbmParams& p,
                                        std::span<const double> v) {
    detail::check_visible(p, v);
    std::vector<double> out(p.n_hidden);
    detail::hidden_preacts(p, v, 1.0, out.data());
    for (double& x : out) {
        x = sigmoid(x);
    }
    return out;
}

// P(v_i = 1 | h), factorized.
inline std::vector<double> visible_probs(const RbmParams& p,
                                         std::span<const double> h) {
    detail::check_hidden(p, h);
    std::vector<double> out(p.n_visible);
    detail::visible_preacts(p, h, 1.0, out.data());
    for (double& x : out) {
        x = sigmoid(x);
    }
    return out;
}

// Independent Bernoulli draws, one per coordinate, consuming exactly one
// rng value per entry.
inline std::vector<double> sample_bernoulli(std::span<const double> p,
                                            Rng& rng) {
    for (double x : p) {
        if (!(x >= 0.0 && x <= 1.0)) {
            throw ConfigError("bernoulli probability outside [0,1]");
        }
    }
    std::vector<double> out(p.size());
    detail::sample_bernoulli_into(p, rng, out.data());
    return out;
}

// One block-Gibbs transition from v: h ~ P(h|v), then v' ~ P(v|h).
inline GibbsState gibbs_step(const RbmParams& p, std::span<const double> v,
                             Rng& rng) {
    detail::check_visible(p, v);
    GibbsState st = detail::make_state(p, v);
    detail::gibbs_step_inplace(p, st, rng);
    return st;
}

// k chained transitions, feeding the sampled v forward. State buffers are
// reused across steps, so long chains do not allocate.
inline GibbsState gibbs_chain(const RbmParams& p, std::span<const double> v0,
                              std::size_t k, Rng& rng) {
    detail::check_visible(p, v0);
    if (k == 0) {
        throw ConfigError("gibbs_chain requires k >= 1");
    }
    GibbsState st = detail::make_state(p, v0);
    for (std::size_t step = 0; step < k; ++step) {
        detail::gibbs_step_inplace(p, st, rng);
    }
    return st;
}

// F(v) = -b.v - sum_j softplus(c_j + (W'v)_j), so exp(-F(v)) = sum_h exp(-E(v,h)).
inline double free_energy(const RbmParams& p, std::span<const double> v) {
    detail::check_visible(p, v);
    std::vector<double> pre(p.n_hidden);
    detail::hidden_preacts(p, v, 1.0, pre.data());
    double bv = 0.0;
    for (std::size_t i = 0; i < p.n_visible; ++i) {
        bv += p.b[i] * v[i];
    }
    double sp = 0.0;
    for (std::size_t j = 0; j < p.n_hidden; ++j) {
        sp += softplus(pre[j]);
    }
    return -bv - sp;
}

// --- model file, magic "RBM1" ---
// u32 n_visible, u32 n_hidden, then b, c, W (row-major) as f64.
// All little-endian; round-trips bit-exactly.

inline void save_rbm(const RbmParams& p, const std::string& path) {
    validate(p);
    auto os = detail::open_output(path);
    detail::write_bytes(os, "RBM1", 4);
    detail::write_u32_le(os, static_cast<std::uint32_t>(p.n_visible));
    detail::write_u32_le(os, static_cast<std::uint32_t>(p.n_hidden));
    for (double x : p.b) {
        detail::write_f64_le(os, x);
    }
    for (double x : p.c) {
        detail::write_f64_le(os, x);
    }
    for (double x : p.w) {
        detail::write_f64_le(os, x);
    }
    os.flush();
    if (!os) {
        throw IoError("write failed: " + path);
    }
}

inline RbmParams load_rbm(const std::string& path) {
    auto is = detail::open_input(path);
    char magic[4];
    detail::read_bytes(is, magic, 4, "rbm magic");
    if (std::string(magic, 4) != "RBM1") {
        throw FormatError("bad magic in rbm file (want RBM1): " + path);
    }
    const std::uint32_t nv = detail::read_u32_le(is, "rbm n_visible");
    const std::uint32_t nh = detail::read_u32_le(is, "rbm n_hidden");
    if (nv == 0 || nh == 0) {
        throw FormatError("rbm file has zero-sized layer: " + path);
    }
    RbmParams p = make_rbm(nv, nh);
    for (double& x : p.b) {
        x = detail::read_f64_le(is, "rbm visible biases");
    }
    for (double& x : p.c) {
        x = detail::read_f64_le(is, "rbm hidden biases");
    }
    for (double& x : p.w) {
        x = detail::read_f64_le(is, "rbm weights");
    }
    validate(p);
    return p;
}

} // namespace rbmkit
