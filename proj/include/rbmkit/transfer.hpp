#pragma once

#include <cstdint>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "classifier.hpp"
#include "dataset.hpp"
#include "detail/parallel.hpp"
#include "errors.hpp"
#include "rbm.hpp"
#include "rng.hpp"

namespace rbmkit {

// How a transferred instance leaves the chain: the final visible
// activation probabilities, or the final binary sample.
enum class TransferMode { mean_field, binary_sample };

struct TransferConfig {
    std::size_t k = 1;  // Gibbs steps toward the source distribution
    TransferMode output_mode = TransferMode::mean_field;
    std::uint64_t seed = 0;
};

// Casts one target-domain instance into the source model's distribution
// by running the Gibbs chain k steps from x.
inline std::vector<double> transfer_instance(const RbmParams& rbm,
                                             std::span<const double> x,
                                             const TransferConfig& cfg,
                                             Rng& rng) {
    if (cfg.k == 0) {
        throw ConfigError("transfer requires k >= 1");
    }
    GibbsState st = gibbs_chain(rbm, x, cfg.k, rng);
    return cfg.output_mode == TransferMode::mean_field ? std::move(st.p_v)
                                                       : std::move(st.v);
}

// Row-wise transfer; row i uses the child stream keyed by i, so the result
// is independent of evaluation order and row-for-row reproducible.
inline ImageDataset transfer_dataset(const RbmParams& rbm,
                                     const ImageDataset& data,
                                     const TransferConfig& cfg,
                                     const Rng& rng) {
    if (data.dim() != rbm.n_visible) {
        throw DimensionError("dataset dimension does not match n_visible");
    }
    ImageDataset out = data;
    detail::parallel_for(data.n, [&](std::size_t i) {
        Rng row_rng = rng.child(i);
        const std::vector<double> moved =
            transfer_instance(rbm, data.row(i), cfg, row_rng);
        std::copy(moved.begin(), moved.end(), out.mutable_row(i).begin());
    });
    return out;
}

// The four-condition accuracy table plus the free-energy proximity check
// behind "transferred data should look native to the source model".
struct TransferReport {
    double source_accuracy = 0.0;
    double target_direct_accuracy = 0.0;
    // one (k, accuracy, mean free energy of transferred data) per k
    std::vector<std::pair<std::size_t, double>> target_transferred_accuracy;
    std::vector<std::pair<std::size_t, double>> transferred_free_energy;
    double target_free_energy = 0.0;  // mean source-RBM F on raw target
    std::optional<double> target_oracle_accuracy;
    std::size_t n_samples = 0;  // target rows scored per condition
    std::uint64_t seed = 0;
};

namespace detail {

inline double mean_free_energy(const RbmParams& rbm,
                               const ImageDataset& data) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.n; ++i) {
        total += free_energy(rbm, data.row(i));
    }
    return total / static_cast<double>(data.n);
}

} // namespace detail

// Scores the classifier on source data, raw target data, and the target
// data transferred with each requested k. `oracle` (a target-trained
// classifier) is only consulted for the reference row of the report.
inline TransferReport evaluate_pipeline(const RbmParams& rbm,
                                        const MlpParams& clf,
                                        const ImageDataset& source_test,
                                        const ImageDataset& target_test,
                                        const std::vector<std::size_t>& ks,
                                        const TransferConfig& cfg,
                                        const MlpParams* oracle = nullptr) {
    if (source_test.n == 0 || target_test.n == 0) {
        throw ConfigError("evaluation needs nonempty datasets");
    }
    if (source_test.dim() != target_test.dim() ||
        source_test.dim() != rbm.n_visible) {
        throw DimensionError("source, target and rbm dimensions must agree");
    }
    TransferReport report;
    report.seed = cfg.seed;
    report.n_samples = target_test.n;
    report.source_accuracy = accuracy(clf, source_test);
    report.target_direct_accuracy = accuracy(clf, target_test);
    report.target_free_energy = detail::mean_free_energy(rbm, target_test);
    for (const std::size_t k : ks) {
        TransferConfig kcfg = cfg;
        kcfg.k = k;
        const Rng rng(cfg.seed, k);  // one stream per k
        const ImageDataset moved = transfer_dataset(rbm, target_test, kcfg,
                                                    rng);
        report.target_transferred_accuracy.emplace_back(k,
                                                        accuracy(clf, moved));
        report.transferred_free_energy.emplace_back(
            k, detail::mean_free_energy(rbm, moved));
    }
    if (oracle != nullptr) {
        report.target_oracle_accuracy = accuracy(*oracle, target_test);
    }
    return report;
}

} // namespace rbmkit
