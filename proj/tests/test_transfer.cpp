#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <span>
#include <vector>

#include "oracle.hpp"
#include "rbmkit/classifier.hpp"
#include "rbmkit/dataset.hpp"
#include "rbmkit/detail/parallel.hpp"
#include "rbmkit/errors.hpp"
#include "rbmkit/training.hpp"
#include "rbmkit/transfer.hpp"

using rbmkit::Rng;
using rbmkit::TransferConfig;
using rbmkit::TransferMode;

namespace {

// two 3-pixel prototypes, all-ones and all-zeros, ten copies each
rbmkit::ImageDataset prototype_data() {
    std::vector<double> pixels;
    std::vector<int> labels;
    for (int i = 0; i < 10; ++i) {
        pixels.insert(pixels.end(), {1, 1, 1});
        labels.push_back(0);
        pixels.insert(pixels.end(), {0, 0, 0});
        labels.push_back(1);
    }
    return rbmkit::make_dataset(3, 1, 2, pixels, labels);
}

rbmkit::RbmParams prototype_rbm() {
    rbmkit::TrainConfig cfg;
    cfg.algorithm = rbmkit::TrainAlgorithm::pcd;
    cfg.learning_rate = 0.2;
    cfg.epochs = 1000;
    cfg.batch_size = 4;
    cfg.seed = 7;
    return rbmkit::train(prototype_data(), 2, cfg).first;
}

}  // namespace

TEST_CASE("a saturated model snaps its own mode back out") {
    // biases pin the pattern; no couplings
    auto p = rbmkit::make_rbm(4, 2);
    const std::vector<double> mode = {1.0, 0.0, 0.0, 1.0};
    for (std::size_t i = 0; i < 4; ++i) {
        p.b[i] = mode[i] > 0.5 ? 50.0 : -50.0;
    }

    TransferConfig cfg;
    cfg.k = 1;
    cfg.output_mode = TransferMode::mean_field;
    Rng rng(1);
    const auto out = rbmkit::transfer_instance(p, mode, cfg, rng);
    for (std::size_t i = 0; i < 4; ++i) {
        REQUIRE(std::abs(out[i] - mode[i]) <= 1e-20);
    }

    cfg.output_mode = TransferMode::binary_sample;
    cfg.k = 5;
    Rng rng2(2);
    CHECK(rbmkit::transfer_instance(p, mode, cfg, rng2) == mode);
}

TEST_CASE("k=1 mean-field transfer is the manual op composition") {
    const auto p = oracle::random_rbm(5, 4, 1.0, 71);
    const std::vector<double> x = {1.0, 0.0, 0.0, 1.0, 1.0};

    TransferConfig cfg;
    cfg.k = 1;
    cfg.output_mode = TransferMode::mean_field;
    Rng r1(33);
    const auto got = rbmkit::transfer_instance(p, x, cfg, r1);

    Rng r2(33);
    const auto p_h = rbmkit::hidden_probs(p, x);
    const auto h = rbmkit::sample_bernoulli(p_h, r2);
    const auto want = rbmkit::visible_probs(p, h);
    REQUIRE(got == want);
}

TEST_CASE("transfer_instance validates its inputs") {
    const auto p = oracle::random_rbm(3, 2, 0.5, 72);
    const std::vector<double> x = {1.0, 0.0, 1.0};
    TransferConfig cfg;
    cfg.k = 0;
    Rng rng(1);
    CHECK_THROWS_AS(rbmkit::transfer_instance(p, x, cfg, rng),
                    rbmkit::ConfigError);

    cfg.k = 1;
    const std::vector<double> bad = {1.0, 0.0};
    CHECK_THROWS_AS(rbmkit::transfer_instance(p, bad, cfg, rng),
                    rbmkit::DimensionError);
}

TEST_CASE("corrupted prototypes snap back within three steps") {
    const auto p = prototype_rbm();
    const std::vector<std::vector<double>> corrupted = {
        {1, 1, 0}, {1, 0, 1}, {0, 1, 1},  // one flip away from all-ones
        {0, 0, 1}, {0, 1, 0}, {1, 0, 0},  // one flip away from all-zeros
    };

    TransferConfig cfg;
    cfg.k = 3;
    cfg.output_mode = TransferMode::binary_sample;
    const Rng root(99);
    for (std::size_t ci = 0; ci < corrupted.size(); ++ci) {
        const double want = ci < 3 ? 1.0 : 0.0;
        int hits = 0;
        const int trials = 10000;
        for (int t = 0; t < trials; ++t) {
            Rng rng = root.child(ci * trials + t);
            const auto out =
                rbmkit::transfer_instance(p, corrupted[ci], cfg, rng);
            bool exact = true;
            for (double v : out) {
                if (v != want) exact = false;
            }
            if (exact) ++hits;
        }
        // recover the source prototype (Hamming distance 0) most of the time
        CHECK(hits >= trials * 8 / 10);
    }
}

TEST_CASE("transfer pulls corrupted data down the free-energy landscape") {
    const auto p = prototype_rbm();
    std::vector<double> pixels = {1, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, 0};
    const auto raw = rbmkit::make_dataset(3, 1, 2, pixels, {0, 1, 0, 1});

    TransferConfig cfg;
    cfg.k = 3;
    const auto moved = rbmkit::transfer_dataset(p, raw, cfg, Rng(5));

    auto mean_fe = [&](const rbmkit::ImageDataset& ds) {
        double total = 0.0;
        for (std::size_t i = 0; i < ds.n; ++i) {
            total += rbmkit::free_energy(p, ds.row(i));
        }
        return total / static_cast<double>(ds.n);
    };
    CHECK(mean_fe(moved) < mean_fe(raw));
}

TEST_CASE("transfer_dataset maps rows through child streams") {
    const auto p = oracle::random_rbm(4, 3, 0.9, 73);
    std::vector<double> pixels;
    std::vector<int> labels;
    Rng fill(21);
    for (int t = 0; t < 6; ++t) {
        for (int i = 0; i < 4; ++i) {
            pixels.push_back(fill.next_double() < 0.5 ? 0.0 : 1.0);
        }
        labels.push_back(static_cast<int>(fill.uniform_index(3)));
    }
    const auto ds = rbmkit::make_dataset(2, 2, 3, pixels, labels);

    TransferConfig cfg;
    cfg.k = 2;
    cfg.output_mode = TransferMode::mean_field;
    const Rng root(81);
    const auto out = rbmkit::transfer_dataset(p, ds, cfg, root);

    REQUIRE(out.n == ds.n);
    REQUIRE(out.labels == ds.labels);
    REQUIRE(out.width == ds.width);
    for (std::size_t i = 0; i < ds.n; ++i) {
        Rng row_rng = root.child(i);
        const auto want =
            rbmkit::transfer_instance(p, ds.row(i), cfg, row_rng);
        const auto got = out.row(i);
        REQUIRE(std::equal(got.begin(), got.end(), want.begin()));
    }
}

TEST_CASE("transferring an empty dataset is a no-op") {
    const auto p = oracle::random_rbm(4, 2, 0.5, 74);
    const auto empty = rbmkit::make_dataset(2, 2, 3, {}, {});
    TransferConfig cfg;
    const auto out = rbmkit::transfer_dataset(p, empty, cfg, Rng(1));
    CHECK(out.n == 0);
    CHECK(out.pixels.empty());
}

TEST_CASE("transfer_dataset rejects mismatched dimensions") {
    const auto p = oracle::random_rbm(5, 2, 0.5, 75);
    const auto ds = rbmkit::make_dataset(2, 2, 1, {0, 1, 0, 1}, {0});
    TransferConfig cfg;
    CHECK_THROWS_AS(rbmkit::transfer_dataset(p, ds, cfg, Rng(1)),
                    rbmkit::DimensionError);
}

TEST_CASE("thread count never changes transfer output") {
    const auto p = oracle::random_rbm(6, 4, 1.0, 76);
    std::vector<double> pixels;
    std::vector<int> labels;
    Rng fill(22);
    for (int t = 0; t < 37; ++t) {  // awkward count for the work queue
        for (int i = 0; i < 6; ++i) {
            pixels.push_back(fill.next_double() < 0.5 ? 0.0 : 1.0);
        }
        labels.push_back(0);
    }
    const auto ds = rbmkit::make_dataset(6, 1, 1, pixels, labels);

    TransferConfig cfg;
    cfg.k = 3;
    rbmkit::set_max_threads(1);
    const auto serial = rbmkit::transfer_dataset(p, ds, cfg, Rng(4));
    rbmkit::set_max_threads(4);
    const auto parallel = rbmkit::transfer_dataset(p, ds, cfg, Rng(4));
    rbmkit::set_max_threads(1);
    REQUIRE(serial.pixels == parallel.pixels);
    REQUIRE(serial.labels == parallel.labels);
}

TEST_CASE("evaluate_pipeline reports one row per requested k") {
    const auto data = prototype_data();
    const auto p = prototype_rbm();
    rbmkit::ClfConfig ccfg;
    ccfg.hidden_units = 6;
    ccfg.epochs = 30;
    ccfg.batch_size = 4;
    ccfg.seed = 3;
    const auto clf = rbmkit::clf_train(data, ccfg);

    TransferConfig cfg;
    cfg.seed = 17;
    const auto report = rbmkit::evaluate_pipeline(
        p, clf, data, data, {1, 3}, cfg);

    REQUIRE(report.target_transferred_accuracy.size() == 2);
    REQUIRE(report.transferred_free_energy.size() == 2);
    CHECK(report.target_transferred_accuracy[0].first == 1);
    CHECK(report.target_transferred_accuracy[1].first == 3);
    CHECK(report.n_samples == data.n);
    CHECK(report.seed == 17);

    // same dataset on both sides: the direct score is the source score
    REQUIRE(report.source_accuracy == report.target_direct_accuracy);
    for (const auto& [k, acc] : report.target_transferred_accuracy) {
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
    }
    CHECK(std::isfinite(report.target_free_energy));
    CHECK_FALSE(report.target_oracle_accuracy.has_value());

    const auto with_oracle = rbmkit::evaluate_pipeline(
        p, clf, data, data, {1}, cfg, &clf);
    REQUIRE(with_oracle.target_oracle_accuracy.has_value());
    CHECK(*with_oracle.target_oracle_accuracy ==
          rbmkit::accuracy(clf, data));
}

TEST_CASE("evaluate_pipeline is reproducible bit for bit") {
    const auto data = prototype_data();
    const auto p = prototype_rbm();
    rbmkit::ClfConfig ccfg;
    ccfg.hidden_units = 4;
    ccfg.epochs = 10;
    ccfg.seed = 4;
    const auto clf = rbmkit::clf_train(data, ccfg);

    TransferConfig cfg;
    cfg.seed = 23;
    const auto a = rbmkit::evaluate_pipeline(p, clf, data, data, {1, 3}, cfg);
    const auto b = rbmkit::evaluate_pipeline(p, clf, data, data, {1, 3}, cfg);
    REQUIRE(a.source_accuracy == b.source_accuracy);
    REQUIRE(a.target_direct_accuracy == b.target_direct_accuracy);
    REQUIRE(a.target_transferred_accuracy ==
            b.target_transferred_accuracy);
    REQUIRE(a.transferred_free_energy == b.transferred_free_energy);
    REQUIRE(a.target_free_energy == b.target_free_energy);
}

TEST_CASE("evaluate_pipeline rejects unusable inputs") {
    const auto data = prototype_data();
    const auto p = prototype_rbm();
    rbmkit::ClfConfig ccfg;
    ccfg.hidden_units = 4;
    ccfg.epochs = 5;
    const auto clf = rbmkit::clf_train(data, ccfg);

    const auto empty = rbmkit::make_dataset(3, 1, 2, {}, {});
    TransferConfig cfg;
    CHECK_THROWS_AS(
        rbmkit::evaluate_pipeline(p, clf, empty, data, {1}, cfg),
        rbmkit::ConfigError);
    CHECK_THROWS_AS(
        rbmkit::evaluate_pipeline(p, clf, data, empty, {1}, cfg),
        rbmkit::ConfigError);

    const auto wide = rbmkit::make_dataset(2, 2, 2, {0, 1, 0, 1}, {0});
    CHECK_THROWS_AS(
        rbmkit::evaluate_pipeline(p, clf, data, wide, {1}, cfg),
        rbmkit::DimensionError);
}
