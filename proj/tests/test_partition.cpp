#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "oracle.hpp"
#include "rbmkit/dataset.hpp"
#include "rbmkit/detail/parallel.hpp"
#include "rbmkit/errors.hpp"
#include "rbmkit/math.hpp"
#include "rbmkit/partition.hpp"
#include "rbmkit/rbm.hpp"

TEST_CASE("exact log partition matches the doubly-exponential sum") {
    // hit both enumeration branches: hidden smaller, then visible smaller
    for (auto [nv, nh] : {std::pair<std::size_t, std::size_t>{5, 3},
                          {3, 5},
                          {4, 4}}) {
        for (std::uint64_t seed : {11u, 12u, 13u}) {
            const auto p = oracle::random_rbm(nv, nh, 1.4, seed);
            const double got = rbmkit::exact_log_partition(p);
            const double want = oracle::naive_log_partition(p);
            REQUIRE(oracle::rel_err(got, want) < 1e-12);
        }
    }
}

TEST_CASE("zero model has log Z = (n_visible + n_hidden) log 2") {
    const auto p = rbmkit::make_rbm(6, 4);
    const double want = 10.0 * std::log(2.0);
    CHECK(rbmkit::exact_log_partition(p) ==
          Catch::Approx(want).epsilon(1e-14));
}

TEST_CASE("bias-only model has the closed-form log Z") {
    auto p = rbmkit::make_rbm(4, 3);
    p.b = {0.3, -1.2, 0.0, 2.5};
    p.c = {-0.7, 0.9, 0.1};
    double want = 0.0;
    for (double x : p.b) want += rbmkit::softplus(x);
    for (double x : p.c) want += rbmkit::softplus(x);
    CHECK(rbmkit::exact_log_partition(p) ==
          Catch::Approx(want).epsilon(1e-14));
}

TEST_CASE("huge weights stay finite through the log-sum-exp path") {
    const auto p = oracle::random_rbm(8, 3, 500.0, 21);
    const double got = rbmkit::exact_log_partition(p);
    REQUIRE(std::isfinite(got));
    REQUIRE(oracle::rel_err(got, oracle::naive_log_partition(p)) < 1e-12);
}

TEST_CASE("exact enumeration refuses models beyond the guard") {
    const auto p = rbmkit::make_rbm(25, 25);
    CHECK_THROWS_AS(rbmkit::exact_log_partition(p), rbmkit::CapacityError);

    // one small layer keeps enumeration feasible regardless of the other
    const auto q = rbmkit::make_rbm(100, 3);
    CHECK_NOTHROW(rbmkit::exact_log_partition(q));
}

TEST_CASE("relabeling hidden units does not move log Z") {
    const auto p = oracle::random_rbm(5, 4, 1.0, 22);
    auto q = p;
    // swap hidden units 0 and 3
    std::swap(q.c[0], q.c[3]);
    for (std::size_t i = 0; i < q.n_visible; ++i) {
        std::swap(q.w[i * q.n_hidden + 0], q.w[i * q.n_hidden + 3]);
    }
    CHECK(rbmkit::exact_log_partition(q) ==
          Catch::Approx(rbmkit::exact_log_partition(p)).epsilon(1e-13));
}

TEST_CASE("ais schedules are strictly increasing ladders from 0 to 1") {
    for (auto sched :
         {rbmkit::AisSchedule::linear, rbmkit::AisSchedule::sigmoid_spaced}) {
        const auto betas = rbmkit::ais_schedule(sched, 64);
        REQUIRE(betas.size() == 64);
        REQUIRE(betas.front() == 0.0);
        REQUIRE(betas.back() == 1.0);
        for (std::size_t k = 1; k < betas.size(); ++k) {
            REQUIRE(betas[k] > betas[k - 1]);
        }
    }
    CHECK_THROWS_AS(rbmkit::ais_schedule(rbmkit::AisSchedule::linear, 1),
                    rbmkit::ConfigError);
}

TEST_CASE("sigmoid spacing concentrates rungs near the endpoints") {
    const auto betas =
        rbmkit::ais_schedule(rbmkit::AisSchedule::sigmoid_spaced, 101);
    const double edge_gap = betas[1] - betas[0];
    const double mid_gap = betas[51] - betas[50];
    CHECK(edge_gap < 0.5 * mid_gap);
}

TEST_CASE("ais is exact for a zero-weight model") {
    auto p = rbmkit::make_rbm(6, 5);
    p.b = {0.5, -0.5, 1.0, 0.0, -2.0, 0.25};
    p.c = {0.1, 0.2, -0.3, 0.0, 1.5};
    rbmkit::AisConfig cfg;
    cfg.n_temperatures = 10;
    cfg.n_chains = 8;
    cfg.seed = 5;
    const auto est = rbmkit::ais_log_partition(p, cfg);
    // every intermediate distribution is the base one, so all log weights
    // vanish and the estimate collapses to the closed form
    CHECK(est.mean_log_z ==
          Catch::Approx(rbmkit::exact_log_partition(p)).epsilon(1e-13));
    CHECK(est.std_err_log_z == 0.0);
    CHECK(est.n_chains == 8);
}

TEST_CASE("ais brackets the exact value within three standard errors") {
    const auto p = oracle::random_rbm(6, 5, 1.0, 23);
    const double truth = rbmkit::exact_log_partition(p);
    for (auto sched :
         {rbmkit::AisSchedule::linear, rbmkit::AisSchedule::sigmoid_spaced}) {
        rbmkit::AisConfig cfg;
        cfg.n_temperatures = 1000;
        cfg.n_chains = 100;
        cfg.schedule = sched;
        cfg.seed = 31;
        const auto est = rbmkit::ais_log_partition(p, cfg);
        REQUIRE(est.std_err_log_z > 0.0);
        REQUIRE(std::abs(est.mean_log_z - truth) <=
                3.0 * est.std_err_log_z + 1e-9);
    }
}

TEST_CASE("ais is deterministic in its seed") {
    const auto p = oracle::random_rbm(5, 4, 0.8, 24);
    rbmkit::AisConfig cfg;
    cfg.n_temperatures = 50;
    cfg.n_chains = 20;
    cfg.seed = 7;
    const auto a = rbmkit::ais_log_partition(p, cfg);
    const auto b = rbmkit::ais_log_partition(p, cfg);
    REQUIRE(a.mean_log_z == b.mean_log_z);
    REQUIRE(a.std_err_log_z == b.std_err_log_z);

    cfg.seed = 8;
    const auto c = rbmkit::ais_log_partition(p, cfg);
    CHECK(c.mean_log_z != a.mean_log_z);
}

TEST_CASE("thread count never changes the ais estimate") {
    const auto p = oracle::random_rbm(5, 4, 1.0, 25);
    rbmkit::AisConfig cfg;
    cfg.n_temperatures = 80;
    cfg.n_chains = 13;  // awkward count to exercise work stealing
    cfg.seed = 3;
    rbmkit::set_max_threads(1);
    const auto serial = rbmkit::ais_log_partition(p, cfg);
    rbmkit::set_max_threads(4);
    const auto parallel = rbmkit::ais_log_partition(p, cfg);
    rbmkit::set_max_threads(1);
    REQUIRE(serial.mean_log_z == parallel.mean_log_z);
    REQUIRE(serial.std_err_log_z == parallel.std_err_log_z);
}

TEST_CASE("ais rejects an empty chain set and handles a single chain") {
    const auto p = oracle::random_rbm(4, 3, 0.5, 26);
    rbmkit::AisConfig cfg;
    cfg.n_chains = 0;
    CHECK_THROWS_AS(rbmkit::ais_log_partition(p, cfg), rbmkit::ConfigError);

    cfg.n_chains = 1;
    cfg.n_temperatures = 30;
    const auto est = rbmkit::ais_log_partition(p, cfg);
    CHECK(est.std_err_log_z == 0.0);
    CHECK(std::isfinite(est.mean_log_z));
}

TEST_CASE("log likelihood of the uniform model is -n d log 2") {
    const auto p = rbmkit::make_rbm(4, 3);
    std::vector<double> pixels = {1, 0, 0, 1, 0, 0, 1, 1, 1, 1, 1, 1};
    const auto ds = rbmkit::make_dataset(2, 2, 2, pixels, {0, 1, 0});
    const double want = -3.0 * 4.0 * std::log(2.0);
    CHECK(rbmkit::exact_log_likelihood(p, ds) ==
          Catch::Approx(want).epsilon(1e-14));
}

TEST_CASE("log likelihood matches the enumerated visible marginal") {
    const auto p = oracle::random_rbm(4, 3, 1.1, 27);
    const auto marginal = oracle::visible_marginal(p);
    std::vector<double> pixels;
    std::vector<int> labels;
    for (std::size_t idx : {std::size_t{3}, std::size_t{9}, std::size_t{15},
                            std::size_t{3}}) {
        const auto v = oracle::unpack(idx, 4);
        pixels.insert(pixels.end(), v.begin(), v.end());
        labels.push_back(0);
    }
    const auto ds = rbmkit::make_dataset(2, 2, 1, pixels, labels);
    double want = std::log(marginal[3]) + std::log(marginal[9]) +
                  std::log(marginal[15]) + std::log(marginal[3]);
    const double got = rbmkit::exact_log_likelihood(p, ds);
    REQUIRE(oracle::rel_err(got, want) < 1e-10);
    CHECK(got < 0.0);
}

TEST_CASE("log likelihood rejects mismatched dimensions") {
    const auto p = rbmkit::make_rbm(9, 3);
    const auto ds = rbmkit::make_dataset(2, 2, 1, {0, 1, 0, 1}, {0});
    CHECK_THROWS_AS(rbmkit::exact_log_likelihood(p, ds),
                    rbmkit::DimensionError);
}
