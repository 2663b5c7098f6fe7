#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "hefl/federated.hpp"
#include "support.hpp"

using namespace hefl;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::kOk;
}

ModelSpec scalar_spec() { return ModelSpec{"scalar", {1}, {DenseLayer{1, 1}, SoftmaxLayer{}}}; }

ModelParams scalar_model(double w) {
    hefl::Rng rng(0);
    ModelParams p = init_params(scalar_spec(), rng, "w");
    p.layers[0].weight = {w};
    p.layers[0].bias = {w};
    return p;
}

std::vector<EdgeServerState> edges_for(const LabeledDataset& d, std::size_t n) {
    hefl::Rng unused(0);
    auto parts = partition_dataset(d, n, 0.0, unused);
    std::vector<EdgeServerState> out;
    for (std::size_t e = 0; e < n; ++e) out.push_back({"E" + std::to_string(e), parts[e], {}});
    return out;
}

}  // namespace

TEST_CASE("fedavg examples") {
    const auto one = fedavg_aggregate({{scalar_model(2.5), 7}});
    CHECK(one.layers[0].weight[0] == 2.5);
    const auto avg = fedavg_aggregate({{scalar_model(2), 1}, {scalar_model(4), 3}});
    CHECK(avg.layers[0].weight[0] == 3.5);
    CHECK(avg.sample_count == 4);
    const auto mean = fedavg_aggregate({{scalar_model(1), 5}, {scalar_model(2), 5}, {scalar_model(6), 5}});
    CHECK(mean.layers[0].weight[0] == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("fedavg errors") {
    CHECK(code_of([] { fedavg_aggregate({{scalar_model(1), 0}}); }) == ErrorCode::kZeroSamples);
    CHECK(code_of([] { fedavg_aggregate(std::vector<std::pair<ModelParams, std::size_t>>{}); }) ==
          ErrorCode::kZeroSamples);
    hefl::Rng rng(1);
    const ModelParams other = init_params(hefl::test::mlp_spec(1, 2, 1 + 1), rng, "o");
    CHECK(code_of([&] { fedavg_aggregate({{scalar_model(1), 1}, {other, 1}}); }) == ErrorCode::kSpecMismatch);
}

TEST_CASE("property: fedavg matches direct evaluation and is permutation invariant") {
    hefl::Rng rng(2);
    const ModelSpec spec = hefl::test::mlp_spec(3, 4, 2);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 1 + rng.below(5);
        std::vector<std::pair<ModelParams, std::size_t>> models;
        for (std::size_t j = 0; j < m; ++j) models.push_back({init_params(spec, rng, "m"), 1 + rng.below(100)});
        const auto agg = fedavg_aggregate(models);
        std::size_t total = 0;
        for (const auto& [_, n] : models) total += n;
        double wsum = 0;
        for (const auto& [_, n] : models) wsum += static_cast<double>(n) / static_cast<double>(total);
        REQUIRE(std::fabs(wsum - 1.0) < 1e-12);
        for (std::size_t l = 0; l < agg.layers.size(); ++l)
            for (std::size_t i = 0; i < agg.layers[l].weight.size(); ++i) {
                double direct = 0;
                for (const auto& [p, n] : models)
                    direct += static_cast<double>(n) / static_cast<double>(total) * p.layers[l].weight[i];
                REQUIRE(std::fabs(agg.layers[l].weight[i] - direct) <= 1e-12);
            }
        auto shuffled = models;
        rng.shuffle(shuffled);
        REQUIRE(params_digest(fedavg_aggregate(shuffled)) == params_digest(agg));
    }
}

TEST_CASE("select_participants") {
    hefl::Rng rng(3);
    CHECK(select_participants(4, 4, rng) == std::vector<std::size_t>{0, 1, 2, 3});
    hefl::Rng a(9), b(9);
    CHECK(select_participants(10, 3, a) == select_participants(10, 3, b));
    CHECK(code_of([&] { select_participants(3, 4, rng); }) == ErrorCode::kKTooLarge);

    // Each edge appears with frequency k/|E| within 3 sigma.
    const std::size_t E = 8, k = 3, draws = 10000;
    std::vector<double> hits(E);
    for (std::size_t t = 0; t < draws; ++t) {
        const auto J = select_participants(E, k, rng);
        REQUIRE(J.size() == k);
        REQUIRE(std::is_sorted(J.begin(), J.end()));
        REQUIRE(std::adjacent_find(J.begin(), J.end()) == J.end());
        for (auto j : J) hits[j] += 1;
    }
    const double p = static_cast<double>(k) / E;
    const double sigma = std::sqrt(draws * p * (1 - p));
    for (double h : hits) CHECK(std::fabs(h - draws * p) <= 3 * sigma);
}

TEST_CASE("FLConfig validation") {
    FLConfig c;
    CHECK_NOTHROW(c.validate(1));
    c.participants_per_round = 3;
    CHECK(code_of([&] { c.validate(2); }) == ErrorCode::kKTooLarge);
    c.participants_per_round = 1;
    c.rounds = 0;
    CHECK(code_of([&] { c.validate(2); }) == ErrorCode::kConfig);
    c.rounds = 1;
    c.learning_rate = -0.1;
    CHECK(code_of([&] { c.validate(2); }) == ErrorCode::kConfig);
}

TEST_CASE("local_train examples") {
    const ModelSpec spec = hefl::test::mlp_spec(4, 6, 3);
    hefl::Rng rng(4);
    const ModelParams w = init_params(spec, rng, "w");
    const LabeledDataset d = hefl::test::random_dataset(spec, 10, 4);
    EdgeServerState edge{"E0", d, {}};
    const auto frozen = local_train(spec, w, edge, 3, 0.0, 4, rng);
    CHECK(params_digest(frozen) == params_digest(ModelParams{w.model_id, w.spec_hash, w.layers, 0}));
    CHECK(frozen.sample_count == 10);

    const auto one = local_train(spec, w, edge, 1, 0.3, 100, rng);
    const auto step = sgd_step(w, gradient(spec, w, d), 0.3);
    // Full batch: same step up to summation order of the shuffled batch.
    for (std::size_t l = 0; l < step.layers.size(); ++l)
        for (std::size_t i = 0; i < step.layers[l].weight.size(); ++i)
            CHECK(one.layers[l].weight[i] == doctest::Approx(step.layers[l].weight[i]).epsilon(1e-12));

    const ModelParams wrong = init_params(hefl::test::mlp_spec(4, 5, 3), rng, "x");
    CHECK(code_of([&] { local_train(spec, wrong, edge, 1, 0.1, 4, rng); }) == ErrorCode::kSpecMismatch);
    EdgeServerState empty{"E1", LabeledDataset{{4}, 3, {}, {}}, {}};
    CHECK(code_of([&] { local_train(spec, w, empty, 1, 0.1, 4, rng); }) == ErrorCode::kEmptyDataset);
}

TEST_CASE("local training loss trends down over epochs") {
    const ModelSpec spec{"lin", {2}, {DenseLayer{2, 2}, SoftmaxLayer{}}};
    LabeledDataset d = hefl::test::toy_blobs(120, 2, 2, 0.1, 5);
    hefl::Rng rng(5);
    ModelParams w = init_params(spec, rng, "w");
    EdgeServerState edge{"E0", d, {}};
    std::vector<double> losses{loss(spec, w, d)};
    for (int e = 0; e < 5; ++e) {
        w = local_train(spec, w, edge, 1, 0.5, 16, rng);
        losses.push_back(loss(spec, w, d));
    }
    CHECK(losses.back() < losses.front());
    int increases = 0;
    for (std::size_t i = 1; i < losses.size(); ++i) increases += losses[i] > losses[i - 1];
    CHECK(increases <= 1);
}

TEST_CASE("FedAVG with identical partitions equals centralized SGD") {
    const ModelSpec spec{"lin", {3}, {DenseLayer{3, 2}, SoftmaxLayer{}}};
    const LabeledDataset d = hefl::test::toy_blobs(20, 3, 2, 0.3, 6);
    hefl::Rng rng(6);
    const ModelParams init = init_params(spec, rng, "init");
    std::vector<EdgeServerState> edges{{"E0", d, {}}, {"E1", d, {}}, {"E2", d, {}}};
    FLConfig c;
    c.rounds = 3;
    c.epochs = 1;
    c.participants_per_round = 3;
    c.learning_rate = 0.4;
    c.batch_size = d.size();
    const auto fl = run_hospital_fl(spec, c, edges, init, "H", {});
    ModelParams central = init;
    for (int t = 0; t < 3; ++t) central = sgd_step(central, gradient(spec, central, d), 0.4);
    for (std::size_t l = 0; l < central.layers.size(); ++l)
        for (std::size_t i = 0; i < central.layers[l].weight.size(); ++i)
            CHECK(fl.global_model.layers[l].weight[i] == doctest::Approx(central.layers[l].weight[i]).epsilon(1e-12));
}

TEST_CASE("run_hospital_fl examples") {
    const ModelSpec spec{"lin", {4}, {DenseLayer{4, 3}, SoftmaxLayer{}}};
    const LabeledDataset d = hefl::test::toy_blobs(300, 4, 3, 0.15, 7);
    hefl::Rng rng(7);
    const ModelParams init = init_params(spec, rng, "init");

    SUBCASE("T=1, k=1, eta=0 keeps the initial model") {
        auto edges = edges_for(d, 3);
        FLConfig c;
        c.rounds = 1;
        c.learning_rate = 0;
        const auto r = run_hospital_fl(spec, c, edges, init, "H", {});
        CHECK(r.global_model.layers[0].weight == init.layers[0].weight);
        CHECK(r.rounds.size() == 1);
        CHECK(r.rounds[0].total_samples == r.rounds[0].sample_counts[0]);
    }
    SUBCASE("seeded runs are reproducible and every model is recorded") {
        FLConfig c;
        c.rounds = 4;
        c.participants_per_round = 2;
        c.learning_rate = 0.5;
        c.seed = 99;
        std::vector<std::string> recorded;
        LedgerHook hook = [&](const ModelParams& m) {
            recorded.push_back(m.model_id);
            return static_cast<std::uint64_t>(recorded.size() - 1);
        };
        auto e1 = edges_for(d, 3), e2 = edges_for(d, 3);
        const auto a = run_hospital_fl(spec, c, e1, init, "H", hook);
        const std::size_t per_run = recorded.size();
        const auto b = run_hospital_fl(spec, c, e2, init, "H", hook);
        CHECK(params_digest(a.global_model) == params_digest(b.global_model));
        CHECK(per_run == 4 * (2 + 1));
        CHECK(recorded[2] == "H/r0/global");
        CHECK(a.global_model.model_id == "H/r3/global");
        for (const auto& r : a.rounds) {
            std::size_t sum = 0;
            for (auto n : r.sample_counts) sum += n;
            CHECK(r.total_samples == sum);
            CHECK(r.ledger_heights.size() == 3);
        }
    }
    SUBCASE("ledger rejection aborts") {
        auto edges = edges_for(d, 3);
        FLConfig c;
        LedgerHook reject = [](const ModelParams&) -> std::uint64_t {
            fail(ErrorCode::kLedgerRejection, "rejected");
        };
        CHECK(code_of([&] { run_hospital_fl(spec, c, edges, init, "H", reject); }) == ErrorCode::kLedgerRejection);
    }
    SUBCASE("3-edge blobs reach 95% train accuracy in 10 rounds") {
        auto edges = edges_for(d, 3);
        FLConfig c;
        c.rounds = 10;
        c.participants_per_round = 3;
        c.learning_rate = 0.5;
        c.batch_size = 16;
        c.epochs = 2;
        const auto r = run_hospital_fl(spec, c, edges, init, "H", {});
        CHECK(evaluate(spec, r.global_model, d) >= 0.95);
    }
}

TEST_CASE("partition_dataset") {
    const LabeledDataset d = hefl::test::toy_blobs(100, 2, 4, 0.2, 8);
    hefl::Rng rng(8);
    const auto even = partition_dataset(d, 3, 0.0, rng);
    CHECK(even[0].size() + even[1].size() + even[2].size() == 100);
    CHECK(even[0].inputs[0] == d.inputs[0]);
    const auto skew = partition_dataset(d, 4, 0.3, rng);
    std::size_t total = 0;
    for (const auto& p : skew) total += p.size();
    CHECK(total == 100);
}
