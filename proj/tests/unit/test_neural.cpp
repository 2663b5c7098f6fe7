#include <doctest.h>

#include <cmath>
#include <numeric>

#include "hefl/neural.hpp"
#include "hefl/secure_model.hpp"
#include "support.hpp"

using namespace hefl;
using hefl::test::cnn_spec;
using hefl::test::gradient_check;
using hefl::test::mlp_spec;
using hefl::test::random_dataset;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::kOk;
}

// Second implementation of dense -> relu -> dense -> softmax.
std::vector<double> mlp_oracle(const ModelParams& p, std::span<const double> x, std::size_t in, std::size_t hid,
                               std::size_t out) {
    std::vector<double> h(hid), z(out);
    for (std::size_t j = 0; j < hid; ++j) {
        double a = p.layers[0].bias[j];
        for (std::size_t k = 0; k < in; ++k) a += p.layers[0].weight[j * in + k] * x[k];
        h[j] = a > 0 ? a : 0;
    }
    double mx = -1e300;
    for (std::size_t j = 0; j < out; ++j) {
        double a = p.layers[2].bias[j];
        for (std::size_t k = 0; k < hid; ++k) a += p.layers[2].weight[j * hid + k] * h[k];
        z[j] = a;
        mx = std::max(mx, a);
    }
    double sum = 0;
    for (auto& v : z) sum += (v = std::exp(v - mx));
    for (auto& v : z) v /= sum;
    return z;
}

ModelSpec linear_spec(std::size_t in, std::size_t out) {
    return ModelSpec{"linear", {in}, {DenseLayer{in, out}, SoftmaxLayer{}}};
}

}  // namespace

TEST_CASE("spec validation") {
    CHECK_NOTHROW(mlp_spec(4, 8, 3).validate());
    CHECK_NOTHROW(cnn_spec().validate());
    CHECK(cnn_spec().activation_shapes()[3] == Shape{4, 3, 3});
    ModelSpec bad{"bad", {4}, {DenseLayer{5, 3}, SoftmaxLayer{}}};
    CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kShapeMismatch);
    ModelSpec no_softmax{"x", {4}, {DenseLayer{4, 3}}};
    CHECK(code_of([&] { no_softmax.validate(); }) == ErrorCode::kInvalidArgument);
    ModelSpec two_softmax{"x", {4}, {SoftmaxLayer{}, DenseLayer{4, 3}, SoftmaxLayer{}}};
    CHECK(code_of([&] { two_softmax.validate(); }) == ErrorCode::kInvalidArgument);
    ModelSpec odd_pool{"x", {1, 5, 5}, {AvgPoolLayer{2}, FlattenLayer{}, DenseLayer{4, 2}, SoftmaxLayer{}}};
    CHECK(code_of([&] { odd_pool.validate(); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("spec digest covers architecture only") {
    ModelSpec a = mlp_spec(4, 8, 3), b = mlp_spec(4, 8, 3), c = mlp_spec(4, 9, 3);
    b.name = "renamed";
    CHECK(a.digest() == b.digest());
    CHECK(a.digest() != c.digest());
    CHECK(a.parameter_count() == 4 * 8 + 8 + 8 * 3 + 3);
}

TEST_CASE("forward examples") {
    const ModelSpec spec = linear_spec(2, 2);
    hefl::Rng rng(40);
    ModelParams p = init_params(spec, rng, "z");
    for (auto& w : p.layers[0].weight) w = 0;
    const auto y = forward(spec, p, std::vector<double>{3.0, -7.0});
    CHECK(y[0] == doctest::Approx(0.5));
    CHECK(y[1] == doctest::Approx(0.5));

    const ModelSpec id = linear_spec(3, 3);
    ModelParams q = init_params(id, rng, "id");
    q.layers[0].weight = {5, 0, 0, 0, 5, 0, 0, 0, 5};
    for (std::size_t c = 0; c < 3; ++c) {
        std::vector<double> x(3, 0.0);
        x[c] = 1.0;
        CHECK(argmax(forward(id, q, x)) == c);
    }
    CHECK(code_of([&] { forward(id, q, std::vector<double>{1, 2}); }) == ErrorCode::kShapeMismatch);
}

TEST_CASE("forward matches an independent implementation") {
    const ModelSpec spec = mlp_spec(6, 5, 4);
    hefl::Rng rng(41);
    const ModelParams p = init_params(spec, rng, "m");
    for (int t = 0; t < 50; ++t) {
        const auto x = hefl::test::random_reals(rng, 6, -1, 1);
        const auto a = forward(spec, p, x), b = mlp_oracle(p, x, 6, 5, 4);
        double sum = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            REQUIRE(a[k] == doctest::Approx(b[k]).epsilon(1e-12));
            REQUIRE(a[k] >= 0);
            sum += a[k];
        }
        REQUIRE(std::fabs(sum - 1) <= 1e-6);
    }
}

TEST_CASE("zero-weight linear net: bias gradient is softmax(0) minus mean one-hot") {
    const ModelSpec spec = linear_spec(3, 3);
    hefl::Rng rng(42);
    ModelParams p = init_params(spec, rng, "z");
    for (auto& w : p.layers[0].weight) w = 0;
    LabeledDataset d{{3}, 3, {{0.1, 0.2, 0.3}, {0.9, 0.1, 0.5}, {0.4, 0.4, 0.4}}, {0, 1, 2}};
    const auto g = gradient(spec, p, d);
    for (std::size_t c = 0; c < 3; ++c) CHECK(g[0].bias[c] == doctest::Approx(1.0 / 3 - 1.0 / 3));
    LabeledDataset skew{{3}, 3, {{0.1, 0.2, 0.3}, {0.9, 0.1, 0.5}}, {0, 0}};
    const auto gs = gradient(spec, p, skew);
    CHECK(gs[0].bias[0] == doctest::Approx(1.0 / 3 - 1.0));
    CHECK(gs[0].bias[1] == doctest::Approx(1.0 / 3));
}

TEST_CASE("gradient: mean invariance and empty batch") {
    const ModelSpec spec = mlp_spec(4, 6, 3);
    hefl::Rng rng(43);
    const ModelParams p = init_params(spec, rng, "m");
    const LabeledDataset d = random_dataset(spec, 5, 43);
    const std::vector<std::size_t> once{0, 1, 2, 3, 4}, twice{0, 0, 1, 1, 2, 2, 3, 3, 4, 4};
    const auto a = gradient(spec, p, d, once), b = gradient(spec, p, d, twice);
    for (std::size_t l = 0; l < a.size(); ++l)
        for (std::size_t i = 0; i < a[l].weight.size(); ++i)
            REQUIRE(a[l].weight[i] == doctest::Approx(b[l].weight[i]).epsilon(1e-12));
    CHECK(code_of([&] { gradient(spec, p, d, std::span<const std::size_t>{}); }) == ErrorCode::kEmptyBatch);
}

TEST_CASE("finite-difference gradient check across layer types") {
    hefl::Rng rng(44);
    for (const ModelSpec& spec : {linear_spec(5, 3), mlp_spec(5, 7, 3), cnn_spec()}) {
        const ModelParams p = init_params(spec, rng, spec.name);
        const LabeledDataset d = random_dataset(spec, 6, 44);
        CHECK(gradient_check(spec, p, d) < 1e-4);
    }
    const ModelSpec strided{"s", {2, 7, 7}, {Conv2dLayer{2, 3, 3, 2}, ReluLayer{}, FlattenLayer{}, DenseLayer{27, 4},
                                             SoftmaxLayer{}}};
    const ModelParams ps = init_params(strided, rng, "s");
    CHECK(gradient_check(strided, ps, random_dataset(strided, 4, 45)) < 1e-4);
}

TEST_CASE("sgd_step examples") {
    const ModelSpec spec = linear_spec(1, 1 + 1);
    hefl::Rng rng(46);
    ModelParams p = init_params(spec, rng, "s");
    Gradients g(2);
    g[0].weight.assign(p.layers[0].weight.size(), 0.5);
    g[0].bias.assign(p.layers[0].bias.size(), 0.5);
    p.layers[0].weight.assign(p.layers[0].weight.size(), 1.0);
    const auto q = sgd_step(p, g, 0.1);
    CHECK(q.layers[0].weight[0] == doctest::Approx(0.95));
    const auto same = sgd_step(p, g, 0.0);
    CHECK(same.layers[0].weight == p.layers[0].weight);
    CHECK(code_of([&] { sgd_step(p, g, -1.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("loss decreases over 20 steps on separable data") {
    const ModelSpec spec = linear_spec(2, 2);
    hefl::Rng rng(47);
    ModelParams p = init_params(spec, rng, "s");
    LabeledDataset d{{2}, 2, {}, {}};
    for (int i = 0; i < 40; ++i) {
        const int y = i % 2;
        d.inputs.push_back({y ? 0.8 + 0.01 * (i % 7) : 0.1, y ? 0.1 : 0.9 - 0.01 * (i % 5)});
        d.labels.push_back(y);
    }
    double prev = loss(spec, p, d);
    const double start = prev;
    for (int s = 0; s < 20; ++s) {
        p = sgd_step(p, gradient(spec, p, d), 0.5);
        const double now = loss(spec, p, d);
        REQUIRE(now <= prev + 1e-12);
        prev = now;
    }
    CHECK(prev < start);
}

TEST_CASE("evaluate examples") {
    const ModelSpec spec = linear_spec(2, 2);
    hefl::Rng rng(48);
    ModelParams p = init_params(spec, rng, "e");
    p.layers[0].weight = {10, 0, 0, 10};
    p.layers[0].bias = {0, 0};
    LabeledDataset perfect{{2}, 2, {{1, 0}, {0, 1}, {0.9, 0.2}}, {0, 1, 0}};
    CHECK(evaluate(spec, p, perfect) == 1.0);
    p.layers[0].weight = {0, 0, 0, 0};
    LabeledDataset balanced{{2}, 2, {{1, 0}, {0, 1}, {1, 0}, {0, 1}}, {0, 1, 0, 1}};
    CHECK(evaluate(spec, p, balanced) == 0.5);  // ties go to class 0
    // Hand count: predictions (0, 1, 0) against labels (0, 0, 0).
    p.layers[0].weight = {1, 0, 0, 1};
    LabeledDataset fixture{{2}, 2, {{1, 0}, {0, 1}, {0.7, 0.6}}, {0, 0, 0}};
    CHECK(evaluate(spec, p, fixture) == doctest::Approx(2.0 / 3));
    CHECK(code_of([&] { evaluate(spec, p, LabeledDataset{{2}, 2, {}, {}}); }) == ErrorCode::kEmptyDataset);
}

TEST_CASE("evaluate is permutation invariant") {
    const ModelSpec spec = mlp_spec(4, 5, 3);
    hefl::Rng rng(49);
    const ModelParams p = init_params(spec, rng, "m");
    const LabeledDataset d = random_dataset(spec, 30, 49);
    std::vector<std::size_t> idx(30);
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    CHECK(evaluate(spec, p, d) == evaluate(spec, p, d.subset(idx)));
}

TEST_CASE("export round trip and import") {
    const ModelSpec spec = cnn_spec();
    hefl::Rng rng(50);
    const ModelParams p = init_params(spec, rng, "c");
    const FixedPointCodec codec{16};
    const RingModel r = export_for_mpc(p, codec);
    for (std::size_t l = 0; l < p.layers.size(); ++l)
        for (std::size_t i = 0; i < p.layers[l].weight.size(); ++i)
            REQUIRE(std::fabs(codec.decode(r[l].weight[i]) - p.layers[l].weight[i]) <= std::ldexp(1.0, -16));
    const auto half = import_probabilities(std::vector<double>{0, 0});
    CHECK(half == std::vector<double>{0.5, 0.5});
    ModelParams huge = p;
    huge.layers[0].weight[0] = 1e300;
    CHECK(code_of([&] { export_for_mpc(huge, codec); }) == ErrorCode::kOverflow);
}

TEST_CASE("secure forward reconstructs the quantized forward exactly") {
    const FixedPointCodec codec{16};
    hefl::Rng rng(51);
    for (const ModelSpec& s : {hefl::test::digits_mlp_spec(), cnn_spec()}) {
        const ModelParams p = init_params(s, rng, s.name);
        const RingModel rm = export_for_mpc(p, codec);
        const LabeledDataset d = random_dataset(s, 6, 51);
        Dealer dealer(3, 52);
        dealer.set_budget(plan_secure_forward(s, d.size(), 3));
        MpcSession session(3, dealer, codec, 9);
        std::vector<RingElement> flat;
        for (const auto& x : d.inputs)
            for (double v : x) flat.push_back(codec.encode(v));
        Shape shape{d.size()};
        shape.insert(shape.end(), s.input_shape.begin(), s.input_shape.end());
        const auto input = share_tensor(session, 1, shape, flat, 16);
        const auto logits = reconstruct(secure_forward(session, s, share_model(session, 0, s, rm), input));
        CHECK(dealer.state().issued == plan_secure_forward(s, d.size(), 3));
        for (std::size_t i = 0; i < d.size(); ++i) {
            const auto q = forward_quantized(s, rm, codec.encode(d.inputs[i]), codec);
            for (std::size_t k = 0; k < 10; ++k) REQUIRE(logits[i * 10 + k] == q[k]);
            // Quantized logits stay close to the real-valued ones.
            const auto real = forward_logits(s, p, d.inputs[i]);
            for (std::size_t k = 0; k < 10; ++k) REQUIRE(std::fabs(codec.decode(q[k]) - real[k]) < 1e-2);
        }
    }
}
