#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hefl/dataset.hpp"
#include "hefl/neural.hpp"
#include "hefl/rng.hpp"
#include "hefl/secure_ops.hpp"
#include "hefl/session.hpp"

namespace hefl::test {

// Hand-rolled generators. Every property test draws from a fixed seed.

inline std::vector<RingElement> random_ring(Rng& rng, std::size_t n) {
    std::vector<RingElement> v(n);
    for (auto& x : v) x = RingElement(rng.next_u64());
    return v;
}

inline std::vector<double> random_reals(Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

inline std::vector<std::uint64_t> random_words(Rng& rng, std::size_t n) {
    std::vector<std::uint64_t> v(n);
    for (auto& x : v) x = rng.next_u64();
    return v;
}

// Signed floor shift, written independently of the library helper.
inline std::int64_t floor_shift(std::int64_t v, int f) {
    const std::int64_t d = std::int64_t{1} << f;
    std::int64_t q = v / d;
    if (v % d != 0 && v < 0) --q;
    return q;
}

// A session fixture owning its dealer.
struct Harness {
    Dealer dealer;
    MpcSession session;
    Harness(std::size_t parties, std::uint64_t seed, int frac_bits = 16, MessageLog* log = nullptr)
        : dealer(parties, seed), session(parties, dealer, FixedPointCodec{frac_bits}, seed ^ 0x77, log) {}

    SecureTensor share(const std::vector<double>& xs, Shape shape = {}, std::uint32_t holder = 0) {
        if (shape.empty()) shape = {xs.size()};
        return share_tensor(session, holder, shape, session.codec().encode(xs), session.frac_bits());
    }
    SecureTensor share_raw(const std::vector<RingElement>& xs, int frac, Shape shape = {}) {
        if (shape.empty()) shape = {xs.size()};
        return share_tensor(session, 0, shape, xs, frac);
    }
};

inline LabeledDataset toy_blobs(std::size_t n, std::size_t features, std::size_t classes, double spread,
                                std::uint64_t seed) {
    Rng rng(seed);
    LabeledDataset d = make_blobs(n, features, classes, spread, rng);
    minmax_scale(d);
    return d;
}

// Max relative error between the analytic gradient and central differences,
// |g - d| / max(|g| + |d|, floor), over every parameter.
inline double gradient_check(const ModelSpec& spec, const ModelParams& params, const LabeledDataset& data,
                             double step = 1e-5, double floor = 1e-6) {
    const Gradients g = gradient(spec, params, data);
    double worst = 0;
    ModelParams probe = params;
    auto check_tensor = [&](std::vector<double>& t, const std::vector<double>& gt) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double keep = t[i];
            t[i] = keep + step;
            const double up = loss(spec, probe, data);
            t[i] = keep - step;
            const double down = loss(spec, probe, data);
            t[i] = keep;
            const double d = (up - down) / (2 * step);
            worst = std::max(worst, std::fabs(gt[i] - d) / std::max(std::fabs(gt[i]) + std::fabs(d), floor));
        }
    };
    for (std::size_t l = 0; l < probe.layers.size(); ++l) {
        check_tensor(probe.layers[l].weight, g[l].weight);
        check_tensor(probe.layers[l].bias, g[l].bias);
    }
    return worst;
}

// Small random dataset shaped for `spec`.
inline LabeledDataset random_dataset(const ModelSpec& spec, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    LabeledDataset d;
    d.input_shape = spec.input_shape;
    d.num_classes = spec.num_classes();
    for (std::size_t i = 0; i < n; ++i) {
        d.inputs.push_back(random_reals(rng, spec.input_size(), 0, 1));
        d.labels.push_back(static_cast<int>(rng.below(d.num_classes)));
    }
    return d;
}

inline ModelSpec mlp_spec(std::size_t in, std::size_t hidden, std::size_t out) {
    return ModelSpec{"mlp", {in}, {DenseLayer{in, hidden}, ReluLayer{}, DenseLayer{hidden, out}, SoftmaxLayer{}}};
}

// 64-32-10 MLP over [1, 8, 8] images.
inline ModelSpec digits_mlp_spec() {
    return ModelSpec{"mlp",
                     {1, 8, 8},
                     {FlattenLayer{}, DenseLayer{64, 32}, ReluLayer{}, DenseLayer{32, 10}, SoftmaxLayer{}}};
}

inline ModelSpec cnn_spec() {
    return ModelSpec{"cnn",
                     {1, 8, 8},
                     {Conv2dLayer{1, 4, 3, 1}, ReluLayer{}, AvgPoolLayer{2}, FlattenLayer{}, DenseLayer{36, 10},
                      SoftmaxLayer{}}};
}

}  // namespace hefl::test
