#include "hefl/secure_model.hpp"

#include "hefl/conversion.hpp"

namespace hefl {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

}  // namespace

SharedModel share_model(MpcSession& s, std::uint32_t holder, const ModelSpec& spec, const RingModel& model) {
    spec.validate();
    require(model.size() == spec.layers.size(), ErrorCode::kSpecMismatch, "ring model layer count mismatch");
    const int f = s.frac_bits();
    SharedModel out;
    out.weights.resize(model.size());
    out.biases.resize(model.size());
    for (std::size_t l = 0; l < model.size(); ++l) {
        const auto& rl = model[l];
        if (auto* d = std::get_if<DenseLayer>(&spec.layers[l])) {
            require(rl.weight.size() == d->in * d->out && rl.bias.size() == d->out, ErrorCode::kSpecMismatch,
                    "dense tensor size mismatch at layer " + std::to_string(l));
            std::vector<RingElement> wt(rl.weight.size());
            for (std::size_t o = 0; o < d->out; ++o)
                for (std::size_t i = 0; i < d->in; ++i) wt[i * d->out + o] = rl.weight[o * d->in + i];
            out.weights[l] = share_tensor(s, holder, Shape{d->in, d->out}, wt, f, MessageKind::kWeightShare);
            out.biases[l] = share_tensor(s, holder, Shape{d->out}, rl.bias, f, MessageKind::kWeightShare);
        } else if (auto* c = std::get_if<Conv2dLayer>(&spec.layers[l])) {
            Shape ks{c->out_channels, c->in_channels, c->kernel, c->kernel};
            require(rl.weight.size() == shape_size(ks) && rl.bias.size() == c->out_channels, ErrorCode::kSpecMismatch,
                    "conv tensor size mismatch at layer " + std::to_string(l));
            out.weights[l] = share_tensor(s, holder, ks, rl.weight, f, MessageKind::kWeightShare);
            out.biases[l] = share_tensor(s, holder, Shape{c->out_channels}, rl.bias, f, MessageKind::kWeightShare);
        }
    }
    return out;
}

SecureTensor secure_forward(MpcSession& s, const ModelSpec& spec, const SharedModel& model,
                            const SecureTensor& input) {
    const auto shapes = spec.activation_shapes();
    require(!input.shape.empty() && Shape(input.shape.begin() + 1, input.shape.end()) == spec.input_shape,
            ErrorCode::kShapeMismatch, "secure input must be [n, input_shape...]");
    const std::size_t n = input.shape[0];
    SecureTensor cur = input;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const Layer& layer = spec.layers[l];
        if (std::holds_alternative<SoftmaxLayer>(layer)) break;
        std::visit(
            Overloaded{
                [&](const DenseLayer&) {
                    cur = sec_bias_add(sec_matmul(s, cur, model.weights[l]), model.biases[l]);
                },
                [&](const Conv2dLayer& c) {
                    cur = sec_bias_add(sec_conv2d(s, cur, model.weights[l], c.stride), model.biases[l]);
                },
                [&](const ReluLayer&) { cur = sec_relu(s, cur); },
                [&](const AvgPoolLayer& a) { cur = sec_avgpool(s, cur, a.window); },
                [&](const FlattenLayer&) { cur.shape = Shape{n, shape_size(shapes[l])}; },
                [&](const SoftmaxLayer&) {},
            },
            layer);
    }
    return cur;
}

CorrelatedCounts plan_secure_forward(const ModelSpec& spec, std::size_t samples, std::size_t parties) {
    const auto shapes = spec.activation_shapes();
    CorrelatedCounts c;
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const std::size_t in = samples * shape_size(shapes[l]);
        const std::size_t out = samples * shape_size(shapes[l + 1]);
        std::visit(
            Overloaded{
                [&](const DenseLayer& d) {
                    c.beaver += out * d.in;
                    c.trunc_pairs += out;
                },
                [&](const Conv2dLayer& k) {
                    c.beaver += out * k.in_channels * k.kernel * k.kernel;
                    c.trunc_pairs += out;
                },
                [&](const ReluLayer&) {
                    c.binary_triples += (parties - 1) * kAdderAndGates * in;
                    c.bit_pairs += in;
                    c.beaver += in;
                },
                [&](const AvgPoolLayer&) { c.trunc_pairs += out; },
                [&](const FlattenLayer&) {},
                [&](const SoftmaxLayer&) {},
            },
            spec.layers[l]);
    }
    return c;
}

}  // namespace hefl
