#include "hefl/neural.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace hefl {

namespace {

template <class... Fs>
struct Overloaded : Fs... {
    using Fs::operator()...;
};
template <class... Fs>
Overloaded(Fs...) -> Overloaded<Fs...>;

std::string shape_text(const Shape& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "x" : "") + std::to_string(s[i]);
    return out;
}

// Output shape of one layer, or an error naming the layer index.
Shape next_shape(const Layer& layer, const Shape& in, std::size_t index) {
    auto bad = [&](const std::string& why) {
        fail(ErrorCode::kShapeMismatch,
             "layer " + std::to_string(index) + " " + describe(layer) + " on input " + shape_text(in) + ": " + why);
    };
    return std::visit(
        Overloaded{
            [&](const DenseLayer& d) -> Shape {
                if (d.in == 0 || d.out == 0) bad("zero width");
                if (in.size() != 1 || in[0] != d.in) bad("expects a flat input of " + std::to_string(d.in));
                return Shape{d.out};
            },
            [&](const Conv2dLayer& c) -> Shape {
                if (c.in_channels == 0 || c.out_channels == 0 || c.kernel == 0 || c.stride == 0) bad("zero size");
                if (in.size() != 3 || in[0] != c.in_channels) bad("expects [channels, H, W]");
                if (c.kernel > in[1] || c.kernel > in[2]) bad("kernel larger than input");
                return Shape{c.out_channels, (in[1] - c.kernel) / c.stride + 1, (in[2] - c.kernel) / c.stride + 1};
            },
            [&](const ReluLayer&) -> Shape { return in; },
            [&](const AvgPoolLayer& a) -> Shape {
                if (in.size() != 3) bad("expects [channels, H, W]");
                if (a.window == 0 || in[1] % a.window != 0 || in[2] % a.window != 0)
                    bad("window must divide the spatial size");
                return Shape{in[0], in[1] / a.window, in[2] / a.window};
            },
            [&](const FlattenLayer&) -> Shape { return Shape{shape_size(in)}; },
            [&](const SoftmaxLayer&) -> Shape {
                if (in.size() != 1) bad("softmax expects a flat input");
                return in;
            },
        },
        layer);
}

std::pair<std::size_t, std::size_t> param_sizes(const Layer& layer) {
    if (auto* d = std::get_if<DenseLayer>(&layer)) return {d->in * d->out, d->out};
    if (auto* c = std::get_if<Conv2dLayer>(&layer))
        return {c->out_channels * c->in_channels * c->kernel * c->kernel, c->out_channels};
    return {0, 0};
}

std::size_t fan_in(const Layer& layer) {
    if (auto* d = std::get_if<DenseLayer>(&layer)) return d->in;
    if (auto* c = std::get_if<Conv2dLayer>(&layer)) return c->in_channels * c->kernel * c->kernel;
    return 0;
}

// Generic layer kernels over a scalar type T. `mul` combines input and
// weight; `fix` renormalizes a product sum (identity for reals).
template <class T, class Mul, class Fix>
std::vector<T> dense_forward(const DenseLayer& d, std::span<const T> w, std::span<const T> b,
                             std::span<const T> x, Mul mul, Fix fix) {
    std::vector<T> y(d.out);
    for (std::size_t o = 0; o < d.out; ++o) {
        T acc{};
        for (std::size_t i = 0; i < d.in; ++i) acc += mul(x[i], w[o * d.in + i]);
        y[o] = fix(acc) + b[o];
    }
    return y;
}

template <class T, class Mul, class Fix>
std::vector<T> conv_forward(const Conv2dLayer& c, const Shape& in, std::span<const T> w, std::span<const T> b,
                            std::span<const T> x, Mul mul, Fix fix) {
    const std::size_t H = in[1], W = in[2], k = c.kernel, s = c.stride;
    const std::size_t oh = (H - k) / s + 1, ow = (W - k) / s + 1;
    std::vector<T> y(c.out_channels * oh * ow);
    for (std::size_t o = 0; o < c.out_channels; ++o)
        for (std::size_t yy = 0; yy < oh; ++yy)
            for (std::size_t xx = 0; xx < ow; ++xx) {
                T acc{};
                for (std::size_t ch = 0; ch < c.in_channels; ++ch)
                    for (std::size_t u = 0; u < k; ++u)
                        for (std::size_t v = 0; v < k; ++v)
                            acc += mul(x[(ch * H + yy * s + u) * W + xx * s + v], w[((o * c.in_channels + ch) * k + u) * k + v]);
                y[(o * oh + yy) * ow + xx] = fix(acc) + b[o];
            }
    return y;
}

template <class T>
std::vector<T> pool_sum(const AvgPoolLayer& a, const Shape& in, std::span<const T> x) {
    const std::size_t C = in[0], H = in[1], W = in[2], win = a.window;
    const std::size_t oh = H / win, ow = W / win;
    std::vector<T> y(C * oh * ow);
    for (std::size_t ch = 0; ch < C; ++ch)
        for (std::size_t yy = 0; yy < H; ++yy)
            for (std::size_t xx = 0; xx < W; ++xx) y[(ch * oh + yy / win) * ow + xx / win] += x[(ch * H + yy) * W + xx];
    return y;
}

struct Trace {
    std::vector<std::vector<double>> acts;  // input of each layer, then the logits
};

Trace run_forward(const ModelSpec& spec, const ModelParams& params, std::span<const double> x,
                  const std::vector<Shape>& shapes) {
    Trace t;
    t.acts.emplace_back(x.begin(), x.end());
    auto mul = [](double a, double b) { return a * b; };
    auto id = [](double a) { return a; };
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const auto& cur = t.acts.back();
        const auto& lp = params.layers[l];
        std::vector<double> next = std::visit(
            Overloaded{
                [&](const DenseLayer& d) {
                    return dense_forward<double>(d, lp.weight, lp.bias, cur, mul, id);
                },
                [&](const Conv2dLayer& c) {
                    return conv_forward<double>(c, shapes[l], lp.weight, lp.bias, cur, mul, id);
                },
                [&](const ReluLayer&) {
                    std::vector<double> y(cur);
                    for (double& v : y) v = v > 0.0 ? v : 0.0;
                    return y;
                },
                [&](const AvgPoolLayer& a) {
                    auto y = pool_sum<double>(a, shapes[l], cur);
                    const double inv = 1.0 / static_cast<double>(a.window * a.window);
                    for (double& v : y) v *= inv;
                    return y;
                },
                [&](const FlattenLayer&) { return cur; },
                [&](const SoftmaxLayer&) { return cur; },  // logits are kept; softmax is applied by callers
            },
            spec.layers[l]);
        t.acts.push_back(std::move(next));
    }
    return t;
}

void require_input(const ModelSpec& spec, std::size_t size) {
    require(size == spec.input_size(), ErrorCode::kShapeMismatch,
            "input has " + std::to_string(size) + " values, model expects " + shape_text(spec.input_shape));
}

double log_sum_exp(std::span<const double> z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

}  // namespace

std::string describe(const Layer& layer) {
    return std::visit(
        Overloaded{
            [](const DenseLayer& d) { return "dense(" + std::to_string(d.in) + "," + std::to_string(d.out) + ")"; },
            [](const Conv2dLayer& c) {
                return "conv2d(" + std::to_string(c.in_channels) + "," + std::to_string(c.out_channels) + "," +
                       std::to_string(c.kernel) + "," + std::to_string(c.stride) + ")";
            },
            [](const ReluLayer&) { return std::string("relu"); },
            [](const AvgPoolLayer& a) { return "avgpool(" + std::to_string(a.window) + ")"; },
            [](const FlattenLayer&) { return std::string("flatten"); },
            [](const SoftmaxLayer&) { return std::string("softmax"); },
        },
        layer);
}

bool has_params(const Layer& layer) {
    return std::holds_alternative<DenseLayer>(layer) || std::holds_alternative<Conv2dLayer>(layer);
}

void ModelSpec::validate() const { (void)activation_shapes(); }

std::vector<Shape> ModelSpec::activation_shapes() const {
    require(!input_shape.empty() && shape_size(input_shape) > 0, ErrorCode::kInvalidArgument,
            "model '" + name + "' has an empty input shape");
    require(!layers.empty() && std::holds_alternative<SoftmaxLayer>(layers.back()), ErrorCode::kInvalidArgument,
            "model '" + name + "' must end with a softmax layer");
    std::vector<Shape> shapes{input_shape};
    for (std::size_t l = 0; l < layers.size(); ++l) {
        require(l + 1 == layers.size() || !std::holds_alternative<SoftmaxLayer>(layers[l]),
                ErrorCode::kInvalidArgument, "model '" + name + "' has a non-terminal softmax");
        shapes.push_back(next_shape(layers[l], shapes.back(), l));
    }
    return shapes;
}

std::size_t ModelSpec::num_classes() const { return activation_shapes().back()[0]; }

std::size_t ModelSpec::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) {
        auto [w, b] = param_sizes(l);
        n += w + b;
    }
    return n;
}

std::string ModelSpec::canonical() const {
    std::string out = "input=" + shape_text(input_shape);
    for (const auto& l : layers) out += ";" + describe(l);
    return out;
}

Digest ModelSpec::digest() const { return sha256(canonical()); }

void LabeledDataset::validate() const {
    require(inputs.size() == labels.size(), ErrorCode::kLengthMismatch, "inputs and labels differ in length");
    require(num_classes > 0, ErrorCode::kInvalidArgument, "dataset has no classes");
    const std::size_t d = shape_size(input_shape);
    for (std::size_t i = 0; i < size(); ++i) {
        require(inputs[i].size() == d, ErrorCode::kShapeMismatch, "sample " + std::to_string(i) + " has wrong size");
        require(labels[i] >= 0 && static_cast<std::size_t>(labels[i]) < num_classes, ErrorCode::kInvalidArgument,
                "label out of range at sample " + std::to_string(i));
    }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
    LabeledDataset out;
    out.input_shape = input_shape;
    out.num_classes = num_classes;
    out.inputs.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (std::size_t i : indices) {
        require(i < size(), ErrorCode::kInvalidArgument, "subset index out of range");
        out.inputs.push_back(inputs[i]);
        out.labels.push_back(labels[i]);
    }
    return out;
}

ModelParams init_params(const ModelSpec& spec, Rng& rng, std::string model_id) {
    spec.validate();
    ModelParams p;
    p.model_id = std::move(model_id);
    p.spec_hash = spec.digest();
    for (const auto& layer : spec.layers) {
        auto [w, b] = param_sizes(layer);
        LayerParams lp;
        lp.weight.resize(w);
        lp.bias.assign(b, 0.0);
        if (w > 0) {
            const double bound = std::sqrt(1.0 / static_cast<double>(fan_in(layer)));
            for (double& v : lp.weight) v = rng.uniform(-bound, bound);
        }
        p.layers.push_back(std::move(lp));
    }
    return p;
}

void check_params(const ModelSpec& spec, const ModelParams& params) {
    require(params.spec_hash == spec.digest(), ErrorCode::kSpecMismatch,
            "model '" + params.model_id + "' was not built for architecture " + spec.canonical());
    require(params.layers.size() == spec.layers.size(), ErrorCode::kSpecMismatch, "layer count mismatch");
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        auto [w, b] = param_sizes(spec.layers[l]);
        require(params.layers[l].weight.size() == w && params.layers[l].bias.size() == b, ErrorCode::kSpecMismatch,
                "tensor size mismatch at layer " + std::to_string(l));
        for (double v : params.layers[l].weight)
            require(std::isfinite(v), ErrorCode::kInvalidArgument, "non-finite weight at layer " + std::to_string(l));
        for (double v : params.layers[l].bias)
            require(std::isfinite(v), ErrorCode::kInvalidArgument, "non-finite bias at layer " + std::to_string(l));
    }
}

std::vector<double> softmax(std::span<const double> logits) {
    require(!logits.empty(), ErrorCode::kInvalidArgument, "softmax of an empty vector");
    const double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> p(logits.size());
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += p[i] = std::exp(logits[i] - m);
    for (double& v : p) v /= s;
    return p;
}

std::size_t argmax(std::span<const double> v) {
    require(!v.empty(), ErrorCode::kInvalidArgument, "argmax of an empty vector");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

std::vector<double> forward_logits(const ModelSpec& spec, const ModelParams& params, std::span<const double> x) {
    require_input(spec, x.size());
    const auto shapes = spec.activation_shapes();
    return run_forward(spec, params, x, shapes).acts.back();
}

std::vector<double> forward(const ModelSpec& spec, const ModelParams& params, std::span<const double> x) {
    return softmax(forward_logits(spec, params, x));
}

double loss(const ModelSpec& spec, const ModelParams& params, const LabeledDataset& data,
            std::span<const std::size_t> batch) {
    require(!batch.empty(), ErrorCode::kEmptyBatch, "loss over an empty batch");
    const auto shapes = spec.activation_shapes();
    double total = 0.0;
    for (std::size_t i : batch) {
        require_input(spec, data.inputs.at(i).size());
        const auto z = run_forward(spec, params, data.inputs[i], shapes).acts.back();
        total += log_sum_exp(z) - z[static_cast<std::size_t>(data.labels[i])];
    }
    return total / static_cast<double>(batch.size());
}

double loss(const ModelSpec& spec, const ModelParams& params, const LabeledDataset& data) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return loss(spec, params, data, all);
}

Gradients gradient(const ModelSpec& spec, const ModelParams& params, const LabeledDataset& data,
                   std::span<const std::size_t> batch) {
    require(!batch.empty(), ErrorCode::kEmptyBatch, "gradient over an empty batch");
    check_params(spec, params);
    const auto shapes = spec.activation_shapes();
    Gradients g(params.layers.size());
    for (std::size_t l = 0; l < g.size(); ++l) {
        g[l].weight.assign(params.layers[l].weight.size(), 0.0);
        g[l].bias.assign(params.layers[l].bias.size(), 0.0);
    }

    for (std::size_t idx : batch) {
        require_input(spec, data.inputs.at(idx).size());
        const Trace t = run_forward(spec, params, data.inputs[idx], shapes);
        // d loss / d logits = softmax(z) - onehot(y)
        std::vector<double> delta = softmax(t.acts.back());
        delta[static_cast<std::size_t>(data.labels[idx])] -= 1.0;

        for (std::size_t l = spec.layers.size(); l-- > 0;) {
            const auto& x = t.acts[l];
            const auto& in = shapes[l];
            const auto& lp = params.layers[l];
            auto& gl = g[l];
            delta = std::visit(
                Overloaded{
                    [&](const DenseLayer& d) {
                        std::vector<double> dx(d.in, 0.0);
                        for (std::size_t o = 0; o < d.out; ++o) {
                            gl.bias[o] += delta[o];
                            for (std::size_t i = 0; i < d.in; ++i) {
                                gl.weight[o * d.in + i] += delta[o] * x[i];
                                dx[i] += lp.weight[o * d.in + i] * delta[o];
                            }
                        }
                        return dx;
                    },
                    [&](const Conv2dLayer& c) {
                        const std::size_t H = in[1], W = in[2], k = c.kernel, s = c.stride;
                        const std::size_t oh = (H - k) / s + 1, ow = (W - k) / s + 1;
                        std::vector<double> dx(x.size(), 0.0);
                        for (std::size_t o = 0; o < c.out_channels; ++o)
                            for (std::size_t yy = 0; yy < oh; ++yy)
                                for (std::size_t xx = 0; xx < ow; ++xx) {
                                    const double dy = delta[(o * oh + yy) * ow + xx];
                                    gl.bias[o] += dy;
                                    for (std::size_t ch = 0; ch < c.in_channels; ++ch)
                                        for (std::size_t u = 0; u < k; ++u)
                                            for (std::size_t v = 0; v < k; ++v) {
                                                const std::size_t xi = (ch * H + yy * s + u) * W + xx * s + v;
                                                const std::size_t wi = ((o * c.in_channels + ch) * k + u) * k + v;
                                                gl.weight[wi] += dy * x[xi];
                                                dx[xi] += lp.weight[wi] * dy;
                                            }
                                }
                        return dx;
                    },
                    [&](const ReluLayer&) {
                        std::vector<double> dx(delta);
                        for (std::size_t i = 0; i < dx.size(); ++i)
                            if (!(x[i] > 0.0)) dx[i] = 0.0;
                        return dx;
                    },
                    [&](const AvgPoolLayer& a) {
                        const std::size_t C = in[0], H = in[1], W = in[2], win = a.window;
                        const std::size_t oh = H / win, ow = W / win;
                        const double inv = 1.0 / static_cast<double>(win * win);
                        std::vector<double> dx(x.size());
                        for (std::size_t ch = 0; ch < C; ++ch)
                            for (std::size_t yy = 0; yy < H; ++yy)
                                for (std::size_t xx = 0; xx < W; ++xx)
                                    dx[(ch * H + yy) * W + xx] = delta[(ch * oh + yy / win) * ow + xx / win] * inv;
                        return dx;
                    },
                    [&](const FlattenLayer&) { return delta; },
                    [&](const SoftmaxLayer&) { return delta; },
                },
                spec.layers[l]);
        }
    }

    const double scale = 1.0 / static_cast<double>(batch.size());
    for (auto& gl : g) {
        for (double& v : gl.weight) v *= scale;
        for (double& v : gl.bias) v *= scale;
    }
    return g;
}

Gradients gradient(const ModelSpec& spec, const ModelParams& params, const LabeledDataset& data) {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), 0);
    return gradient(spec, params, data, all);
}

ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double lr) {
    require(std::isfinite(lr) && lr >= 0.0, ErrorCode::kInvalidArgument, "learning rate must be finite and >= 0");
    require(grads.size() == params.layers.size(), ErrorCode::kSpecMismatch, "gradient layer count mismatch");
    ModelParams out = params;
    for (std::size_t l = 0; l < grads.size(); ++l) {
        auto& lp = out.layers[l];
        require(grads[l].weight.size() == lp.weight.size() && grads[l].bias.size() == lp.bias.size(),
                ErrorCode::kSpecMismatch, "gradient shape mismatch at layer " + std::to_string(l));
        for (std::size_t i = 0; i < lp.weight.size(); ++i) lp.weight[i] -= lr * grads[l].weight[i];
        for (std::size_t i = 0; i < lp.bias.size(); ++i) lp.bias[i] -= lr * grads[l].bias[i];
    }
    return out;
}

double evaluate(const ModelSpec& spec, const ModelParams& params, const LabeledDataset& data) {
    require(!data.empty(), ErrorCode::kEmptyDataset, "cannot evaluate on an empty dataset");
    const auto shapes = spec.activation_shapes();
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        require_input(spec, data.inputs[i].size());
        const auto z = run_forward(spec, params, data.inputs[i], shapes).acts.back();
        if (argmax(z) == static_cast<std::size_t>(data.labels[i])) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

RingModel export_for_mpc(const ModelParams& params, const FixedPointCodec& codec) {
    RingModel out;
    out.reserve(params.layers.size());
    for (const auto& lp : params.layers) out.push_back(RingLayer{codec.encode(lp.weight), codec.encode(lp.bias)});
    return out;
}

std::vector<double> import_probabilities(std::span<const double> logits) { return softmax(logits); }

std::vector<RingElement> forward_quantized(const ModelSpec& spec, const RingModel& model,
                                           std::span<const RingElement> x, const FixedPointCodec& codec) {
    const auto shapes = spec.activation_shapes();
    require_input(spec, x.size());
    require(model.size() == spec.layers.size(), ErrorCode::kSpecMismatch, "ring model layer count mismatch");
    const int f = codec.frac_bits;
    auto mul = [](RingElement a, RingElement b) { return a * b; };
    auto fix = [f](RingElement a) { return ring_shift_signed(a, f); };

    std::vector<RingElement> cur(x.begin(), x.end());
    for (std::size_t l = 0; l < spec.layers.size(); ++l) {
        const auto& rl = model[l];
        if (std::holds_alternative<SoftmaxLayer>(spec.layers[l])) break;
        cur = std::visit(
            Overloaded{
                [&](const DenseLayer& d) {
                    return dense_forward<RingElement>(d, rl.weight, rl.bias, cur, mul, fix);
                },
                [&](const Conv2dLayer& c) {
                    return conv_forward<RingElement>(c, shapes[l], rl.weight, rl.bias, cur, mul, fix);
                },
                [&](const ReluLayer&) {
                    std::vector<RingElement> y(cur);
                    for (auto& v : y)
                        if (v.msb()) v = RingElement(0);
                    return y;
                },
                [&](const AvgPoolLayer& a) {
                    auto y = pool_sum<RingElement>(a, shapes[l], cur);
                    const RingElement inv = codec.encode(1.0 / static_cast<double>(a.window * a.window));
                    for (auto& v : y) v = fix(v * inv);
                    return y;
                },
                [&](const FlattenLayer&) { return cur; },
                [&](const SoftmaxLayer&) { return cur; },
            },
            spec.layers[l]);
    }
    return cur;
}

}  // namespace hefl
