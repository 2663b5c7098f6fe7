#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "hefl/digest.hpp"
#include "hefl/ring.hpp"
#include "hefl/rng.hpp"
#include "hefl/secure_ops.hpp"

namespace hefl {

struct DenseLayer {
    std::size_t in = 0;
    std::size_t out = 0;
};
struct Conv2dLayer {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 1;
    std::size_t stride = 1;
};
struct ReluLayer {};
struct AvgPoolLayer {
    std::size_t window = 2;
};
struct FlattenLayer {};
struct SoftmaxLayer {};

using Layer = std::variant<DenseLayer, Conv2dLayer, ReluLayer, AvgPoolLayer, FlattenLayer, SoftmaxLayer>;

std::string describe(const Layer& layer);
bool has_params(const Layer& layer);

/// Architecture of one hospital's network. Layer shapes must chain and the
/// last layer must be the only softmax.
struct ModelSpec {
    std::string name;
    Shape input_shape;
    std::vector<Layer> layers;

    /// Throws Error(kShapeMismatch) or Error(kInvalidArgument).
    void validate() const;
    /// Shape entering each layer, plus the output shape (layers.size() + 1 entries).
    std::vector<Shape> activation_shapes() const;
    std::size_t num_classes() const;
    std::size_t input_size() const { return shape_size(input_shape); }
    std::size_t parameter_count() const;
    std::string canonical() const;
    Digest digest() const;
};

/// Weight and bias arrays of one layer; both empty for parameter-free layers.
/// Dense weights are [out][in]; conv weights are [out_ch][in_ch][k][k].
struct LayerParams {
    std::vector<double> weight;
    std::vector<double> bias;
};

struct ModelParams {
    std::string model_id;
    Digest spec_hash{};
    std::vector<LayerParams> layers;
    std::size_t sample_count = 0;
};

using Gradients = std::vector<LayerParams>;

struct LabeledDataset {
    Shape input_shape;
    std::size_t num_classes = 0;
    std::vector<std::vector<double>> inputs;
    std::vector<int> labels;

    std::size_t size() const noexcept { return labels.size(); }
    bool empty() const noexcept { return labels.empty(); }
    void validate() const;
    LabeledDataset subset(std::span<const std::size_t> indices) const;
};

/// uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) weights, zero biases.
ModelParams init_params(const ModelSpec& spec, Rng& rng, std::string model_id);
/// Throws Error(kSpecMismatch) if params were not built for spec.
void check_params(const ModelSpec& spec, const ModelParams& params);

std::vector<double> softmax(std::span<const double> logits);
/// Index of the maximum; ties go to the lowest index.
std::size_t argmax(std::span<const double> v);

std::vector<double> forward_logits(const ModelSpec& spec, const ModelParams& params,
                                   std::span<const double> x);
/// Class probabilities f(x).
std::vector<double> forward(const ModelSpec& spec, const ModelParams& params,
                            std::span<const double> x);

/// Mean cross-entropy over the given samples.
double loss(const ModelSpec& spec, const ModelParams& params, const LabeledDataset& data,
            std::span<const std::size_t> batch);
double loss(const ModelSpec& spec, const ModelParams& params, const LabeledDataset& data);

/// g = (1/N) sum_i d l(f(x_i), y_i) / d theta, cross-entropy loss.
Gradients gradient(const ModelSpec& spec, const ModelParams& params, const LabeledDataset& data,
                   std::span<const std::size_t> batch);
Gradients gradient(const ModelSpec& spec, const ModelParams& params, const LabeledDataset& data);

/// w - lr * g for every tensor. lr must be finite and non-negative.
ModelParams sgd_step(const ModelParams& params, const Gradients& grads, double lr);

/// Fraction of samples whose argmax prediction equals the label.
double evaluate(const ModelSpec& spec, const ModelParams& params, const LabeledDataset& data);

// ---------------------------------------------------------------------------
// Fixed-point bridge

struct RingLayer {
    std::vector<RingElement> weight;
    std::vector<RingElement> bias;
};
using RingModel = std::vector<RingLayer>;

/// Quantize every tensor with the codec. Throws Error(kOverflow).
RingModel export_for_mpc(const ModelParams& params, const FixedPointCodec& codec);
/// Softmax over decrypted logits.
std::vector<double> import_probabilities(std::span<const double> logits);

/// Plaintext fixed-point forward pass mirroring the secure layer kernels
/// (floor truncation after every product sum). Returns logits at f bits.
std::vector<RingElement> forward_quantized(const ModelSpec& spec, const RingModel& model,
                                           std::span<const RingElement> x,
                                           const FixedPointCodec& codec);

}  // namespace hefl
