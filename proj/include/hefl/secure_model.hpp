#pragma once

#include <cstddef>
#include <vector>

#include "hefl/neural.hpp"
#include "hefl/secure_ops.hpp"

namespace hefl {

/// Per-layer shared weights; tensors are empty for parameter-free layers.
/// Dense weights are stored transposed ([in, out]) for sec_matmul.
struct SharedModel {
    std::vector<SecureTensor> weights;
    std::vector<SecureTensor> biases;
};

/// The model owner `holder` shares its quantized weights with every party.
/// Each non-holder share is recorded as a kWeightShare message.
SharedModel share_model(MpcSession& s, std::uint32_t holder, const ModelSpec& spec,
                        const RingModel& model);

/// Secure forward pass over a batch [n, input_shape...]. The terminal softmax
/// is not evaluated: the result is the shared logits [n, classes] at f bits.
SecureTensor secure_forward(MpcSession& s, const ModelSpec& spec, const SharedModel& model,
                            const SecureTensor& input);

/// Correlated randomness consumed by secure_forward for `samples` inputs.
CorrelatedCounts plan_secure_forward(const ModelSpec& spec, std::size_t samples, std::size_t parties);

}  // namespace hefl
