#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hefl/digest.hpp"
#include "hefl/message_log.hpp"
#include "hefl/neural.hpp"
#include "hefl/rng.hpp"

namespace hefl {

struct FLConfig {
    std::size_t rounds = 10;                // T
    std::size_t epochs = 1;                 // e
    std::size_t participants_per_round = 1; // k
    double learning_rate = 0.1;             // eta
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;

    /// Throws Error(kConfig) unless T >= 1, e >= 1, k >= 1, eta >= 0 and
    /// batch_size >= 1; Error(kKTooLarge) when k exceeds the edge count.
    void validate(std::size_t edge_count) const;
};

struct EdgeServerState {
    std::string id;
    LabeledDataset partition;
    ModelParams local_params;
};

struct RoundRecord {
    std::size_t round = 0;
    std::vector<std::size_t> selected;      // J
    std::vector<std::size_t> sample_counts; // N_j, aligned with selected
    std::size_t total_samples = 0;          // N
    std::string aggregate_id;
    Digest aggregate_digest{};
    std::vector<std::uint64_t> ledger_heights;  // local models, then the aggregate
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
};

/// k edges uniformly without replacement, returned in ascending order.
std::vector<std::size_t> select_participants(std::size_t edge_count, std::size_t k, Rng& rng);

/// e epochs of mini-batch SGD from w_t over the edge's partition. The result
/// carries sample_count = partition size.
ModelParams local_train(const ModelSpec& spec, const ModelParams& global, const EdgeServerState& edge,
                        std::size_t epochs, double lr, std::size_t batch_size, Rng& rng);

struct WeightedModel {
    const ModelParams* params = nullptr;
    std::size_t samples = 0;
};

/// sum_j (N_j / N) w_j. Inputs are combined in a canonical order so the
/// result does not depend on list order.
ModelParams fedavg_aggregate(std::span<const WeightedModel> models);
ModelParams fedavg_aggregate(const std::vector<std::pair<ModelParams, std::size_t>>& models);

/// Deterministic digest of the parameter values (IEEE bits) and id.
Digest params_digest(const ModelParams& params);

/// Splits `data` across `edges` partitions: equal contiguous slices, or a
/// label-skewed Dirichlet(alpha) split when alpha > 0.
std::vector<LabeledDataset> partition_dataset(const LabeledDataset& data, std::size_t edges,
                                              double dirichlet_alpha, Rng& rng);

/// Called with every local model and every aggregate before it is used.
/// Returns the ledger height of the recorded block; throws Error(kLedgerRejection).
using LedgerHook = std::function<std::uint64_t(const ModelParams& model)>;
/// Optional per-round metric callback: (global model) -> (train acc, test acc).
using RoundMetrics = std::function<std::pair<double, double>(const ModelParams& model)>;

struct FLResult {
    ModelParams global_model;
    std::vector<RoundRecord> rounds;
};

/// FedAVG for one hospital: T rounds of selection, local training, ledger
/// verification and sample-weighted aggregation. When `log` is given, every
/// model exchanged between the central server and an edge is recorded.
FLResult run_hospital_fl(const ModelSpec& spec, const FLConfig& config,
                         std::vector<EdgeServerState>& edges, const ModelParams& initial,
                         const std::string& hospital_name, const LedgerHook& ledger_hook,
                         const RoundMetrics& metrics = {}, MessageLog* log = nullptr,
                         std::uint32_t hospital_index = 0);

}  // namespace hefl
