#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hefl/config.hpp"
#include "hefl/ensemble.hpp"
#include "hefl/federated.hpp"
#include "hefl/ledger.hpp"
#include "hefl/message_log.hpp"
#include "hefl/secure_ops.hpp"

namespace hefl {

/// One hospital H_i: central server S_i, its edges, private chain B_i and the
/// validation split it contributes as a data owner.
struct HospitalActor {
    std::uint32_t index = 0;
    std::string name;
    ModelSpec spec;
    std::vector<EdgeServerState> edges;
    NodeSet chain;
    LabeledDataset validation;
    ModelParams global_model;
    bool global_verified = false;

    HospitalActor(std::uint32_t idx, std::string nm, ModelSpec sp, std::size_t ledger_nodes)
        : index(idx), name(nm), spec(std::move(sp)), chain("B-" + nm, ledger_nodes) {}

    /// True when model_id has a block on this hospital's chain.
    bool has_model(const std::string& model_id) const;
};

/// Shares of one data owner's evaluation inputs plus its escrowed labels.
struct DoContribution {
    std::uint32_t party = 0;
    SecureTensor inputs;  // [n, input_shape...]
    std::vector<int> labels;
};

/// Data-owner side: quantize and share x with every party; labels go to the MO only.
DoContribution do_session(MpcSession& s, std::uint32_t do_party, std::uint32_t mo_party,
                          const LabeledDataset& eval_split);

struct MoOutput {
    ProbabilityMatrix probabilities;
    std::vector<int> labels;
    std::vector<double> logits;  // decrypted, row-major [n, classes]
};

/// Model-owner side: share the model, run the secure forward pass over all DO inputs
/// (in contribution order), collect output shares, decrypt and apply softmax.
MoOutput mo_session(MpcSession& s, std::uint32_t mo_party, const std::string& hospital_id,
                    const ModelSpec& spec, const ModelParams& params,
                    const std::vector<DoContribution>& contributions);

/// Convenience wrapper: one full MO evaluation with a fresh dealer whose
/// budget is planned from the model and sample count.
MoOutput encrypted_evaluation(const ModelSpec& spec, const ModelParams& params,
                              const std::string& hospital_id, std::uint32_t mo_party,
                              const std::vector<const LabeledDataset*>& do_splits,
                              std::size_t parties, const FixedPointCodec& codec,
                              std::uint64_t seed, MessageLog* log);

struct PrivacyAudit {
    bool passed = true;
    std::vector<std::string> violations;
};

/// Message-log audit: model updates never leave their hospital, no message
/// repeats the fingerprint of plaintext weights or evaluation inputs, and
/// only whitelisted kinds cross hospital boundaries.
PrivacyAudit audit_privacy(const MessageLog& log, const std::vector<std::uint64_t>& forbidden);

struct HospitalReport {
    std::string name;
    std::string spec_name;
    Digest spec_hash{};
    std::size_t parameters = 0;
    std::size_t edges = 0;
    std::size_t train_samples = 0;
    std::size_t validation_samples = 0;
    std::vector<RoundRecord> rounds;
    std::string gm_id;
    Digest gm_digest{};
    double tuning_accuracy = 0.0;  // GM on the pooled tuning set, from decrypted P_Hi
    double test_accuracy = 0.0;
    double max_abs_logit_error = 0.0;  // encrypted vs quantized plaintext logits
    double argmax_agreement = 0.0;
};

struct ChainReport {
    std::string name;
    std::size_t nodes = 0;
    std::size_t height = 0;
    Digest tip{};
    bool replicas_identical = false;
    bool valid = false;
};

struct PhaseTiming {
    std::string phase;
    double millis = 0.0;
};

struct RunReport {
    std::string scenario_id;
    std::uint64_t seed = 0;
    std::vector<HospitalReport> hospitals;
    std::size_t tuning_samples = 0;
    std::size_t test_samples = 0;
    std::vector<double> alpha_best;
    double tuning_accuracy = 0.0;
    double ensemble_test_accuracy = 0.0;
    double best_individual_test_accuracy = 0.0;
    std::size_t grid_size = 0;
    std::size_t candidates_evaluated = 0;
    std::uint64_t weights_block_height = 0;
    std::vector<ChainReport> chains;
    std::uint64_t messages = 0;
    std::uint64_t message_bytes = 0;
    std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> traffic_by_kind;
    CorrelatedCounts correlated;
    PrivacyAudit privacy;
    /// Host wall-clock, written to timings.csv only (not part of the report JSON).
    std::vector<PhaseTiming> timings;
    std::string run_dir;

    /// Deterministic JSON (excludes timings and run_dir).
    std::string to_json() const;
};

struct RunOptions {
    std::string out_dir;  // empty: do not write files
};

/// Full pipeline: per-hospital FL with B_i verification, all-pairs MO/DO
/// encrypted evaluation, BM grid search and weight verification, and the
/// final ensemble test. Failures are rethrown as PhaseError.
RunReport run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Run directory name: "<scenario_id>-<seed>".
std::string run_dir_name(const ScenarioConfig& config);

/// The full labeled dataset a scenario draws its splits from.
LabeledDataset load_scenario_dataset(const ScenarioConfig& config);

}  // namespace hefl
