#include "hefl/scenario.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "hefl/dataset.hpp"
#include "hefl/secure_model.hpp"

namespace hefl {

namespace {

using ojson = nlohmann::ordered_json;

std::uint64_t ring_fingerprint(std::span<const RingElement> v) {
    return fingerprint(std::span<const std::uint64_t>(reinterpret_cast<const std::uint64_t*>(v.data()), v.size()));
}

bool is_session_fault(ErrorCode c) {
    return c == ErrorCode::kSessionMismatch || c == ErrorCode::kLengthMismatch ||
           c == ErrorCode::kDealerExhausted || c == ErrorCode::kSingleUseViolation;
}

SecureTensor concat_batch(const std::vector<DoContribution>& parts, std::size_t parties, SessionId id,
                          const Shape& sample_shape, int frac_bits) {
    SecureTensor out;
    out.frac_bits = frac_bits;
    std::size_t n = 0;
    for (const auto& c : parts) n += c.inputs.shape.empty() ? 0 : c.inputs.shape[0];
    out.shape = Shape{n};
    out.shape.insert(out.shape.end(), sample_shape.begin(), sample_shape.end());
    out.shares.resize(parties);
    for (std::uint32_t p = 0; p < parties; ++p) {
        out.shares[p].owner = PartyId{p};
        out.shares[p].session = id;
        for (const auto& c : parts) {
            require(c.inputs.parties() == parties, ErrorCode::kLengthMismatch, "contribution party count differs");
            require(c.inputs.frac_bits == frac_bits, ErrorCode::kPrecisionMismatch, "contribution precision differs");
            require(c.inputs.shares[p].session == id, ErrorCode::kSessionMismatch,
                    "contribution shared in another session");
            const auto& e = c.inputs.shares[p].elems;
            out.shares[p].elems.insert(out.shares[p].elems.end(), e.begin(), e.end());
        }
    }
    return out;
}

class PhaseClock {
public:
    explicit PhaseClock(std::vector<PhaseTiming>& sink) : sink_(sink) {}

    template <class F>
    auto run(const std::string& phase, F&& body) {
        const auto t0 = std::chrono::steady_clock::now();
        auto done = [&] {
            const auto t1 = std::chrono::steady_clock::now();
            sink_.push_back({phase, std::chrono::duration<double, std::milli>(t1 - t0).count()});
        };
        try {
            if constexpr (std::is_void_v<decltype(body())>) {
                body();
                done();
            } else {
                auto r = body();
                done();
                return r;
            }
        } catch (const PhaseError&) {
            throw;
        } catch (const Error& e) {
            throw PhaseError(phase, e.code(), e.what());
        } catch (const std::exception& e) {
            throw PhaseError(phase, ErrorCode::kInternal, e.what());
        }
    }

private:
    std::vector<PhaseTiming>& sink_;
};

ProbabilityMatrix plaintext_probabilities(const HospitalActor& h, const LabeledDataset& data) {
    ProbabilityMatrix m;
    m.hospital_id = h.name;
    m.model_id = h.global_model.model_id;
    m.num_classes = h.spec.num_classes();
    for (const auto& x : data.inputs) m.rows.push_back(forward(h.spec, h.global_model, x));
    return m;
}

std::vector<int> argmax_rows(const ProbabilityMatrix& m) {
    std::vector<int> out;
    for (const auto& r : m.rows) out.push_back(static_cast<int>(argmax(r)));
    return out;
}

LabeledDataset load_dataset_impl(const ScenarioConfig& c) {
    if (c.dataset.source == "csv") return load_csv_dataset(c.dataset.path);
    if (c.dataset.source == "idx") return load_idx_dataset(c.dataset.path, c.dataset.labels_path);
    Rng rng(mix3(c.seed, 0xb10b5, 0));
    LabeledDataset d = make_blobs(c.dataset.samples, c.dataset.features, c.dataset.classes, c.dataset.spread, rng);
    minmax_scale(d);
    return d;
}

// Contiguous equal slices of `data` in its current order.
std::vector<LabeledDataset> slice_evenly(const LabeledDataset& data, std::size_t parts) {
    Rng unused(0);
    return partition_dataset(data, parts, 0.0, unused);
}

ojson digest_json(const Digest& d) { return to_hex(d); }

}  // namespace

bool HospitalActor::has_model(const std::string& model_id) const {
    for (const auto& b : chain.replica(0).blocks())
        if (payload_id(b.payload) == model_id && std::holds_alternative<ModelRecord>(b.payload)) return true;
    return false;
}

DoContribution do_session(MpcSession& s, std::uint32_t do_party, std::uint32_t mo_party,
                          const LabeledDataset& eval_split) {
    require(!eval_split.empty(), ErrorCode::kEmptyEvalSet, "data owner has no evaluation samples");
    eval_split.validate();
    const std::size_t n = eval_split.size(), d = shape_size(eval_split.input_shape);
    std::vector<RingElement> values;
    values.reserve(n * d);
    for (const auto& x : eval_split.inputs)
        for (double v : x) values.push_back(s.codec().encode(v));
    Shape shape{n};
    shape.insert(shape.end(), eval_split.input_shape.begin(), eval_split.input_shape.end());

    DoContribution c;
    c.party = do_party;
    c.inputs = share_tensor(s, do_party, std::move(shape), values, s.frac_bits(), MessageKind::kInputShare);
    c.labels = eval_split.labels;
    if (do_party != mo_party && s.log()) {
        std::vector<std::uint64_t> words(c.labels.begin(), c.labels.end());
        s.log()->send(s.actor(do_party), s.actor(mo_party), MessageKind::kLabels, words);
    }
    return c;
}

MoOutput mo_session(MpcSession& s, std::uint32_t mo_party, const std::string& hospital_id, const ModelSpec& spec,
                    const ModelParams& params, const std::vector<DoContribution>& contributions) {
    check_params(spec, params);
    MoOutput out;
    out.probabilities.hospital_id = hospital_id;
    out.probabilities.model_id = params.model_id;
    out.probabilities.num_classes = spec.num_classes();
    try {
        SecureTensor batch = concat_batch(contributions, s.parties(), s.id(), spec.input_shape, s.frac_bits());
        for (const auto& c : contributions) out.labels.insert(out.labels.end(), c.labels.begin(), c.labels.end());
        const std::size_t n = batch.shape[0];
        if (n == 0) return out;

        const SharedModel shared = share_model(s, mo_party, spec, export_for_mpc(params, s.codec()));
        const SecureTensor logits = secure_forward(s, spec, shared, batch);
        if (MessageLog* log = s.log()) {
            for (std::uint32_t p = 0; p < s.parties(); ++p)
                if (p != mo_party) log->send(s.actor(p), s.actor(mo_party), MessageKind::kOutputShare,
                                             std::span<const std::uint64_t>(
                                                 reinterpret_cast<const std::uint64_t*>(logits.shares[p].elems.data()),
                                                 logits.shares[p].elems.size()));
        }
        out.logits = reconstruct_real(logits, s.codec());
        const std::size_t c = out.probabilities.num_classes;
        for (std::size_t r = 0; r < n; ++r)
            out.probabilities.rows.push_back(
                import_probabilities(std::span<const double>(out.logits.data() + r * c, c)));
    } catch (const Error& e) {
        if (is_session_fault(e.code())) fail(ErrorCode::kSessionAbort, "session " + std::to_string(s.id()) + ": " + e.what());
        throw;
    }
    return out;
}

MoOutput encrypted_evaluation(const ModelSpec& spec, const ModelParams& params, const std::string& hospital_id,
                              std::uint32_t mo_party, const std::vector<const LabeledDataset*>& do_splits,
                              std::size_t parties, const FixedPointCodec& codec, std::uint64_t seed, MessageLog* log) {
    require(do_splits.size() == parties, ErrorCode::kInvalidArgument, "one data-owner slot per party required");
    std::size_t samples = 0;
    for (const auto* d : do_splits) samples += d ? d->size() : 0;
    Dealer dealer(parties, seed);
    dealer.set_budget(plan_secure_forward(spec, samples, parties));
    MpcSession s(parties, dealer, codec, mix3(seed, 0x5e55, mo_party), log);
    std::vector<DoContribution> contributions;
    for (std::uint32_t p = 0; p < parties; ++p)
        if (do_splits[p] && !do_splits[p]->empty()) contributions.push_back(do_session(s, p, mo_party, *do_splits[p]));
    return mo_session(s, mo_party, hospital_id, spec, params, contributions);
}

PrivacyAudit audit_privacy(const MessageLog& log, const std::vector<std::uint64_t>& forbidden) {
    static const std::set<MessageKind> kMpcKinds = {
        MessageKind::kWeightShare, MessageKind::kInputShare, MessageKind::kLabels,     MessageKind::kBeaverOpen,
        MessageKind::kAndOpen,     MessageKind::kBitMaskOpen, MessageKind::kTruncOpen, MessageKind::kOutputShare};
    const std::set<std::uint64_t> banned(forbidden.begin(), forbidden.end());
    PrivacyAudit audit;
    auto flag = [&](const MessageRecord& r, const std::string& why) {
        audit.passed = false;
        if (audit.violations.size() < 32)
            audit.violations.push_back("tick " + std::to_string(r.tick) + " " + r.sender.name() + " -> " +
                                       r.receiver.name() + " (" + to_string(r.kind) + "): " + why);
    };
    auto inside_hospital = [](const ActorId& a) {
        return a.role == ActorRole::kHospital || a.role == ActorRole::kEdge || a.role == ActorRole::kLedgerNode;
    };
    for (const auto& r : log.records()) {
        if (r.digest != 0 && banned.count(r.digest)) flag(r, "payload matches a plaintext model or input");
        const ActorId &from = r.sender, &to = r.receiver;
        switch (r.kind) {
            case MessageKind::kModelUpdate:
                if (!(inside_hospital(from) && inside_hospital(to) && from.group == to.group))
                    flag(r, "model update left its hospital");
                break;
            case MessageKind::kLedgerProposal:
            case MessageKind::kLedgerVote:
                if (to.role == ActorRole::kLedgerNode && !(inside_hospital(from) && from.group == to.group))
                    flag(r, "traffic to another hospital's private chain");
                break;
            case MessageKind::kCorrelated:
                if (from.role != ActorRole::kDealer) flag(r, "correlated randomness from a non-dealer");
                break;
            default:
                if (from.role == ActorRole::kHospital && to.role == ActorRole::kHospital && !kMpcKinds.count(r.kind))
                    flag(r, "kind not permitted between hospitals");
                if ((to.role == ActorRole::kEdge || to.role == ActorRole::kLedgerNode) && from.group != to.group)
                    flag(r, "message into another hospital's infrastructure");
                break;
        }
    }
    return audit;
}

std::string RunReport::to_json() const {
    ojson j;
    j["scenario_id"] = scenario_id;
    j["seed"] = seed;
    auto& hs = j["hospitals"] = ojson::array();
    for (const auto& h : hospitals) {
        ojson e;
        e["name"] = h.name;
        e["model"] = h.spec_name;
        e["spec_hash"] = digest_json(h.spec_hash);
        e["parameters"] = h.parameters;
        e["edges"] = h.edges;
        e["train_samples"] = h.train_samples;
        e["validation_samples"] = h.validation_samples;
        e["gm_id"] = h.gm_id;
        e["gm_digest"] = digest_json(h.gm_digest);
        e["tuning_accuracy"] = h.tuning_accuracy;
        e["test_accuracy"] = h.test_accuracy;
        e["max_abs_logit_error"] = h.max_abs_logit_error;
        e["argmax_agreement"] = h.argmax_agreement;
        auto& rounds = e["rounds"] = ojson::array();
        for (const auto& r : h.rounds) {
            rounds.push_back({{"round", r.round},
                              {"selected", r.selected},
                              {"sample_counts", r.sample_counts},
                              {"total_samples", r.total_samples},
                              {"aggregate_id", r.aggregate_id},
                              {"aggregate_digest", digest_json(r.aggregate_digest)},
                              {"ledger_heights", r.ledger_heights},
                              {"train_accuracy", r.train_accuracy},
                              {"test_accuracy", r.test_accuracy}});
        }
        hs.push_back(std::move(e));
    }
    j["ensemble"] = {{"tuning_samples", tuning_samples},
                     {"test_samples", test_samples},
                     {"grid_size", grid_size},
                     {"candidates_evaluated", candidates_evaluated},
                     {"alpha_best", alpha_best},
                     {"tuning_accuracy", tuning_accuracy},
                     {"test_accuracy", ensemble_test_accuracy},
                     {"best_individual_test_accuracy", best_individual_test_accuracy},
                     {"weights_block_height", weights_block_height}};
    auto& cs = j["chains"] = ojson::array();
    for (const auto& c : chains)
        cs.push_back({{"name", c.name},
                      {"nodes", c.nodes},
                      {"height", c.height},
                      {"tip", digest_json(c.tip)},
                      {"replicas_identical", c.replicas_identical},
                      {"valid", c.valid}});
    ojson traffic = ojson::object();
    for (const auto& [k, v] : traffic_by_kind) traffic[k] = {{"messages", v.first}, {"bytes", v.second}};
    j["traffic"] = {{"messages", messages}, {"bytes", message_bytes}, {"by_kind", traffic}};
    j["correlated_randomness"] = {{"beaver_triples", correlated.beaver},
                                  {"binary_triples", correlated.binary_triples},
                                  {"bit_pairs", correlated.bit_pairs},
                                  {"truncation_pairs", correlated.trunc_pairs}};
    j["privacy_audit"] = {{"passed", privacy.passed}, {"violations", privacy.violations}};
    return j.dump(2) + "\n";
}

LabeledDataset load_scenario_dataset(const ScenarioConfig& config) { return load_dataset_impl(config); }

std::string run_dir_name(const ScenarioConfig& config) {
    return config.scenario_id + "-" + std::to_string(config.seed);
}

RunReport run_scenario(const ScenarioConfig& config, const RunOptions& options) {
    RunReport report;
    report.scenario_id = config.scenario_id;
    report.seed = config.seed;
    PhaseClock clock(report.timings);
    MessageLog log;
    const FixedPointCodec codec = config.codec;
    const std::size_t h = config.hospitals.size();

    std::vector<HospitalActor> hospitals;
    LabeledDataset test;
    clock.run("setup", [&] {
        config.validate();
        const LabeledDataset data = load_scenario_dataset(config);
        Rng split_rng(mix3(config.seed, 0x5b117, 0));
        DataSplits splits =
            split_dataset(data, config.dataset.train_fraction, config.dataset.validation_fraction, split_rng);
        test = std::move(splits.test);
        require(!test.empty(), ErrorCode::kConfig, "test split is empty");
        const auto train_parts = slice_evenly(splits.train, h);
        const auto val_parts = slice_evenly(splits.validation, h);
        for (std::uint32_t i = 0; i < h; ++i) {
            const auto& hc = config.hospitals[i];
            require(hc.model.input_shape == data.input_shape, ErrorCode::kConfig,
                    hc.name + ": model input shape does not match the dataset");
            require(hc.model.num_classes() == data.num_classes, ErrorCode::kConfig,
                    hc.name + ": model class count does not match the dataset");
            HospitalActor actor(i, hc.name, hc.model, config.ledger.hospital_nodes);
            Rng part_rng(mix3(config.seed, i, 0xed6e));
            auto edge_parts = partition_dataset(train_parts[i], hc.edges, config.dataset.dirichlet_alpha, part_rng);
            for (std::size_t e = 0; e < hc.edges; ++e)
                actor.edges.push_back(EdgeServerState{"E" + std::to_string(i) + "." + std::to_string(e),
                                                      std::move(edge_parts[e]), {}});
            actor.validation = val_parts[i];
            const std::size_t cap = config.evaluation.max_validation_per_hospital;
            if (cap > 0 && actor.validation.size() > cap) {
                std::vector<std::size_t> keep(cap);
                for (std::size_t k = 0; k < cap; ++k) keep[k] = k;
                actor.validation = actor.validation.subset(keep);
            }
            hospitals.push_back(std::move(actor));
        }
    });

    std::vector<FLResult> fl_results(h);
    clock.run("federated_learning", [&] {
        for (std::uint32_t i = 0; i < h; ++i) {
            auto& H = hospitals[i];
            const auto& hc = config.hospitals[i];
            FLConfig fl = hc.fl;
            fl.seed = mix3(config.seed, i, hc.fl.seed);
            Rng init_rng(mix3(config.seed, i, 0x1417));
            const ModelParams initial = init_params(H.spec, init_rng, H.name + "/init");
            LabeledDataset train_all;
            train_all.input_shape = H.spec.input_shape;
            train_all.num_classes = H.spec.num_classes();
            for (const auto& e : H.edges) {
                train_all.inputs.insert(train_all.inputs.end(), e.partition.inputs.begin(), e.partition.inputs.end());
                train_all.labels.insert(train_all.labels.end(), e.partition.labels.begin(), e.partition.labels.end());
            }
            const LedgerContext ctx{&log, ActorId::hospital(i), i, false};
            LedgerHook hook = [&](const ModelParams& m) -> std::uint64_t {
                const auto outcome = verify_and_append_model(
                    H.chain, make_model_record(m, codec, H.name, !config.ledger.store_model_bytes), log.tick(), {}, ctx);
                try {
                    require_accepted(outcome, H.chain.name() + " rejected " + m.model_id);
                } catch (const QuorumError& e) {
                    fail(ErrorCode::kLedgerRejection, e.what());
                }
                return outcome.block->height;
            };
            RoundMetrics metrics = [&](const ModelParams& m) {
                return std::pair{evaluate(H.spec, m, train_all), evaluate(H.spec, m, test)};
            };
            fl_results[i] = run_hospital_fl(H.spec, fl, H.edges, initial, H.name, hook, metrics, &log, i);
            H.global_model = fl_results[i].global_model;
            H.global_verified = H.has_model(H.global_model.model_id);
        }
    });

    std::vector<MoOutput> outputs(h);
    std::vector<std::uint64_t> forbidden;
    std::vector<HospitalReport> hreports(h);
    clock.run("encrypted_evaluation", [&] {
        for (std::uint32_t j = 0; j < h; ++j) {
            std::vector<RingElement> q;
            for (const auto& x : hospitals[j].validation.inputs)
                for (double v : x) q.push_back(codec.encode(v));
            forbidden.push_back(ring_fingerprint(q));
        }
        for (std::uint32_t i = 0; i < h; ++i) {
            auto& H = hospitals[i];
            require(H.global_verified, ErrorCode::kLedgerRejection,
                    H.name + ": global model is not ledger-verified; refusing to deploy it");
            const RingModel ring = export_for_mpc(H.global_model, codec);
            for (const auto& rl : ring) {
                if (!rl.weight.empty()) forbidden.push_back(ring_fingerprint(rl.weight));
                if (!rl.bias.empty()) forbidden.push_back(ring_fingerprint(rl.bias));
            }
            for (std::size_t l = 0; l < H.spec.layers.size(); ++l)
                if (const auto* d = std::get_if<DenseLayer>(&H.spec.layers[l])) {
                    std::vector<RingElement> wt(ring[l].weight.size());
                    for (std::size_t o = 0; o < d->out; ++o)
                        for (std::size_t k = 0; k < d->in; ++k) wt[k * d->out + o] = ring[l].weight[o * d->in + k];
                    forbidden.push_back(ring_fingerprint(wt));
                }

            std::vector<const LabeledDataset*> splits;
            for (const auto& other : hospitals) splits.push_back(&other.validation);
            const std::uint64_t session_seed = mix3(config.seed, i, 0xdea1);
            std::size_t samples = 0;
            for (const auto* d : splits) samples += d->size();
            Dealer dealer(h, session_seed);
            dealer.set_budget(plan_secure_forward(H.spec, samples, h));
            std::vector<ActorId> actors;
            for (std::uint32_t p = 0; p < h; ++p) actors.push_back(ActorId::hospital(p));
            MpcSession s(h, dealer, codec, mix3(session_seed, 0x5e55, i), &log, actors);
            std::vector<DoContribution> contributions;
            for (std::uint32_t p = 0; p < h; ++p) contributions.push_back(do_session(s, p, i, *splits[p]));
            outputs[i] = mo_session(s, i, H.name, H.spec, H.global_model, contributions);
            report.correlated += dealer.state().issued;

            // Compare against the plaintext fixed-point forward on the same inputs.
            auto& hr = hreports[i];
            const std::size_t c = H.spec.num_classes();
            std::size_t row = 0, agree = 0;
            for (const auto* d : splits)
                for (const auto& x : d->inputs) {
                    const auto ql = forward_quantized(H.spec, ring, codec.encode(x), codec);
                    std::vector<double> plain(c);
                    for (std::size_t k = 0; k < c; ++k) {
                        plain[k] = codec.decode(ql[k]);
                        hr.max_abs_logit_error =
                            std::max(hr.max_abs_logit_error, std::fabs(plain[k] - outputs[i].logits[row * c + k]));
                    }
                    agree += argmax(plain) == argmax(std::span<const double>(outputs[i].logits.data() + row * c, c));
                    ++row;
                }
            hr.argmax_agreement = row ? static_cast<double>(agree) / static_cast<double>(row) : 1.0;
        }
    });

    NodeSet bm("BM", config.ledger.bm_nodes);
    TuningInputs inputs;
    TuningResult tuned;
    clock.run("weight_tuning", [&] {
        inputs.labels = outputs[0].labels;
        for (std::uint32_t i = 0; i < h; ++i) {
            require(outputs[i].labels == inputs.labels, ErrorCode::kAlignmentMismatch,
                    "model owners disagree on the tuning label order");
            inputs.mats.push_back(outputs[i].probabilities);
            std::vector<std::uint64_t> words;
            for (const auto& r : outputs[i].probabilities.rows)
                for (double p : r) words.push_back(std::bit_cast<std::uint64_t>(p));
            for (std::uint32_t n = 0; n < bm.size(); ++n) {
                log.send(ActorId::hospital(i), ActorId::bm_node(n), MessageKind::kProbabilities, words);
                std::vector<std::uint64_t> labels(inputs.labels.begin(), inputs.labels.end());
                log.send(ActorId::hospital(i), ActorId::bm_node(n), MessageKind::kLabels, labels);
            }
        }
        inputs.grid = WeightGrid::with_step(config.grid_step);
        tuned = grid_search_weights(inputs.mats, inputs.labels, inputs.grid);
    });

    clock.run("weight_verification", [&] {
        WeightRecord record;
        for (const auto& H : hospitals) record.gm_ids.push_back(H.global_model.model_id);
        record.alpha = tuned.alpha_best.alpha;
        record.accuracy = tuned.accuracy;
        record.submitter = "cloud";
        ModelIdLookup known = [&](const std::string& id) {
            return std::any_of(hospitals.begin(), hospitals.end(), [&](const HospitalActor& H) { return H.has_model(id); });
        };
        const auto outcome = verify_and_append_weights(bm, record, inputs, known, log.tick(), {},
                                                       LedgerContext{&log, ActorId::cloud(), 0, true});
        require_accepted(outcome, "BM rejected the tuned ensemble weights");
        report.weights_block_height = outcome.block->height;
    });

    clock.run("ensemble_test", [&] {
        std::vector<ProbabilityMatrix> mats;
        for (std::uint32_t i = 0; i < h; ++i) {
            mats.push_back(plaintext_probabilities(hospitals[i], test));
            hreports[i].test_accuracy = accuracy_score(argmax_rows(mats.back()), test.labels);
            report.best_individual_test_accuracy = std::max(report.best_individual_test_accuracy, hreports[i].test_accuracy);
        }
        report.ensemble_test_accuracy = accuracy_score(ensemble_predict(mats, tuned.alpha_best), test.labels);
    });

    for (std::uint32_t i = 0; i < h; ++i) {
        auto& hr = hreports[i];
        const auto& H = hospitals[i];
        hr.name = H.name;
        hr.spec_name = H.spec.name;
        hr.spec_hash = H.spec.digest();
        hr.parameters = H.spec.parameter_count();
        hr.edges = H.edges.size();
        for (const auto& e : H.edges) hr.train_samples += e.partition.size();
        hr.validation_samples = H.validation.size();
        hr.rounds = fl_results[i].rounds;
        hr.gm_id = H.global_model.model_id;
        hr.gm_digest = params_digest(H.global_model);
        hr.tuning_accuracy = accuracy_score(argmax_rows(outputs[i].probabilities), inputs.labels);
    }
    report.hospitals = std::move(hreports);
    report.tuning_samples = inputs.labels.size();
    report.test_samples = test.size();
    report.alpha_best = tuned.alpha_best.alpha;
    report.tuning_accuracy = tuned.accuracy;
    report.grid_size = inputs.grid.values.size();
    report.candidates_evaluated = tuned.candidates_evaluated;

    auto chain_report = [](const NodeSet& ns) {
        ChainReport c;
        c.name = ns.name();
        c.nodes = ns.size();
        c.height = ns.replica(0).size();
        c.tip = ns.replica(0).tip_hash();
        c.replicas_identical = ns.replicas_identical();
        c.valid = validate_chain(ns.replica(0)).valid;
        return c;
    };
    for (const auto& H : hospitals) report.chains.push_back(chain_report(H.chain));
    report.chains.push_back(chain_report(bm));

    report.privacy = audit_privacy(log, forbidden);
    report.messages = log.size();
    report.message_bytes = log.total_bytes();
    report.traffic_by_kind = log.totals_by_kind();

    if (!options.out_dir.empty()) {
        clock.run("report", [&] {
            namespace fs = std::filesystem;
            const fs::path dir = fs::path(options.out_dir) / run_dir_name(config);
            fs::create_directories(dir / "chains");
            fs::create_directories(dir / "probabilities");
            report.run_dir = dir.string();
            auto text = [](const fs::path& p, const std::string& s) {
                std::ofstream out(p, std::ios::binary);
                if (!out) fail(ErrorCode::kIo, "cannot write " + p.string());
                out << s;
            };
            text(dir / "report.json", report.to_json());
            text(dir / "config.json", scenario_config_json(config));
            auto dump_chain = [&](const NodeSet& ns) {
                write_file((dir / "chains" / (ns.name() + ".chain")).string(), ns.replica(0).dump());
                text(dir / "chains" / (ns.name() + ".json"), ns.replica(0).index_json());
            };
            for (const auto& H : hospitals) dump_chain(H.chain);
            dump_chain(bm);
            for (std::uint32_t i = 0; i < h; ++i)
                write_probability_csv((dir / "probabilities" / (hospitals[i].name + ".csv")).string(),
                                      outputs[i].probabilities, inputs.labels);
            std::ostringstream rounds;
            rounds << "hospital,round,selected,total_samples,train_accuracy,test_accuracy,aggregate_digest\n";
            for (const auto& hr : report.hospitals)
                for (const auto& r : hr.rounds) {
                    rounds << hr.name << ',' << r.round << ',';
                    for (std::size_t k = 0; k < r.selected.size(); ++k) rounds << (k ? ";" : "") << r.selected[k];
                    rounds << ',' << r.total_samples << ',' << r.train_accuracy << ',' << r.test_accuracy << ','
                           << to_hex(r.aggregate_digest) << '\n';
                }
            text(dir / "fl_rounds.csv", rounds.str());
            std::ostringstream traffic;
            traffic << "kind,messages,bytes\n";
            for (const auto& [k, v] : report.traffic_by_kind) traffic << k << ',' << v.first << ',' << v.second << '\n';
            text(dir / "traffic.csv", traffic.str());
        });
        std::ostringstream t;
        t << "phase,millis\n";
        for (const auto& p : report.timings) t << p.phase << ',' << p.millis << '\n';
        std::ofstream(std::filesystem::path(report.run_dir) / "timings.csv") << t.str();
    }
    return report;
}

}  // namespace hefl
