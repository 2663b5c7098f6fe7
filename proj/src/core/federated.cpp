#include "hefl/federated.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace hefl {

void FLConfig::validate(std::size_t edge_count) const {
    require(rounds >= 1, ErrorCode::kConfig, "rounds must be >= 1");
    require(epochs >= 1, ErrorCode::kConfig, "epochs must be >= 1");
    require(participants_per_round >= 1, ErrorCode::kConfig, "participants_per_round must be >= 1");
    require(batch_size >= 1, ErrorCode::kConfig, "batch_size must be >= 1");
    require(std::isfinite(learning_rate) && learning_rate >= 0.0, ErrorCode::kConfig,
            "learning_rate must be finite and >= 0");
    require(edge_count >= 1, ErrorCode::kConfig, "a hospital needs at least one edge server");
    require(participants_per_round <= edge_count, ErrorCode::kKTooLarge,
            "participants_per_round " + std::to_string(participants_per_round) + " exceeds " +
                std::to_string(edge_count) + " edges");
}

std::vector<std::size_t> select_participants(std::size_t edge_count, std::size_t k, Rng& rng) {
    require(k <= edge_count, ErrorCode::kKTooLarge,
            "cannot select " + std::to_string(k) + " of " + std::to_string(edge_count) + " edges");
    std::vector<std::size_t> idx(edge_count);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < k; ++i) std::swap(idx[i], idx[i + rng.below(edge_count - i)]);
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

ModelParams local_train(const ModelSpec& spec, const ModelParams& global, const EdgeServerState& edge,
                        std::size_t epochs, double lr, std::size_t batch_size, Rng& rng) {
    require(global.spec_hash == spec.digest(), ErrorCode::kSpecMismatch,
            "edge " + edge.id + " received a model for a different architecture");
    require(!edge.partition.empty(), ErrorCode::kEmptyDataset, "edge " + edge.id + " has no training data");
    require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch_size must be >= 1");
    ModelParams w = global;
    std::vector<std::size_t> order(edge.partition.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t len = std::min(batch_size, order.size() - start);
            std::span<const std::size_t> batch(order.data() + start, len);
            w = sgd_step(w, gradient(spec, w, edge.partition, batch), lr);
        }
    }
    w.sample_count = edge.partition.size();
    return w;
}

Digest params_digest(const ModelParams& params) {
    ByteWriter w;
    w.str(params.model_id);
    w.digest(params.spec_hash);
    w.u64(params.layers.size());
    for (const auto& lp : params.layers) {
        w.u64(lp.weight.size());
        for (double v : lp.weight) w.f64(v);
        w.u64(lp.bias.size());
        for (double v : lp.bias) w.f64(v);
    }
    return sha256(w.bytes());
}

ModelParams fedavg_aggregate(std::span<const WeightedModel> models) {
    require(!models.empty(), ErrorCode::kZeroSamples, "no models to aggregate");
    const ModelParams& first = *models[0].params;
    std::size_t total = 0;
    for (const auto& m : models) {
        require(m.params != nullptr, ErrorCode::kInvalidArgument, "null model in aggregation");
        require(m.params->spec_hash == first.spec_hash && m.params->layers.size() == first.layers.size(),
                ErrorCode::kSpecMismatch, "aggregated models have different architectures");
        for (std::size_t l = 0; l < first.layers.size(); ++l)
            require(m.params->layers[l].weight.size() == first.layers[l].weight.size() &&
                        m.params->layers[l].bias.size() == first.layers[l].bias.size(),
                    ErrorCode::kSpecMismatch, "aggregated tensors differ in size");
        total += m.samples;
    }
    require(total > 0, ErrorCode::kZeroSamples, "aggregation over zero samples");

    // Floating-point sums depend on order; fix one independent of the input list.
    struct Keyed {
        Digest key;
        std::size_t samples;
        const ModelParams* params;
    };
    std::vector<Keyed> keyed;
    for (const auto& m : models) keyed.push_back({params_digest(*m.params), m.samples, m.params});
    std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        return a.key != b.key ? a.key < b.key : a.samples < b.samples;
    });

    ModelParams out;
    out.spec_hash = first.spec_hash;
    out.sample_count = total;
    out.layers.resize(first.layers.size());
    for (std::size_t l = 0; l < first.layers.size(); ++l) {
        out.layers[l].weight.assign(first.layers[l].weight.size(), 0.0);
        out.layers[l].bias.assign(first.layers[l].bias.size(), 0.0);
    }
    for (const auto& k : keyed) {
        const double c = static_cast<double>(k.samples) / static_cast<double>(total);
        for (std::size_t l = 0; l < out.layers.size(); ++l) {
            for (std::size_t i = 0; i < out.layers[l].weight.size(); ++i)
                out.layers[l].weight[i] += c * k.params->layers[l].weight[i];
            for (std::size_t i = 0; i < out.layers[l].bias.size(); ++i)
                out.layers[l].bias[i] += c * k.params->layers[l].bias[i];
        }
    }
    return out;
}

ModelParams fedavg_aggregate(const std::vector<std::pair<ModelParams, std::size_t>>& models) {
    std::vector<WeightedModel> refs;
    refs.reserve(models.size());
    for (const auto& [p, n] : models) refs.push_back({&p, n});
    return fedavg_aggregate(std::span<const WeightedModel>(refs));
}

std::vector<LabeledDataset> partition_dataset(const LabeledDataset& data, std::size_t edges, double dirichlet_alpha,
                                              Rng& rng) {
    require(edges >= 1, ErrorCode::kInvalidArgument, "need at least one partition");
    std::vector<std::vector<std::size_t>> parts(edges);
    if (dirichlet_alpha > 0.0) {
        std::vector<std::vector<std::size_t>> by_class(data.num_classes);
        for (std::size_t i = 0; i < data.size(); ++i) by_class[static_cast<std::size_t>(data.labels[i])].push_back(i);
        for (const auto& members : by_class) {
            std::vector<double> w(edges);
            double sum = 0.0;
            for (double& v : w) sum += v = rng.gamma(dirichlet_alpha);
            std::size_t assigned = 0;
            double cum = 0.0;
            for (std::size_t e = 0; e < edges; ++e) {
                cum += w[e] / sum;
                const std::size_t end =
                    e + 1 == edges ? members.size()
                                   : std::min(members.size(), static_cast<std::size_t>(std::llround(cum * static_cast<double>(members.size()))));
                for (; assigned < end; ++assigned) parts[e].push_back(members[assigned]);
            }
        }
        for (auto& p : parts) std::sort(p.begin(), p.end());
    } else {
        const std::size_t base = data.size() / edges, extra = data.size() % edges;
        std::size_t pos = 0;
        for (std::size_t e = 0; e < edges; ++e) {
            const std::size_t len = base + (e < extra ? 1 : 0);
            for (std::size_t i = 0; i < len; ++i) parts[e].push_back(pos + i);
            pos += len;
        }
    }
    std::vector<LabeledDataset> out;
    for (const auto& p : parts) out.push_back(data.subset(p));
    return out;
}

namespace {

std::uint64_t model_fingerprint(const ModelParams& p) {
    std::vector<std::uint64_t> words;
    for (const auto& lp : p.layers) {
        for (double v : lp.weight) words.push_back(std::bit_cast<std::uint64_t>(v));
        for (double v : lp.bias) words.push_back(std::bit_cast<std::uint64_t>(v));
    }
    return fingerprint(words);
}

std::uint64_t model_bytes(const ModelParams& p) {
    std::uint64_t n = 0;
    for (const auto& lp : p.layers) n += 8 * (lp.weight.size() + lp.bias.size());
    return n;
}

}  // namespace

FLResult run_hospital_fl(const ModelSpec& spec, const FLConfig& config, std::vector<EdgeServerState>& edges,
                         const ModelParams& initial, const std::string& hospital_name, const LedgerHook& ledger_hook,
                         const RoundMetrics& metrics, MessageLog* log, std::uint32_t hospital_index) {
    config.validate(edges.size());
    check_params(spec, initial);
    Rng rng(config.seed);
    const ActorId server = ActorId::hospital(hospital_index);

    FLResult result;
    ModelParams w = initial;
    for (std::size_t t = 0; t < config.rounds; ++t) {
        RoundRecord rec;
        rec.round = t;
        rec.selected = select_participants(edges.size(), config.participants_per_round, rng);

        std::vector<ModelParams> locals;
        for (std::size_t j : rec.selected) {
            auto& edge = edges[j];
            const ActorId edge_actor = ActorId::edge(hospital_index, static_cast<std::uint32_t>(j));
            if (log) log->send_sized(server, edge_actor, MessageKind::kModelUpdate, model_bytes(w), model_fingerprint(w));
            Rng edge_rng(mix3(config.seed, t, j));
            ModelParams local = local_train(spec, w, edge, config.epochs, config.learning_rate, config.batch_size, edge_rng);
            local.model_id = hospital_name + "/r" + std::to_string(t) + "/" + edge.id;
            if (log)
                log->send_sized(edge_actor, server, MessageKind::kModelUpdate, model_bytes(local),
                                model_fingerprint(local));
            if (ledger_hook) rec.ledger_heights.push_back(ledger_hook(local));
            edge.local_params = local;
            rec.sample_counts.push_back(local.sample_count);
            rec.total_samples += local.sample_count;
            locals.push_back(std::move(local));
        }

        std::vector<WeightedModel> refs;
        for (const auto& m : locals) refs.push_back({&m, m.sample_count});
        ModelParams agg = fedavg_aggregate(std::span<const WeightedModel>(refs));
        agg.model_id = hospital_name + "/r" + std::to_string(t) + "/global";
        if (ledger_hook) rec.ledger_heights.push_back(ledger_hook(agg));
        rec.aggregate_id = agg.model_id;
        rec.aggregate_digest = params_digest(agg);
        w = std::move(agg);
        if (metrics) std::tie(rec.train_accuracy, rec.test_accuracy) = metrics(w);
        result.rounds.push_back(std::move(rec));
    }
    result.global_model = std::move(w);
    return result;
}

}  // namespace hefl
