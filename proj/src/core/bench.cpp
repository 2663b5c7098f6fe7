#include "hefl/bench.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <sstream>

#include "hefl/ledger.hpp"
#include "hefl/scenario.hpp"

namespace hefl {

namespace {

constexpr std::size_t kRecordsPerPoint = 16;
constexpr std::size_t kTuningSamples = 200;

template <class F>
double min_millis(std::size_t repeats, F&& body) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    return best;
}

LabeledDataset take(const LabeledDataset& data, std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i % data.size();
    return data.subset(idx);
}

}  // namespace

std::vector<BenchRow> run_bench(const ScenarioConfig& config) {
    config.validate();
    require(!config.bench.node_counts.empty() || !config.bench.image_counts.empty(), ErrorCode::kConfig,
            "bench needs at least one sweep list");
    const LabeledDataset data = load_scenario_dataset(config);
    require(!data.empty(), ErrorCode::kConfig, "bench dataset is empty");
    const FixedPointCodec codec = config.codec;
    const std::size_t h = config.hospitals.size();

    std::vector<ModelSpec> specs;
    std::vector<ModelParams> models;
    for (std::uint32_t i = 0; i < h; ++i) {
        specs.push_back(config.hospitals[i].model);
        Rng rng(mix3(config.seed, i, 0xbe7c));
        models.push_back(init_params(specs.back(), rng, config.hospitals[i].name + "/bench"));
    }

    TuningInputs tuning;
    tuning.grid = WeightGrid::with_step(config.grid_step);
    const LabeledDataset tune_set = take(data, kTuningSamples);
    tuning.labels = tune_set.labels;
    for (std::uint32_t i = 0; i < h; ++i) {
        ProbabilityMatrix m;
        m.hospital_id = config.hospitals[i].name;
        m.model_id = models[i].model_id;
        m.num_classes = specs[i].num_classes();
        for (const auto& x : tune_set.inputs) m.rows.push_back(forward(specs[i], models[i], x));
        tuning.mats.push_back(std::move(m));
    }
    const TuningResult tuned = grid_search_weights(tuning.mats, tuning.labels, tuning.grid);
    WeightRecord weights;
    for (const auto& m : models) weights.gm_ids.push_back(m.model_id);
    weights.alpha = tuned.alpha_best.alpha;
    weights.accuracy = tuned.accuracy;
    weights.submitter = "cloud";
    const ModelIdLookup known = [](const std::string&) { return true; };

    std::vector<ModelRecord> records;
    for (std::size_t k = 0; k < kRecordsPerPoint; ++k) {
        ModelParams m = models[0];
        m.model_id = models[0].model_id + "/" + std::to_string(k);
        records.push_back(make_model_record(m, codec, config.hospitals[0].name, !config.ledger.store_model_bytes));
    }

    std::vector<BenchRow> rows;
    for (std::size_t nodes : config.bench.node_counts) {
        const double model_ms = min_millis(config.bench.repeats, [&] {
            NodeSet chain("bench", nodes);
            for (std::size_t k = 0; k < records.size(); ++k)
                require_accepted(verify_and_append_model(chain, records[k], k), "bench model record rejected");
        });
        rows.push_back({"nodes", nodes, "model_verify", model_ms});
        const double weight_ms = min_millis(config.bench.repeats, [&] {
            NodeSet bm("BM", nodes);
            require_accepted(verify_and_append_weights(bm, weights, tuning, known, 0), "bench weights rejected");
        });
        rows.push_back({"nodes", nodes, "weight_verify", weight_ms});
    }

    for (std::size_t images : config.bench.image_counts) {
        const LabeledDataset batch = take(data, images);
        std::vector<const LabeledDataset*> splits(h, nullptr);
        splits[1 % h] = &batch;
        const double infer_ms = min_millis(config.bench.repeats, [&] {
            encrypted_evaluation(specs[0], models[0], config.hospitals[0].name, 0, splits, h, codec,
                                 mix3(config.seed, images, 0xbe7c), nullptr);
        });
        rows.push_back({"images", images, "encrypted_inference", infer_ms});

        TuningInputs local;
        local.grid = tuning.grid;
        local.labels = batch.labels;
        for (std::uint32_t i = 0; i < h; ++i) {
            ProbabilityMatrix m = tuning.mats[i];
            m.rows.clear();
            for (const auto& x : batch.inputs) m.rows.push_back(forward(specs[i], models[i], x));
            local.mats.push_back(std::move(m));
        }
        const double tune_ms =
            min_millis(config.bench.repeats, [&] { grid_search_weights(local.mats, local.labels, local.grid); });
        rows.push_back({"images", images, "weight_tuning", tune_ms});
    }
    return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
    std::ostringstream out;
    out << "sweep,value,phase,millis\n";
    for (const auto& r : rows) out << r.sweep << ',' << r.value << ',' << r.phase << ',' << r.millis << '\n';
    return out.str();
}

double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
    require(x.size() == y.size() && x.size() >= 2, ErrorCode::kInvalidArgument, "linear fit needs >= 2 paired points");
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n, my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    require(sxx > 0, ErrorCode::kInvalidArgument, "linear fit needs distinct x values");
    if (syy == 0) return 1.0;
    return sxy * sxy / (sxx * syy);
}

}  // namespace hefl
