#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hefl/config.hpp"

namespace hefl {

struct BenchRow {
    std::string sweep;  // "nodes" or "images"
    std::size_t value = 0;
    std::string phase;  // model_verify, weight_verify, encrypted_inference, weight_tuning
    double millis = 0.0;
};

/// Runtime sweeps over ledger node count and evaluation image count.
/// Each point is the minimum over config.bench.repeats runs.
std::vector<BenchRow> run_bench(const ScenarioConfig& config);
std::string bench_csv(const std::vector<BenchRow>& rows);

/// Least-squares fit y = a + b x; returns R^2.
double linear_r2(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace hefl
