#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "hefl/federated.hpp"
#include "hefl/neural.hpp"
#include "hefl/ring.hpp"

namespace hefl {

struct DatasetConfig {
    std::string source = "csv";  // csv | idx | blobs
    std::string path;            // csv file, or idx images
    std::string labels_path;     // idx labels
    std::size_t samples = 600;   // blobs only
    std::size_t features = 8;
    std::size_t classes = 3;
    double spread = 0.35;
    double train_fraction = 0.6;
    double validation_fraction = 0.2;
    double dirichlet_alpha = 0.0;  // 0 = contiguous equal split across edges
};

struct HospitalConfig {
    std::string name;
    ModelSpec model;
    std::size_t edges = 2;
    FLConfig fl;
};

struct LedgerConfig {
    std::size_t hospital_nodes = 5;
    std::size_t bm_nodes = 5;
    bool store_model_bytes = true;
};

struct EvaluationConfig {
    /// Cap on validation samples each hospital contributes; 0 = full split.
    std::size_t max_validation_per_hospital = 0;
};

struct BenchConfig {
    std::vector<std::size_t> node_counts{5, 10, 15, 20};
    std::vector<std::size_t> image_counts{50, 100, 150, 200, 250, 300};
    std::size_t repeats = 3;
};

struct ScenarioConfig {
    std::string scenario_id = "scenario";
    std::uint64_t seed = 1;
    DatasetConfig dataset;
    std::vector<HospitalConfig> hospitals;
    FixedPointCodec codec;
    double grid_step = 0.1;
    LedgerConfig ledger;
    EvaluationConfig evaluation;
    BenchConfig bench;

    /// Throws Error(kConfig).
    void validate() const;
};

enum class ConfigFormat { kToml, kJson };

/// Relative dataset paths are resolved against base_dir.
ScenarioConfig parse_scenario_config(std::string_view text, ConfigFormat format,
                                     const std::string& base_dir = ".");
/// Format chosen by extension (.json, otherwise TOML). Throws Error(kConfig).
ScenarioConfig load_scenario_config(const std::string& path);

/// JSON rendering of a config (as accepted by parse_scenario_config).
std::string scenario_config_json(const ScenarioConfig& config);

}  // namespace hefl
