#include "hefl/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <toml.hpp>

#include "hefl/ensemble.hpp"

namespace hefl {

namespace {

using nlohmann::json;

json toml_to_json(const toml::node& node) {
    if (const auto* t = node.as_table()) {
        json out = json::object();
        for (const auto& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
        return out;
    }
    if (const auto* a = node.as_array()) {
        json out = json::array();
        for (const auto& v : *a) out.push_back(toml_to_json(v));
        return out;
    }
    if (const auto* s = node.as_string()) return s->get();
    if (const auto* i = node.as_integer()) return i->get();
    if (const auto* f = node.as_floating_point()) return f->get();
    if (const auto* b = node.as_boolean()) return b->get();
    fail(ErrorCode::kConfig, "unsupported TOML value (dates and times are not accepted)");
}

// Reads keys out of one JSON object and rejects any key it never asked for.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        require(j.is_object(), ErrorCode::kConfig, where() + " must be a table");
    }
    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [k, v] : j_.items())
            if (!used_.count(k)) fail(ErrorCode::kConfig, "unknown key '" + path_ + "." + k + "'");
    }
    Section(const Section&) = delete;
    Section& operator=(const Section&) = delete;

    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        used_.insert(key);
        require(j_.contains(key), ErrorCode::kConfig, "missing key '" + path_ + "." + key + "'");
        return j_.at(key);
    }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!has(key)) {
            used_.insert(key);
            return;
        }
        out = read<T>(raw(key), path_ + "." + key);
    }

    template <class T>
    T need(const std::string& key) {
        return read<T>(raw(key), path_ + "." + key);
    }

    std::string sub(const std::string& key) const { return path_ + "." + key; }

    template <class T>
    static T read(const json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, bool>) {
            require(v.is_boolean(), ErrorCode::kConfig, where + " must be a boolean");
            return v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
            require(v.is_string(), ErrorCode::kConfig, where + " must be a string");
            return v.get<std::string>();
        } else if constexpr (std::is_same_v<T, double>) {
            require(v.is_number(), ErrorCode::kConfig, where + " must be a number");
            return v.get<double>();
        } else if constexpr (std::is_integral_v<T>) {
            require(v.is_number_integer() && (v.is_number_unsigned() || v.get<long long>() >= 0), ErrorCode::kConfig,
                    where + " must be a non-negative integer");
            return v.get<T>();
        } else {
            require(v.is_array(), ErrorCode::kConfig, where + " must be an array");
            T out;
            for (std::size_t i = 0; i < v.size(); ++i)
                out.push_back(read<typename T::value_type>(v[i], where + "[" + std::to_string(i) + "]"));
            return out;
        }
    }

private:
    std::string where() const { return path_.empty() ? "config" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> used_;
};

Layer parse_layer(const json& j, const std::string& where) {
    Section s(j, where);
    const std::string type = s.need<std::string>("type");
    if (type == "dense") {
        DenseLayer d;
        d.in = s.need<std::size_t>("in");
        d.out = s.need<std::size_t>("out");
        return d;
    }
    if (type == "conv2d") {
        Conv2dLayer c;
        c.in_channels = s.need<std::size_t>("in_channels");
        c.out_channels = s.need<std::size_t>("out_channels");
        c.kernel = s.need<std::size_t>("kernel");
        s.get("stride", c.stride);
        return c;
    }
    if (type == "relu") return ReluLayer{};
    if (type == "avgpool") {
        AvgPoolLayer a;
        s.get("window", a.window);
        return a;
    }
    if (type == "flatten") return FlattenLayer{};
    if (type == "softmax") return SoftmaxLayer{};
    fail(ErrorCode::kConfig, where + ": unknown layer type '" + type + "'");
}

nlohmann::ordered_json layer_json(const Layer& layer) {
    return std::visit(
        [](const auto& l) -> nlohmann::ordered_json {
            using L = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<L, DenseLayer>) return {{"type", "dense"}, {"in", l.in}, {"out", l.out}};
            else if constexpr (std::is_same_v<L, Conv2dLayer>)
                return {{"type", "conv2d"},
                        {"in_channels", l.in_channels},
                        {"out_channels", l.out_channels},
                        {"kernel", l.kernel},
                        {"stride", l.stride}};
            else if constexpr (std::is_same_v<L, ReluLayer>) return {{"type", "relu"}};
            else if constexpr (std::is_same_v<L, AvgPoolLayer>) return {{"type", "avgpool"}, {"window", l.window}};
            else if constexpr (std::is_same_v<L, FlattenLayer>) return {{"type", "flatten"}};
            else return {{"type", "softmax"}};
        },
        layer);
}

std::string resolve(const std::string& path, const std::string& base_dir) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(base_dir) / p).lexically_normal().string();
}

ScenarioConfig from_json(const json& root, const std::string& base_dir) {
    ScenarioConfig c;
    Section top(root, "");
    top.get("scenario_id", c.scenario_id);
    top.get("seed", c.seed);
    top.get("grid_step", c.grid_step);

    if (top.has("codec")) {
        Section s(top.raw("codec"), "codec");
        s.get("frac_bits", c.codec.frac_bits);
    }

    {
        Section s(top.raw("dataset"), "dataset");
        s.get("source", c.dataset.source);
        s.get("path", c.dataset.path);
        s.get("labels_path", c.dataset.labels_path);
        s.get("samples", c.dataset.samples);
        s.get("features", c.dataset.features);
        s.get("classes", c.dataset.classes);
        s.get("spread", c.dataset.spread);
        s.get("train_fraction", c.dataset.train_fraction);
        s.get("validation_fraction", c.dataset.validation_fraction);
        s.get("dirichlet_alpha", c.dataset.dirichlet_alpha);
        c.dataset.path = resolve(c.dataset.path, base_dir);
        c.dataset.labels_path = resolve(c.dataset.labels_path, base_dir);
    }

    const json& hs = top.raw("hospitals");
    require(hs.is_array(), ErrorCode::kConfig, "hospitals must be an array of tables");
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const std::string where = "hospitals[" + std::to_string(i) + "]";
        Section s(hs[i], where);
        HospitalConfig h;
        h.name = "H" + std::to_string(i);
        s.get("name", h.name);
        s.get("edges", h.edges);
        {
            Section m(s.raw("model"), where + ".model");
            h.model.name = h.name;
            m.get("name", h.model.name);
            h.model.input_shape = m.need<std::vector<std::size_t>>("input_shape");
            const json& layers = m.raw("layers");
            require(layers.is_array(), ErrorCode::kConfig, where + ".model.layers must be an array");
            for (std::size_t l = 0; l < layers.size(); ++l)
                h.model.layers.push_back(parse_layer(layers[l], where + ".model.layers[" + std::to_string(l) + "]"));
        }
        if (s.has("fl")) {
            Section f(s.raw("fl"), where + ".fl");
            f.get("rounds", h.fl.rounds);
            f.get("epochs", h.fl.epochs);
            f.get("participants_per_round", h.fl.participants_per_round);
            f.get("learning_rate", h.fl.learning_rate);
            f.get("batch_size", h.fl.batch_size);
            f.get("seed", h.fl.seed);
        }
        c.hospitals.push_back(std::move(h));
    }

    if (top.has("ledger")) {
        Section s(top.raw("ledger"), "ledger");
        s.get("hospital_nodes", c.ledger.hospital_nodes);
        s.get("bm_nodes", c.ledger.bm_nodes);
        s.get("store_model_bytes", c.ledger.store_model_bytes);
    }
    if (top.has("evaluation")) {
        Section s(top.raw("evaluation"), "evaluation");
        s.get("max_validation_per_hospital", c.evaluation.max_validation_per_hospital);
    }
    if (top.has("bench")) {
        Section s(top.raw("bench"), "bench");
        s.get("node_counts", c.bench.node_counts);
        s.get("image_counts", c.bench.image_counts);
        s.get("repeats", c.bench.repeats);
    }
    c.validate();
    return c;
}

}  // namespace

void ScenarioConfig::validate() const {
    auto bad = [](const std::string& what) { fail(ErrorCode::kConfig, what); };
    if (scenario_id.empty() || scenario_id.find_first_of("/\\") != std::string::npos)
        bad("scenario_id must be a non-empty name without path separators");
    if (hospitals.size() < 2) bad("at least 2 hospitals are required for cross-evaluation");
    if (codec.frac_bits < 1 || codec.frac_bits > 24) bad("codec.frac_bits must be in [1, 24]");
    if (dataset.source == "csv") {
        if (dataset.path.empty()) bad("dataset.path is required for csv datasets");
        if (!std::filesystem::exists(dataset.path)) bad("dataset file not found: " + dataset.path);
    } else if (dataset.source == "idx") {
        if (!std::filesystem::exists(dataset.path)) bad("idx image file not found: " + dataset.path);
        if (!std::filesystem::exists(dataset.labels_path)) bad("idx label file not found: " + dataset.labels_path);
    } else if (dataset.source == "blobs") {
        if (dataset.samples == 0 || dataset.features == 0 || dataset.classes < 2) bad("blobs need samples, features and >= 2 classes");
        if (!(dataset.spread >= 0.0)) bad("dataset.spread must be >= 0");
    } else {
        bad("dataset.source must be csv, idx or blobs");
    }
    if (!(dataset.train_fraction > 0.0 && dataset.validation_fraction > 0.0 &&
          dataset.train_fraction + dataset.validation_fraction < 1.0))
        bad("dataset fractions must be positive and leave a test split");
    if (!(dataset.dirichlet_alpha >= 0.0)) bad("dataset.dirichlet_alpha must be >= 0");
    std::set<std::string> names;
    for (const auto& h : hospitals) {
        if (h.name.empty() || !names.insert(h.name).second) bad("hospital names must be unique and non-empty");
        try {
            h.model.validate();
            h.fl.validate(h.edges);
        } catch (const Error& e) {
            bad("hospital " + h.name + ": " + e.what());
        }
    }
    try {
        (void)WeightGrid::with_step(grid_step);
    } catch (const Error& e) {
        bad(e.what());
    }
    if (ledger.hospital_nodes == 0 || ledger.bm_nodes == 0) bad("ledger node counts must be >= 1");
    if (bench.repeats == 0) bad("bench.repeats must be >= 1");
    for (std::size_t n : bench.node_counts)
        if (n == 0) bad("bench.node_counts entries must be >= 1");
    for (std::size_t n : bench.image_counts)
        if (n == 0) bad("bench.image_counts entries must be >= 1");
}

ScenarioConfig parse_scenario_config(std::string_view text, ConfigFormat format, const std::string& base_dir) {
    json root;
    if (format == ConfigFormat::kJson) {
        try {
            root = json::parse(text);
        } catch (const json::exception& e) {
            fail(ErrorCode::kConfig, std::string("invalid JSON: ") + e.what());
        }
    } else {
        try {
            root = toml_to_json(toml::parse(text));
        } catch (const toml::parse_error& e) {
            std::ostringstream msg;
            msg << "invalid TOML: " << e.description() << " at line " << e.source().begin.line;
            fail(ErrorCode::kConfig, msg.str());
        }
    }
    try {
        return from_json(root, base_dir);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::kConfig) throw;
        fail(ErrorCode::kConfig, e.what());
    } catch (const json::exception& e) {
        fail(ErrorCode::kConfig, std::string("config value out of range: ") + e.what());
    }
}

ScenarioConfig load_scenario_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::kConfig, "cannot read config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::filesystem::path p(path);
    const auto format = p.extension() == ".json" ? ConfigFormat::kJson : ConfigFormat::kToml;
    const std::string base = p.has_parent_path() ? p.parent_path().string() : ".";
    return parse_scenario_config(ss.str(), format, base);
}

std::string scenario_config_json(const ScenarioConfig& c) {
    nlohmann::ordered_json j;
    j["scenario_id"] = c.scenario_id;
    j["seed"] = c.seed;
    j["grid_step"] = c.grid_step;
    j["codec"] = {{"frac_bits", c.codec.frac_bits}};
    j["dataset"] = {{"source", c.dataset.source},
                    {"path", c.dataset.path},
                    {"labels_path", c.dataset.labels_path},
                    {"samples", c.dataset.samples},
                    {"features", c.dataset.features},
                    {"classes", c.dataset.classes},
                    {"spread", c.dataset.spread},
                    {"train_fraction", c.dataset.train_fraction},
                    {"validation_fraction", c.dataset.validation_fraction},
                    {"dirichlet_alpha", c.dataset.dirichlet_alpha}};
    auto& hs = j["hospitals"] = nlohmann::ordered_json::array();
    for (const auto& h : c.hospitals) {
        nlohmann::ordered_json layers = nlohmann::ordered_json::array();
        for (const auto& l : h.model.layers) layers.push_back(layer_json(l));
        hs.push_back({{"name", h.name},
                      {"edges", h.edges},
                      {"model", {{"name", h.model.name}, {"input_shape", h.model.input_shape}, {"layers", layers}}},
                      {"fl",
                       {{"rounds", h.fl.rounds},
                        {"epochs", h.fl.epochs},
                        {"participants_per_round", h.fl.participants_per_round},
                        {"learning_rate", h.fl.learning_rate},
                        {"batch_size", h.fl.batch_size},
                        {"seed", h.fl.seed}}}});
    }
    j["ledger"] = {{"hospital_nodes", c.ledger.hospital_nodes},
                   {"bm_nodes", c.ledger.bm_nodes},
                   {"store_model_bytes", c.ledger.store_model_bytes}};
    j["evaluation"] = {{"max_validation_per_hospital", c.evaluation.max_validation_per_hospital}};
    j["bench"] = {{"node_counts", c.bench.node_counts},
                  {"image_counts", c.bench.image_counts},
                  {"repeats", c.bench.repeats}};
    return j.dump(2) + "\n";
}

}  // namespace hefl
