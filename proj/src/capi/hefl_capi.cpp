#include "hefl/hefl.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "hefl/bench.hpp"
#include "hefl/config.hpp"
#include "hefl/ensemble.hpp"
#include "hefl/ledger.hpp"
#include "hefl/scenario.hpp"

struct hefl_scenario {
    hefl::ScenarioConfig config;
};

struct hefl_report {
    hefl::RunReport report;
    std::string json;
};

struct hefl_chain {
    hefl::ChainDumpLoad load;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_phase;

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out) std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

hefl_status set_error(hefl_status status, const std::string& what) {
    g_error = what;
    return status;
}

// Runs body, translating exceptions into status codes.
template <class F>
hefl_status guarded(F&& body) {
    g_error.clear();
    g_phase.clear();
    try {
        body();
        return HEFL_OK;
    } catch (const hefl::PhaseError& e) {
        g_phase = e.phase();
        return set_error(HEFL_ERR_PHASE, e.what());
    } catch (const hefl::Error& e) {
        return set_error(static_cast<hefl_status>(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(HEFL_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(HEFL_ERR_INTERNAL, e.what());
    }
}

void need(const void* p, const char* name) {
    if (!p) hefl::fail(hefl::ErrorCode::kInvalidArgument, std::string(name) + " must not be null");
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) hefl::fail(hefl::ErrorCode::kIo, "cannot write " + p.string());
    out << text;
}

std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) hefl::fail(hefl::ErrorCode::kIo, "cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

extern "C" {

const char* hefl_version(void) { return "1.0.0"; }

const char* hefl_status_string(hefl_status status) { return hefl::to_string(static_cast<hefl::ErrorCode>(status)); }

const char* hefl_last_error(void) { return g_error.c_str(); }

const char* hefl_last_error_phase(void) { return g_phase.c_str(); }

void hefl_string_free(char* s) { std::free(s); }

hefl_status hefl_scenario_load(const char* path, hefl_scenario** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = nullptr;
        auto s = std::make_unique<hefl_scenario>();
        s->config = hefl::load_scenario_config(path);
        *out = s.release();
    });
}

hefl_status hefl_scenario_parse(const char* text, int is_json, const char* base_dir, hefl_scenario** out) {
    return guarded([&] {
        need(text, "text");
        need(out, "out");
        *out = nullptr;
        auto s = std::make_unique<hefl_scenario>();
        s->config = hefl::parse_scenario_config(text, is_json ? hefl::ConfigFormat::kJson : hefl::ConfigFormat::kToml,
                                                base_dir ? base_dir : ".");
        *out = s.release();
    });
}

hefl_status hefl_scenario_set_seed(hefl_scenario* scenario, uint64_t seed) {
    return guarded([&] {
        need(scenario, "scenario");
        scenario->config.seed = seed;
    });
}

hefl_status hefl_scenario_seed(const hefl_scenario* scenario, uint64_t* seed) {
    return guarded([&] {
        need(scenario, "scenario");
        need(seed, "seed");
        *seed = scenario->config.seed;
    });
}

hefl_status hefl_scenario_hospital_count(const hefl_scenario* scenario, size_t* count) {
    return guarded([&] {
        need(scenario, "scenario");
        need(count, "count");
        *count = scenario->config.hospitals.size();
    });
}

void hefl_scenario_free(hefl_scenario* scenario) { delete scenario; }

hefl_status hefl_run(const hefl_scenario* scenario, const char* out_dir, hefl_report** out) {
    return guarded([&] {
        need(scenario, "scenario");
        need(out, "out");
        *out = nullptr;
        auto r = std::make_unique<hefl_report>();
        hefl::RunOptions options;
        if (out_dir) options.out_dir = out_dir;
        r->report = hefl::run_scenario(scenario->config, options);
        r->json = r->report.to_json();
        *out = r.release();
    });
}

hefl_status hefl_report_json(const hefl_report* report, char** json) {
    return guarded([&] {
        need(report, "report");
        need(json, "json");
        *json = dup_string(report->json);
    });
}

hefl_status hefl_report_run_dir(const hefl_report* report, char** path) {
    return guarded([&] {
        need(report, "report");
        need(path, "path");
        *path = dup_string(report->report.run_dir);
    });
}

hefl_status hefl_report_ensemble_accuracy(const hefl_report* report, double* tuning, double* test) {
    return guarded([&] {
        need(report, "report");
        if (tuning) *tuning = report->report.tuning_accuracy;
        if (test) *test = report->report.ensemble_test_accuracy;
    });
}

hefl_status hefl_report_alpha(const hefl_report* report, double* alpha, size_t capacity, size_t* count) {
    return guarded([&] {
        need(report, "report");
        const auto& a = report->report.alpha_best;
        if (count) *count = a.size();
        if (alpha) {
            hefl::require(capacity >= a.size(), hefl::ErrorCode::kLengthMismatch, "alpha buffer too small");
            std::copy(a.begin(), a.end(), alpha);
        }
    });
}

int hefl_report_privacy_passed(const hefl_report* report) { return report && report->report.privacy.passed ? 1 : 0; }

void hefl_report_free(hefl_report* report) { delete report; }

hefl_status hefl_chain_load(const char* path, hefl_chain** out) {
    return guarded([&] {
        need(path, "path");
        need(out, "out");
        *out = nullptr;
        const hefl::Bytes bytes = hefl::read_file(path);
        auto c = std::make_unique<hefl_chain>();
        c->load = hefl::load_chain_dump(bytes);
        *out = c.release();
    });
}

hefl_status hefl_chain_length(const hefl_chain* chain, size_t* length) {
    return guarded([&] {
        need(chain, "chain");
        need(length, "length");
        *length = chain->load.chain.size();
    });
}

hefl_status hefl_chain_validate(const hefl_chain* chain, int* valid, int64_t* first_bad_height, char** reason) {
    return guarded([&] {
        need(chain, "chain");
        need(valid, "valid");
        const hefl::ChainValidation v =
            chain->load.structural_error ? *chain->load.structural_error : hefl::validate_chain(chain->load.chain);
        *valid = v.valid ? 1 : 0;
        if (first_bad_height) *first_bad_height = v.first_bad_height ? static_cast<int64_t>(*v.first_bad_height) : -1;
        if (reason) *reason = dup_string(v.reason);
    });
}

void hefl_chain_free(hefl_chain* chain) { delete chain; }

hefl_status hefl_tune_weights(const char* const* csv_paths, size_t count, double grid_step, char** result_json) {
    return guarded([&] {
        need(csv_paths, "csv_paths");
        need(result_json, "result_json");
        hefl::require(count >= 1, hefl::ErrorCode::kInvalidArgument, "at least one probability file required");
        std::vector<hefl::ProbabilityMatrix> mats;
        std::vector<int> labels;
        for (size_t i = 0; i < count; ++i) {
            need(csv_paths[i], "csv path");
            std::vector<int> l;
            mats.push_back(hefl::read_probability_csv(csv_paths[i], &l));
            if (i == 0)
                labels = std::move(l);
            else
                hefl::require(l == labels, hefl::ErrorCode::kAlignmentMismatch,
                              std::string(csv_paths[i]) + ": labels differ from the first file");
        }
        const auto grid = hefl::WeightGrid::with_step(grid_step);
        const auto r = hefl::grid_search_weights(mats, labels, grid);
        nlohmann::ordered_json j;
        j["alpha"] = r.alpha_best.alpha;
        j["accuracy"] = r.accuracy;
        j["correct"] = r.correct;
        j["samples"] = labels.size();
        j["candidates"] = r.candidates_evaluated;
        *result_json = dup_string(j.dump());
    });
}

hefl_status hefl_bench(const hefl_scenario* scenario, char** csv) {
    return guarded([&] {
        need(scenario, "scenario");
        need(csv, "csv");
        *csv = dup_string(hefl::bench_csv(hefl::run_bench(scenario->config)));
    });
}

hefl_status hefl_report_tables(const char* run_dir, const char* out_dir, char** listing) {
    return guarded([&] {
        namespace fs = std::filesystem;
        need(run_dir, "run_dir");
        need(out_dir, "out_dir");
        const fs::path in(run_dir), out(out_dir);
        nlohmann::json report;
        try {
            report = nlohmann::json::parse(read_text(in / "report.json"));
        } catch (const nlohmann::json::exception& e) {
            hefl::fail(hefl::ErrorCode::kIo, "report.json: " + std::string(e.what()));
        }
        fs::create_directories(out);
        std::vector<std::string> produced;
        auto emit = [&](const std::string& name, const std::string& text) {
            write_text(out / name, text);
            produced.push_back((out / name).string());
        };

        std::ostringstream acc;
        acc << "model,tuning_accuracy,test_accuracy\n";
        for (const auto& h : report.at("hospitals"))
            acc << h.at("name").get<std::string>() << ',' << h.at("tuning_accuracy").get<double>() << ','
                << h.at("test_accuracy").get<double>() << '\n';
        const auto& ens = report.at("ensemble");
        acc << "ensemble," << ens.at("tuning_accuracy").get<double>() << ',' << ens.at("test_accuracy").get<double>()
            << '\n';
        emit("accuracy.csv", acc.str());

        // One gnuplot block per hospital, separated by two blank lines.
        std::ostringstream curves;
        for (const auto& h : report.at("hospitals")) {
            curves << "# " << h.at("name").get<std::string>() << "\n# round train_accuracy test_accuracy\n";
            for (const auto& r : h.at("rounds"))
                curves << r.at("round").get<std::size_t>() << ' ' << r.at("train_accuracy").get<double>() << ' '
                       << r.at("test_accuracy").get<double>() << '\n';
            curves << "\n\n";
        }
        emit("fl_curves.dat", curves.str());

        std::ostringstream traffic;
        traffic << "kind,messages,bytes\n";
        for (const auto& [kind, v] : report.at("traffic").at("by_kind").items())
            traffic << kind << ',' << v.at("messages").get<std::size_t>() << ',' << v.at("bytes").get<std::size_t>()
                    << '\n';
        emit("traffic.csv", traffic.str());

        std::ostringstream chains;
        chains << "chain,nodes,height,valid,tip\n";
        for (const auto& c : report.at("chains"))
            chains << c.at("name").get<std::string>() << ',' << c.at("nodes").get<std::size_t>() << ','
                   << c.at("height").get<std::size_t>() << ',' << (c.at("valid").get<bool>() ? 1 : 0) << ','
                   << c.at("tip").get<std::string>() << '\n';
        emit("chains.csv", chains.str());

        if (fs::exists(in / "timings.csv")) {
            std::istringstream t(read_text(in / "timings.csv"));
            std::ostringstream dat;
            dat << "# phase millis\n";
            std::string line;
            std::getline(t, line);
            while (std::getline(t, line))
                if (auto comma = line.find(','); comma != std::string::npos)
                    dat << line.substr(0, comma) << ' ' << line.substr(comma + 1) << '\n';
            emit("timings.dat", dat.str());
        }
        if (listing) {
            std::string all;
            for (const auto& p : produced) all += p + "\n";
            *listing = dup_string(all);
        }
    });
}

}  // extern "C"
