// Command-line shell over the C interface.
// Exit codes: 0 ok, 1 invalid chain, 2 configuration or unreadable input,
// 3 pipeline phase failure (phase named on stderr).

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hefl/hefl.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidChain = 1;
constexpr int kExitInput = 2;
constexpr int kExitPhase = 3;

struct ScenarioDeleter {
    void operator()(hefl_scenario* s) const { hefl_scenario_free(s); }
};
struct ReportDeleter {
    void operator()(hefl_report* r) const { hefl_report_free(r); }
};
struct ChainDeleter {
    void operator()(hefl_chain* c) const { hefl_chain_free(c); }
};
struct StringDeleter {
    void operator()(char* s) const { hefl_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

int report_failure(hefl_status st) {
    if (st == HEFL_ERR_PHASE) {
        std::cerr << "error: phase " << hefl_last_error_phase() << " failed: " << hefl_last_error() << '\n';
        return kExitPhase;
    }
    std::cerr << "error (" << hefl_status_string(st) << "): " << hefl_last_error() << '\n';
    return kExitInput;
}

// HEFL_SEED, when set, takes precedence over --seed.
std::optional<std::uint64_t> effective_seed(const std::optional<std::uint64_t>& flag) {
    if (const char* env = std::getenv("HEFL_SEED"); env && *env) {
        char* end = nullptr;
        errno = 0;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (errno != 0 || *end != '\0' || *env == '-') throw CLI::ValidationError("HEFL_SEED", "not an unsigned integer");
        return static_cast<std::uint64_t>(v);
    }
    return flag;
}

std::unique_ptr<hefl_scenario, ScenarioDeleter> load_scenario(const std::string& path, hefl_status& st) {
    hefl_scenario* raw = nullptr;
    st = hefl_scenario_load(path.c_str(), &raw);
    return std::unique_ptr<hefl_scenario, ScenarioDeleter>(raw);
}

int cmd_run(const std::string& config, const std::optional<std::uint64_t>& seed_flag, const std::string& out) {
    hefl_status st;
    auto scenario = load_scenario(config, st);
    if (st != HEFL_OK) return report_failure(st);
    if (auto seed = effective_seed(seed_flag)) hefl_scenario_set_seed(scenario.get(), *seed);

    hefl_report* raw = nullptr;
    st = hefl_run(scenario.get(), out.c_str(), &raw);
    if (st != HEFL_OK) return report_failure(st);
    std::unique_ptr<hefl_report, ReportDeleter> report(raw);

    char* dir = nullptr;
    hefl_report_run_dir(report.get(), &dir);
    OwnedString run_dir(dir);
    double tuning = 0, test = 0;
    hefl_report_ensemble_accuracy(report.get(), &tuning, &test);
    std::size_t count = 0;
    hefl_report_alpha(report.get(), nullptr, 0, &count);
    std::vector<double> alpha(count);
    hefl_report_alpha(report.get(), alpha.data(), alpha.size(), &count);

    std::cout << "run_dir " << run_dir.get() << '\n';
    std::cout << "alpha";
    for (double a : alpha) std::cout << ' ' << a;
    std::cout << '\n' << "ensemble_tuning_accuracy " << tuning << '\n' << "ensemble_test_accuracy " << test << '\n';
    std::cout << "privacy_audit " << (hefl_report_privacy_passed(report.get()) ? "pass" : "FAIL") << '\n';
    return kExitOk;
}

int cmd_verify_chain(const std::string& path) {
    hefl_chain* raw = nullptr;
    hefl_status st = hefl_chain_load(path.c_str(), &raw);
    if (st != HEFL_OK) return report_failure(st);
    std::unique_ptr<hefl_chain, ChainDeleter> chain(raw);
    int valid = 0;
    std::int64_t bad = -1;
    char* why = nullptr;
    st = hefl_chain_validate(chain.get(), &valid, &bad, &why);
    OwnedString reason(why);
    if (st != HEFL_OK) return report_failure(st);
    std::size_t length = 0;
    hefl_chain_length(chain.get(), &length);
    if (valid) {
        std::cout << "valid blocks=" << length << '\n';
        return kExitOk;
    }
    std::cout << "invalid first_bad_height=" << bad << '\n';
    std::cerr << reason.get() << '\n';
    return kExitInvalidChain;
}

int cmd_tune(const std::vector<std::string>& files, double step) {
    std::vector<const char*> paths;
    for (const auto& f : files) paths.push_back(f.c_str());
    char* json = nullptr;
    const hefl_status st = hefl_tune_weights(paths.data(), paths.size(), step, &json);
    if (st != HEFL_OK) return report_failure(st);
    OwnedString out(json);
    std::cout << out.get() << '\n';
    return kExitOk;
}

int cmd_bench(const std::string& config, const std::optional<std::uint64_t>& seed_flag, const std::string& out) {
    hefl_status st;
    auto scenario = load_scenario(config, st);
    if (st != HEFL_OK) return report_failure(st);
    if (auto seed = effective_seed(seed_flag)) hefl_scenario_set_seed(scenario.get(), *seed);
    char* csv = nullptr;
    st = hefl_bench(scenario.get(), &csv);
    if (st != HEFL_OK) return report_failure(st);
    OwnedString text(csv);
    if (!out.empty()) {
        std::ofstream f(out, std::ios::binary);
        if (!f) {
            std::cerr << "error: cannot write " << out << '\n';
            return kExitInput;
        }
        f << text.get();
    }
    std::cout << text.get();
    return kExitOk;
}

int cmd_report(const std::string& run_dir, const std::string& out) {
    char* listing = nullptr;
    const hefl_status st = hefl_report_tables(run_dir.c_str(), out.c_str(), &listing);
    if (st != HEFL_OK) return report_failure(st);
    OwnedString files(listing);
    std::cout << files.get();
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical ensemble federated learning simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", hefl_version());

    std::string config, out = "runs", chain, report_out, bench_out;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> probs;
    double step = 0.1;

    auto* run = app.add_subcommand("run", "Run a scenario end to end");
    run->add_option("--config", config, "Scenario file (TOML, or JSON by extension)")->required();
    run->add_option("--seed", seed, "Global seed (HEFL_SEED overrides)");
    run->add_option("--out", out, "Output root; the run directory is <scenario>-<seed>")->capture_default_str();

    auto* verify = app.add_subcommand("verify-chain", "Validate a chain dump");
    verify->add_option("--chain", chain, "Chain dump file")->required();

    auto* tune = app.add_subcommand("tune-weights", "Grid-search ensemble weights over probability CSVs");
    tune->add_option("--probs", probs, "Probability CSV per hospital, aligned by row")->required()->expected(1, -1);
    tune->add_option("--step", step, "Weight grid step")->capture_default_str();

    auto* bench = app.add_subcommand("bench", "Timing sweeps over ledger nodes and evaluation images");
    bench->add_option("--config", config, "Scenario file with bench sweep lists")->required();
    bench->add_option("--seed", seed, "Global seed (HEFL_SEED overrides)");
    bench->add_option("--out", bench_out, "Also write the CSV here");

    auto* report = app.add_subcommand("report", "Regenerate tables from a run directory");
    report->add_option("--run", chain, "Run directory")->required();
    report->add_option("--out", report_out, "Directory for CSV and .dat tables")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        // Usage of the subcommand being parsed, or of the whole tool.
        const auto subs = app.get_subcommands();
        std::cerr << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.back()->help());
        return kExitInput;
    }

    try {
        if (*run) return cmd_run(config, seed, out);
        if (*verify) return cmd_verify_chain(chain);
        if (*tune) return cmd_tune(probs, step);
        if (*bench) return cmd_bench(config, seed, bench_out);
        if (*report) return cmd_report(chain, report_out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitInput;
}
