// minmax-cbo: CLI harness around the experiment library.
//
//   minmax-cbo run <config-file> [--seed OVERRIDE] [--out PREFIX]
//   minmax-cbo bench list
//
// MINMAX_CBO_WORKERS caps the worker thread count (outputs do not depend
// on it). Exit codes: 0 pass, 1 experiment verdict failed, 2 usage error,
// 3 integration failure.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "minmaxcbo/driver.hpp"

namespace {

int run_command(const std::string& config_path, std::optional<std::int64_t> seed_override,
                const std::string& out_prefix) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) {
        std::cerr << "error: cannot open config file '" << config_path << "'\n";
        return 2;
    }
    std::stringstream buf;
    buf << in.rdbuf();

    try {
        mmcbo::RunConfig cfg = mmcbo::parse_config(buf.str());
        if (seed_override) cfg.seed = static_cast<std::uint64_t>(*seed_override);
        const auto result = mmcbo::dispatch(cfg, out_prefix, std::cout);
        for (const auto& f : result.files) std::cout << "wrote " << f << "\n";
        return result.exit_code;
    } catch (const mmcbo::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const mmcbo::IntegrationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

int bench_list() {
    for (const char* name : mmcbo::kBenchmarkNames) {
        const auto obj = mmcbo::make_benchmark(name, 2, 2);
        std::cout << name << "  (any d1" << (std::string(name) == "bilinear-tanh" ? " = d2" : ", d2")
                  << ")  bound_c(2+2D) = " << obj.bound_c() << "  saddle at the shift (default origin)\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Consensus-based min-max dynamics: simulation and rate experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_prefix = "out";
    std::optional<std::int64_t> seed_override;

    auto* run = app.add_subcommand("run", "Run an experiment from a key = value config file");
    run->add_option("config", config_path, "Path to the config file")->required();
    run->add_option("--seed", seed_override, "Override the config seed");
    run->add_option("--out", out_prefix, "Output path prefix");

    auto* bench = app.add_subcommand("bench", "Benchmark objectives");
    auto* bench_list_cmd = bench->add_subcommand("list", "List available benchmarks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (run->parsed()) return run_command(config_path, seed_override, out_prefix);
    if (bench->parsed()) {
        if (bench_list_cmd->parsed()) return bench_list();
        std::cerr << "error: expected 'bench list'\n";
        return 2;
    }
    return 2;
}
