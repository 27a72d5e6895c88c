#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "fedfta/experiment.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

fedfta::ExperimentConfig load_config(const std::string& path) {
    fedfta::ExperimentConfig cfg = fedfta::ExperimentConfig::from_file(path);
    if (const char* env = std::getenv("FEDFTA_SEED")) {
        cfg.master_seed = std::stoull(env);
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Federated transfer-learning simulator with fine-tuned aggregation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    std::string aggregators_arg = "fedavg,fta";

    auto* run = app.add_subcommand("run", "Run one experiment and write reports");
    run->add_option("--config", config_path, "JSON config path")->required();
    run->add_option("--out", out_override, "Output directory (overrides config)");

    auto* compare = app.add_subcommand("compare", "Compare aggregators over seeds");
    compare->add_option("--config", config_path, "JSON config path")->required();
    compare->add_option("--aggregators", aggregators_arg, "Comma-separated list (fedavg,fta)");
    compare->add_option("--out", out_override, "Output directory (overrides config)");

    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic CSV dataset");
    gen->add_option("--config", config_path, "JSON config path")->required();
    gen->add_option("--out", out_override, "Output directory (overrides config)");

    CLI11_PARSE(app, argc, argv);

    try {
        fedfta::ExperimentConfig cfg = load_config(config_path);
        const std::string out_dir = out_override.empty() ? cfg.output_dir : out_override;
        if (run->parsed()) {
            fedfta::cmd_run(cfg, out_dir);
            std::cout << "wrote " << out_dir << "/history.jsonl (" << cfg.rounds << " rounds)\n";
        } else if (compare->parsed()) {
            std::vector<fedfta::AggregatorKind> aggs;
            std::stringstream ss(aggregators_arg);
            std::string item;
            while (std::getline(ss, item, ',')) {
                if (item == "fedavg") aggs.push_back(fedfta::AggregatorKind::FedAvg);
                else if (item == "fta") aggs.push_back(fedfta::AggregatorKind::Fta);
                else {
                    std::cerr << "error: unknown aggregator '" << item << "'\n";
                    return 2;
                }
            }
            fedfta::cmd_compare(cfg, aggs, out_dir);
            std::cout << "wrote " << out_dir << "/comparison.csv\n";
        } else if (gen->parsed()) {
            fedfta::cmd_gen_data(cfg, out_dir);
            std::cout << "wrote " << out_dir << "/dataset.csv\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "{\"error\":\"" << e.what() << "\"}\n";
        return 1;
    }
    return 0;
}
