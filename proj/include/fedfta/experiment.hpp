#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fedfta/federation.hpp"
#include "fedfta/metrics.hpp"

namespace fedfta {

struct SyntheticSpec {
    std::vector<std::size_t> class_counts = {684, 633, 810};
    std::size_t input_dim = 16;
    double separation = 6.0;
    double noise_std = 1.0;
};

enum class PartitionKind { Iid, Dirichlet, Shards };

struct PartitionSpec {
    PartitionKind kind = PartitionKind::Iid;
    double alpha = 0.5;                 // dirichlet
    std::size_t shards_per_client = 2;  // shards
};

struct ExperimentConfig {
    std::uint64_t master_seed = 1;
    SyntheticSpec synthetic;
    std::optional<std::string> csv_path;  // overrides synthetic generation
    double test_ratio = 0.2;
    double val_ratio = 0.1;
    std::size_t clients = 10;
    PartitionSpec partition;
    std::size_t rounds = 100;  // T
    RoundConfig round;
    std::size_t feature_dim = 32;
    std::vector<std::size_t> head_hidden = {200, 100};
    double target_accuracy = 0.88;
    std::size_t compare_seeds = 5;
    std::string output_dir = "out";

    // Strict parse: unknown keys are rejected with a nearest-key suggestion.
    static ExperimentConfig from_json_text(const std::string& text);
    static ExperimentConfig from_file(const std::string& path);
    std::string to_json_text() const;
};

struct RunSummary {
    TrainingHistory history;
    MetricReport final_report;
    ConfusionMatrix final_confusion{2};
    std::size_t rounds_to_target = 0;  // T+1 when the target is never reached
};

// Full pipeline for one config: data, split, partition, training, metrics.
// Nothing is written to disk.
RunSummary execute_run(const ExperimentConfig& cfg);

// `run` subcommand: executes and writes history.jsonl, final_metrics.csv,
// confusion.csv, config_echo.json into out_dir.
void cmd_run(const ExperimentConfig& cfg, const std::string& out_dir);

// `compare` subcommand: every aggregator x distribution cell over
// compare_seeds seeds; writes comparison.csv and comparison_summary.csv.
void cmd_compare(const ExperimentConfig& cfg, const std::vector<AggregatorKind>& aggregators,
                 const std::string& out_dir);

// `gen-data` subcommand: writes dataset.csv plus dataset_meta.json.
void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir);

std::string aggregator_name(AggregatorKind kind);
std::string partition_name(const PartitionSpec& spec);

}  // namespace fedfta
