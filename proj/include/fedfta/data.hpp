#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fedfta/model.hpp"
#include "fedfta/rng.hpp"

namespace fedfta {

struct Dataset {
    Matrix features;          // N x input_dim
    std::vector<int> labels;  // values in [0, class_count)
    int class_count = 0;

    std::size_t size() const { return features.rows; }
};

// Per-client index lists: pairwise disjoint, covering, every client nonempty.
struct PartitionPlan {
    std::vector<std::vector<std::size_t>> assignments;

    std::size_t client_count() const { return assignments.size(); }
};

struct SplitResult {
    Dataset train;
    Dataset validation;
    Dataset test;
};

// Gaussian blobs with pairwise-separated centers; exact per-class counts.
Dataset generate_blobs(const std::vector<std::size_t>& class_counts, std::size_t input_dim,
                       double centroid_separation, double noise_std, SeededRng& rng);

// CSV format: header f0,...,f{d-1},label; decimal floats; integer labels.
Dataset load_csv(const std::string& path);
void save_csv(const Dataset& ds, const std::string& path);

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices);

// Per class: round-half-up(count * test_ratio) samples to test, then
// round-half-up(remaining * val_ratio) of the remainder to validation.
SplitResult stratified_split(const Dataset& ds, double test_ratio, double val_ratio,
                             SeededRng& rng);

// Global shuffle, then contiguous chunks with sizes differing by at most 1.
PartitionPlan partition_iid(const Dataset& train, std::size_t clients, SeededRng& rng);

// Label-skew: per class, proportions ~ Dirichlet(alpha * 1_K); resampled
// (bounded retries) until every client is nonempty.
PartitionPlan partition_dirichlet(const Dataset& train, std::size_t clients, double alpha,
                                  SeededRng& rng);

// Label-sorted shards: indices sorted by label, cut into clients*shards_per_client
// shards, dealt randomly with shards_per_client shards per client.
PartitionPlan partition_shards(const Dataset& train, std::size_t clients,
                               std::size_t shards_per_client, SeededRng& rng);

}  // namespace fedfta
