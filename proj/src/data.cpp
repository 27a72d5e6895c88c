#include "fedfta/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fedfta/errors.hpp"

namespace fedfta {

namespace {

constexpr int kPlacementRetries = 1000;
constexpr int kPartitionRetries = 1000;

std::size_t round_half_up(double x) {
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

// floor(p_i * n) plus largest-remainder distribution of the leftovers,
// ties broken by lowest index.
std::vector<std::size_t> apportion(const std::vector<double>& proportions, std::size_t n) {
    const std::size_t k = proportions.size();
    std::vector<std::size_t> counts(k);
    std::vector<std::pair<double, std::size_t>> remainders(k);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < k; ++i) {
        const double exact = proportions[i] * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        remainders[i] = {exact - std::floor(exact), i};
        assigned += counts[i];
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t j = 0; assigned < n; ++j, ++assigned) {
        counts[remainders[j % k].second] += 1;
    }
    return counts;
}

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.class_count));
    for (std::size_t i = 0; i < ds.size(); ++i) {
        by_class[static_cast<std::size_t>(ds.labels[i])].push_back(i);
    }
    return by_class;
}

}  // namespace

Dataset generate_blobs(const std::vector<std::size_t>& class_counts, std::size_t input_dim,
                       double centroid_separation, double noise_std, SeededRng& rng) {
    const std::size_t c_count = class_counts.size();
    if (c_count < 2) throw ArgumentError("generate_blobs: need at least 2 classes");
    if (input_dim == 0) throw ArgumentError("generate_blobs: input_dim must be positive");
    if (centroid_separation <= 0.0) throw ArgumentError("generate_blobs: separation must be > 0");
    for (std::size_t c : class_counts) {
        if (c == 0) throw ArgumentError("generate_blobs: class counts must be positive");
    }

    // Draw the whole center set until pairwise separation holds.
    std::vector<std::vector<double>> centers;
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementRetries && !placed; ++attempt) {
        centers.assign(c_count, std::vector<double>(input_dim));
        for (auto& center : centers) {
            for (double& v : center) v = rng.next_gaussian(0.0, centroid_separation);
        }
        placed = true;
        for (std::size_t a = 0; a < c_count && placed; ++a) {
            for (std::size_t b = a + 1; b < c_count; ++b) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < input_dim; ++j) {
                    const double diff = centers[a][j] - centers[b][j];
                    d2 += diff * diff;
                }
                if (d2 < centroid_separation * centroid_separation) {
                    placed = false;
                    break;
                }
            }
        }
    }
    if (!placed) {
        throw NumericError("generate_blobs: could not place separated centers");
    }

    const std::size_t total = std::accumulate(class_counts.begin(), class_counts.end(),
                                              std::size_t{0});
    Dataset ds;
    ds.class_count = static_cast<int>(c_count);
    ds.features = Matrix(total, input_dim);
    ds.labels.resize(total);
    std::size_t row = 0;
    for (std::size_t c = 0; c < c_count; ++c) {
        for (std::size_t i = 0; i < class_counts[c]; ++i, ++row) {
            for (std::size_t j = 0; j < input_dim; ++j) {
                ds.features.at(row, j) = centers[c][j] + rng.next_gaussian(0.0, noise_std);
            }
            ds.labels[row] = static_cast<int>(c);
        }
    }
    return ds;
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("load_csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) throw IngestionError("load_csv: empty file " + path);
    std::size_t dim = 0;
    {
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> header;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
        if (header.size() < 2 || header.back() != "label") {
            throw IngestionError("load_csv: header must be f0,...,f{d-1},label");
        }
        dim = header.size() - 1;
        for (std::size_t i = 0; i < dim; ++i) {
            if (header[i] != "f" + std::to_string(i)) {
                throw IngestionError("load_csv: unexpected header column '" + header[i] + "'");
            }
        }
    }

    std::vector<double> values;
    std::vector<int> labels;
    std::size_t row_number = 1;
    while (std::getline(in, line)) {
        ++row_number;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != dim + 1) {
            throw IngestionError("load_csv: row " + std::to_string(row_number) + " has " +
                                 std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(dim + 1));
        }
        for (std::size_t i = 0; i < dim; ++i) {
            std::size_t pos = 0;
            double v;
            try {
                v = std::stod(cells[i], &pos);
            } catch (const std::exception&) {
                throw IngestionError("load_csv: row " + std::to_string(row_number) +
                                     ": bad numeric cell '" + cells[i] + "'");
            }
            if (pos != cells[i].size() || !std::isfinite(v)) {
                throw IngestionError("load_csv: row " + std::to_string(row_number) +
                                     ": bad numeric cell '" + cells[i] + "'");
            }
            values.push_back(v);
        }
        const std::string& lab = cells[dim];
        std::size_t pos = 0;
        long parsed = 0;
        try {
            parsed = std::stol(lab, &pos);
        } catch (const std::exception&) {
            pos = std::string::npos;
        }
        if (pos != lab.size() || parsed < 0) {
            throw IngestionError("load_csv: row " + std::to_string(row_number) +
                                 ": label '" + lab + "' is not a nonnegative integer");
        }
        labels.push_back(static_cast<int>(parsed));
    }
    if (labels.empty()) throw IngestionError("load_csv: no data rows in " + path);

    Dataset ds;
    ds.features.rows = labels.size();
    ds.features.cols = dim;
    ds.features.data = std::move(values);
    ds.labels = std::move(labels);
    ds.class_count = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("save_csv: cannot open " + path + " for writing");
    for (std::size_t i = 0; i < ds.features.cols; ++i) {
        out << "f" << i << ",";
    }
    out << "label\n";
    char buf[40];
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t c = 0; c < ds.features.cols; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", ds.features.at(r, c));
            out << buf << ",";
        }
        out << ds.labels[r] << "\n";
    }
    if (!out) throw IngestionError("save_csv: write failed for " + path);
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& indices) {
    Dataset out;
    out.class_count = ds.class_count;
    out.features = Matrix(indices.size(), ds.features.cols);
    out.labels.resize(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        for (std::size_t c = 0; c < ds.features.cols; ++c) {
            out.features.at(i, c) = ds.features.at(indices[i], c);
        }
        out.labels[i] = ds.labels[indices[i]];
    }
    return out;
}

SplitResult stratified_split(const Dataset& ds, double test_ratio, double val_ratio,
                             SeededRng& rng) {
    if (!(test_ratio > 0.0 && test_ratio < 1.0)) {
        throw ArgumentError("stratified_split: test_ratio must be in (0,1)");
    }
    if (!(val_ratio >= 0.0 && val_ratio < 1.0)) {
        throw ArgumentError("stratified_split: val_ratio must be in [0,1)");
    }
    auto by_class = indices_by_class(ds);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        if (by_class[c].size() < 3) {
            throw ArgumentError("stratified_split: class " + std::to_string(c) +
                                " has fewer than 3 samples");
        }
    }
    std::vector<std::size_t> train_idx, val_idx, test_idx;
    for (auto& class_indices : by_class) {
        rng.shuffle(class_indices);
        const std::size_t count = class_indices.size();
        std::size_t n_test = round_half_up(static_cast<double>(count) * test_ratio);
        n_test = std::min(n_test, count);
        const std::size_t remaining = count - n_test;
        std::size_t n_val = round_half_up(static_cast<double>(remaining) * val_ratio);
        n_val = std::min(n_val, remaining);
        for (std::size_t i = 0; i < n_test; ++i) test_idx.push_back(class_indices[i]);
        for (std::size_t i = n_test; i < n_test + n_val; ++i) val_idx.push_back(class_indices[i]);
        for (std::size_t i = n_test + n_val; i < count; ++i) train_idx.push_back(class_indices[i]);
    }
    return {subset(ds, train_idx), subset(ds, val_idx), subset(ds, test_idx)};
}

PartitionPlan partition_iid(const Dataset& train, std::size_t clients, SeededRng& rng) {
    const std::size_t n = train.size();
    if (clients == 0 || clients > n) {
        throw ArgumentError("partition_iid: client count must be in [1, N]");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    PartitionPlan plan;
    plan.assignments.resize(clients);
    const std::size_t base = n / clients;
    const std::size_t extra = n % clients;
    std::size_t pos = 0;
    for (std::size_t k = 0; k < clients; ++k) {
        const std::size_t take = base + (k < extra ? 1 : 0);
        plan.assignments[k].assign(order.begin() + pos, order.begin() + pos + take);
        pos += take;
    }
    return plan;
}

PartitionPlan partition_dirichlet(const Dataset& train, std::size_t clients, double alpha,
                                  SeededRng& rng) {
    if (clients < 2) throw ArgumentError("partition_dirichlet: need at least 2 clients");
    if (alpha <= 0.0) throw ArgumentError("partition_dirichlet: alpha must be > 0");
    const auto by_class = indices_by_class(train);

    for (int attempt = 0; attempt < kPartitionRetries; ++attempt) {
        PartitionPlan plan;
        plan.assignments.resize(clients);
        for (const auto& class_indices : by_class) {
            std::vector<std::size_t> shuffled = class_indices;
            rng.shuffle(shuffled);
            std::vector<double> proportions(clients);
            double sum = 0.0;
            for (double& p : proportions) {
                p = rng.next_gamma(alpha);
                sum += p;
            }
            for (double& p : proportions) p /= sum;
            const auto counts = apportion(proportions, shuffled.size());
            std::size_t pos = 0;
            for (std::size_t k = 0; k < clients; ++k) {
                for (std::size_t i = 0; i < counts[k]; ++i) {
                    plan.assignments[k].push_back(shuffled[pos++]);
                }
            }
        }
        const bool all_nonempty =
            std::none_of(plan.assignments.begin(), plan.assignments.end(),
                         [](const auto& a) { return a.empty(); });
        if (all_nonempty) return plan;
    }
    throw NumericError("partition_dirichlet: could not produce nonempty clients");
}

PartitionPlan partition_shards(const Dataset& train, std::size_t clients,
                               std::size_t shards_per_client, SeededRng& rng) {
    if (clients == 0 || shards_per_client == 0) {
        throw ArgumentError("partition_shards: clients and shards_per_client must be positive");
    }
    const std::size_t n = train.size();
    const std::size_t shard_count = clients * shards_per_client;
    if (shard_count > n) {
        throw ArgumentError("partition_shards: more shards than samples");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return train.labels[a] < train.labels[b]; });

    std::vector<std::size_t> shard_ids(shard_count);
    std::iota(shard_ids.begin(), shard_ids.end(), 0);
    rng.shuffle(shard_ids);

    const std::size_t base = n / shard_count;
    const std::size_t extra = n % shard_count;
    std::vector<std::size_t> shard_start(shard_count + 1, 0);
    for (std::size_t s = 0; s < shard_count; ++s) {
        shard_start[s + 1] = shard_start[s] + base + (s < extra ? 1 : 0);
    }

    PartitionPlan plan;
    plan.assignments.resize(clients);
    for (std::size_t k = 0; k < clients; ++k) {
        for (std::size_t j = 0; j < shards_per_client; ++j) {
            const std::size_t s = shard_ids[k * shards_per_client + j];
            for (std::size_t i = shard_start[s]; i < shard_start[s + 1]; ++i) {
                plan.assignments[k].push_back(order[i]);
            }
        }
    }
    return plan;
}

}  // namespace fedfta
