#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <variant>
#include <vector>

#include "fedfta/aggregate.hpp"
#include "fedfta/data.hpp"
#include "fedfta/model.hpp"

namespace fedfta {

enum class AggregatorKind { FedAvg, Fta };

struct RoundConfig {
    std::size_t participants = 10;  // K
    std::size_t local_epochs = 1;   // E
    double eta = 0.001;
    std::size_t batch_size = 32;
    LocalOptimizer optimizer = LocalOptimizer::Sgd;
    AggregatorKind aggregator = AggregatorKind::Fta;
    GssConfig gss;
    // Run participant updates on worker threads; histories are identical
    // either way (client RNG streams are keyed by (seed, client, round) and
    // aggregation consumes updates sorted by client id).
    bool parallel_clients = false;
};

// Wire messages between server and clients.
struct FullModelMsg {
    const FrozenBase* base;
    ParamVector head;
};
struct HeadOnlyMsg {
    ParamVector head;
};
struct UpdateMsg {
    std::uint64_t client_id;
    ParamVector head;
    std::size_t n_k;
};
using Message = std::variant<FullModelMsg, HeadOnlyMsg, UpdateMsg>;

struct ClientNode {
    std::uint64_t id = 0;
    Dataset shard;
    Matrix shard_features;  // filled on first FullModel delivery
    bool has_base = false;
    std::optional<ParamVector> local_head;
};

struct FederationState {
    FrozenBase base;
    HeadShape head_shape;
    ParamVector global_head;
    std::size_t round = 0;  // t
    std::size_t total_rounds = 0;
    std::map<std::uint64_t, bool> registry;  // client id -> has full model
    Dataset validation;
    Matrix validation_features;  // base features of the validation set

    static FederationState create(FrozenBase base, HeadShape head_shape, Dataset validation,
                                  std::size_t total_rounds, SeededRng& init_rng);
};

struct RoundRecord {
    std::size_t t = 0;
    std::vector<std::uint64_t> participants;
    double sigma = 1.0;  // 1.0 on FedAvg rounds
    double val_loss_before = 0.0;
    double val_loss_after = 0.0;
    std::size_t objective_evals = 0;
    std::optional<double> test_accuracy;
    std::optional<double> test_macro_f1;
};

struct TrainingHistory {
    std::vector<RoundRecord> rounds;
};

// K distinct ids, uniform without replacement, sorted ascending.
std::vector<std::uint64_t> select_participants(const std::vector<std::uint64_t>& client_ids,
                                               std::size_t k, SeededRng& rng);

// FullModel for first contact (or round 1), HeadOnly afterwards; marks the
// registry on FullModel.
Message dispatch_model(FederationState& state, std::uint64_t client_id);

RoundRecord run_round(FederationState& state, std::vector<ClientNode>& clients,
                      const RoundConfig& cfg, std::uint64_t master_seed,
                      const Dataset* test_set = nullptr, const Matrix* test_features = nullptr);

TrainingHistory run_training(FederationState& state, std::vector<ClientNode>& clients,
                             const RoundConfig& cfg, std::size_t total_rounds,
                             std::uint64_t master_seed, const Dataset* test_set = nullptr);

}  // namespace fedfta
