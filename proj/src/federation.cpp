#include "fedfta/federation.hpp"

#include <algorithm>
#include <future>
#include <string>

#include "fedfta/errors.hpp"
#include "fedfta/metrics.hpp"

namespace fedfta {

namespace {

std::vector<int> predict(const ClassifierHead& head, const Matrix& features) {
    const Matrix probs = head.forward(features);
    std::vector<int> out(probs.rows);
    for (std::size_t r = 0; r < probs.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.cols; ++c) {
            if (probs.at(r, c) > probs.at(r, best)) best = c;
        }
        out[r] = static_cast<int>(best);
    }
    return out;
}

ClientNode& find_client(std::vector<ClientNode>& clients, std::uint64_t id) {
    for (ClientNode& c : clients) {
        if (c.id == id) return c;
    }
    throw ProtocolError("unknown client id " + std::to_string(id));
}

}  // namespace

FederationState FederationState::create(FrozenBase base, HeadShape head_shape, Dataset validation,
                                        std::size_t total_rounds, SeededRng& init_rng) {
    FederationState state;
    state.head_shape = head_shape;
    state.global_head = ClassifierHead::init(head_shape, init_rng).params();
    state.round = 0;
    state.total_rounds = total_rounds;
    state.validation_features = base.features(validation.features);
    state.validation = std::move(validation);
    state.base = std::move(base);
    return state;
}

std::vector<std::uint64_t> select_participants(const std::vector<std::uint64_t>& client_ids,
                                               std::size_t k, SeededRng& rng) {
    if (k == 0 || k > client_ids.size()) {
        throw ArgumentError("select_participants: K must be in [1, pool size]");
    }
    // Partial Fisher-Yates over a copy, then sort for stable downstream order.
    std::vector<std::uint64_t> pool = client_ids;
    std::vector<std::uint64_t> chosen;
    chosen.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(pool.size() - i));
        std::swap(pool[i], pool[j]);
        chosen.push_back(pool[i]);
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

Message dispatch_model(FederationState& state, std::uint64_t client_id) {
    auto it = state.registry.find(client_id);
    if (it == state.registry.end()) {
        throw ProtocolError("dispatch_model: unregistered client " + std::to_string(client_id));
    }
    if (state.round + 1 == 1 || !it->second) {
        it->second = true;
        return FullModelMsg{&state.base, state.global_head};
    }
    return HeadOnlyMsg{state.global_head};
}

RoundRecord run_round(FederationState& state, std::vector<ClientNode>& clients,
                      const RoundConfig& cfg, std::uint64_t master_seed,
                      const Dataset* test_set, const Matrix* test_features) {
    const std::size_t t = state.round + 1;
    if (state.total_rounds > 0 && t > state.total_rounds) {
        throw ProtocolError("run_round: round budget exhausted");
    }

    std::vector<std::uint64_t> ids;
    ids.reserve(clients.size());
    for (const ClientNode& c : clients) {
        ids.push_back(c.id);
        state.registry.try_emplace(c.id, false);
    }
    std::sort(ids.begin(), ids.end());

    SeededRng select_rng = SeededRng::for_round(master_seed, "select", t);
    const auto participants = select_participants(ids, cfg.participants, select_rng);

    // Distribution phase: deliver the model, materializing base features on
    // first full-model delivery.
    for (std::uint64_t pid : participants) {
        ClientNode& client = find_client(clients, pid);
        Message msg = dispatch_model(state, pid);
        if (auto* full = std::get_if<FullModelMsg>(&msg)) {
            if (!client.has_base) {
                client.shard_features = full->base->features(client.shard.features);
                client.has_base = true;
            }
            client.local_head = std::move(full->head);
        } else if (auto* head_only = std::get_if<HeadOnlyMsg>(&msg)) {
            if (!client.has_base) {
                throw ProtocolError("client " + std::to_string(pid) +
                                    " received head without base model");
            }
            client.local_head = std::move(head_only->head);
        }
    }

    // Update phase.
    const ClassifierHead global(state.head_shape, state.global_head);
    LocalTrainConfig train_cfg{cfg.local_epochs, cfg.eta, cfg.batch_size, cfg.optimizer};
    auto run_client = [&](std::uint64_t pid) -> UpdateMsg {
        ClientNode& client = find_client(clients, pid);
        SeededRng client_rng = SeededRng::for_client(master_seed, pid, t);
        ClassifierHead local = global.with_params(*client.local_head);
        auto [head, n_k] =
            local_update(local, client.shard_features, client.shard.labels, train_cfg, client_rng);
        client.local_head = head;
        return UpdateMsg{pid, std::move(head), n_k};
    };

    std::vector<UpdateMsg> collected;
    collected.reserve(participants.size());
    if (cfg.parallel_clients && participants.size() > 1) {
        std::vector<std::future<UpdateMsg>> futures;
        futures.reserve(participants.size());
        for (std::uint64_t pid : participants) {
            futures.push_back(std::async(std::launch::async, run_client, pid));
        }
        for (std::size_t i = 0; i < futures.size(); ++i) {
            try {
                collected.push_back(futures[i].get());
            } catch (const std::exception& e) {
                throw ProtocolError("round " + std::to_string(t) + ": client " +
                                    std::to_string(participants[i]) + " failed: " + e.what());
            }
        }
    } else {
        for (std::uint64_t pid : participants) {
            try {
                collected.push_back(run_client(pid));
            } catch (const std::exception& e) {
                throw ProtocolError("round " + std::to_string(t) + ": client " +
                                    std::to_string(pid) + " failed: " + e.what());
            }
        }
    }

    std::vector<LocalUpdate> updates;
    updates.reserve(collected.size());
    for (UpdateMsg& msg : collected) {
        updates.push_back(LocalUpdate{msg.client_id, std::move(msg.head), msg.n_k});
    }

    RoundRecord record;
    record.t = t;
    record.participants = participants;
    record.val_loss_before = global.loss(state.validation_features, state.validation.labels);

    if (cfg.aggregator == AggregatorKind::FedAvg) {
        state.global_head = fedavg_aggregate(state.global_head, updates);
        record.sigma = 1.0;
        record.objective_evals = 0;
    } else {
        const auto evaluate_loss = [&](const ParamVector& candidate) {
            return global.with_params(candidate).loss(state.validation_features,
                                                      state.validation.labels);
        };
        AggregationResult agg = fta_aggregate(state.global_head, updates, evaluate_loss, cfg.gss);
        state.global_head = std::move(agg.new_head);
        record.sigma = agg.sigma;
        record.objective_evals = agg.evaluations.size();
    }

    const ClassifierHead updated(state.head_shape, state.global_head);
    record.val_loss_after = updated.loss(state.validation_features, state.validation.labels);

    if (test_set != nullptr && test_features != nullptr) {
        const auto predicted = predict(updated, *test_features);
        const auto cm = confusion_from_predictions(test_set->labels, predicted,
                                                   static_cast<std::size_t>(test_set->class_count));
        const MetricReport report = multiclass_metrics(cm);
        record.test_accuracy = report.accuracy;
        record.test_macro_f1 = report.f1;
    }

    state.round = t;
    return record;
}

TrainingHistory run_training(FederationState& state, std::vector<ClientNode>& clients,
                             const RoundConfig& cfg, std::size_t total_rounds,
                             std::uint64_t master_seed, const Dataset* test_set) {
    if (total_rounds == 0) {
        throw ArgumentError("run_training: need at least one round");
    }
    state.total_rounds = total_rounds;
    Matrix test_features;
    if (test_set != nullptr) {
        test_features = state.base.features(test_set->features);
    }
    TrainingHistory history;
    history.rounds.reserve(total_rounds);
    for (std::size_t r = 0; r < total_rounds; ++r) {
        try {
            history.rounds.push_back(run_round(state, clients, cfg, master_seed, test_set,
                                               test_set ? &test_features : nullptr));
        } catch (const ProtocolError&) {
            throw;
        } catch (const std::exception& e) {
            throw ProtocolError("round " + std::to_string(r + 1) + " failed: " + e.what());
        }
    }
    return history;
}

}  // namespace fedfta
