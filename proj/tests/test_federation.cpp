#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fedfta/errors.hpp"
#include "fedfta/federation.hpp"

using namespace fedfta;

namespace {

struct Fixture {
    Dataset full;
    SplitResult split;
    FrozenBase base;
    HeadShape shape;
};

Fixture make_fixture(std::uint64_t seed, std::vector<std::size_t> counts = {60, 60, 60}) {
    Fixture f;
    SeededRng data_rng = SeededRng::for_stream(seed, "data");
    f.full = generate_blobs(counts, 6, 6.0, 1.0, data_rng);
    SeededRng split_rng = SeededRng::for_stream(seed, "split");
    f.split = stratified_split(f.full, 0.2, 0.15, split_rng);
    SeededRng base_rng = SeededRng::for_stream(seed, "base");
    f.base = FrozenBase::create(6, 10, base_rng);
    f.shape = HeadShape{10, {8, static_cast<std::size_t>(f.full.class_count)}};
    return f;
}

FederationState make_state(const Fixture& f, std::uint64_t seed, std::size_t rounds) {
    SeededRng head_rng = SeededRng::for_stream(seed, "head_init");
    return FederationState::create(f.base, f.shape, f.split.validation, rounds, head_rng);
}

std::vector<ClientNode> make_clients(const Fixture& f, std::uint64_t seed, std::size_t k) {
    SeededRng part_rng = SeededRng::for_stream(seed, "partition");
    PartitionPlan plan = partition_iid(f.split.train, k, part_rng);
    std::vector<ClientNode> clients(k);
    for (std::size_t i = 0; i < k; ++i) {
        clients[i].id = i;
        clients[i].shard = subset(f.split.train, plan.assignments[i]);
    }
    return clients;
}

bool histories_equal(const TrainingHistory& a, const TrainingHistory& b) {
    if (a.rounds.size() != b.rounds.size()) return false;
    for (std::size_t i = 0; i < a.rounds.size(); ++i) {
        const RoundRecord& x = a.rounds[i];
        const RoundRecord& y = b.rounds[i];
        if (x.t != y.t || x.participants != y.participants || x.sigma != y.sigma ||
            x.val_loss_before != y.val_loss_before || x.val_loss_after != y.val_loss_after ||
            x.objective_evals != y.objective_evals || x.test_accuracy != y.test_accuracy ||
            x.test_macro_f1 != y.test_macro_f1) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("select_participants selects the whole pool when K equals pool size") {
    std::vector<std::uint64_t> ids = {4, 1, 9, 2};
    SeededRng rng(1, 0);
    auto sel = select_participants(ids, 4, rng);
    CHECK(sel == std::vector<std::uint64_t>{1, 2, 4, 9});
}

TEST_CASE("select_participants golden fixtures for seed 42") {
    std::vector<std::uint64_t> ids(10);
    std::iota(ids.begin(), ids.end(), 0);
    SeededRng r1 = SeededRng::for_round(42, "select", 1);
    CHECK(select_participants(ids, 3, r1) == std::vector<std::uint64_t>{3, 7, 8});
    SeededRng r2 = SeededRng::for_round(42, "select", 2);
    CHECK(select_participants(ids, 3, r2) == std::vector<std::uint64_t>{0, 5, 8});
}

TEST_CASE("select_participants rejects K larger than the pool") {
    std::vector<std::uint64_t> ids = {1, 2};
    SeededRng rng(1, 0);
    CHECK_THROWS_AS(select_participants(ids, 3, rng), ArgumentError);
}

TEST_CASE("selection is uniform-ish over many draws") {
    std::vector<std::uint64_t> ids(10);
    std::iota(ids.begin(), ids.end(), 0);
    std::vector<int> hits(10, 0);
    for (std::uint64_t t = 0; t < 2000; ++t) {
        SeededRng rng = SeededRng::for_round(7, "select", t);
        for (std::uint64_t s : select_participants(ids, 3, rng)) hits[s]++;
    }
    for (int h : hits) {
        CHECK(h > 450);
        CHECK(h < 750);
    }
}

TEST_CASE("dispatch_model sends the full model exactly once per client") {
    Fixture f = make_fixture(100);
    FederationState state = make_state(f, 100, 10);
    state.registry[0] = false;
    state.registry[1] = false;

    // Round 1: full model.
    Message m1 = dispatch_model(state, 0);
    CHECK(std::holds_alternative<FullModelMsg>(m1));
    CHECK(state.registry[0]);

    // Later round, returning participant: head only.
    state.round = 4;
    Message m2 = dispatch_model(state, 0);
    CHECK(std::holds_alternative<HeadOnlyMsg>(m2));

    // Later round, never-seen participant: full model.
    Message m3 = dispatch_model(state, 1);
    CHECK(std::holds_alternative<FullModelMsg>(m3));

    CHECK_THROWS_AS(dispatch_model(state, 99), ProtocolError);
}

TEST_CASE("K=1 fedavg round adopts the single client's update") {
    Fixture f = make_fixture(200);
    FederationState state = make_state(f, 200, 5);
    auto clients = make_clients(f, 200, 1);

    RoundConfig cfg;
    cfg.participants = 1;
    cfg.local_epochs = 1;
    cfg.eta = 0.05;
    cfg.batch_size = 16;
    cfg.aggregator = AggregatorKind::FedAvg;

    const ParamVector before = state.global_head;
    run_round(state, clients, cfg, 200);

    // Recompute what the client should have produced.
    ClassifierHead head(f.shape, before);
    Matrix feats = f.base.features(clients[0].shard.features);
    SeededRng client_rng = SeededRng::for_client(200, 0, 1);
    auto [expected, n] = local_update(head, feats, clients[0].shard.labels,
                                      LocalTrainConfig{1, 0.05, 16}, client_rng);
    (void)n;
    CHECK(state.global_head == expected);
}

TEST_CASE("zero learning rate leaves the global head unchanged, including under FTA") {
    Fixture f = make_fixture(300);
    auto clients = make_clients(f, 300, 4);
    RoundConfig cfg;
    cfg.participants = 4;
    cfg.eta = 1e-300;  // eta must be > 0; this is numerically a zero step
    cfg.batch_size = 16;

    for (AggregatorKind agg : {AggregatorKind::FedAvg, AggregatorKind::Fta}) {
        FederationState state = make_state(f, 300, 5);
        const ParamVector before = state.global_head;
        cfg.aggregator = agg;
        RoundRecord rec = run_round(state, clients, cfg, 300);
        CHECK(pv_allclose(state.global_head, before, 1e-12));
        if (agg == AggregatorKind::FedAvg) {
            CHECK(rec.sigma == 1.0);
        }
    }
}

TEST_CASE("two-client fedavg round equals the hand-computed weighted blend") {
    Fixture f = make_fixture(400, {40, 40});
    FederationState state = make_state(f, 400, 5);

    // Hand-build shards with n = 8 and n = 24 so the blend is 0.25/0.75.
    std::vector<std::size_t> idx_a, idx_b;
    for (std::size_t i = 0; i < 8; ++i) idx_a.push_back(i);
    for (std::size_t i = 8; i < 32; ++i) idx_b.push_back(i);
    std::vector<ClientNode> clients(2);
    clients[0].id = 0;
    clients[0].shard = subset(f.split.train, idx_a);
    clients[1].id = 1;
    clients[1].shard = subset(f.split.train, idx_b);

    RoundConfig cfg;
    cfg.participants = 2;
    cfg.local_epochs = 1;
    cfg.eta = 0.05;
    cfg.batch_size = 64;  // one full batch each -> exactly one SGD step
    cfg.aggregator = AggregatorKind::FedAvg;

    const ParamVector before = state.global_head;
    run_round(state, clients, cfg, 400);

    const ClassifierHead head(f.shape, before);
    ParamVector locals[2];
    const std::vector<std::size_t>* idx[2] = {&idx_a, &idx_b};
    for (int c = 0; c < 2; ++c) {
        Dataset shard = subset(f.split.train, *idx[c]);
        Matrix feats = f.base.features(shard.features);
        auto [loss, grad] = head.loss_and_grad(LabeledBatch{feats, shard.labels});
        (void)loss;
        locals[c] = pv_axpy(-0.05, grad, before);
    }
    ParamVector blended = pv_axpy(0.0, before, before);
    {
        std::vector<ParamVector> heads = {locals[0], locals[1]};
        std::vector<double> ws = {8, 24};
        blended = pv_weighted_mean(heads, ws);
    }
    CHECK(pv_allclose(state.global_head, blended, 1e-9));
}

TEST_CASE("aggregation barrier: next round dispatches the newly aggregated head") {
    Fixture f = make_fixture(500);
    FederationState state = make_state(f, 500, 5);
    auto clients = make_clients(f, 500, 3);
    RoundConfig cfg;
    cfg.participants = 3;
    cfg.eta = 0.05;
    cfg.batch_size = 16;
    cfg.aggregator = AggregatorKind::Fta;

    run_round(state, clients, cfg, 500);
    const ParamVector after_round1 = state.global_head;
    Message msg = dispatch_model(state, clients[0].id);
    if (auto* head_only = std::get_if<HeadOnlyMsg>(&msg)) {
        CHECK(head_only->head == after_round1);
    } else if (auto* full = std::get_if<FullModelMsg>(&msg)) {
        CHECK(full->head == after_round1);
    } else {
        FAIL("unexpected message kind");
    }
}

TEST_CASE("registry never reverts and every updater has the base") {
    Fixture f = make_fixture(600);
    FederationState state = make_state(f, 600, 20);
    auto clients = make_clients(f, 600, 6);
    RoundConfig cfg;
    cfg.participants = 2;
    cfg.eta = 0.05;
    cfg.batch_size = 16;
    cfg.aggregator = AggregatorKind::FedAvg;

    std::set<std::uint64_t> granted;
    for (int r = 0; r < 10; ++r) {
        run_round(state, clients, cfg, 600);
        for (const auto& [id, has] : state.registry) {
            if (granted.count(id)) CHECK(has);  // monotone
            if (has) granted.insert(id);
        }
        for (const ClientNode& c : clients) {
            if (c.local_head.has_value()) CHECK(c.has_base);
        }
    }
}

TEST_CASE("run_training produces T records with 1-based round indices") {
    Fixture f = make_fixture(700);
    FederationState state = make_state(f, 700, 3);
    auto clients = make_clients(f, 700, 3);
    RoundConfig cfg;
    cfg.participants = 3;
    cfg.eta = 0.05;
    cfg.batch_size = 16;
    cfg.aggregator = AggregatorKind::FedAvg;

    TrainingHistory h = run_training(state, clients, cfg, 3, 700, &f.split.test);
    REQUIRE(h.rounds.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(h.rounds[i].t == i + 1);
        CHECK(h.rounds[i].test_accuracy.has_value());
    }
}

TEST_CASE("same config and seed give identical histories") {
    for (AggregatorKind agg : {AggregatorKind::FedAvg, AggregatorKind::Fta}) {
        TrainingHistory runs[2];
        for (int repeat = 0; repeat < 2; ++repeat) {
            Fixture f = make_fixture(800);
            FederationState state = make_state(f, 800, 5);
            auto clients = make_clients(f, 800, 4);
            RoundConfig cfg;
            cfg.participants = 3;
            cfg.eta = 0.05;
            cfg.batch_size = 16;
            cfg.aggregator = agg;
            runs[repeat] = run_training(state, clients, cfg, 5, 800, &f.split.test);
        }
        CHECK(histories_equal(runs[0], runs[1]));
    }
}

TEST_CASE("sequential and concurrent client execution give identical histories") {
    TrainingHistory runs[2];
    for (int mode = 0; mode < 2; ++mode) {
        Fixture f = make_fixture(900);
        FederationState state = make_state(f, 900, 4);
        auto clients = make_clients(f, 900, 5);
        RoundConfig cfg;
        cfg.participants = 4;
        cfg.eta = 0.05;
        cfg.batch_size = 16;
        cfg.aggregator = AggregatorKind::Fta;
        cfg.parallel_clients = (mode == 1);
        runs[mode] = run_training(state, clients, cfg, 4, 900, &f.split.test);
    }
    CHECK(histories_equal(runs[0], runs[1]));
}

TEST_CASE("centralized equivalence: one client federated run equals plain SGD") {
    Fixture f = make_fixture(1000);
    FederationState state = make_state(f, 1000, 5);
    auto clients = make_clients(f, 1000, 1);
    RoundConfig cfg;
    cfg.participants = 1;
    cfg.local_epochs = 2;
    cfg.eta = 0.05;
    cfg.batch_size = 16;
    cfg.aggregator = AggregatorKind::FedAvg;

    const ParamVector initial = state.global_head;
    run_training(state, clients, cfg, 5, 1000);

    // Centralized: the same 5x2 epochs with the same per-round shuffle streams.
    ClassifierHead head(f.shape, initial);
    Matrix feats = f.base.features(clients[0].shard.features);
    ParamVector params = initial;
    for (std::uint64_t t = 1; t <= 5; ++t) {
        SeededRng rng = SeededRng::for_client(1000, 0, t);
        auto [next, n] = local_update(head.with_params(params), feats, clients[0].shard.labels,
                                      LocalTrainConfig{2, 0.05, 16}, rng);
        (void)n;
        params = next;
    }
    CHECK(state.global_head == params);  // bit-identical
}

TEST_CASE("a failing client aborts the round with a protocol error naming it") {
    Fixture f = make_fixture(1100);
    FederationState state = make_state(f, 1100, 5);
    auto clients = make_clients(f, 1100, 3);
    clients[1].shard.labels[0] = 99;  // poisoned label, client 1 will throw

    RoundConfig cfg;
    cfg.participants = 3;
    cfg.eta = 0.05;
    cfg.batch_size = 16;
    cfg.aggregator = AggregatorKind::FedAvg;

    const ParamVector before = state.global_head;
    try {
        run_round(state, clients, cfg, 1100);
        FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
        CHECK(std::string(e.what()).find("client 1") != std::string::npos);
    }
    // No partial aggregation.
    CHECK(state.global_head == before);
}
