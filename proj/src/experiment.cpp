#include "fedfta/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "fedfta/errors.hpp"
#include "fedfta/metrics.hpp"

namespace fedfta {

namespace {

using json = nlohmann::ordered_json;

std::size_t edit_distance(const std::string& a, const std::string& b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

const std::map<std::string, std::string> kAliases = {
    {"lr", "eta"},           {"learning_rate", "eta"},
    {"epochs", "local_epochs"}, {"seed", "master_seed"},
    {"k", "participants_per_round"}, {"t", "rounds"},
};

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& context) {
    for (const auto& item : obj.items()) {
        const std::string& key = item.key();
        if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
        std::string suggestion;
        auto alias = kAliases.find(key);
        if (alias != kAliases.end() &&
            std::find(allowed.begin(), allowed.end(), alias->second) != allowed.end()) {
            suggestion = alias->second;
        } else {
            std::size_t best = SIZE_MAX;
            for (const std::string& cand : allowed) {
                const std::size_t d = edit_distance(key, cand);
                if (d < best) {
                    best = d;
                    suggestion = cand;
                }
            }
        }
        std::string msg = "config: unknown key '" + key + "'";
        if (!context.empty()) msg += " in " + context;
        if (!suggestion.empty()) msg += " (did you mean '" + suggestion + "'?)";
        throw ArgumentError(msg);
    }
}

template <typename T>
void read_field(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) {
        try {
            out = obj.at(key).get<T>();
        } catch (const json::exception&) {
            throw ArgumentError(std::string("config: key '") + key + "' has the wrong type");
        }
    }
}

}  // namespace

std::string aggregator_name(AggregatorKind kind) {
    return kind == AggregatorKind::FedAvg ? "fedavg" : "fta";
}

std::string partition_name(const PartitionSpec& spec) {
    switch (spec.kind) {
        case PartitionKind::Iid:
            return "iid";
        case PartitionKind::Dirichlet:
            return "dirichlet";
        case PartitionKind::Shards:
            return "shards";
    }
    return "?";
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ArgumentError(std::string("config: invalid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ArgumentError("config: top level must be an object");

    check_keys(root,
               {"master_seed", "data", "test_ratio", "val_ratio", "clients", "partition",
                "rounds", "participants_per_round", "local_epochs", "eta", "batch_size",
                "optimizer", "aggregator", "gss", "feature_dim", "head_hidden",
                "target_accuracy", "compare_seeds", "output_dir", "parallel_clients"},
               "");

    ExperimentConfig cfg;
    read_field(root, "master_seed", cfg.master_seed);
    read_field(root, "test_ratio", cfg.test_ratio);
    read_field(root, "val_ratio", cfg.val_ratio);
    read_field(root, "clients", cfg.clients);
    read_field(root, "rounds", cfg.rounds);
    read_field(root, "feature_dim", cfg.feature_dim);
    read_field(root, "head_hidden", cfg.head_hidden);
    read_field(root, "target_accuracy", cfg.target_accuracy);
    read_field(root, "compare_seeds", cfg.compare_seeds);
    read_field(root, "output_dir", cfg.output_dir);

    cfg.round.participants = cfg.clients;
    read_field(root, "participants_per_round", cfg.round.participants);
    read_field(root, "local_epochs", cfg.round.local_epochs);
    read_field(root, "eta", cfg.round.eta);
    read_field(root, "batch_size", cfg.round.batch_size);
    read_field(root, "parallel_clients", cfg.round.parallel_clients);

    if (root.contains("optimizer")) {
        const std::string opt = root.at("optimizer").get<std::string>();
        if (opt == "sgd") cfg.round.optimizer = LocalOptimizer::Sgd;
        else if (opt == "adam") cfg.round.optimizer = LocalOptimizer::Adam;
        else throw ArgumentError("config: optimizer must be 'sgd' or 'adam', got '" + opt + "'");
    }
    if (root.contains("aggregator")) {
        const std::string agg = root.at("aggregator").get<std::string>();
        if (agg == "fedavg") cfg.round.aggregator = AggregatorKind::FedAvg;
        else if (agg == "fta") cfg.round.aggregator = AggregatorKind::Fta;
        else throw ArgumentError("config: aggregator must be 'fedavg' or 'fta', got '" + agg + "'");
    }
    if (root.contains("gss")) {
        const json& g = root.at("gss");
        check_keys(g, {"x_lower", "x_upper", "tolerance", "max_iterations", "reuse_probes"},
                   "'gss'");
        read_field(g, "x_lower", cfg.round.gss.lower);
        read_field(g, "x_upper", cfg.round.gss.upper);
        read_field(g, "tolerance", cfg.round.gss.tolerance);
        read_field(g, "max_iterations", cfg.round.gss.max_iterations);
        read_field(g, "reuse_probes", cfg.round.gss.reuse_probes);
    }
    if (root.contains("data")) {
        const json& d = root.at("data");
        check_keys(d, {"type", "class_counts", "input_dim", "separation", "noise_std", "path"},
                   "'data'");
        std::string type = "synthetic";
        read_field(d, "type", type);
        if (type == "csv") {
            if (!d.contains("path")) throw ArgumentError("config: data.type csv requires 'path'");
            cfg.csv_path = d.at("path").get<std::string>();
        } else if (type == "synthetic") {
            read_field(d, "class_counts", cfg.synthetic.class_counts);
            read_field(d, "input_dim", cfg.synthetic.input_dim);
            read_field(d, "separation", cfg.synthetic.separation);
            read_field(d, "noise_std", cfg.synthetic.noise_std);
        } else {
            throw ArgumentError("config: data.type must be 'synthetic' or 'csv'");
        }
    }
    if (root.contains("partition")) {
        const json& p = root.at("partition");
        check_keys(p, {"type", "alpha", "shards_per_client"}, "'partition'");
        std::string type = "iid";
        read_field(p, "type", type);
        if (type == "iid") cfg.partition.kind = PartitionKind::Iid;
        else if (type == "dirichlet") cfg.partition.kind = PartitionKind::Dirichlet;
        else if (type == "shards") cfg.partition.kind = PartitionKind::Shards;
        else throw ArgumentError("config: partition.type must be iid, dirichlet, or shards");
        read_field(p, "alpha", cfg.partition.alpha);
        read_field(p, "shards_per_client", cfg.partition.shards_per_client);
    }

    // Cross-field validation.
    if (!(cfg.test_ratio > 0.0 && cfg.test_ratio < 1.0)) {
        throw ArgumentError("config: test_ratio must be in (0,1)");
    }
    if (!(cfg.val_ratio >= 0.0 && cfg.val_ratio < 1.0)) {
        throw ArgumentError("config: val_ratio must be in [0,1)");
    }
    if (cfg.clients == 0) throw ArgumentError("config: clients must be positive");
    if (cfg.round.participants == 0 || cfg.round.participants > cfg.clients) {
        throw ArgumentError("config: participants_per_round (K) must be in [1, clients]");
    }
    if (cfg.round.local_epochs == 0) throw ArgumentError("config: local_epochs must be >= 1");
    if (!(cfg.round.eta > 0.0)) throw ArgumentError("config: eta must be > 0");
    if (cfg.round.batch_size == 0) throw ArgumentError("config: batch_size must be positive");
    if (cfg.rounds == 0) throw ArgumentError("config: rounds must be >= 1");
    if (cfg.feature_dim == 0) throw ArgumentError("config: feature_dim must be positive");
    if (cfg.head_hidden.empty()) throw ArgumentError("config: head_hidden must be nonempty");
    if (!(cfg.round.gss.lower < cfg.round.gss.upper)) {
        throw ArgumentError("config: gss.x_lower must be below gss.x_upper");
    }
    if (!(cfg.round.gss.tolerance > 0.0 &&
          cfg.round.gss.tolerance < cfg.round.gss.upper - cfg.round.gss.lower)) {
        throw ArgumentError("config: gss.tolerance must be in (0, x_upper - x_lower)");
    }
    if (cfg.partition.alpha <= 0.0) throw ArgumentError("config: partition.alpha must be > 0");
    if (cfg.synthetic.input_dim == 0) throw ArgumentError("config: data.input_dim must be positive");
    if (cfg.synthetic.class_counts.size() < 2) {
        throw ArgumentError("config: data.class_counts needs at least 2 classes");
    }
    for (std::size_t c : cfg.synthetic.class_counts) {
        if (c == 0) throw ArgumentError("config: data.class_counts entries must be positive");
    }
    if (cfg.compare_seeds == 0) throw ArgumentError("config: compare_seeds must be >= 1");
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

std::string ExperimentConfig::to_json_text() const {
    json root;
    root["master_seed"] = master_seed;
    if (csv_path) {
        root["data"] = {{"type", "csv"}, {"path", *csv_path}};
    } else {
        root["data"] = {{"type", "synthetic"},
                        {"class_counts", synthetic.class_counts},
                        {"input_dim", synthetic.input_dim},
                        {"separation", synthetic.separation},
                        {"noise_std", synthetic.noise_std}};
    }
    root["test_ratio"] = test_ratio;
    root["val_ratio"] = val_ratio;
    root["clients"] = clients;
    json part = {{"type", partition_name(partition)}};
    if (partition.kind == PartitionKind::Dirichlet) part["alpha"] = partition.alpha;
    if (partition.kind == PartitionKind::Shards) {
        part["shards_per_client"] = partition.shards_per_client;
    }
    root["partition"] = part;
    root["rounds"] = rounds;
    root["participants_per_round"] = round.participants;
    root["local_epochs"] = round.local_epochs;
    root["eta"] = round.eta;
    root["batch_size"] = round.batch_size;
    root["optimizer"] = round.optimizer == LocalOptimizer::Sgd ? "sgd" : "adam";
    root["aggregator"] = aggregator_name(round.aggregator);
    root["gss"] = {{"x_lower", round.gss.lower},
                   {"x_upper", round.gss.upper},
                   {"tolerance", round.gss.tolerance},
                   {"max_iterations", round.gss.max_iterations},
                   {"reuse_probes", round.gss.reuse_probes}};
    root["parallel_clients"] = round.parallel_clients;
    root["feature_dim"] = feature_dim;
    root["head_hidden"] = head_hidden;
    root["target_accuracy"] = target_accuracy;
    root["compare_seeds"] = compare_seeds;
    root["output_dir"] = output_dir;
    return root.dump(2) + "\n";
}

namespace {

Dataset materialize_dataset(const ExperimentConfig& cfg) {
    if (cfg.csv_path) {
        return load_csv(*cfg.csv_path);
    }
    SeededRng data_rng = SeededRng::for_stream(cfg.master_seed, "data");
    return generate_blobs(cfg.synthetic.class_counts, cfg.synthetic.input_dim,
                          cfg.synthetic.separation, cfg.synthetic.noise_std, data_rng);
}

PartitionPlan make_partition(const ExperimentConfig& cfg, const Dataset& train) {
    SeededRng rng = SeededRng::for_stream(cfg.master_seed, "partition");
    switch (cfg.partition.kind) {
        case PartitionKind::Iid:
            return partition_iid(train, cfg.clients, rng);
        case PartitionKind::Dirichlet:
            return partition_dirichlet(train, cfg.clients, cfg.partition.alpha, rng);
        case PartitionKind::Shards:
            return partition_shards(train, cfg.clients, cfg.partition.shards_per_client, rng);
    }
    throw ArgumentError("unreachable partition kind");
}

}  // namespace

RunSummary execute_run(const ExperimentConfig& cfg) {
    const Dataset full = materialize_dataset(cfg);
    SeededRng split_rng = SeededRng::for_stream(cfg.master_seed, "split");
    SplitResult split = stratified_split(full, cfg.test_ratio, cfg.val_ratio, split_rng);

    const PartitionPlan plan = make_partition(cfg, split.train);

    SeededRng base_rng = SeededRng::for_stream(cfg.master_seed, "base");
    FrozenBase base = FrozenBase::create(full.features.cols, cfg.feature_dim, base_rng);

    HeadShape shape;
    shape.input_dim = cfg.feature_dim;
    shape.widths = cfg.head_hidden;
    shape.widths.push_back(static_cast<std::size_t>(full.class_count));

    SeededRng head_rng = SeededRng::for_stream(cfg.master_seed, "head_init");
    FederationState state =
        FederationState::create(std::move(base), shape, std::move(split.validation), cfg.rounds,
                                head_rng);

    std::vector<ClientNode> clients(cfg.clients);
    for (std::size_t k = 0; k < cfg.clients; ++k) {
        clients[k].id = k;
        clients[k].shard = subset(split.train, plan.assignments[k]);
    }

    RunSummary summary;
    summary.history = run_training(state, clients, cfg.round, cfg.rounds, cfg.master_seed,
                                   &split.test);

    // Final evaluation on the test set.
    const ClassifierHead final_head(state.head_shape, state.global_head);
    const Matrix test_features = state.base.features(split.test.features);
    const Matrix probs = final_head.forward(test_features);
    std::vector<int> predicted(probs.rows);
    for (std::size_t r = 0; r < probs.rows; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.cols; ++c) {
            if (probs.at(r, c) > probs.at(r, best)) best = c;
        }
        predicted[r] = static_cast<int>(best);
    }
    summary.final_confusion = confusion_from_predictions(
        split.test.labels, predicted, static_cast<std::size_t>(split.test.class_count));
    summary.final_report = multiclass_metrics(summary.final_confusion);

    summary.rounds_to_target = cfg.rounds + 1;
    for (const RoundRecord& rec : summary.history.rounds) {
        if (rec.test_accuracy && *rec.test_accuracy >= cfg.target_accuracy) {
            summary.rounds_to_target = rec.t;
            break;
        }
    }
    return summary;
}

namespace {

json round_to_json(const RoundRecord& rec) {
    json j;
    j["t"] = rec.t;
    j["participants"] = rec.participants;
    j["sigma"] = rec.sigma;
    j["val_loss_before"] = rec.val_loss_before;
    j["val_loss_after"] = rec.val_loss_after;
    j["objective_evals"] = rec.objective_evals;
    if (rec.test_accuracy) j["test_accuracy"] = *rec.test_accuracy;
    if (rec.test_macro_f1) j["test_macro_f1"] = *rec.test_macro_f1;
    return j;
}

std::string opt_to_csv(const std::optional<double>& v) {
    return v ? std::to_string(*v) : "undefined";
}

void write_metrics_csv(const MetricReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write " + path);
    out << "metric,value\n";
    out << "accuracy," << report.accuracy << "\n";
    out << "precision," << opt_to_csv(report.precision) << "\n";
    out << "recall," << opt_to_csv(report.recall) << "\n";
    out << "specificity," << opt_to_csv(report.specificity) << "\n";
    out << "f1," << opt_to_csv(report.f1) << "\n";
    out << "averaging," << report.averaging << "\n";
    out << "undefined_excluded," << report.undefined_excluded << "\n";
    for (std::size_t c = 0; c < report.per_class.size(); ++c) {
        const ClassMetrics& m = report.per_class[c];
        out << "class" << c << "_precision," << opt_to_csv(m.precision) << "\n";
        out << "class" << c << "_recall," << opt_to_csv(m.recall) << "\n";
        out << "class" << c << "_specificity," << opt_to_csv(m.specificity) << "\n";
        out << "class" << c << "_f1," << opt_to_csv(m.f1) << "\n";
    }
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot write " + path);
    out << "actual";
    for (std::size_t p = 0; p < cm.class_count; ++p) out << ",pred" << p;
    out << "\n";
    for (std::size_t a = 0; a < cm.class_count; ++a) {
        out << a;
        for (std::size_t p = 0; p < cm.class_count; ++p) out << "," << cm.at(a, p);
        out << "\n";
    }
}

}  // namespace

void cmd_run(const ExperimentConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const RunSummary summary = execute_run(cfg);

    {
        std::ofstream out(out_dir + "/history.jsonl");
        if (!out) throw IngestionError("cannot write " + out_dir + "/history.jsonl");
        for (const RoundRecord& rec : summary.history.rounds) {
            out << round_to_json(rec).dump() << "\n";
        }
    }
    write_metrics_csv(summary.final_report, out_dir + "/final_metrics.csv");
    write_confusion_csv(summary.final_confusion, out_dir + "/confusion.csv");
    {
        std::ofstream out(out_dir + "/config_echo.json");
        if (!out) throw IngestionError("cannot write " + out_dir + "/config_echo.json");
        ExperimentConfig echo = cfg;
        echo.output_dir = out_dir;
        out << echo.to_json_text();
    }
}

void cmd_compare(const ExperimentConfig& cfg, const std::vector<AggregatorKind>& aggregators,
                 const std::string& out_dir) {
    if (aggregators.size() < 2) {
        throw ArgumentError("compare: need at least 2 aggregator settings");
    }
    std::filesystem::create_directories(out_dir);

    // Cells are aggregator x distribution; the non-IID distribution is the
    // configured one (dirichlet by default, even when the base config is iid).
    std::vector<PartitionSpec> distributions;
    {
        PartitionSpec iid;
        iid.kind = PartitionKind::Iid;
        distributions.push_back(iid);
        PartitionSpec non_iid = cfg.partition;
        if (non_iid.kind == PartitionKind::Iid) non_iid.kind = PartitionKind::Dirichlet;
        distributions.push_back(non_iid);
    }

    struct Row {
        std::string aggregator;
        std::string distribution;
        std::uint64_t seed;
        double accuracy;
        double macro_f1;
        std::size_t rounds_to_target;
    };
    std::vector<Row> rows;

    for (AggregatorKind agg : aggregators) {
        for (const PartitionSpec& dist : distributions) {
            for (std::size_t s = 0; s < cfg.compare_seeds; ++s) {
                ExperimentConfig cell = cfg;
                cell.master_seed = cfg.master_seed + s;
                cell.partition = dist;
                cell.round.aggregator = agg;
                RunSummary summary;
                try {
                    summary = execute_run(cell);
                } catch (const std::exception& e) {
                    throw ProtocolError("compare cell (" + aggregator_name(agg) + ", " +
                                        partition_name(dist) + ", seed " +
                                        std::to_string(cell.master_seed) + ") failed: " + e.what());
                }
                rows.push_back(Row{aggregator_name(agg), partition_name(dist), cell.master_seed,
                                   summary.final_report.accuracy,
                                   summary.final_report.f1.value_or(0.0),
                                   summary.rounds_to_target});
            }
        }
    }

    {
        std::ofstream out(out_dir + "/comparison.csv");
        if (!out) throw IngestionError("cannot write " + out_dir + "/comparison.csv");
        out << "aggregator,distribution,seed,final_accuracy,final_macro_f1,rounds_to_target\n";
        for (const Row& r : rows) {
            out << r.aggregator << "," << r.distribution << "," << r.seed << "," << r.accuracy
                << "," << r.macro_f1 << "," << r.rounds_to_target << "\n";
        }
    }
    {
        std::ofstream out(out_dir + "/comparison_summary.csv");
        if (!out) throw IngestionError("cannot write " + out_dir + "/comparison_summary.csv");
        out << "aggregator,distribution,mean_accuracy,std_accuracy,mean_macro_f1,"
               "mean_rounds_to_target\n";
        for (AggregatorKind agg : aggregators) {
            for (const PartitionSpec& dist : distributions) {
                std::vector<const Row*> cell;
                for (const Row& r : rows) {
                    if (r.aggregator == aggregator_name(agg) &&
                        r.distribution == partition_name(dist)) {
                        cell.push_back(&r);
                    }
                }
                double mean_acc = 0, mean_f1 = 0, mean_rt = 0;
                for (const Row* r : cell) {
                    mean_acc += r->accuracy;
                    mean_f1 += r->macro_f1;
                    mean_rt += static_cast<double>(r->rounds_to_target);
                }
                const double n = static_cast<double>(cell.size());
                mean_acc /= n;
                mean_f1 /= n;
                mean_rt /= n;
                double var = 0;
                for (const Row* r : cell) {
                    var += (r->accuracy - mean_acc) * (r->accuracy - mean_acc);
                }
                const double std_acc = cell.size() > 1 ? std::sqrt(var / (n - 1)) : 0.0;
                out << aggregator_name(agg) << "," << partition_name(dist) << "," << mean_acc
                    << "," << std_acc << "," << mean_f1 << "," << mean_rt << "\n";
            }
        }
    }
}

void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
    if (cfg.csv_path) {
        throw ArgumentError("gen-data: config must describe a synthetic dataset");
    }
    std::filesystem::create_directories(out_dir);
    SeededRng data_rng = SeededRng::for_stream(cfg.master_seed, "data");
    const Dataset ds = generate_blobs(cfg.synthetic.class_counts, cfg.synthetic.input_dim,
                                      cfg.synthetic.separation, cfg.synthetic.noise_std, data_rng);
    save_csv(ds, out_dir + "/dataset.csv");
    json meta;
    meta["master_seed"] = cfg.master_seed;
    meta["class_counts"] = cfg.synthetic.class_counts;
    meta["input_dim"] = cfg.synthetic.input_dim;
    meta["separation"] = cfg.synthetic.separation;
    meta["noise_std"] = cfg.synthetic.noise_std;
    meta["rows"] = ds.size();
    std::ofstream out(out_dir + "/dataset_meta.json");
    if (!out) throw IngestionError("cannot write " + out_dir + "/dataset_meta.json");
    out << meta.dump(2) << "\n";
}

}  // namespace fedfta
