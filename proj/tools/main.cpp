#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "demonet/bench.hpp"
#include "demonet/errors.hpp"
#include "demonet/experiment.hpp"
#include "demonet/io.hpp"
#include "demonet/kernels.hpp"
#include "demonet/model_io.hpp"
#include "demonet/synth.hpp"
#include "demonet/verify.hpp"
#include "demonet/wl.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace demonet;
using demonet::cli::UsageError;

namespace {

constexpr int kExitFailed = 1;
constexpr int kExitUsage = 2;

fs::path require_file(const std::string& path) {
    if (!fs::exists(path)) throw UsageError("no such file or directory: " + path);
    return path;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw UsageError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::string fixed(double x, int digits = 4) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(digits) << x;
    return os.str();
}

// Training flags are collected as text and merged through the same path as
// key=value config files, so that flags override file values key by key.
struct TrainFlags {
    std::string config;
    std::map<std::string, std::string> values;
    bool bucketing = false;
    bool no_stratify = false;
    CLI::Option* bucketing_opt = nullptr;
    CLI::Option* stratify_opt = nullptr;
    std::map<std::string, CLI::Option*> options;
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
    cmd->add_option("--config", f.config, "config file (JSON or key=value)");
    const std::pair<const char*, const char*> keys[] = {
        {"data", "edge list (train-node) or dataset directory (train-graph)"},
        {"labels", "node label CSV (train-node)"},
        {"attributes", "node attribute CSV (train-node)"},
        {"synth", "synthetic dataset: degree-classes (train-node) or degree-mix (train-graph)"},
        {"variant", "weight | hash | gcn"},
        {"layers", "hidden layer count"},
        {"hidden", "hidden width (even)"},
        {"lr", "Adam learning rate"},
        {"dropout", "dropout probability"},
        {"l2", "L2 weight"},
        {"patience", "early-stopping patience in epochs"},
        {"max-epochs", "epoch cap"},
        {"repeats", "number of seeds"},
        {"seed", "master seed"},
        {"hash-dim", "hash dimension (0: layer input width)"},
        {"hash-seed", "fixed hash seed instead of the seed-derived one"},
        {"pooling", "degree | mean (train-graph)"},
        {"fallback", "global | strict handling of unseen degrees"},
        {"features", "auto | raw | degree"},
        {"train-frac", "training fraction"},
        {"val-frac", "validation fraction"},
        {"out", "output directory"},
    };
    for (const auto& [name, help] : keys) {
        std::string key = name;
        std::replace(key.begin(), key.end(), '-', '_');
        f.options[key] = cmd->add_option(std::string("--") + name, f.values[key], help);
    }
    f.bucketing_opt = cmd->add_flag("--bucketing", f.bucketing, "log2 degree bucketing");
    f.stratify_opt = cmd->add_flag("--no-stratify", f.no_stratify, "plain random split");
}

json resolve_config(const std::string& command, const TrainFlags& f) {
    json cfg = cli::default_run_config(command);
    if (!f.config.empty()) cli::overlay(cfg, cli::read_config_file(require_file(f.config)));
    json flags = json::object();
    for (const auto& [key, opt] : f.options) {
        if (opt->count() > 0) flags[key] = f.values.at(key);
    }
    if (f.bucketing_opt->count() > 0) flags["bucketing"] = true;
    if (f.stratify_opt->count() > 0) flags["stratify"] = false;
    cli::overlay(cfg, flags);

    const bool has_data = !cfg["data"].is_null(), has_synth = !cfg["synth"].is_null();
    if (has_data == has_synth) throw UsageError("give exactly one of --data and --synth");
    if (cfg["repeats"].get<int>() < 1) throw UsageError("--repeats must be at least 1");
    const std::string features = cfg["features"];
    if (features != "auto" && features != "raw" && features != "degree") throw UsageError("--features must be auto, raw or degree");
    const std::string fallback = cfg["fallback"];
    if (fallback != "global" && fallback != "strict") throw UsageError("--fallback must be global or strict");
    try {
        parse_variant(cfg["variant"]);
        parse_pooling(cfg["pooling"]);
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    if (command == "train-node" && has_data && cfg["labels"].is_null()) throw UsageError("train-node --data needs --labels");
    return cfg;
}

ExperimentOptions experiment_options(const json& cfg, bool has_attributes) {
    ExperimentOptions o;
    o.model.layers = cfg["layers"];
    o.model.hidden = cfg["hidden"];
    o.model.variant = parse_variant(cfg["variant"]);
    o.model.pooling = parse_pooling(cfg["pooling"]);
    o.model.fallback = cfg["fallback"] == "strict" ? DegreeFallback::strict : DegreeFallback::global;
    o.model.hash_dim = cfg["hash_dim"].get<std::size_t>();
    o.train.lr = cfg["lr"];
    o.train.dropout = cfg["dropout"];
    o.train.l2 = cfg["l2"];
    o.train.patience = cfg["patience"];
    o.train.max_epochs = cfg["max_epochs"];
    const double train = cfg["train_frac"], val = cfg["val_frac"];
    o.fractions = {train, val, 1.0 - train - val};
    o.stratify = cfg["stratify"];
    o.bucketing = cfg["bucketing"];
    if (!cfg["hash_seed"].is_null()) o.hash_seed = cfg["hash_seed"].get<std::uint64_t>();
    const std::string features = cfg["features"];
    const bool degree = features == "degree" || (features == "auto" && !has_attributes);
    o.features = degree ? FeatureMode::one_hot_degree : FeatureMode::raw;
    try {
        o.model.validate();
        o.train.validate();
    } catch (const ValidationError& e) {
        throw UsageError(e.what());
    }
    if (train < 0 || val < 0 || train + val > 1 + 1e-12) throw UsageError("split fractions must be nonnegative and sum to at most 1");
    return o;
}

json run_json(const RunOutcome& r) {
    return {{"seed", r.seed},
            {"epochs_run", r.fit.epochs_run},
            {"best_epoch", r.fit.best_epoch},
            {"train_acc", r.fit.train_acc},
            {"val_acc", r.fit.val_acc},
            {"test_acc", r.fit.test_acc},
            {"wall_ms_per_epoch", r.fit.wall_ms_per_epoch},
            {"degree_tasks", r.num_tasks},
            {"parameters", r.parameters},
            {"unseen_degree_nodes", r.fit.unseen_degree_nodes}};
}

int cmd_train(const std::string& command, const TrainFlags& flags) {
    const json cfg = resolve_config(command, flags);
    const bool node = command == "train-node";
    const fs::path out = cfg["out"].get<std::string>();
    const int repeats = cfg["repeats"];
    const std::uint64_t seed = cfg["seed"];

    // Loaded data is shared by all repeats; synthetic data is redrawn per seed.
    std::optional<Graph> loaded_graph;
    std::optional<GraphSet> loaded_set;
    std::vector<std::int64_t> external_ids;
    if (!cfg["data"].is_null()) {
        const fs::path data = require_file(cfg["data"]);
        if (node) {
            LoadedGraph lg = load_edge_list(data);
            Graph g = load_node_table(require_file(cfg["labels"]), lg.graph, NodeTableMode::labels, &lg.external_ids);
            if (!cfg["attributes"].is_null()) {
                g = load_node_table(require_file(cfg["attributes"]), g, NodeTableMode::attributes, &lg.external_ids);
            }
            if (lg.stats.self_loops_dropped > 0) {
                std::cerr << "warning: dropped " << lg.stats.self_loops_dropped << " self-loop lines\n";
            }
            external_ids = lg.external_ids;
            loaded_graph = std::move(g);
        } else {
            loaded_set = load_graph_dataset(data);
        }
    } else {
        const std::string synth = cfg["synth"];
        if (node && synth != "degree-classes") throw UsageError("train-node --synth supports degree-classes");
        if (!node && synth != "degree-mix") throw UsageError("train-graph --synth supports degree-mix");
    }

    fs::create_directories(out);
    write_json(out / "run_config.json", cfg);
    if (!external_ids.empty()) write_id_map(out / "id_map.csv", external_ids);

    json runs = json::array();
    std::vector<double> train_acc, val_acc, test_acc;
    for (int r = 0; r < repeats; ++r) {
        const std::uint64_t run_seed = seed + static_cast<std::uint64_t>(r);
        const std::uint64_t data_seed = SeedSplitter(run_seed).data();
        std::optional<Model<float>> model;
        RunOutcome outcome;
        if (node) {
            const Graph g = loaded_graph ? *loaded_graph : synth_node_dataset(data_seed);
            outcome = run_node_task(g, experiment_options(cfg, g.has_attributes()), run_seed, &model);
        } else {
            const GraphSet set = loaded_set ? *loaded_set : synth_graph_dataset(data_seed);
            outcome = run_graph_task(set, experiment_options(cfg, set.attr_dim > 0), run_seed, &model);
        }
        save_model(out / ("model_r" + std::to_string(r)), *model);
        runs.push_back(run_json(outcome));
        train_acc.push_back(outcome.fit.train_acc);
        val_acc.push_back(outcome.fit.val_acc);
        test_acc.push_back(outcome.fit.test_acc);
    }

    auto summary = [](const std::vector<double>& v) {
        const Summary s = summarize(v);
        return json{{"mean", s.mean}, {"std", s.std}};
    };
    const json metrics{{"command", command},
                       {"runs", runs},
                       {"summary", {{"train_acc", summary(train_acc)}, {"val_acc", summary(val_acc)}, {"test_acc", summary(test_acc)}}},
                       {"std_definition", "population standard deviation over repeats"}};
    write_json(out / "metrics.json", metrics);

    std::ostringstream table;
    table << std::left << std::setw(8) << "seed" << std::setw(8) << "epochs" << std::setw(8) << "best" << std::setw(10)
          << "train" << std::setw(10) << "val" << std::setw(10) << "test" << "ms/epoch\n";
    for (const auto& run : runs) {
        table << std::setw(8) << run["seed"].get<std::uint64_t>() << std::setw(8) << run["epochs_run"].get<int>()
              << std::setw(8) << run["best_epoch"].get<int>() << std::setw(10) << fixed(run["train_acc"].get<double>())
              << std::setw(10) << fixed(run.value("val_acc", json()).is_null() ? NAN : run["val_acc"].get<double>())
              << std::setw(10) << fixed(run.value("test_acc", json()).is_null() ? NAN : run["test_acc"].get<double>())
              << fixed(run["wall_ms_per_epoch"].get<double>(), 2) << '\n';
    }
    const Summary s = summarize(test_acc);
    table << "test accuracy " << fixed(s.mean) << " +- " << fixed(s.std) << " (mean +- std over " << repeats
          << " seeds, variant " << cfg["variant"].get<std::string>() << ")\n";
    std::cout << table.str();
    std::ofstream(out / "summary.txt") << table.str();
    return 0;
}

// "cycle:6", "disjoint-cycles:2:3", "regular:10:3", "random:50:100",
// "degree-classes", or a path to an edge list.
Graph graph_from_spec(const std::string& spec, std::uint64_t seed) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    auto arg = [&](std::size_t i) {
        if (i >= parts.size()) throw UsageError("graph spec '" + spec + "' is missing arguments");
        try {
            return std::stoi(parts[i]);
        } catch (const std::logic_error&) {
            throw UsageError("graph spec '" + spec + "' has a non-integer argument");
        }
    };
    if (parts[0] == "cycle") return synth_cycle(arg(1));
    if (parts[0] == "disjoint-cycles") return synth_disjoint_cycles(arg(1), arg(2));
    if (parts[0] == "regular") return synth_regular(arg(1), arg(2), seed);
    if (parts[0] == "random") return synth_random_edges(arg(1), static_cast<std::size_t>(arg(2)), seed);
    if (parts[0] == "degree-classes") return synth_node_dataset(seed);
    return load_edge_list(require_file(spec)).graph;
}

int cmd_wl(const std::vector<std::string>& graphs, int rounds, std::uint64_t seed) {
    if (graphs.empty() || graphs.size() > 2) throw UsageError("wl takes one or two graphs");
    const Graph a = graph_from_spec(graphs[0], seed);
    json report;
    AttributeDictionary attrs;
    const ColorMap stable = wl_stable_colors(a, initial_colors(a, attrs), rounds);
    report["colors"] = stable.colors;
    report["num_colors"] = stable.num_colors();
    report["rounds"] = stable.round;
    if (graphs.size() == 2) {
        const Graph b = graph_from_spec(graphs[1], seed);
        const WlVerdict v = wl_test(a, b, rounds);
        report["verdict"] = v == WlVerdict::non_isomorphic ? "non_isomorphic" : "possibly_isomorphic";
    }
    std::cout << report.dump(2) << '\n';
    return 0;
}

int cmd_kernel(const std::string& data, const std::string& synth, const std::string& kind, int rounds,
               std::uint64_t seed, const std::string& out) {
    if (data.empty() == synth.empty()) throw UsageError("give exactly one of --data and --synth");
    GraphSet set;
    if (!data.empty()) {
        set = load_graph_dataset(require_file(data));
    } else if (synth == "degree-mix") {
        set = synth_graph_dataset(SeedSplitter(seed).data(), 5);
    } else {
        throw UsageError("kernel --synth supports degree-mix");
    }
    KernelKind k;
    if (kind == "dwl") k = KernelKind::dwl;
    else if (kind == "mwl") k = KernelKind::mwl;
    else if (kind == "wl-subtree") k = KernelKind::wl_subtree;
    else throw UsageError("--kernel must be dwl, mwl or wl-subtree");
    const Matrix<double> gram = gram_matrix(set, k, rounds);

    std::ostringstream csv;
    csv << "graph_id";
    for (std::size_t j = 0; j < set.size(); ++j) csv << ',' << j;
    csv << '\n' << std::setprecision(17);
    for (std::size_t i = 0; i < set.size(); ++i) {
        csv << i;
        for (std::size_t j = 0; j < set.size(); ++j) csv << ',' << gram(i, j);
        csv << '\n';
    }
    if (out.empty()) {
        std::cout << csv.str();
    } else {
        std::ofstream(out) << csv.str();
        std::cout << "wrote " << set.size() << "x" << set.size() << " Gram matrix to " << out
                  << " (min eigenvalue " << min_eigenvalue(gram) << ")\n";
    }
    return 0;
}

int cmd_synth(const std::string& kind, std::uint64_t seed, const std::string& out) {
    if (out.empty()) throw UsageError("synth needs --out");
    const std::uint64_t data_seed = SeedSplitter(seed).data();
    if (kind == "degree-mix") {
        write_graph_dataset(out, synth_graph_dataset(data_seed));
        std::cout << "wrote graph dataset to " << out << '\n';
        return 0;
    }
    const Graph g = graph_from_spec(kind, data_seed);
    fs::create_directories(out);
    write_edge_list(fs::path(out) / "edges.txt", g);
    if (g.has_labels()) {
        std::ofstream labels(fs::path(out) / "labels.csv");
        labels << "node_id,class\n";
        for (std::size_t v = 0; v < g.num_nodes(); ++v) labels << v << ',' << g.labels()[v] << '\n';
    }
    std::cout << "wrote " << g.num_nodes() << " nodes, " << g.num_edges() << " edges to " << out << '\n';
    return 0;
}

int cmd_verify(const VerifyOptions& opts, const std::vector<std::string>& only, const std::string& report_path) {
    json report = json::array();
    int groups_passed = 0, groups_run = 0;
    for (const auto& group : property_groups()) {
        if (!only.empty() && std::find(only.begin(), only.end(), group.name) == only.end()) continue;
        ++groups_run;
        bool all = true;
        for (const auto& r : group.run(opts)) {
            all = all && r.passed;
            std::cout << (r.passed ? "PASS " : "FAIL ") << r.group << ": " << r.name << " (" << r.detail << ")\n";
            if (!r.passed) std::cout << "  replay: " << r.replay << '\n';
            report.push_back({{"group", r.group}, {"name", r.name}, {"passed", r.passed}, {"detail", r.detail},
                              {"replay", r.replay.empty() ? json() : json::parse(r.replay)}});
        }
        groups_passed += all ? 1 : 0;
    }
    std::cout << groups_passed << "/" << groups_run << " property groups passed\n";
    if (!report_path.empty()) write_json(report_path, {{"seed", opts.seed}, {"results", report}});
    return groups_passed == groups_run ? 0 : kExitFailed;
}

int cmd_bench(BenchOptions opts, const std::string& out) {
    const BenchReport report = run_bench(opts);
    std::ostringstream csv;
    csv << "n,edges,ms_per_epoch\n";
    for (const auto& row : report.rows) csv << row.n << ',' << row.edges << ',' << fixed(row.ms_per_epoch, 3) << '\n';
    std::cout << csv.str();
    if (!out.empty()) std::ofstream(out) << csv.str();
    if (report.slope) std::cout << "log-log slope " << fixed(*report.slope, 3) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Degree-specific graph neural networks, WL kernels and verification"};
    app.require_subcommand(1);

    TrainFlags node_flags, graph_flags;
    auto* train_node = app.add_subcommand("train-node", "node classification");
    add_train_flags(train_node, node_flags);
    auto* train_graph = app.add_subcommand("train-graph", "graph classification");
    add_train_flags(train_graph, graph_flags);

    std::vector<std::string> wl_graphs;
    int wl_rounds = 10;
    std::uint64_t wl_seed = 0;
    auto* wl = app.add_subcommand("wl", "WL refinement and isomorphism test");
    wl->add_option("--graph", wl_graphs, "graph spec or edge list (repeat for a pair)")->required();
    wl->add_option("--rounds", wl_rounds, "maximum refinement rounds");
    wl->add_option("--seed", wl_seed, "seed for random graph specs");

    std::string k_data, k_synth, k_kind = "dwl", k_out;
    int k_rounds = 1;
    std::uint64_t k_seed = 0;
    auto* kernel = app.add_subcommand("kernel", "Gram matrix of a graph kernel");
    kernel->add_option("--data", k_data, "dataset directory");
    kernel->add_option("--synth", k_synth, "degree-mix");
    kernel->add_option("--kernel", k_kind, "dwl | mwl | wl-subtree");
    kernel->add_option("--rounds", k_rounds, "WL rounds for wl-subtree");
    kernel->add_option("--seed", k_seed, "seed for synthetic data");
    kernel->add_option("--out", k_out, "CSV output path (stdout when absent)");

    std::string s_kind, s_out;
    std::uint64_t s_seed = 0;
    auto* synth = app.add_subcommand("synth", "write a synthetic graph or dataset");
    synth->add_option("--kind", s_kind, "degree-classes | degree-mix | cycle:N | disjoint-cycles:K:L | regular:N:R | random:N:M")
        ->required();
    synth->add_option("--seed", s_seed, "seed");
    synth->add_option("--out", s_out, "output directory");

    VerifyOptions v_opts;
    std::string v_mutate, v_report;
    std::vector<std::string> v_groups;
    auto* verify = app.add_subcommand("verify", "run the property suite");
    verify->add_option("--seed", v_opts.seed, "seed");
    verify->add_option("--mutate", v_mutate, "order: shuffle every neighbour list");
    verify->add_flag("--break-hash", v_opts.break_hash, "negative control: hash x and x' with different specs");
    verify->add_option("--group", v_groups, "run only these groups");
    verify->add_option("--report", v_report, "JSON report path");

    BenchOptions b_opts;
    std::string b_variant = "hash", b_out;
    auto* bench = app.add_subcommand("bench", "per-epoch time against graph size");
    bench->add_option("--sizes", b_opts.sizes, "node counts")->delimiter(',');
    bench->add_option("--variant", b_variant, "weight | hash | gcn");
    bench->add_option("--epochs", b_opts.epochs, "timed epochs per size");
    bench->add_option("--hidden", b_opts.hidden, "hidden width");
    bench->add_option("--seed", b_opts.seed, "seed");
    bench->add_option("--out", b_out, "CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*train_node) return cmd_train("train-node", node_flags);
        if (*train_graph) return cmd_train("train-graph", graph_flags);
        if (*wl) return cmd_wl(wl_graphs, wl_rounds, wl_seed);
        if (*kernel) return cmd_kernel(k_data, k_synth, k_kind, k_rounds, k_seed, k_out);
        if (*synth) return cmd_synth(s_kind, s_seed, s_out);
        if (*verify) {
            if (!v_mutate.empty() && v_mutate != "order") throw UsageError("--mutate supports only 'order'");
            v_opts.mutate_order = v_mutate == "order";
            for (const auto& g : v_groups) {
                const auto& all = property_groups();
                if (std::none_of(all.begin(), all.end(), [&](const PropertyGroup& p) { return p.name == g; })) {
                    throw UsageError("unknown property group '" + g + "'");
                }
            }
            return cmd_verify(v_opts, v_groups, v_report);
        }
        if (*bench) {
            try {
                b_opts.variant = parse_variant(b_variant);
            } catch (const ValidationError& e) {
                throw UsageError(e.what());
            }
            return cmd_bench(b_opts, b_out);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const FormatError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ValidationError& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailed;
    }
    return 0;
}
