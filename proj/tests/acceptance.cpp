// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "demonet/bench.hpp"
#include "demonet/experiment.hpp"
#include "demonet/random.hpp"
#include "demonet/training.hpp"
#include "demonet/verify.hpp"

using namespace demonet;
using Clock = std::chrono::steady_clock;

namespace {

struct Verdict {
    bool passed = false;
    std::string detail;
};

std::string fmt(double x, int prec = 4) {
    std::ostringstream os;
    os.precision(prec);
    os << std::fixed << x;
    return os.str();
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

Verdict from_group(const std::string& name, double time_limit_s) {
    const auto t0 = Clock::now();
    for (const auto& g : property_groups()) {
        if (g.name != name) continue;
        const auto results = g.run(VerifyOptions{});
        const double secs = seconds_since(t0);
        Verdict v{true, ""};
        for (const auto& r : results) {
            v.passed = v.passed && r.passed;
            if (!v.detail.empty()) v.detail += "; ";
            v.detail += r.name + (r.passed ? " ok" : " FAILED") + " [" + r.detail + "]";
        }
        if (time_limit_s > 0 && secs >= time_limit_s) v.passed = false;
        v.detail += "; " + fmt(secs, 1) + " s";
        return v;
    }
    return {false, "no property group named " + name};
}

Verdict node_classification() {
    const auto t0 = Clock::now();
    double mean[3] = {0, 0, 0};
    const Variant variants[3] = {Variant::weight, Variant::hash, Variant::gcn};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Graph g = synth_node_dataset(SeedSplitter(seed).data());
        for (int v = 0; v < 3; ++v) {
            ExperimentOptions opts;
            opts.model.variant = variants[v];
            mean[v] += run_node_task(g, opts, seed).fit.test_acc / 10.0;
        }
    }
    const double secs = seconds_since(t0);
    const bool ok = mean[0] >= 0.99 && mean[1] >= 0.99 && mean[2] < std::min(mean[0], mean[1]) && secs < 120;
    return {ok, "weight " + fmt(mean[0]) + ", hash " + fmt(mean[1]) + ", gcn " + fmt(mean[2]) + " over 10 seeds; " +
                    fmt(secs, 1) + " s"};
}

Verdict linear_scaling() {
    const auto t0 = Clock::now();
    const BenchReport rep = run_bench(BenchOptions{});
    const double secs = seconds_since(t0);
    if (!rep.slope) return {false, "no slope"};
    std::string rows;
    for (const auto& r : rep.rows) rows += std::to_string(r.n) + ":" + fmt(r.ms_per_epoch, 1) + "ms ";
    const bool ok = *rep.slope >= 0.8 && *rep.slope <= 1.3 && secs < 300;
    return {ok, rows + "slope " + fmt(*rep.slope, 3) + "; " + fmt(secs, 1) + " s"};
}

Verdict pooling_discriminativity() {
    double degree_mean = 0, mean_mean = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const GraphSet set = synth_graph_dataset(SeedSplitter(seed).data());
        ExperimentOptions opts;
        opts.fractions = {1.0 / 3, 1.0 / 3, 1.0 / 3};
        opts.model.pooling = Pooling::degree;
        degree_mean += run_graph_task(set, opts, seed).fit.test_acc / 10.0;
        opts.model.pooling = Pooling::mean;
        mean_mean += run_graph_task(set, opts, seed).fit.test_acc / 10.0;
    }
    const bool ok = degree_mean >= 0.9 && mean_mean < degree_mean;
    return {ok, "degree pooling " + fmt(degree_mean) + ", mean pooling " + fmt(mean_mean) + " over 10 seeds"};
}

Verdict dataset_pipeline() {
    namespace fs = std::filesystem;
    const fs::path out = fs::temp_directory_path() / "demonet_acceptance_toy6";
    fs::remove_all(out);
    const std::string cmd = std::string("\"") + DEMONET_CLI + "\" train-graph --data \"" + DEMONET_TOY6 +
                            "\" --repeats 10 --out \"" + out.string() + "\" > \"" + (out.string() + ".log") + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    if (status != 0) return {false, "train-graph exited with status " + std::to_string(status)};

    nlohmann::json cfg, metrics;
    std::ifstream(out / "run_config.json") >> cfg;
    std::ifstream(out / "metrics.json") >> metrics;
    std::vector<std::string> problems;
    auto expect = [&](const char* key, double want) {
        if (std::abs(cfg.at(key).get<double>() - want) > 1e-12) problems.push_back(std::string(key) + " != " + fmt(want, 4));
    };
    expect("layers", 2);
    expect("hidden", 64);
    expect("lr", 0.005);
    expect("dropout", 0.6);
    expect("l2", 0.0005);
    expect("patience", 100);
    expect("train_frac", 1.0 / 3);
    expect("val_frac", 1.0 / 3);

    const auto& runs = metrics.at("runs");
    if (runs.size() != 10) problems.push_back("expected 10 runs, got " + std::to_string(runs.size()));
    std::vector<double> acc;
    for (const auto& r : runs) acc.push_back(r.at("test_acc").get<double>());
    const Summary s = summarize(acc);
    const auto& reported = metrics.at("summary").at("test_acc");
    if (std::abs(reported.at("mean").get<double>() - s.mean) > 1e-12 ||
        std::abs(reported.at("std").get<double>() - s.std) > 1e-12) {
        problems.push_back("summary does not match per-run accuracies");
    }
    std::ifstream summary(out / "summary.txt");
    std::string text((std::istreambuf_iterator<char>(summary)), std::istreambuf_iterator<char>());
    if (text.find("+-") == std::string::npos) problems.push_back("summary.txt lacks mean +- std");
    fs::remove_all(out);
    fs::remove(out.string() + ".log");

    std::string detail = "10 runs, test accuracy " + fmt(s.mean) + " +- " + fmt(s.std);
    for (const auto& p : problems) detail += "; " + p;
    return {problems.empty(), detail};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"degree-induced node classification", node_classification},
        {"aggregation properties", [] { return from_group("aggregation", 0); }},
        {"hash kernel unbiasedness", [] { return from_group("hashing", 30); }},
        {"kernel oracle equivalence and PSD", [] { return from_group("kernels", 0); }},
        {"pooled coordinate equals relu of DWL kernel", [] { return from_group("rkhs", 60); }},
        {"subtree code injectivity", [] { return from_group("subtree", 0); }},
        {"gradient correctness", [] { return from_group("gradients", 0); }},
        {"linear scaling", linear_scaling},
        {"degree pooling versus mean pooling", pooling_discriminativity},
        {"dataset directory pipeline", dataset_pipeline},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        failures += !v.passed;
        std::cout << (v.passed ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": " << criteria[i].first << " ("
                  << v.detail << ")" << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failures)) << "/" << criteria.size()
              << " criteria passed" << std::endl;
    return failures == 0 ? 0 : 1;
}
