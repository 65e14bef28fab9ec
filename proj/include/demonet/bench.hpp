#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "demonet/model.hpp"

namespace demonet {

struct BenchRow {
    int n = 0;
    std::size_t edges = 0;
    double ms_per_epoch = 0;
};

struct BenchOptions {
    std::vector<int> sizes{1000, 2000, 4000, 8000};
    Variant variant = Variant::hash;
    int epochs = 10;
    int warmup = 1;
    std::size_t feature_dim = 16;
    int hidden = 64;
    std::uint64_t seed = 0;
};

// One training epoch is forward, loss, backward and an optimizer step on a
// random graph with n nodes and 2n edges; the time is averaged over `epochs`.
BenchRow bench_size(int n, const BenchOptions& opts);

struct BenchReport {
    std::vector<BenchRow> rows;
    std::optional<double> slope;  // log-log slope when at least two sizes ran
};

BenchReport run_bench(const BenchOptions& opts);

}  // namespace demonet
