#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "demonet/random.hpp"
#include "demonet/tape.hpp"

namespace demonet {

// Seeded pair of hash functions: bucket(j) in [0, m) and sign(j) in {+1, -1}.
// bucket(j) = mix64(seed1 ^ j) mod m, sign(j) from bit 0 of mix64(seed2 ^ j).
struct HashSpec {
    std::size_t m = 1;
    std::uint64_t seed1 = 0;
    std::uint64_t seed2 = 0;

    std::size_t bucket(std::size_t j) const { return static_cast<std::size_t>(mix64(seed1 ^ j) % m); }
    int sign(std::size_t j) const { return (mix64(seed2 ^ j) & 1U) ? -1 : 1; }

    bool operator==(const HashSpec&) const = default;
};

// Materialized tables over input coordinates 0..dim-1.
struct HashTable {
    std::size_t m = 1;
    std::vector<std::uint32_t> bucket;
    std::vector<std::int8_t> sign;

    static HashTable from_spec(const HashSpec& spec, std::size_t dim);
    std::size_t input_dim() const { return bucket.size(); }

    bool operator==(const HashTable&) const = default;
};

std::vector<double> phi(std::span<const double> x, const HashTable& table);
std::vector<double> phi(std::span<const double> x, const HashSpec& spec);

// <phi(x), phi(x')> under one shared spec.
double hash_kernel(std::span<const double> x, std::span<const double> y, const HashSpec& spec);

// Global map plus one map per degree task for a single layer.
struct LayerHashing {
    HashSpec global;
    std::vector<HashSpec> tasks;
    std::size_t reseeds = 0;  // task tables redrawn because they collided
};

// Task seeds are mixed from (seed1, seed2) and the task id. A task table that
// equals the global or an earlier task table is redrawn while distinct tables
// exist; a task map that exactly cancels the global map is always redrawn.
LayerHashing derive_layer_hashing(std::uint64_t seed1, std::uint64_t seed2, std::size_t num_tasks, std::size_t m,
                                  std::size_t input_dim);

// Row-wise hashing: out[r] = phi(x[r]) using table_of_row[r] (negative -> zero row).
template <typename Real>
Var hash_project(Tape<Real>& t, Var x, std::span<const HashTable> tables, std::span<const int> table_of_row) {
    const auto& in = t.value(x);
    if (tables.empty()) throw ShapeError("hash_project without tables");
    const std::size_t m = tables.front().m;
    for (const auto& tb : tables) {
        if (tb.m != m || tb.input_dim() != in.cols()) throw ShapeError("hash table does not match input width");
    }
    if (table_of_row.size() != in.rows()) throw ShapeError("hash_project row assignment length mismatch");
    Matrix<Real> out(in.rows(), m);
    for (std::size_t r = 0; r < in.rows(); ++r) {
        if (table_of_row[r] < 0) continue;
        const HashTable& tb = tables[static_cast<std::size_t>(table_of_row[r])];
        auto row = in.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) out(r, tb.bucket[j]) += static_cast<Real>(tb.sign[j]) * row[j];
    }
    const HashTable* base = tables.data();
    const int* rows = table_of_row.data();
    return t.record(std::move(out), {x}, [x, base, rows](Tape<Real>& tp, const Matrix<Real>& g) {
        auto* gx = tp.grad_buffer(x);
        if (!gx) return;
        for (std::size_t r = 0; r < gx->rows(); ++r) {
            if (rows[r] < 0) continue;
            const HashTable& tb = base[rows[r]];
            for (std::size_t j = 0; j < gx->cols(); ++j) (*gx)(r, j) += static_cast<Real>(tb.sign[j]) * g(r, tb.bucket[j]);
        }
    });
}

}  // namespace demonet
