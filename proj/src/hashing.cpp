#include "demonet/hashing.hpp"

#include <algorithm>
#include <optional>

#include "demonet/errors.hpp"

namespace demonet {

HashTable HashTable::from_spec(const HashSpec& spec, std::size_t dim) {
    if (spec.m == 0) throw ValidationError("hash dimension must be at least 1");
    HashTable t;
    t.m = spec.m;
    t.bucket.resize(dim);
    t.sign.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) {
        t.bucket[j] = static_cast<std::uint32_t>(spec.bucket(j));
        t.sign[j] = static_cast<std::int8_t>(spec.sign(j));
    }
    return t;
}

std::vector<double> phi(std::span<const double> x, const HashTable& table) {
    if (table.input_dim() != x.size()) throw ShapeError("hash table built for a different input width");
    std::vector<double> out(table.m, 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) out[table.bucket[j]] += table.sign[j] * x[j];
    return out;
}

std::vector<double> phi(std::span<const double> x, const HashSpec& spec) {
    if (spec.m == 0) throw ValidationError("hash dimension must be at least 1");
    std::vector<double> out(spec.m, 0.0);
    for (std::size_t j = 0; j < x.size(); ++j) out[spec.bucket(j)] += spec.sign(j) * x[j];
    return out;
}

double hash_kernel(std::span<const double> x, std::span<const double> y, const HashSpec& spec) {
    if (x.size() != y.size()) throw ShapeError("hash_kernel inputs differ in dimension");
    const auto a = phi(x, spec);
    const auto b = phi(y, spec);
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

namespace {

bool cancels(const HashTable& a, const HashTable& b) {
    for (std::size_t j = 0; j < a.input_dim(); ++j) {
        if (a.bucket[j] != b.bucket[j] || a.sign[j] != -b.sign[j]) return false;
    }
    return true;
}

}  // namespace

LayerHashing derive_layer_hashing(std::uint64_t seed1, std::uint64_t seed2, std::size_t num_tasks, std::size_t m,
                                  std::size_t input_dim) {
    constexpr std::size_t kAttempts = 64;
    LayerHashing out;
    out.global = HashSpec{m, seed1, seed2};
    const HashTable global_table = HashTable::from_spec(out.global, input_dim);
    std::vector<HashTable> taken{global_table};

    for (std::size_t t = 0; t < num_tasks; ++t) {
        std::optional<HashSpec> fallback;
        std::optional<HashSpec> chosen;
        for (std::size_t attempt = 0; attempt < kAttempts && !chosen; ++attempt) {
            const std::uint64_t salt = mix64((t + 1) | (static_cast<std::uint64_t>(attempt) << 40));
            HashSpec spec{m, mix64(seed1 ^ salt), mix64(seed2 ^ salt)};
            HashTable table = HashTable::from_spec(spec, input_dim);
            if (input_dim > 0 && cancels(table, global_table)) continue;
            if (!fallback) fallback = spec;
            if (std::find(taken.begin(), taken.end(), table) == taken.end()) chosen = spec;
            if (attempt > 0) ++out.reseeds;
        }
        if (!chosen) chosen = fallback ? *fallback : out.global;
        out.tasks.push_back(*chosen);
        taken.push_back(HashTable::from_spec(*chosen, input_dim));
    }
    return out;
}

}  // namespace demonet
