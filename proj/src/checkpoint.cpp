#include "demonet/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "demonet/errors.hpp"

namespace demonet {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw FormatError("checkpoint truncated");
    return value;
}

constexpr char kMagic[4] = {'D', 'M', 'N', '1'};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(kMagic, 4);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
    for (const auto& t : tensors) {
        put<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
        out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        put<std::uint32_t>(out, 2);
        put<std::uint64_t>(out, t.value.rows());
        put<std::uint64_t>(out, t.value.cols());
        out.write(reinterpret_cast<const char*>(t.value.data().data()),
                  static_cast<std::streamsize>(t.value.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0) throw FormatError(path.string() + ": bad checkpoint magic");
    const auto count = get<std::uint32_t>(in);
    std::vector<NamedTensor> tensors;
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedTensor t;
        t.name.resize(get<std::uint32_t>(in));
        in.read(t.name.data(), static_cast<std::streamsize>(t.name.size()));
        const auto rank = get<std::uint32_t>(in);
        if (rank != 2) throw FormatError("checkpoint tensor '" + t.name + "' has unsupported rank " + std::to_string(rank));
        const auto rows = get<std::uint64_t>(in);
        const auto cols = get<std::uint64_t>(in);
        std::vector<float> payload(rows * cols);
        in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size() * sizeof(float)));
        if (!in) throw FormatError("checkpoint truncated in '" + t.name + "'");
        t.value = Matrix<float>(rows, cols, std::move(payload));
        tensors.push_back(std::move(t));
    }
    return tensors;
}

}  // namespace demonet
