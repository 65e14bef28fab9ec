#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "demonet/tensor.hpp"

namespace demonet {

struct NamedTensor {
    std::string name;
    Matrix<float> value;
};

// Little-endian binary: magic "DMN1", u32 record count, then per record
// u32 name length, name bytes, u32 rank (always 2), u64 dims[rank], f32 payload.
void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

}  // namespace demonet
