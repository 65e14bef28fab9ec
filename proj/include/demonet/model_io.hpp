#pragma once

#include <filesystem>

#include "demonet/model.hpp"

namespace demonet {

// Writes <stem>.bin (tensor checkpoint) and <stem>.json (config, degree
// vocabulary, hash seeds, input width).
void save_model(const std::filesystem::path& stem, const Model<float>& model);

// Rebuilds the model from the JSON header and loads the checkpoint into it.
Model<float> load_model(const std::filesystem::path& stem);

}  // namespace demonet
