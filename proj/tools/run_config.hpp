#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include <json.hpp>

namespace demonet::cli {

// Bad invocation: conflicting or missing inputs. Maps to exit code 2.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Defaults for a training subcommand ("train-node" or "train-graph"). Keys
// without a default (data, labels, attributes, synth, hash_seed) are null.
nlohmann::json default_run_config(const std::string& command);

// Reads a config file: JSON when the first non-blank character is '{',
// otherwise key=value lines with '#' comments.
nlohmann::json read_config_file(const std::filesystem::path& path);

// Overlays `values` (strings from key=value text or flags, or typed JSON) on
// `base`, converting each to the type of the existing entry. Unknown keys and
// unconvertible values throw UsageError.
void overlay(nlohmann::json& base, const nlohmann::json& values);

}  // namespace demonet::cli
