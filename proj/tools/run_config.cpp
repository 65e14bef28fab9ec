#include "run_config.hpp"

#include <fstream>
#include <sstream>

namespace demonet::cli {

using nlohmann::json;

json default_run_config(const std::string& command) {
    const bool graph = command == "train-graph";
    return {
        {"command", command},
        {"data", nullptr},
        {"labels", nullptr},
        {"attributes", nullptr},
        {"synth", nullptr},
        {"variant", "weight"},
        {"layers", 2},
        {"hidden", 64},
        {"lr", 0.005},
        {"dropout", 0.6},
        {"l2", 0.0005},
        {"patience", 100},
        {"max_epochs", 1000},
        {"repeats", 1},
        {"seed", 0},
        {"hash_dim", 0},
        {"hash_seed", nullptr},
        {"bucketing", false},
        {"pooling", "degree"},
        {"fallback", "global"},
        {"features", "auto"},
        {"train_frac", graph ? 1.0 / 3.0 : 0.1},
        {"val_frac", graph ? 1.0 / 3.0 : 0.2},
        {"stratify", true},
        {"out", "demonet-out"},
    };
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Keys that accept any string or integer although their default is null.
bool nullable_string(const std::string& key) {
    return key == "data" || key == "labels" || key == "attributes" || key == "synth";
}

json convert(const std::string& key, const json& slot, const json& value) {
    if (!value.is_string()) {
        if (slot.is_null() || slot.type() == value.type() || (slot.is_number() && value.is_number())) return value;
        throw UsageError("config key '" + key + "' has the wrong type");
    }
    const std::string text = value.get<std::string>();
    try {
        if (nullable_string(key) || slot.is_string()) return text;
        if (key == "hash_seed" || slot.is_number_integer()) {
            std::size_t used = 0;
            const long long v = std::stoll(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            if (key == "hash_seed") return static_cast<std::uint64_t>(v);
            return v;
        }
        if (slot.is_number()) {
            std::size_t used = 0;
            const double v = std::stod(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return v;
        }
        if (slot.is_boolean()) {
            if (text == "true" || text == "1") return true;
            if (text == "false" || text == "0") return false;
            throw std::invalid_argument(text);
        }
    } catch (const std::logic_error&) {
        throw UsageError("config key '" + key + "' cannot take the value '" + text + "'");
    }
    throw UsageError("config key '" + key + "' cannot be set");
}

}  // namespace

json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    const std::string body = trim(text);
    if (!body.empty() && body.front() == '{') {
        try {
            return json::parse(body);
        } catch (const json::exception& e) {
            throw UsageError("config file " + path.string() + " is not valid JSON: " + e.what());
        }
    }
    json out = json::object();
    std::istringstream lines(text);
    std::string line;
    std::size_t number = 0;
    while (std::getline(lines, line)) {
        ++number;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(path.string() + ":" + std::to_string(number) + ": expected key=value");
        }
        out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return out;
}

void overlay(json& base, const json& values) {
    for (const auto& [key, value] : values.items()) {
        if (!base.contains(key)) throw UsageError("unknown config key '" + key + "'");
        if (key == "command") {
            if (value != base["command"]) throw UsageError("config was written for " + value.dump());
            continue;
        }
        if (value.is_null()) {
            base[key] = nullptr;
            continue;
        }
        base[key] = convert(key, base[key], value);
    }
}

}  // namespace demonet::cli
