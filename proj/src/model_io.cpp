#include "demonet/model_io.hpp"

#include <fstream>

#include <json.hpp>

#include "demonet/checkpoint.hpp"
#include "demonet/errors.hpp"

namespace demonet {

namespace {

std::filesystem::path with_suffix(std::filesystem::path stem, const char* ext) {
    stem += ext;
    return stem;
}

}  // namespace

void save_model(const std::filesystem::path& stem, const Model<float>& model) {
    const ModelConfig& c = model.config();
    nlohmann::json header;
    header["format"] = "demonet-model";
    header["input_dim"] = model.input_dim();
    header["config"] = {{"layers", c.layers},
                        {"hidden", c.hidden},
                        {"variant", to_string(c.variant)},
                        {"classes", c.classes},
                        {"task", to_string(c.task)},
                        {"pooling", to_string(c.pooling)},
                        {"fallback", c.fallback == DegreeFallback::strict ? "strict" : "global"},
                        {"hash_dim", c.hash_dim},
                        {"hash_seed", c.hash_seed},
                        {"init_seed", c.init_seed}};
    const auto vocab = model.degree_index().degree_values();
    header["degree_vocabulary"] = std::vector<int>(vocab.begin(), vocab.end());
    header["bucketing"] = model.degree_index().bucketing();
    nlohmann::json hashes = nlohmann::json::array();
    for (const auto& layer : model.layers()) {
        if (layer.task_tables.empty() && layer.hash_dim == 0) continue;
        nlohmann::json tasks = nlohmann::json::array();
        for (const auto& t : layer.hashing.tasks) tasks.push_back({t.seed1, t.seed2});
        hashes.push_back({{"m", layer.hash_dim},
                          {"global", {layer.hashing.global.seed1, layer.hashing.global.seed2}},
                          {"tasks", tasks},
                          {"reseeds", layer.hashing.reseeds}});
    }
    header["hash_specs"] = hashes;
    header["parameters"] = model.parameter_names();

    std::ofstream out(with_suffix(stem, ".json"));
    if (!out) throw FormatError("cannot write " + with_suffix(stem, ".json").string());
    out << header.dump(2) << '\n';
    write_checkpoint(with_suffix(stem, ".bin"), model.export_parameters());
}

Model<float> load_model(const std::filesystem::path& stem) {
    std::ifstream in(with_suffix(stem, ".json"));
    if (!in) throw FormatError("cannot read " + with_suffix(stem, ".json").string());
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("model header is not valid JSON: ") + e.what());
    }
    if (header.value("format", "") != "demonet-model") throw FormatError("not a model header");
    const auto& j = header.at("config");
    ModelConfig c;
    c.layers = j.at("layers").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    c.classes = j.at("classes").get<int>();
    c.task = j.at("task").get<std::string>() == "graph" ? TaskKind::graph : TaskKind::node;
    c.pooling = parse_pooling(j.at("pooling").get<std::string>());
    c.fallback = j.at("fallback").get<std::string>() == "strict" ? DegreeFallback::strict : DegreeFallback::global;
    c.hash_dim = j.at("hash_dim").get<std::size_t>();
    c.hash_seed = j.at("hash_seed").get<std::uint64_t>();
    c.init_seed = j.at("init_seed").get<std::uint64_t>();
    const auto vocab = header.at("degree_vocabulary").get<std::vector<int>>();
    Model<float> model(c, header.at("input_dim").get<std::size_t>(),
                       DegreeIndex::from_degrees(vocab, header.value("bucketing", false)));
    model.import_parameters(read_checkpoint(with_suffix(stem, ".bin")));
    return model;
}

}  // namespace demonet
