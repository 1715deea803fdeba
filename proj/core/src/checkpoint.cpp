#include "nhits/checkpoint.hpp"

#include <json.hpp>

#include "nhits/error.hpp"
#include "nhits/io.hpp"

namespace nhits {

namespace {

using json = nlohmann::ordered_json;

json config_json(const ModelConfig& c) {
    json blocks = json::array();
    for (const BlockConfig& b : c.blocks) {
        blocks.push_back({{"kernel", b.kernel},
                          {"ratio", b.ratio},
                          {"hidden_size", b.hidden_size},
                          {"n_mlp_layers", b.n_mlp_layers},
                          {"interp", std::string(to_string(b.interp))},
                          {"pool", std::string(to_string(b.pool))}});
    }
    return {{"input_size", c.input_size},
            {"horizon", c.horizon},
            {"blocks_per_stack", c.blocks_per_stack},
            {"blocks", std::move(blocks)}};
}

ModelConfig config_from(const json& j) {
    ModelConfig c;
    c.input_size = j.at("input_size").get<std::size_t>();
    c.horizon = j.at("horizon").get<std::size_t>();
    c.blocks_per_stack = j.at("blocks_per_stack").get<std::size_t>();
    for (const json& b : j.at("blocks")) {
        c.blocks.push_back(BlockConfig{b.at("kernel").get<std::size_t>(), b.at("ratio").get<double>(),
                                       b.at("hidden_size").get<std::size_t>(), b.at("n_mlp_layers").get<std::size_t>(),
                                       parse_interp_kind(b.at("interp").get<std::string>()),
                                       parse_pool_mode(b.at("pool").get<std::string>())});
    }
    c.validate();
    return c;
}

} // namespace

ParamSet Checkpoint::param_set() const {
    ParamSet p;
    p.layout = ParamLayout::build(config);
    if (params.size() != p.layout.total) {
        throw DataError("checkpoint holds " + std::to_string(params.size()) + " parameters, config needs " +
                        std::to_string(p.layout.total));
    }
    p.values = params;
    return p;
}

std::string config_to_json(const ModelConfig& config) { return config_json(config).dump(); }

ModelConfig config_from_json(std::string_view text) {
    try {
        return config_from(json::parse(text));
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed model config: ") + e.what());
    }
}

std::string config_digest(const ModelConfig& config) { return fnv1a64_hex(config_to_json(config)); }

std::string checkpoint_to_json(const Checkpoint& ckpt) {
    json norm = json::array();
    for (const SeriesStats& s : ckpt.norm.series) norm.push_back({{"id", s.id}, {"mean", s.mean}, {"std", s.stddev}});
    json j;
    j["format_version"] = ckpt.format_version;
    j["model_config"] = config_json(ckpt.config);
    j["split_policy"] = std::string(to_string(ckpt.split_policy));
    j["normalization"] = std::move(norm);
    j["seed"] = ckpt.seed;
    j["param_count"] = ckpt.params.size();
    j["params"] = ckpt.params;
    return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
    try {
        const json j = json::parse(text);
        Checkpoint c;
        c.format_version = j.at("format_version").get<int>();
        if (c.format_version != kCheckpointFormatVersion) {
            throw DataError("unsupported checkpoint format version " + std::to_string(c.format_version));
        }
        c.config = config_from(j.at("model_config"));
        c.split_policy = parse_split_policy(j.at("split_policy").get<std::string>());
        for (const json& s : j.at("normalization")) {
            c.norm.series.push_back(
                SeriesStats{s.at("id").get<std::string>(), s.at("mean").get<double>(), s.at("std").get<double>()});
        }
        c.seed = j.at("seed").get<std::uint64_t>();
        c.params = j.at("params").get<std::vector<double>>();
        if (c.params.size() != j.at("param_count").get<std::size_t>()) throw DataError("checkpoint param_count mismatch");
        (void)c.param_set();
        return c;
    } catch (const json::exception& e) {
        throw DataError(std::string("malformed checkpoint: ") + e.what());
    } catch (const ConfigError& e) {
        throw DataError(std::string("invalid checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    atomic_write_file(path, checkpoint_to_json(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_file(path)); }

} // namespace nhits
