#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "nhits/data.hpp"
#include "nhits/model.hpp"

namespace nhits {

inline constexpr int kCheckpointFormatVersion = 1;

/// Self-describing model file: config, normalization, flat parameters and the training seed.
struct Checkpoint {
    int format_version = kCheckpointFormatVersion;
    ModelConfig config;
    NormStats norm;
    SplitPolicy split_policy = SplitPolicy::Default_70_10_20;
    std::uint64_t seed = 0;
    std::vector<double> params;

    ParamSet param_set() const;  // validates buffer length against config
};

/// Canonical JSON text of a model config (also the input of config_digest).
std::string config_to_json(const ModelConfig& config);
ModelConfig config_from_json(std::string_view text);
std::string config_digest(const ModelConfig& config);

std::string checkpoint_to_json(const Checkpoint& ckpt);
/// Throws DataError on malformed documents or unsupported format versions.
Checkpoint checkpoint_from_json(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace nhits
