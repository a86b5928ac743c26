#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "charrnet/model.hpp"

namespace charrnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout (little-endian): "CHRR", version u32, config digest u64, block
// count u32, then per parameter: name length u16, name, rank u8, dims u32 each,
// float64 values.
std::string encode_checkpoint(const Model& model);

// Restores parameter values into `model`. IoError on a malformed stream;
// ConfigError when the digest, names or shapes disagree with the model.
void decode_checkpoint_into(std::string_view bytes, Model& model);

// Writes <path> and the model config next to it as <path>.config.json.
void save_checkpoint(const Model& model, const std::filesystem::path& path);
std::unique_ptr<Model> load_checkpoint(const std::filesystem::path& path);

std::filesystem::path checkpoint_config_path(const std::filesystem::path& path);

}  // namespace charrnet
