#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "charrnet/dataset.hpp"
#include "charrnet/model.hpp"
#include "charrnet/training.hpp"
#include "charrnet/verify.hpp"

namespace charrnet {

inline constexpr int kConfigVersion = 1;

struct EvalConfig {
    std::string split = "test";  // train | test | all
};

/// Every knob of a run. Missing keys take the defaults below; unknown keys are
/// rejected with ConfigError.
struct RunConfig {
    DatasetConfig dataset{};
    ModelConfig model{};
    TrainConfig train{};
    EvalConfig eval{};
    VerifyConfig verify{};
};

RunConfig parse_run_config(std::string_view json_text);
RunConfig load_run_config(const std::filesystem::path& path);  // IoError / ConfigError
std::string dump_run_config(const RunConfig& cfg);

ModelConfig parse_model_config(std::string_view json_text);
std::string dump_model_config(const ModelConfig& cfg);  // canonical, compact

// FNV-1a 64 of the canonical model config text, init_seed excluded.
std::uint64_t config_digest(const ModelConfig& cfg);

}  // namespace charrnet
