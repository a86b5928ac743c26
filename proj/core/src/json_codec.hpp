#pragma once

// JSON encoding of the configuration structs (private to the library).

#include <json.hpp>
#include <string>

#include "charrnet/config.hpp"

namespace charrnet::codec {

using json = nlohmann::ordered_json;

json encode(const DatasetConfig& c);
json encode(const ModelConfig& c);
json encode(const TrainConfig& c);
json encode(const EvalConfig& c);
json encode(const VerifyConfig& c);
json encode(const RunConfig& c);

DatasetConfig decode_dataset(const json& j, const std::string& path = "dataset");
ModelConfig decode_model(const json& j, const std::string& path = "model");
TrainConfig decode_train(const json& j, const std::string& path = "train");
EvalConfig decode_eval(const json& j, const std::string& path = "eval");
VerifyConfig decode_verify(const json& j, const std::string& path = "verify");
RunConfig decode_run(const json& j);

json parse(std::string_view text, const std::string& what);

}  // namespace charrnet::codec
