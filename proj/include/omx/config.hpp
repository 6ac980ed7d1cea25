#pragma once

#include "omx/adf.hpp"
#include "omx/evolution.hpp"
#include "omx/llm.hpp"
#include "omx/metric_store.hpp"

#include <string>

#include "json.hpp"

namespace omx {

struct EnginePaths {
    std::string graph_file = "graph.json";
    std::string models_dir = std::string(OMX_DATA_DIR) + "/models";
    std::string data_dir = "omx-data";
};

struct EngineConfig {
    EnginePaths paths;
    ADFConfig adf;
    EvolutionConfig evolution; // evolution.adf mirrors adf
    LlmEndpointConfig llm;
    TrendConfig trend;
};

nlohmann::json config_to_json(const EngineConfig& cfg);
// Missing keys take their defaults. Throws SchemaError on malformed input.
EngineConfig config_from_json(const nlohmann::json& doc);
EngineConfig load_config(const std::string& path);
void save_config(const EngineConfig& cfg, const std::string& path);

void to_json(nlohmann::json& j, const TrendConfig& c);
void from_json(const nlohmann::json& j, TrendConfig& c);

} // namespace omx
