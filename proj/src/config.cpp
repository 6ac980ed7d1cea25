#include "omx/config.hpp"

#include "omx/errors.hpp"

#include <fstream>

namespace omx {

void to_json(nlohmann::json& j, const TrendConfig& c) {
    j = {{"stable_band", c.stable_band}, {"sharp_change", c.sharp_change}, {"residual_cv", c.residual_cv}};
}

void from_json(const nlohmann::json& j, TrendConfig& c) {
    TrendConfig d;
    c.stable_band = j.value("stable_band", d.stable_band);
    c.sharp_change = j.value("sharp_change", d.sharp_change);
    c.residual_cv = j.value("residual_cv", d.residual_cv);
}

nlohmann::json config_to_json(const EngineConfig& cfg) {
    nlohmann::json evo = cfg.evolution;
    evo.erase("adf");
    return {{"paths",
             {{"graph_file", cfg.paths.graph_file},
              {"models_dir", cfg.paths.models_dir},
              {"data_dir", cfg.paths.data_dir}}},
            {"adf", cfg.adf},
            {"evolution", evo},
            {"llm", cfg.llm},
            {"trend", cfg.trend}};
}

EngineConfig config_from_json(const nlohmann::json& doc) {
    EngineConfig cfg;
    try {
        if (!doc.is_object()) throw SchemaError("", "configuration must be an object");
        if (doc.contains("paths")) {
            const auto& p = doc.at("paths");
            cfg.paths.graph_file = p.value("graph_file", cfg.paths.graph_file);
            cfg.paths.models_dir = p.value("models_dir", cfg.paths.models_dir);
            cfg.paths.data_dir = p.value("data_dir", cfg.paths.data_dir);
        }
        if (doc.contains("adf")) cfg.adf = doc.at("adf").get<ADFConfig>();
        if (doc.contains("evolution")) {
            auto evo = doc.at("evolution");
            evo["adf"] = cfg.adf;
            cfg.evolution = evo.get<EvolutionConfig>();
        }
        cfg.evolution.adf = cfg.adf;
        if (doc.contains("llm")) cfg.llm = doc.at("llm").get<LlmEndpointConfig>();
        if (doc.contains("trend")) cfg.trend = doc.at("trend").get<TrendConfig>();
        cfg.adf.validate();
        cfg.evolution.validate();
        cfg.llm.validate();
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("config", e.what());
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw SchemaError("config", e.what());
    }
    return cfg;
}

EngineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read config " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path, e.what());
    }
    return config_from_json(doc);
}

void save_config(const EngineConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write config " + path);
    out << config_to_json(cfg).dump(2) << "\n";
}

} // namespace omx
