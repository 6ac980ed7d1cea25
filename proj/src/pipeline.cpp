#include "omx/pipeline.hpp"

#include "omx/errors.hpp"

#include <filesystem>
#include <fstream>

namespace omx {

const AnomalyModel& find_model(const std::vector<AnomalyModel>& models, const std::string& model_id) {
    for (const auto& m : models) {
        if (m.model_id == model_id) return m;
    }
    throw Error(ErrorCode::UnknownTrigger, "no anomaly model '" + model_id + "'");
}

DiagnosisOutcome complete_diagnosis(DiagnosisContext context, const AnomalyModel& model, const LlmEndpointConfig& llm,
                                    const MetricSource* store, HttpTransport* transport) {
    DiagnosisOutcome out;
    out.context = std::move(context);
    out.prompt_text = render_prompt(build_prompt(out.context, model));
    out.raw_response = complete(llm, out.prompt_text, transport);
    out.report = parse_report(out.raw_response);
    out.findings = validate_evidence(out.report, out.context, store);
    return out;
}

std::optional<AnomalyEvent> first_event(std::span<const AnomalyModel> models, const MetricSource& source,
                                        std::int64_t t_begin, std::int64_t t_end, std::int64_t step,
                                        const TrendConfig& trend) {
    if (step <= 0) throw Error(ErrorCode::InvalidArgument, "step must be positive");
    for (std::int64_t t = t_begin; t <= t_end; t += step) {
        auto r = detect(models, source, t, trend);
        if (!r.events.empty()) return r.events.front();
    }
    return std::nullopt;
}

std::optional<DiagnosisOutcome> run_pipeline(const PipelineResources& res, const GeneratedData& data,
                                             std::int64_t step, HttpTransport* transport) {
    auto event = first_event(res.models, data.store, data.start, data.end, step, res.trend);
    if (!event) return std::nullopt;
    ExperienceGraph graph = res.graph;
    auto ctx = evolve(*event, graph, data.store, res.tools, res.evolution);
    return complete_diagnosis(std::move(ctx), find_model(res.models, event->model_id), res.llm, &data.store, transport);
}

PipelineResources default_resources() {
    PipelineResources r;
    const std::string data = OMX_DATA_DIR;
    r.models = load_models(data + "/models");
    r.graph = init_from_models(r.models);
    const auto synonyms = data + "/synonyms.json";
    if (std::filesystem::exists(synonyms)) {
        std::ifstream in(synonyms);
        const auto doc = nlohmann::json::parse(in);
        std::vector<std::pair<std::string, std::string>> pairs;
        for (const auto& p : doc.at("synonyms")) pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
        add_synonyms(r.graph, pairs);
    }
    r.tools = ToolRegistry::with_builtins();
    return r;
}

} // namespace omx
