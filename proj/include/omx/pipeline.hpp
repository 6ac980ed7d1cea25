#pragma once

#include "omx/anomaly.hpp"
#include "omx/diagnosis.hpp"
#include "omx/evolution.hpp"
#include "omx/graph.hpp"
#include "omx/llm.hpp"
#include "omx/simulator.hpp"
#include "omx/tools.hpp"

#include <optional>
#include <vector>

namespace omx {

struct PipelineResources {
    std::vector<AnomalyModel> models;
    ExperienceGraph graph; // copied per diagnosis so runs stay independent
    ToolRegistry tools;
    EvolutionConfig evolution;
    LlmEndpointConfig llm;
    TrendConfig trend;
};

struct DiagnosisOutcome {
    DiagnosisContext context;
    std::string prompt_text;
    std::string raw_response;
    DiagnosisReport report;
    std::vector<AuthenticityFinding> findings;
};

const AnomalyModel& find_model(const std::vector<AnomalyModel>& models, const std::string& model_id);

// Prompt, completion, parsing and evidence validation for an evolved context.
DiagnosisOutcome complete_diagnosis(DiagnosisContext context, const AnomalyModel& model, const LlmEndpointConfig& llm,
                                    const MetricSource* store = nullptr, HttpTransport* transport = nullptr);

// Earliest event found by scanning [t_begin, t_end] every step seconds.
std::optional<AnomalyEvent> first_event(std::span<const AnomalyModel> models, const MetricSource& source,
                                        std::int64_t t_begin, std::int64_t t_end, std::int64_t step,
                                        const TrendConfig& trend = {});

// detect, evolve on a copy of the graph, then complete_diagnosis. Returns
// nullopt when no model fires.
std::optional<DiagnosisOutcome> run_pipeline(const PipelineResources& res, const GeneratedData& data,
                                             std::int64_t step, HttpTransport* transport = nullptr);

// Models from data/models, their seed graph plus data/synonyms.json when
// present, built-in tools and default configuration.
PipelineResources default_resources();

} // namespace omx
