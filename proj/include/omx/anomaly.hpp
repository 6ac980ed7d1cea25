#pragma once

#include "omx/errors.hpp"
#include "omx/metric_store.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace omx {

enum class CompareOp { Greater, GreaterEqual, Less, LessEqual, Equal };

std::string_view to_string(CompareOp op);
CompareOp parse_compare_op(std::string_view text);

// Boolean detection formula over windowed metric statistics.
struct DetectionExpr {
    enum class Kind { Compare, TrendIs, And, Or, Not };

    Kind kind = Kind::Compare;
    std::string metric;            // Compare, TrendIs
    StatSpec stat;                 // Compare: the statistic; TrendIs: window only
    CompareOp op = CompareOp::Greater;
    double threshold = 0.0;
    TrendClass trend = TrendClass::Stable;
    std::vector<DetectionExpr> children; // And/Or: >= 1, Not: exactly 1

    static DetectionExpr compare(std::string metric, StatSpec stat, CompareOp op, double threshold);
    static DetectionExpr trend_is(std::string metric, std::int64_t window_seconds, TrendClass trend);
    static DetectionExpr all_of(std::vector<DetectionExpr> children);
    static DetectionExpr any_of(std::vector<DetectionExpr> children);
    static DetectionExpr negate(DetectionExpr child);

    bool operator==(const DetectionExpr&) const = default;
};

struct FrequencyControl {
    int k = 1;
    int n = 1;
    bool operator==(const FrequencyControl&) const = default;
};

struct DeclaredMetric {
    std::string id;
    std::string unit;
    std::vector<std::string> tags;
    bool operator==(const DeclaredMetric&) const = default;
};

struct ExperienceFragment {
    std::string text;
    std::string source;
    std::vector<std::string> tags;
    std::vector<std::string> metrics; // metrics this guidance uses while diagnosing
    bool operator==(const ExperienceFragment&) const = default;
};

struct ToolBinding {
    std::string tool_id;
    std::vector<std::string> tags;
    bool operator==(const ToolBinding&) const = default;
};

struct AnomalyModel {
    std::string model_id;
    std::string name;
    std::string symptom_description;
    DatabaseKind database_kind = DatabaseKind::Generic;
    DetectionExpr expr;
    FrequencyControl freq;
    std::string trigger_vertex_id;
    std::int64_t eval_period_seconds = 60;

    std::vector<DeclaredMetric> metrics;
    std::vector<std::string> tags; // annotate the trigger vertex
    std::vector<ExperienceFragment> experience;
    std::vector<ToolBinding> tools;

    bool operator==(const AnomalyModel&) const = default;

    const DeclaredMetric* find_metric(const std::string& id) const;
    std::map<std::string, std::string> units() const;
};

std::string trigger_vertex_id_for(const std::string& model_id);

struct LeafEvidence {
    std::string metric_id;
    StatSpec stat;
    double observed = 0.0;
    bool operator==(const LeafEvidence&) const = default;
};

struct ExprResult {
    bool fired = false;
    std::vector<LeafEvidence> evidence; // every leaf, in tree order
};

struct AnomalyEvent {
    std::string model_id;
    std::int64_t fired_at = 0;
    std::int64_t window_start = 0;
    std::int64_t window_end = 0;
    std::vector<LeafEvidence> evidence;
    std::vector<bool> history; // newest last

    std::string event_id() const;
    bool operator==(const AnomalyEvent&) const = default;
};

struct ModelDiagnostic {
    std::string model_id;
    ErrorCode code = ErrorCode::MissingMetric;
    std::string message;
};

struct DetectResult {
    std::vector<AnomalyEvent> events;          // ordered by (model_id, fired_at)
    std::vector<ModelDiagnostic> diagnostics;  // per-model failures, non-fatal
};

// Throws SchemaError, UnknownStatSpec or BadThreshold.
AnomalyModel parse_model(std::string_view document);
AnomalyModel parse_model(const nlohmann::json& document);
nlohmann::json model_to_json(const AnomalyModel& model);
std::string serialize_model(const AnomalyModel& model);

// Loads every *.json file in a directory, sorted by file name.
std::vector<AnomalyModel> load_models(const std::string& directory);

// Every leaf is evaluated (no short circuit) so the evidence is complete.
ExprResult evaluate_expr(const DetectionExpr& expr, const MetricSource& source, std::int64_t at,
                         const TrendConfig& trend_cfg = {});

bool apply_frequency_control(std::span<const bool> history, const FrequencyControl& freq);
bool apply_frequency_control(const std::vector<bool>& history, const FrequencyControl& freq);

DetectResult detect(std::span<const AnomalyModel> models, const MetricSource& source, std::int64_t now,
                    const TrendConfig& trend_cfg = {});

// Runs detect at every step in [t_begin, t_end]; a monitoring loop over stored data.
DetectResult detect_range(std::span<const AnomalyModel> models, const MetricSource& source,
                          std::int64_t t_begin, std::int64_t t_end, std::int64_t step,
                          const TrendConfig& trend_cfg = {});

std::vector<std::string> referenced_metrics(const DetectionExpr& expr);
std::string render_expr(const DetectionExpr& expr, const std::map<std::string, std::string>& units = {});
std::string render_leaf(const LeafEvidence& leaf);

void to_json(nlohmann::json& j, const LeafEvidence& e);
void from_json(const nlohmann::json& j, LeafEvidence& e);
void to_json(nlohmann::json& j, const AnomalyEvent& e);
void from_json(const nlohmann::json& j, AnomalyEvent& e);

} // namespace omx
