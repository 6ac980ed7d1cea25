#pragma once

#include "omx/anomaly.hpp"
#include "omx/evolution.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace omx {

// The five prompt components handed to the language model.
struct DiagnosisPrompt {
    std::string anomaly;
    std::string condition;
    std::string metrics;
    std::string experience;
    std::string output_spec;
};

inline constexpr std::string_view kPromptAnomaly = "[ANOMALY]";
inline constexpr std::string_view kPromptCondition = "[DETECTION CONDITION]";
inline constexpr std::string_view kPromptMetrics = "[METRICS]";
inline constexpr std::string_view kPromptExperience = "[EXPERIENCE]";
inline constexpr std::string_view kPromptOutput = "[OUTPUT FORMAT]";

// Throws EmptyContext when the context holds no explored path.
DiagnosisPrompt build_prompt(const DiagnosisContext& context, const AnomalyModel& model);
std::string render_prompt(const DiagnosisPrompt& prompt);

struct EvidenceRef {
    std::string metric_id;
    std::string stat;  // max, min, avg, mean, last or pNN
    double value = 0.0;
    std::string unit;
    bool operator==(const EvidenceRef&) const = default;
};

struct RootCause {
    std::string label;
    std::string reasoning;
    std::vector<EvidenceRef> evidence_refs;
    bool operator==(const RootCause&) const = default;
};

struct DiagnosisReport {
    bool is_real_anomaly = false;
    std::string rationale;
    std::vector<RootCause> root_causes;
    std::vector<std::string> recovery;
    std::string summary;
    std::optional<std::string> sql_context;
    bool operator==(const DiagnosisReport&) const = default;
};

inline constexpr std::string_view kSectionValidation = "Anomaly Validation";
inline constexpr std::string_view kSectionRootCause = "Root Cause Analysis";
inline constexpr std::string_view kSectionRecovery = "Recover Solution";
inline constexpr std::string_view kSectionSummary = "Summary";
inline constexpr std::string_view kSectionSql = "SQL Context";

std::string format_value(double v);

// Citations of the form "metric <id> ... stat=<number><unit>".
std::vector<EvidenceRef> extract_evidence(std::string_view text);

// Throws MissingSection, TooManyCauses or NoCauses.
DiagnosisReport parse_report(std::string_view raw);
std::string render_report(const DiagnosisReport& report);

enum class AuthenticityKind { UnknownMetric, ValueMismatch };
std::string_view to_string(AuthenticityKind kind);

struct AuthenticityFinding {
    std::size_t cause_index = 0;
    AuthenticityKind kind = AuthenticityKind::UnknownMetric;
    std::string detail;
};

// Values are recomputed from the context's metric summaries; percentiles need
// the store and are skipped without one.
std::vector<AuthenticityFinding> validate_evidence(const DiagnosisReport& report, const DiagnosisContext& context,
                                                   const MetricSource* store = nullptr);

} // namespace omx
