#pragma once

#include "omx/adf.hpp"
#include "omx/anomaly.hpp"
#include "omx/graph.hpp"
#include "omx/tools.hpp"

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace omx {

struct EvolutionConfig {
    ExpandLimits limits{2, 64, 0.0};       // applied per round
    int max_rounds = 5;
    ADFConfig adf;
    double cross_edge_increment = 1.0;
    std::int64_t screen_window_seconds = 600;
    std::map<std::string, double> score_thresholds; // per-metric tau overrides
    std::map<std::string, ToolParams> tool_params;

    void validate() const;
};

struct MetricSummary {
    std::string metric_id;
    std::string unit;
    std::int64_t t0 = 0;
    std::int64_t t1 = 0;
    double min = 0.0;
    double max = 0.0;
    double avg = 0.0;
    double last = 0.0;
    std::size_t count = 0;
    bool operator==(const MetricSummary&) const = default;
};

struct DiagnosisContext {
    AnomalyEvent anomaly;
    std::string trigger_vertex;
    int rounds = 0;
    std::vector<std::vector<std::string>> explored_paths; // trigger first
    std::vector<std::pair<std::string, ADFResult>> abnormal_metrics;
    std::vector<std::string> normal_metrics;
    std::vector<std::pair<std::string, std::string>> experience_texts; // (vertex id, text)
    std::vector<ToolFindings> tool_findings;
    std::vector<Edge> created_cross_edges;
    std::map<std::string, MetricSummary> metric_summaries; // screened metrics
    std::vector<std::pair<std::string, std::string>> adf_errors; // (metric id, message)

    bool has_metric(const std::string& metric_id) const;
};

// Restricts another source to [t0, t1]; tools receive this as their snapshot.
class WindowedSource : public MetricSource {
public:
    WindowedSource(const MetricSource& base, std::int64_t t0, std::int64_t t1) : base_(base), t0_(t0), t1_(t1) {}
    bool has_metric(const std::string& metric_id) const override { return base_.has_metric(metric_id); }
    std::vector<MetricPoint> get_window(const std::string& metric_id, std::int64_t t0, std::int64_t t1) const override;
    std::optional<SeriesInfo> series_info(const std::string& metric_id) const override {
        return base_.series_info(metric_id);
    }

private:
    const MetricSource& base_;
    std::int64_t t0_;
    std::int64_t t1_;
};

// Locates the Trigger vertex bound to model_id; throws UnknownTrigger.
std::string find_trigger_vertex(const ExperienceGraph& graph, const std::string& model_id);

// Reinforces graph with the co-abnormal trigger pairs found, so the graph is
// taken by reference. Throws UnknownTrigger.
DiagnosisContext evolve(const AnomalyEvent& event, ExperienceGraph& graph, const MetricSource& store,
                        const ToolRegistry& tools, const EvolutionConfig& cfg);

// Returns how many edges were created or strengthened. Throws DanglingEndpoint.
std::size_t reinforce_cross_edges(ExperienceGraph& graph,
                                  const std::vector<std::pair<std::string, std::string>>& co_abnormal,
                                  double increment);

void to_json(nlohmann::json& j, const EvolutionConfig& c);
void from_json(const nlohmann::json& j, EvolutionConfig& c);
void to_json(nlohmann::json& j, const DiagnosisContext& c);
void from_json(const nlohmann::json& j, DiagnosisContext& c);

} // namespace omx
