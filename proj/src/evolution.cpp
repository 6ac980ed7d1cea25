#include "omx/evolution.hpp"

#include "omx/errors.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace omx {

namespace {
constexpr std::int64_t kFarPast = std::numeric_limits<std::int64_t>::min() / 4;
} // namespace

void EvolutionConfig::validate() const {
    if (max_rounds < 1) throw Error(ErrorCode::InvalidArgument, "evolution: max_rounds must be >= 1");
    if (!(cross_edge_increment > 0.0)) throw Error(ErrorCode::InvalidArgument, "evolution: increment must be > 0");
    if (limits.max_depth < 1) throw Error(ErrorCode::InvalidArgument, "evolution: max_depth must be >= 1");
    if (screen_window_seconds <= 0) throw Error(ErrorCode::InvalidArgument, "evolution: screen window must be > 0");
    adf.validate();
}

bool DiagnosisContext::has_metric(const std::string& metric_id) const {
    for (const auto& [id, r] : abnormal_metrics) {
        if (id == metric_id) return true;
    }
    return std::find(normal_metrics.begin(), normal_metrics.end(), metric_id) != normal_metrics.end();
}

std::vector<MetricPoint> WindowedSource::get_window(const std::string& metric_id, std::int64_t t0,
                                                    std::int64_t t1) const {
    const auto lo = std::max(t0, t0_);
    const auto hi = std::min(t1, t1_);
    if (lo > hi) {
        base_.get_window(metric_id, t0_, t0_ - 1); // still raise UnknownMetric
        return {};
    }
    return base_.get_window(metric_id, lo, hi);
}

std::string find_trigger_vertex(const ExperienceGraph& graph, const std::string& model_id) {
    const auto conventional = trigger_vertex_id_for(model_id);
    if (const Vertex* v = graph.find_vertex(conventional)) {
        if (const auto* t = std::get_if<TriggerPayload>(&v->payload); t && t->model_id == model_id) return conventional;
    }
    for (const auto& [id, v] : graph.vertices()) {
        if (const auto* t = std::get_if<TriggerPayload>(&v.payload); t && t->model_id == model_id) return id;
    }
    throw Error(ErrorCode::UnknownTrigger, model_id);
}

std::size_t reinforce_cross_edges(ExperienceGraph& graph,
                                  const std::vector<std::pair<std::string, std::string>>& co_abnormal,
                                  double increment) {
    std::size_t updated = 0;
    for (const auto& [a, b] : co_abnormal) {
        if (!graph.contains(a)) throw Error(ErrorCode::DanglingEndpoint, a);
        if (!graph.contains(b)) throw Error(ErrorCode::DanglingEndpoint, b);
        const auto existing = graph.between(a, b, Relation::Relevance);
        if (existing.empty()) {
            Edge e;
            e.src = std::min(a, b);
            e.relation = Relation::Relevance;
            e.dst = std::max(a, b);
            e.weight = increment;
            e.created_by = CreatedBy::Evolution;
            graph.upsert_edge(std::move(e));
            ++updated;
            continue;
        }
        // Only edges that evolution itself created are strengthened.
        if (std::any_of(existing.begin(), existing.end(),
                        [](const Edge* e) { return e->created_by != CreatedBy::Evolution; })) {
            continue;
        }
        const Edge* e = existing.front();
        graph.set_weight(e->key(), e->weight + increment);
        ++updated;
    }
    return updated;
}

namespace {

struct Screening {
    std::optional<ADFResult> result;
    std::optional<MetricSummary> summary;
    std::string error;
};

Screening screen_metric(const MetricSource& store, const std::string& metric_id, const std::string& unit,
                        std::int64_t fired_at, const EvolutionConfig& cfg) {
    Screening s;
    if (!store.has_metric(metric_id)) {
        s.error = "UnknownMetric: no data for " + metric_id;
        return s;
    }
    const auto window = store.window_ending(metric_id, fired_at, cfg.screen_window_seconds);
    if (!window.empty()) {
        MetricSummary m;
        m.metric_id = metric_id;
        m.unit = unit;
        m.t0 = window.front().ts;
        m.t1 = window.back().ts;
        m.min = m.max = window.front().value;
        double sum = 0.0;
        for (const auto& p : window) {
            m.min = std::min(m.min, p.value);
            m.max = std::max(m.max, p.value);
            sum += p.value;
        }
        m.avg = sum / static_cast<double>(window.size());
        m.last = window.back().value;
        m.count = window.size();
        s.summary = m;
    }
    try {
        std::vector<double> xs;
        xs.reserve(window.size());
        for (const auto& p : window) xs.push_back(p.value);
        if (xs.size() < 2) throw InsufficientData(2, xs.size(), "screening window of " + metric_id);
        ADFConfig adf = cfg.adf;
        if (auto it = cfg.score_thresholds.find(metric_id); it != cfg.score_thresholds.end()) {
            adf.score_threshold = it->second;
        }
        const auto t = window.back().ts;
        const auto history = store.get_window(metric_id, kFarPast, t - 1);
        s.result = evaluate(xs, xs.back(), t, history, adf);
    } catch (const Error& e) {
        s.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    return s;
}

} // namespace

DiagnosisContext evolve(const AnomalyEvent& event, ExperienceGraph& graph, const MetricSource& store,
                        const ToolRegistry& tools, const EvolutionConfig& cfg) {
    cfg.validate();
    DiagnosisContext ctx;
    ctx.anomaly = event;
    const std::string trigger = find_trigger_vertex(graph, event.model_id);
    ctx.trigger_vertex = trigger;

    std::set<std::string> visited{trigger};
    std::vector<std::string> discovery{trigger};
    std::map<std::string, std::string> parent;
    std::map<std::string, bool> metric_abnormal; // metric vertex -> flag
    std::vector<std::string> frontier{trigger};

    const auto is_metric = [&](const std::string& id) { return graph.find_vertex(id)->kind() == VertexKind::Metric; };

    for (int round = 1; round <= cfg.max_rounds && !frontier.empty(); ++round) {
        ctx.rounds = round;
        std::vector<std::string> new_metrics;
        std::size_t admitted = 0;
        std::vector<std::string> layer = frontier;
        for (int d = 1; d <= cfg.limits.max_depth && !layer.empty(); ++d) {
            std::map<std::string, std::string> candidates;
            for (const auto& u : layer) {
                // Metrics reached in this round end their branch until screened.
                if (d > 1 && is_metric(u)) continue;
                for (const Edge* e : graph.incident(u)) {
                    if (e->weight < cfg.limits.min_edge_weight) continue;
                    const std::string& v = e->src == u ? e->dst : e->src;
                    if (visited.count(v)) continue;
                    candidates.emplace(v, u);
                }
            }
            std::vector<std::string> next;
            for (const auto& [v, p] : candidates) {
                if (admitted >= cfg.limits.max_vertices) break;
                visited.insert(v);
                discovery.push_back(v);
                parent[v] = p;
                next.push_back(v);
                ++admitted;
                if (is_metric(v)) new_metrics.push_back(v);
            }
            layer = std::move(next);
        }

        std::sort(new_metrics.begin(), new_metrics.end());
        std::vector<std::string> next_frontier;
        for (const auto& vid : new_metrics) {
            const auto& payload = std::get<MetricPayload>(graph.find_vertex(vid)->payload);
            auto s = screen_metric(store, payload.metric_id, payload.unit, event.fired_at, cfg);
            if (s.summary) ctx.metric_summaries[payload.metric_id] = *s.summary;
            if (!s.error.empty()) ctx.adf_errors.emplace_back(payload.metric_id, s.error);
            const bool abnormal = s.result && s.result->abnormal;
            metric_abnormal[vid] = abnormal;
            if (abnormal) {
                ctx.abnormal_metrics.emplace_back(payload.metric_id, *s.result);
                next_frontier.push_back(vid);
            } else {
                ctx.normal_metrics.push_back(payload.metric_id);
            }
        }
        frontier = std::move(next_frontier);
    }

    // Clipping: a vertex survives if it carries knowledge or an abnormal
    // metric, or if it leads to one that does.
    std::map<std::string, std::vector<std::string>> children;
    for (const auto& [child, p] : parent) children[p].push_back(child);
    std::map<std::string, bool> keep;
    for (auto it = discovery.rbegin(); it != discovery.rend(); ++it) {
        const auto& id = *it;
        bool k = false;
        switch (graph.find_vertex(id)->kind()) {
        case VertexKind::Metric: k = metric_abnormal[id]; break;
        case VertexKind::Trigger:
        case VertexKind::Experience:
        case VertexKind::Tool: k = true; break;
        case VertexKind::Tag:
        case VertexKind::Auxiliary: break;
        }
        for (const auto& c : children[id]) k = k || keep[c];
        keep[id] = k;
    }
    keep[trigger] = true;

    const WindowedSource tool_snapshot(store, event.fired_at - cfg.screen_window_seconds + 1, event.fired_at);
    for (const auto& id : discovery) {
        if (!keep[id]) continue;
        std::vector<std::string> path{id};
        while (path.back() != trigger) path.push_back(parent.at(path.back()));
        std::reverse(path.begin(), path.end());
        ctx.explored_paths.push_back(std::move(path));

        const Vertex* v = graph.find_vertex(id);
        if (const auto* e = std::get_if<ExperiencePayload>(&v->payload)) {
            ctx.experience_texts.emplace_back(id, e->text);
        } else if (const auto* t = std::get_if<ToolPayload>(&v->payload)) {
            if (!tools.contains(t->tool_id)) {
                ctx.tool_findings.push_back({t->tool_id, {{Severity::Warn, "tool unavailable", {}}}});
                continue;
            }
            ToolParams params;
            if (auto it = cfg.tool_params.find(t->tool_id); it != cfg.tool_params.end()) params = it->second;
            ctx.tool_findings.push_back(tools.run_tool(t->tool_id, tool_snapshot, params));
        }
    }

    // Triggers directly linked to an abnormal metric are co-abnormal.
    std::set<std::string> co_triggers;
    for (const auto& [vid, abnormal] : metric_abnormal) {
        if (!abnormal) continue;
        for (const Edge* e : graph.incident(vid)) {
            if (e->relation != Relation::Relevance) continue;
            const std::string& other = e->src == vid ? e->dst : e->src;
            if (visited.count(other) && graph.find_vertex(other)->kind() == VertexKind::Trigger) co_triggers.insert(other);
        }
    }
    std::vector<std::pair<std::string, std::string>> pairs;
    for (auto a = co_triggers.begin(); a != co_triggers.end(); ++a) {
        for (auto b = std::next(a); b != co_triggers.end(); ++b) pairs.emplace_back(*a, *b);
    }
    for (const auto& [a, b] : pairs) {
        if (reinforce_cross_edges(graph, {{a, b}}, cfg.cross_edge_increment) > 0) {
            ctx.created_cross_edges.push_back(*graph.between(a, b, Relation::Relevance).front());
        }
    }
    return ctx;
}

void to_json(nlohmann::json& j, const EvolutionConfig& c) {
    j = {{"max_depth", c.limits.max_depth},
         {"max_vertices", c.limits.max_vertices},
         {"min_edge_weight", c.limits.min_edge_weight},
         {"max_rounds", c.max_rounds},
         {"adf", c.adf},
         {"cross_edge_increment", c.cross_edge_increment},
         {"screen_window_seconds", c.screen_window_seconds},
         {"score_thresholds", c.score_thresholds},
         {"tool_params", c.tool_params}};
}

void from_json(const nlohmann::json& j, EvolutionConfig& c) {
    EvolutionConfig d;
    c.limits.max_depth = j.value("max_depth", d.limits.max_depth);
    c.limits.max_vertices = j.value("max_vertices", d.limits.max_vertices);
    c.limits.min_edge_weight = j.value("min_edge_weight", d.limits.min_edge_weight);
    c.max_rounds = j.value("max_rounds", d.max_rounds);
    c.adf = j.contains("adf") ? j.at("adf").get<ADFConfig>() : d.adf;
    c.cross_edge_increment = j.value("cross_edge_increment", d.cross_edge_increment);
    c.screen_window_seconds = j.value("screen_window_seconds", d.screen_window_seconds);
    c.score_thresholds = j.value("score_thresholds", d.score_thresholds);
    c.tool_params = j.value("tool_params", d.tool_params);
    c.validate();
}

namespace {

nlohmann::json edge_json(const Edge& e) {
    return {{"src", e.src},
            {"relation", std::string(to_string(e.relation))},
            {"dst", e.dst},
            {"weight", e.weight},
            {"created_by", std::string(to_string(e.created_by))}};
}

Edge edge_from(const nlohmann::json& j) {
    Edge e;
    e.src = j.at("src").get<std::string>();
    e.relation = parse_relation(j.at("relation").get<std::string>());
    e.dst = j.at("dst").get<std::string>();
    e.weight = j.at("weight").get<double>();
    e.created_by = parse_created_by(j.at("created_by").get<std::string>());
    return e;
}

} // namespace

void to_json(nlohmann::json& j, const DiagnosisContext& c) {
    using nlohmann::json;
    j = json::object();
    j["anomaly"] = c.anomaly;
    j["trigger_vertex"] = c.trigger_vertex;
    j["rounds"] = c.rounds;
    j["explored_paths"] = c.explored_paths;
    j["abnormal_metrics"] = json::array();
    for (const auto& [id, r] : c.abnormal_metrics) j["abnormal_metrics"].push_back({{"metric_id", id}, {"adf", r}});
    j["normal_metrics"] = c.normal_metrics;
    j["experience_texts"] = json::array();
    for (const auto& [id, text] : c.experience_texts) j["experience_texts"].push_back({{"vertex_id", id}, {"text", text}});
    j["tool_findings"] = c.tool_findings;
    j["created_cross_edges"] = json::array();
    for (const auto& e : c.created_cross_edges) j["created_cross_edges"].push_back(edge_json(e));
    j["metric_summaries"] = json::array();
    for (const auto& [id, m] : c.metric_summaries) {
        j["metric_summaries"].push_back({{"metric_id", m.metric_id}, {"unit", m.unit}, {"t0", m.t0}, {"t1", m.t1},
                                         {"min", m.min}, {"max", m.max}, {"avg", m.avg}, {"last", m.last},
                                         {"count", m.count}});
    }
    j["adf_errors"] = json::array();
    for (const auto& [id, msg] : c.adf_errors) j["adf_errors"].push_back({{"metric_id", id}, {"message", msg}});
}

void from_json(const nlohmann::json& j, DiagnosisContext& c) {
    c = DiagnosisContext{};
    c.anomaly = j.at("anomaly").get<AnomalyEvent>();
    c.trigger_vertex = j.at("trigger_vertex").get<std::string>();
    c.rounds = j.at("rounds").get<int>();
    c.explored_paths = j.at("explored_paths").get<std::vector<std::vector<std::string>>>();
    for (const auto& a : j.at("abnormal_metrics")) {
        c.abnormal_metrics.emplace_back(a.at("metric_id").get<std::string>(), a.at("adf").get<ADFResult>());
    }
    c.normal_metrics = j.at("normal_metrics").get<std::vector<std::string>>();
    for (const auto& e : j.at("experience_texts")) {
        c.experience_texts.emplace_back(e.at("vertex_id").get<std::string>(), e.at("text").get<std::string>());
    }
    c.tool_findings = j.at("tool_findings").get<std::vector<ToolFindings>>();
    for (const auto& e : j.at("created_cross_edges")) c.created_cross_edges.push_back(edge_from(e));
    for (const auto& m : j.at("metric_summaries")) {
        MetricSummary s;
        s.metric_id = m.at("metric_id").get<std::string>();
        s.unit = m.at("unit").get<std::string>();
        s.t0 = m.at("t0").get<std::int64_t>();
        s.t1 = m.at("t1").get<std::int64_t>();
        s.min = m.at("min").get<double>();
        s.max = m.at("max").get<double>();
        s.avg = m.at("avg").get<double>();
        s.last = m.at("last").get<double>();
        s.count = m.at("count").get<std::size_t>();
        c.metric_summaries[s.metric_id] = s;
    }
    for (const auto& e : j.at("adf_errors")) {
        c.adf_errors.emplace_back(e.at("metric_id").get<std::string>(), e.at("message").get<std::string>());
    }
}

} // namespace omx
