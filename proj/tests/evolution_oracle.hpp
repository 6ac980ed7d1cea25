#pragma once

// Reference model of the round-based evolution used by the evolution unit
// tests and the acceptance binary. Works from the raw edge list with
// hand-assigned metric labels instead of running the detector.

#include "omx/anomaly.hpp"
#include "omx/evolution.hpp"
#include "omx/graph.hpp"
#include "omx/pipeline.hpp"
#include "omx/simulator.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace omx::oracle {

struct EvolutionOracle {
    int rounds = 0;
    std::set<std::string> reached;
    std::set<std::string> screened;  // metric ids
    std::set<std::string> abnormal;  // metric ids
    std::set<std::vector<std::string>> paths;
    std::set<std::pair<std::string, std::string>> co_triggers;
};

inline EvolutionOracle run_evolution_oracle(const ExperienceGraph& g, const std::string& trigger,
                                            const std::map<std::string, bool>& labels, int depth,
                                            std::size_t budget, int max_rounds) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& [k, e] : g.edges()) {
        adj[k.src].insert(k.dst);
        adj[k.dst].insert(k.src);
    }
    auto kind = [&](const std::string& id) { return g.find_vertex(id)->kind(); };
    auto metric_of = [&](const std::string& id) { return std::get<MetricPayload>(g.find_vertex(id)->payload).metric_id; };

    EvolutionOracle out;
    std::map<std::string, std::string> parent;
    std::set<std::string> visited{trigger};
    std::set<std::string> frontier{trigger};
    std::set<std::string> abnormal_vertices;
    while (!frontier.empty() && out.rounds < max_rounds) {
        ++out.rounds;
        std::set<std::string> layer = frontier;
        std::set<std::string> fresh_metrics;
        std::size_t admitted = 0;
        for (int d = 1; d <= depth; ++d) {
            std::map<std::string, std::string> cand;
            for (const auto& u : layer) {
                if (d > 1 && kind(u) == VertexKind::Metric) continue;
                for (const auto& v : adj[u]) {
                    if (visited.count(v)) continue;
                    auto it = cand.find(v);
                    if (it == cand.end() || u < it->second) cand[v] = u;
                }
            }
            std::set<std::string> next;
            for (const auto& [v, p] : cand) {
                if (admitted == budget) break;
                ++admitted;
                visited.insert(v);
                parent[v] = p;
                next.insert(v);
                if (kind(v) == VertexKind::Metric) fresh_metrics.insert(v);
            }
            layer = next;
        }
        frontier.clear();
        for (const auto& v : fresh_metrics) {
            const auto id = metric_of(v);
            out.screened.insert(id);
            auto it = labels.find(id);
            if (it != labels.end() && it->second) {
                out.abnormal.insert(id);
                abnormal_vertices.insert(v);
                frontier.insert(v);
            }
        }
    }
    out.reached = visited;

    // A vertex survives if it is knowledge, an abnormal metric, or an ancestor of a survivor.
    std::set<std::string> kept;
    for (const auto& v : visited) {
        const auto k = kind(v);
        const bool base = k == VertexKind::Trigger || k == VertexKind::Experience || k == VertexKind::Tool ||
                          abnormal_vertices.count(v) > 0;
        if (!base) continue;
        for (std::string cur = v;; cur = parent.at(cur)) {
            kept.insert(cur);
            if (cur == trigger) break;
        }
    }
    for (const auto& v : kept) {
        std::vector<std::string> path{v};
        while (path.front() != trigger) path.insert(path.begin(), parent.at(path.front()));
        out.paths.insert(path);
    }

    std::set<std::string> triggers;
    for (const auto& v : abnormal_vertices) {
        for (const auto& [k, e] : g.edges()) {
            if (k.relation != Relation::Relevance) continue;
            std::string other;
            if (k.src == v) other = k.dst;
            else if (k.dst == v) other = k.src;
            else continue;
            if (visited.count(other) && kind(other) == VertexKind::Trigger) triggers.insert(other);
        }
    }
    for (auto a = triggers.begin(); a != triggers.end(); ++a) {
        for (auto b = std::next(a); b != triggers.end(); ++b) out.co_triggers.insert({*a, *b});
    }
    return out;
}

// The two-fragment fixture: LOG_FILE_SYNC and REDO_ALLOCATION linked through
// the shared concurrency tag, with log_sync_delay data (redo buffer busy waits
// injected alongside the log sync latency).
struct RedoFixture {
    std::vector<AnomalyModel> models;
    ExperienceGraph graph;
    GeneratedData data;
    AnomalyEvent event;
    // hand labels for the screened metrics
    std::map<std::string, bool> labels{{"avg_log_sync_time", true},
                                       {"user_commits", false},
                                       {"redo_buffer_busy", true},
                                       {"redo_generation_rate", false}};
};

inline RedoFixture make_redo_fixture(std::uint64_t seed) {
    RedoFixture f;
    const auto all = load_models(std::string(OMX_DATA_DIR) + "/models");
    for (const auto& m : all) {
        if (m.model_id == "LOG_FILE_SYNC" || m.model_id == "REDO_ALLOCATION") f.models.push_back(m);
    }
    f.graph = init_from_models(f.models);
    const auto catalog = default_catalog();
    f.data = generate(*catalog.find("log_sync_delay"), seed, catalog.defaults.duration_seconds,
                      catalog.defaults.cadence_seconds, catalog.defaults.start);
    std::vector<AnomalyModel> lfs{f.models.front().model_id == "LOG_FILE_SYNC" ? f.models.front() : f.models.back()};
    auto ev = first_event(lfs, f.data.store, f.data.start + 600, f.data.end, 60);
    if (!ev) throw std::runtime_error("fixture: LOG_FILE_SYNC never fired");
    f.event = *ev;
    return f;
}

} // namespace omx::oracle
