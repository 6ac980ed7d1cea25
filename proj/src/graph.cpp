#include "omx/graph.hpp"

#include "omx/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace omx {

using nlohmann::json;

std::string_view to_string(VertexKind kind) {
    switch (kind) {
    case VertexKind::Trigger: return "Trigger";
    case VertexKind::Metric: return "Metric";
    case VertexKind::Experience: return "Experience";
    case VertexKind::Tool: return "Tool";
    case VertexKind::Tag: return "Tag";
    case VertexKind::Auxiliary: return "Auxiliary";
    }
    return "Auxiliary";
}

std::string_view to_string(Relation relation) {
    switch (relation) {
    case Relation::Containment: return "Containment";
    case Relation::Relevance: return "Relevance";
    case Relation::Diagnosis: return "Diagnosis";
    case Relation::Synonym: return "Synonym";
    }
    return "Relevance";
}

std::string_view to_string(CreatedBy created_by) {
    switch (created_by) {
    case CreatedBy::Manual: return "manual";
    case CreatedBy::Enrichment: return "enrichment";
    case CreatedBy::Evolution: return "evolution";
    }
    return "manual";
}

VertexKind parse_vertex_kind(std::string_view text) {
    for (int i = 0; i <= static_cast<int>(VertexKind::Auxiliary); ++i) {
        if (to_string(static_cast<VertexKind>(i)) == text) return static_cast<VertexKind>(i);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown vertex kind '" + std::string(text) + "'");
}

Relation parse_relation(std::string_view text) {
    for (int i = 0; i <= static_cast<int>(Relation::Synonym); ++i) {
        if (to_string(static_cast<Relation>(i)) == text) return static_cast<Relation>(i);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown relation '" + std::string(text) + "'");
}

CreatedBy parse_created_by(std::string_view text) {
    for (int i = 0; i <= static_cast<int>(CreatedBy::Evolution); ++i) {
        if (to_string(static_cast<CreatedBy>(i)) == text) return static_cast<CreatedBy>(i);
    }
    throw Error(ErrorCode::InvalidArgument, "unknown created_by '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// ExperienceGraph

bool ExperienceGraph::upsert_vertex(Vertex v) {
    if (v.id.empty()) throw Error(ErrorCode::InvalidArgument, "vertex id must be non-empty");
    auto it = vertices_.find(v.id);
    if (it == vertices_.end()) {
        std::string id = v.id;
        vertices_.emplace(std::move(id), std::move(v));
        return true;
    }
    if (it->second.kind() != v.kind()) {
        throw Error(ErrorCode::InvalidArgument, "vertex '" + v.id + "' cannot change kind from " +
                                                    std::string(to_string(it->second.kind())) + " to " +
                                                    std::string(to_string(v.kind())));
    }
    v.database_tags.insert(it->second.database_tags.begin(), it->second.database_tags.end());
    it->second = std::move(v);
    return false;
}

bool ExperienceGraph::upsert_edge(Edge e) {
    if (e.src == e.dst) throw Error(ErrorCode::SelfLoop, e.src);
    const Vertex* src = find_vertex(e.src);
    const Vertex* dst = find_vertex(e.dst);
    if (!src) throw Error(ErrorCode::DanglingEndpoint, e.src);
    if (!dst) throw Error(ErrorCode::DanglingEndpoint, e.dst);
    if (e.relation == Relation::Synonym && (src->kind() != VertexKind::Tag || dst->kind() != VertexKind::Tag)) {
        throw Error(ErrorCode::SynonymKindViolation, e.src + " -> " + e.dst);
    }
    if (!(e.weight >= 0.0) || !std::isfinite(e.weight)) {
        throw Error(ErrorCode::InvalidArgument, "edge weight must be finite and >= 0");
    }
    auto key = e.key();
    auto it = edges_.find(key);
    if (it == edges_.end()) {
        adjacency_[key.src].push_back(key);
        adjacency_[key.dst].push_back(key);
        edges_.emplace(std::move(key), std::move(e));
        return true;
    }
    it->second.weight = e.weight;
    for (auto& [k, v] : e.extra) it->second.extra[k] = v;
    return false;
}

bool ExperienceGraph::remove_edge(const EdgeKey& key) {
    if (edges_.erase(key) == 0) return false;
    for (const auto& end : {key.src, key.dst}) {
        auto& adj = adjacency_[end];
        adj.erase(std::remove(adj.begin(), adj.end(), key), adj.end());
    }
    return true;
}

const Vertex* ExperienceGraph::find_vertex(const std::string& id) const {
    auto it = vertices_.find(id);
    return it == vertices_.end() ? nullptr : &it->second;
}

const Edge* ExperienceGraph::find_edge(const EdgeKey& key) const {
    auto it = edges_.find(key);
    return it == edges_.end() ? nullptr : &it->second;
}

std::vector<const Edge*> ExperienceGraph::incident(const std::string& id) const {
    std::vector<const Edge*> out;
    auto it = adjacency_.find(id);
    if (it == adjacency_.end()) return out;
    out.reserve(it->second.size());
    for (const auto& key : it->second) out.push_back(&edges_.at(key));
    std::sort(out.begin(), out.end(), [](const Edge* a, const Edge* b) { return a->key() < b->key(); });
    return out;
}

std::vector<const Edge*> ExperienceGraph::between(const std::string& a, const std::string& b, Relation relation) const {
    std::vector<const Edge*> out;
    if (const Edge* e = find_edge({a, relation, b})) out.push_back(e);
    if (const Edge* e = find_edge({b, relation, a})) out.push_back(e);
    return out;
}

void ExperienceGraph::set_weight(const EdgeKey& key, double weight) {
    auto it = edges_.find(key);
    if (it == edges_.end()) throw Error(ErrorCode::DanglingEndpoint, key.src + " -> " + key.dst);
    it->second.weight = weight;
}

ExperienceGraph ExperienceGraph::induced(const std::set<std::string>& ids) const {
    ExperienceGraph g;
    for (const auto& id : ids) {
        if (const Vertex* v = find_vertex(id)) g.upsert_vertex(*v);
    }
    for (const auto& id : ids) {
        auto it = adjacency_.find(id);
        if (it == adjacency_.end()) continue;
        for (const auto& key : it->second) {
            if (key.src == id && ids.count(key.dst)) g.upsert_edge(edges_.at(key));
        }
    }
    return g;
}

GraphStats ExperienceGraph::stats() const {
    GraphStats s;
    for (int k = 0; k <= static_cast<int>(VertexKind::Auxiliary); ++k) s.vertices_by_kind[static_cast<VertexKind>(k)] = 0;
    for (int r = 0; r <= static_cast<int>(Relation::Synonym); ++r) s.edges_by_relation[static_cast<Relation>(r)] = 0;
    for (const auto& [id, v] : vertices_) ++s.vertices_by_kind[v.kind()];
    for (const auto& [key, e] : edges_) ++s.edges_by_relation[key.relation];
    s.vertex_count = vertices_.size();
    s.edge_count = edges_.size();
    return s;
}

// ---------------------------------------------------------------------------

std::vector<GraphViolation> validate_graph(const ExperienceGraph& graph, std::span<const AnomalyModel> models) {
    std::vector<GraphViolation> out;
    for (const auto& [key, e] : graph.edges()) {
        const std::string subject = key.src + " -" + std::string(to_string(key.relation)) + "-> " + key.dst;
        const Vertex* src = graph.find_vertex(key.src);
        const Vertex* dst = graph.find_vertex(key.dst);
        if (!src || !dst) out.push_back({subject, "dangling endpoint"});
        if (key.src == key.dst) out.push_back({subject, "self loop"});
        if (key.relation == Relation::Synonym && src && dst &&
            (src->kind() != VertexKind::Tag || dst->kind() != VertexKind::Tag)) {
            out.push_back({subject, "synonym between non-tag vertices"});
        }
        if (!(e.weight >= 0.0)) out.push_back({subject, "negative weight"});
    }
    if (!models.empty()) {
        std::set<std::string> ids;
        for (const auto& m : models) ids.insert(m.model_id);
        for (const auto& [id, v] : graph.vertices()) {
            if (const auto* t = std::get_if<TriggerPayload>(&v.payload); t && !ids.count(t->model_id)) {
                out.push_back({id, "trigger references unknown model '" + t->model_id + "'"});
            }
        }
    }
    return out;
}

std::string normalize_tag_label(std::string_view label) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : label) {
        if (std::isspace(c) || c == '_') {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    return out;
}

std::string tag_vertex_id(std::string_view label) {
    std::string norm = normalize_tag_label(label);
    std::replace(norm.begin(), norm.end(), ' ', '_');
    return "tag:" + norm;
}

std::string metric_vertex_id(std::string_view metric_id) { return "metric:" + std::string(metric_id); }
std::string tool_vertex_id(std::string_view tool_id) { return "tool:" + std::string(tool_id); }

namespace {

Edge make_edge(std::string src, Relation relation, std::string dst) {
    Edge e;
    e.src = std::move(src);
    e.relation = relation;
    e.dst = std::move(dst);
    return e;
}

// Inserts or extends a vertex's database tags without touching its payload.
void merge_vertex(ExperienceGraph& g, Vertex v) {
    if (const Vertex* existing = g.find_vertex(v.id)) {
        Vertex merged = *existing;
        merged.database_tags.insert(v.database_tags.begin(), v.database_tags.end());
        g.upsert_vertex(std::move(merged));
    } else {
        g.upsert_vertex(std::move(v));
    }
}

void attach_tags(ExperienceGraph& g, const std::string& annotated, const std::vector<std::string>& labels,
                 DatabaseKind db) {
    for (const auto& label : labels) {
        const std::string id = tag_vertex_id(label);
        merge_vertex(g, Vertex{id, {db}, TagPayload{label}});
        g.upsert_edge(make_edge(annotated, Relation::Relevance, id));
    }
}

} // namespace

ExperienceGraph init_from_models(std::span<const AnomalyModel> models) {
    ExperienceGraph g;
    std::set<std::string> seen;
    for (const auto& m : models) {
        if (!seen.insert(m.model_id).second) throw Error(ErrorCode::DuplicateModelId, m.model_id);
    }
    for (const auto& m : models) {
        const auto db = m.database_kind;
        const std::string trigger = m.trigger_vertex_id.empty() ? trigger_vertex_id_for(m.model_id) : m.trigger_vertex_id;
        g.upsert_vertex(Vertex{trigger, {db}, TriggerPayload{m.model_id}});
        attach_tags(g, trigger, m.tags, db);

        for (const auto& dm : m.metrics) {
            const std::string mid = metric_vertex_id(dm.id);
            merge_vertex(g, Vertex{mid, {db}, MetricPayload{dm.id, dm.unit}});
            g.upsert_edge(make_edge(mid, Relation::Relevance, trigger));
            attach_tags(g, mid, dm.tags, db);
        }

        const std::string symptom_id = "exp:" + m.model_id + ":symptom";
        g.upsert_vertex(Vertex{symptom_id, {db}, ExperiencePayload{m.symptom_description, "symptom"}});
        g.upsert_edge(make_edge(trigger, Relation::Containment, symptom_id));

        for (std::size_t i = 0; i < m.experience.size(); ++i) {
            const auto& f = m.experience[i];
            const std::string eid = "exp:" + m.model_id + ":" + std::to_string(i + 1);
            g.upsert_vertex(Vertex{eid, {db}, ExperiencePayload{f.text, f.source}});
            g.upsert_edge(make_edge(trigger, Relation::Containment, eid));
            for (const auto& metric : f.metrics) {
                g.upsert_edge(make_edge(eid, Relation::Diagnosis, metric_vertex_id(metric)));
            }
            attach_tags(g, eid, f.tags, db);
        }

        for (const auto& t : m.tools) {
            const std::string tid = tool_vertex_id(t.tool_id);
            merge_vertex(g, Vertex{tid, {db}, ToolPayload{t.tool_id}});
            g.upsert_edge(make_edge(trigger, Relation::Relevance, tid));
            attach_tags(g, tid, t.tags, db);
        }
    }
    return g;
}

std::size_t add_synonyms(ExperienceGraph& graph, std::span<const std::pair<std::string, std::string>> pairs) {
    std::size_t added = 0;
    for (const auto& [a, b] : pairs) {
        const std::string ia = tag_vertex_id(a);
        const std::string ib = tag_vertex_id(b);
        if (!graph.contains(ia)) graph.upsert_vertex(Vertex{ia, {DatabaseKind::Generic}, TagPayload{a}});
        if (!graph.contains(ib)) graph.upsert_vertex(Vertex{ib, {DatabaseKind::Generic}, TagPayload{b}});
        if (graph.between(ia, ib, Relation::Synonym).empty()) {
            graph.upsert_edge(make_edge(std::min(ia, ib), Relation::Synonym, std::max(ia, ib)));
            ++added;
        }
    }
    return added;
}

double profile_similarity(const MetricSource& source, const std::string& metric_a, const std::string& metric_b) {
    constexpr std::int64_t kGrid = 60;
    constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min() / 4;
    constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max() / 4;
    const auto a = source.get_window(metric_a, kMin, kMax);
    const auto b = source.get_window(metric_b, kMin, kMax);
    if (a.empty() || b.empty()) return 0.0;

    const bool identical = a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](const auto& x, const auto& y) {
                               return x.ts == y.ts && x.value == y.value;
                           });
    if (identical) return 1.0;

    const std::int64_t lo = std::max(a.front().ts, b.front().ts);
    const std::int64_t hi = std::min(a.back().ts, b.back().ts);
    if (hi - lo < kGrid) return 0.0;

    auto interpolate = [](const std::vector<MetricPoint>& pts, std::int64_t t) {
        auto it = std::lower_bound(pts.begin(), pts.end(), t, [](const MetricPoint& p, std::int64_t v) { return p.ts < v; });
        if (it == pts.end()) return pts.back().value;
        if (it->ts == t || it == pts.begin()) return it->value;
        const auto& p1 = *it;
        const auto& p0 = *(it - 1);
        const double f = static_cast<double>(t - p0.ts) / static_cast<double>(p1.ts - p0.ts);
        return p0.value + f * (p1.value - p0.value);
    };

    std::vector<double> xa;
    std::vector<double> xb;
    for (std::int64_t t = lo; t <= hi; t += kGrid) {
        xa.push_back(interpolate(a, t));
        xb.push_back(interpolate(b, t));
    }
    const double n = static_cast<double>(xa.size());
    const double ma = std::accumulate(xa.begin(), xa.end(), 0.0) / n;
    const double mb = std::accumulate(xb.begin(), xb.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < xa.size(); ++i) {
        sab += (xa[i] - ma) * (xb[i] - mb);
        saa += (xa[i] - ma) * (xa[i] - ma);
        sbb += (xb[i] - mb) * (xb[i] - mb);
    }
    if (saa <= 0.0 || sbb <= 0.0) return 0.0;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::size_t enrich(ExperienceGraph& graph, const MetricSource& source, double sim_threshold) {
    // Tag classes: transitive closure over Synonym edges.
    std::map<std::string, std::string> parent;
    std::function<std::string(const std::string&)> find = [&](const std::string& x) -> std::string {
        auto it = parent.find(x);
        if (it == parent.end() || it->second == x) return x;
        return it->second = find(it->second);
    };
    for (const auto& [id, v] : graph.vertices()) {
        if (v.kind() == VertexKind::Tag) parent[id] = id;
    }
    for (const auto& [key, e] : graph.edges()) {
        if (key.relation != Relation::Synonym) continue;
        auto ra = find(key.src);
        auto rb = find(key.dst);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }

    std::map<std::string, std::set<std::string>> members; // class root -> annotated vertices
    for (const auto& [key, e] : graph.edges()) {
        if (key.relation == Relation::Synonym) continue;
        const Vertex* s = graph.find_vertex(key.src);
        const Vertex* d = graph.find_vertex(key.dst);
        if (s->kind() == VertexKind::Tag && d->kind() != VertexKind::Tag) members[find(key.src)].insert(key.dst);
        if (d->kind() == VertexKind::Tag && s->kind() != VertexKind::Tag) members[find(key.dst)].insert(key.src);
    }

    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& [root, ids] : members) {
        for (auto i = ids.begin(); i != ids.end(); ++i) {
            for (auto j = std::next(i); j != ids.end(); ++j) pairs.emplace(*i, *j);
        }
    }

    std::vector<std::pair<std::string, std::string>> metric_vertices;
    for (const auto& [id, v] : graph.vertices()) {
        if (const auto* m = std::get_if<MetricPayload>(&v.payload); m && source.has_metric(m->metric_id)) {
            metric_vertices.emplace_back(id, m->metric_id);
        }
    }
    for (std::size_t i = 0; i < metric_vertices.size(); ++i) {
        for (std::size_t j = i + 1; j < metric_vertices.size(); ++j) {
            if (profile_similarity(source, metric_vertices[i].second, metric_vertices[j].second) >= sim_threshold) {
                pairs.emplace(std::min(metric_vertices[i].first, metric_vertices[j].first),
                              std::max(metric_vertices[i].first, metric_vertices[j].first));
            }
        }
    }

    std::size_t added = 0;
    for (const auto& [a, b] : pairs) {
        if (!graph.between(a, b, Relation::Relevance).empty()) continue;
        Edge e = make_edge(a, Relation::Relevance, b);
        e.weight = 1.0;
        e.created_by = CreatedBy::Enrichment;
        graph.upsert_edge(std::move(e));
        ++added;
    }
    return added;
}

std::vector<std::string> localize(const ExperienceGraph& graph, const LocalizeQuery& query) {
    std::set<std::string> wanted_tags;
    if (query.tag_labels) {
        for (const auto& l : *query.tag_labels) wanted_tags.insert(normalize_tag_label(l));
    }
    std::vector<std::string> out;
    for (const auto& [id, v] : graph.vertices()) {
        if (query.kinds && !query.kinds->count(v.kind())) continue;
        if (query.id_prefix && id.rfind(*query.id_prefix, 0) != 0) continue;
        if (query.database && !v.database_tags.count(*query.database) &&
            !v.database_tags.count(DatabaseKind::Generic)) {
            continue;
        }
        if (query.tag_labels) {
            bool hit = false;
            for (const Edge* e : graph.incident(id)) {
                const std::string& other = e->src == id ? e->dst : e->src;
                const Vertex* ov = graph.find_vertex(other);
                if (const auto* t = std::get_if<TagPayload>(&ov->payload);
                    t && wanted_tags.count(normalize_tag_label(t->label))) {
                    hit = true;
                    break;
                }
            }
            if (!hit) continue;
        }
        out.push_back(id);
    }
    return out;
}

Expansion expand(const ExperienceGraph& graph, const std::set<std::string>& seeds, const ExpandLimits& limits) {
    for (const auto& s : seeds) {
        if (!graph.contains(s)) throw Error(ErrorCode::UnknownSeed, s);
    }
    Expansion out;
    std::set<std::string> reached(seeds.begin(), seeds.end());
    for (const auto& s : seeds) out.depth[s] = 0;
    std::vector<std::string> frontier(seeds.begin(), seeds.end());

    for (int d = 1; d <= limits.max_depth && !frontier.empty() && reached.size() < limits.max_vertices; ++d) {
        std::map<std::string, std::string> candidates; // vertex -> first parent in frontier order
        for (const auto& u : frontier) {
            for (const Edge* e : graph.incident(u)) {
                if (e->weight < limits.min_edge_weight) continue;
                const std::string& v = e->src == u ? e->dst : e->src;
                if (reached.count(v)) continue;
                candidates.emplace(v, u);
            }
        }
        std::vector<std::string> next;
        for (const auto& [v, p] : candidates) {
            if (reached.size() >= limits.max_vertices) break;
            reached.insert(v);
            out.depth[v] = d;
            out.parent[v] = p;
            next.push_back(v);
        }
        frontier = std::move(next);
    }
    out.subgraph = graph.induced(reached);
    return out;
}

std::vector<MetricViewEntry> aggregate_metrics(const ExperienceGraph& subgraph) {
    std::map<std::string, std::vector<std::string>> view;
    for (const auto& [id, v] : subgraph.vertices()) {
        if (const auto* m = std::get_if<MetricPayload>(&v.payload)) view[m->metric_id].push_back(id);
    }
    std::vector<MetricViewEntry> out;
    out.reserve(view.size());
    for (auto& [metric, prov] : view) out.push_back({metric, std::move(prov)});
    return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json payload_to_json(const VertexPayload& p) {
    return std::visit(
        [](const auto& v) -> json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, TriggerPayload>) return {{"model_id", v.model_id}};
            else if constexpr (std::is_same_v<T, MetricPayload>) return {{"metric_id", v.metric_id}, {"unit", v.unit}};
            else if constexpr (std::is_same_v<T, ExperiencePayload>) return {{"text", v.text}, {"source", v.source}};
            else if constexpr (std::is_same_v<T, ToolPayload>) return {{"tool_id", v.tool_id}};
            else if constexpr (std::is_same_v<T, TagPayload>) return {{"label", v.label}};
            else return {{"attributes", v.attributes}};
        },
        p);
}

VertexPayload payload_from_json(VertexKind kind, const json& j) {
    switch (kind) {
    case VertexKind::Trigger: return TriggerPayload{j.at("model_id").get<std::string>()};
    case VertexKind::Metric: return MetricPayload{j.at("metric_id").get<std::string>(), j.at("unit").get<std::string>()};
    case VertexKind::Experience:
        return ExperiencePayload{j.at("text").get<std::string>(), j.at("source").get<std::string>()};
    case VertexKind::Tool: return ToolPayload{j.at("tool_id").get<std::string>()};
    case VertexKind::Tag: return TagPayload{j.at("label").get<std::string>()};
    case VertexKind::Auxiliary:
        return AuxiliaryPayload{j.at("attributes").get<std::map<std::string, std::string>>()};
    }
    return AuxiliaryPayload{};
}

} // namespace

std::string graph_to_string(const ExperienceGraph& graph) {
    std::string out = "{\"version\":1,\n\"vertices\":[\n";
    bool first = true;
    for (const auto& [id, v] : graph.vertices()) {
        json tags = json::array();
        for (auto db : v.database_tags) tags.push_back(std::string(to_string(db)));
        json j = {{"id", id}, {"kind", std::string(to_string(v.kind()))}, {"database_tags", tags},
                  {"payload", payload_to_json(v.payload)}};
        if (!first) out += ",\n";
        first = false;
        out += j.dump();
    }
    out += "\n],\n\"edges\":[\n";
    first = true;
    for (const auto& [key, e] : graph.edges()) {
        json attrs = {{"weight", e.weight}, {"created_by", std::string(to_string(e.created_by))}};
        for (const auto& [k, v] : e.extra) attrs[k] = v;
        json j = {{"src", key.src}, {"relation", std::string(to_string(key.relation))}, {"dst", key.dst},
                  {"attributes", attrs}};
        if (!first) out += ",\n";
        first = false;
        out += j.dump();
    }
    out += "\n]}\n";
    return out;
}

ExperienceGraph graph_from_string(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::CorruptGraphFile, std::string("unparsable: ") + e.what());
    }
    ExperienceGraph g;
    try {
        if (!doc.is_object() || doc.value("version", 0) != 1) {
            throw Error(ErrorCode::CorruptGraphFile, "missing or unsupported version");
        }
        if (!doc.contains("vertices") || !doc["vertices"].is_array() || !doc.contains("edges") ||
            !doc["edges"].is_array()) {
            throw Error(ErrorCode::CorruptGraphFile, "vertices/edges arrays missing");
        }
        for (const auto& jv : doc["vertices"]) {
            Vertex v;
            v.id = jv.at("id").get<std::string>();
            const auto kind = parse_vertex_kind(jv.at("kind").get<std::string>());
            for (const auto& t : jv.at("database_tags")) v.database_tags.insert(parse_database_kind(t.get<std::string>()));
            v.payload = payload_from_json(kind, jv.at("payload"));
            if (!g.upsert_vertex(std::move(v))) throw Error(ErrorCode::CorruptGraphFile, "duplicate vertex id");
        }
        for (const auto& je : doc["edges"]) {
            Edge e;
            e.src = je.at("src").get<std::string>();
            e.relation = parse_relation(je.at("relation").get<std::string>());
            e.dst = je.at("dst").get<std::string>();
            const auto& attrs = je.at("attributes");
            e.weight = attrs.at("weight").get<double>();
            e.created_by = parse_created_by(attrs.at("created_by").get<std::string>());
            for (auto it = attrs.begin(); it != attrs.end(); ++it) {
                if (it.key() == "weight" || it.key() == "created_by") continue;
                e.extra[it.key()] = it.value().is_string() ? it.value().get<std::string>() : it.value().dump();
            }
            if (!g.upsert_edge(std::move(e))) throw Error(ErrorCode::CorruptGraphFile, "duplicate edge");
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::CorruptGraphFile, e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::CorruptGraphFile) throw;
        throw Error(ErrorCode::CorruptGraphFile, e.what());
    }
    return g;
}

void save_graph(const ExperienceGraph& graph, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    const auto text = graph_to_string(graph);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

ExperienceGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return graph_from_string(ss.str());
}

} // namespace omx
