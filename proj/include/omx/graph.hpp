#pragma once

#include "omx/anomaly.hpp"
#include "omx/metric_store.hpp"

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace omx {

enum class VertexKind { Trigger, Metric, Experience, Tool, Tag, Auxiliary };
enum class Relation { Containment, Relevance, Diagnosis, Synonym };
enum class CreatedBy { Manual, Enrichment, Evolution };

std::string_view to_string(VertexKind kind);
std::string_view to_string(Relation relation);
std::string_view to_string(CreatedBy created_by);
VertexKind parse_vertex_kind(std::string_view text);
Relation parse_relation(std::string_view text);
CreatedBy parse_created_by(std::string_view text);

struct TriggerPayload {
    std::string model_id;
    bool operator==(const TriggerPayload&) const = default;
};
struct MetricPayload {
    std::string metric_id;
    std::string unit;
    bool operator==(const MetricPayload&) const = default;
};
struct ExperiencePayload {
    std::string text;
    std::string source;
    bool operator==(const ExperiencePayload&) const = default;
};
struct ToolPayload {
    std::string tool_id;
    bool operator==(const ToolPayload&) const = default;
};
struct TagPayload {
    std::string label;
    bool operator==(const TagPayload&) const = default;
};
struct AuxiliaryPayload {
    std::map<std::string, std::string> attributes;
    bool operator==(const AuxiliaryPayload&) const = default;
};

// Alternative order matches VertexKind.
using VertexPayload =
    std::variant<TriggerPayload, MetricPayload, ExperiencePayload, ToolPayload, TagPayload, AuxiliaryPayload>;

struct Vertex {
    std::string id;
    std::set<DatabaseKind> database_tags;
    VertexPayload payload;

    VertexKind kind() const { return static_cast<VertexKind>(payload.index()); }
    bool operator==(const Vertex&) const = default;
};

struct EdgeKey {
    std::string src;
    Relation relation = Relation::Relevance;
    std::string dst;
    auto operator<=>(const EdgeKey&) const = default;
    bool operator==(const EdgeKey&) const = default;
};

struct Edge {
    std::string src;
    Relation relation = Relation::Relevance;
    std::string dst;
    double weight = 1.0;
    CreatedBy created_by = CreatedBy::Manual;
    std::map<std::string, std::string> extra; // further attributes

    EdgeKey key() const { return {src, relation, dst}; }
    bool operator==(const Edge&) const = default;
};

struct GraphStats {
    std::map<VertexKind, std::size_t> vertices_by_kind;
    std::map<Relation, std::size_t> edges_by_relation;
    std::size_t vertex_count = 0;
    std::size_t edge_count = 0;
};

// Heterogeneous directed graph of O&M experience. Not internally
// synchronized: mutate from a single writer, query copies or const refs.
class ExperienceGraph {
public:
    // Returns true if inserted, false if an existing vertex was updated.
    // Changing the kind of an existing vertex throws InvalidArgument.
    bool upsert_vertex(Vertex v);
    // Returns true if inserted. An update overwrites weight, merges extra
    // attributes and keeps the original created_by.
    bool upsert_edge(Edge e);
    bool remove_edge(const EdgeKey& key);

    const Vertex* find_vertex(const std::string& id) const;
    const Edge* find_edge(const EdgeKey& key) const;
    bool contains(const std::string& id) const { return vertices_.count(id) > 0; }

    const std::map<std::string, Vertex>& vertices() const { return vertices_; }
    const std::map<EdgeKey, Edge>& edges() const { return edges_; }

    // Edges touching the vertex in either direction, ordered by key.
    std::vector<const Edge*> incident(const std::string& id) const;
    // Edges between a and b in either direction with the given relation.
    std::vector<const Edge*> between(const std::string& a, const std::string& b, Relation relation) const;

    // Sets the weight of an existing edge; throws DanglingEndpoint if absent.
    void set_weight(const EdgeKey& key, double weight);

    ExperienceGraph induced(const std::set<std::string>& ids) const;

    std::size_t vertex_count() const { return vertices_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    GraphStats stats() const;

    bool operator==(const ExperienceGraph& other) const {
        return vertices_ == other.vertices_ && edges_ == other.edges_;
    }

private:
    std::map<std::string, Vertex> vertices_;
    std::map<EdgeKey, Edge> edges_;
    std::unordered_map<std::string, std::vector<EdgeKey>> adjacency_;
};

struct GraphViolation {
    std::string subject;
    std::string reason;
};

// Structural checks plus, when models are given, that every Trigger payload
// references a known model.
std::vector<GraphViolation> validate_graph(const ExperienceGraph& graph,
                                           std::span<const AnomalyModel> models = {});

std::string normalize_tag_label(std::string_view label);
std::string tag_vertex_id(std::string_view label);
std::string metric_vertex_id(std::string_view metric_id);
std::string tool_vertex_id(std::string_view tool_id);

ExperienceGraph init_from_models(std::span<const AnomalyModel> models);
// Adds Synonym edges between (possibly new) Tag vertices.
std::size_t add_synonyms(ExperienceGraph& graph, std::span<const std::pair<std::string, std::string>> pairs);

// Pearson correlation of the two series resampled onto a common 1-minute grid
// over their overlapping range. Constant series score 0 unless identical.
double profile_similarity(const MetricSource& source, const std::string& metric_a, const std::string& metric_b);

// Adds Relevance edges (created_by = enrichment) between vertices sharing a
// tag class and between Metric vertices whose similarity >= sim_threshold.
std::size_t enrich(ExperienceGraph& graph, const MetricSource& source, double sim_threshold);

struct LocalizeQuery {
    std::optional<std::set<VertexKind>> kinds;
    std::optional<std::set<std::string>> tag_labels;
    std::optional<DatabaseKind> database;
    std::optional<std::string> id_prefix;
};

// Conjunctive filter, ids ascending. A vertex tagged Generic matches every
// database.
std::vector<std::string> localize(const ExperienceGraph& graph, const LocalizeQuery& query);

struct ExpandLimits {
    int max_depth = 2;
    std::size_t max_vertices = 64;
    double min_edge_weight = 0.0;
};

struct Expansion {
    ExperienceGraph subgraph;                // induced on the reached vertices
    std::map<std::string, int> depth;        // BFS depth of every reached vertex
    std::map<std::string, std::string> parent; // BFS tree parent (seeds have none)
};

// Breadth-first closure over edges in both directions. Frontier candidates are
// admitted in ascending id order until max_vertices is reached. Throws
// UnknownSeed.
Expansion expand(const ExperienceGraph& graph, const std::set<std::string>& seeds, const ExpandLimits& limits);

struct MetricViewEntry {
    std::string metric_id;
    std::vector<std::string> provenance; // Metric vertex ids
    bool operator==(const MetricViewEntry&) const = default;
};

std::vector<MetricViewEntry> aggregate_metrics(const ExperienceGraph& subgraph);

std::string graph_to_string(const ExperienceGraph& graph);
ExperienceGraph graph_from_string(std::string_view text); // throws CorruptGraphFile
void save_graph(const ExperienceGraph& graph, const std::string& path);
ExperienceGraph load_graph(const std::string& path);

} // namespace omx
