#include "omx/errors.hpp"
#include "omx/graph.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <queue>
#include <random>
#include <sstream>

using namespace omx;
using omx::testing::ending_at;
using omx::testing::model_named;
using omx::testing::shipped_models;
using omx::testing::store_from;

namespace {

Vertex tag(const std::string& label) { return {tag_vertex_id(label), {DatabaseKind::Generic}, TagPayload{label}}; }
Vertex metric(const std::string& id) { return {metric_vertex_id(id), {DatabaseKind::Oracle}, MetricPayload{id, ""}}; }
Edge edge(std::string a, Relation r, std::string b, double w = 1.0) {
    Edge e;
    e.src = std::move(a);
    e.relation = r;
    e.dst = std::move(b);
    e.weight = w;
    return e;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Plain layered BFS over an explicit adjacency list.
std::set<std::string> bfs_oracle(const ExperienceGraph& g, const std::set<std::string>& seeds, int max_depth,
                                 std::size_t budget, double min_w) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& [k, e] : g.edges()) {
        if (e.weight < min_w) continue;
        adj[k.src].insert(k.dst);
        adj[k.dst].insert(k.src);
    }
    std::set<std::string> reached = seeds;
    std::set<std::string> layer = seeds;
    for (int d = 0; d < max_depth; ++d) {
        std::set<std::string> next;
        for (const auto& u : layer) {
            for (const auto& v : adj[u]) {
                if (!reached.count(v)) next.insert(v);
            }
        }
        std::set<std::string> admitted;
        for (const auto& v : next) {
            if (reached.size() >= budget) break;
            reached.insert(v);
            admitted.insert(v);
        }
        layer = admitted;
    }
    return reached;
}

ExperienceGraph random_graph(std::mt19937_64& rng, int n, int m) {
    ExperienceGraph g;
    for (int i = 0; i < n; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "v%03d", i);
        g.upsert_vertex({buf, {DatabaseKind::Generic}, AuxiliaryPayload{}});
    }
    for (int i = 0; i < m; ++i) {
        const auto a = rng() % static_cast<unsigned>(n);
        const auto b = rng() % static_cast<unsigned>(n);
        if (a == b) continue;
        char sa[16], sb[16];
        std::snprintf(sa, sizeof sa, "v%03d", static_cast<int>(a));
        std::snprintf(sb, sizeof sb, "v%03d", static_cast<int>(b));
        g.upsert_edge(edge(sa, Relation::Relevance, sb, static_cast<double>(rng() % 4)));
    }
    return g;
}

} // namespace

TEST(Graph, SeedGraphFromShippedModels) {
    const auto models = shipped_models();
    const auto g = init_from_models(models);
    EXPECT_TRUE(validate_graph(g, models).empty());
    const auto& lfs = model_named(models, "LOG_FILE_SYNC");
    const auto trig = lfs.trigger_vertex_id;
    ASSERT_TRUE(g.contains(trig));
    EXPECT_TRUE(g.find_edge({metric_vertex_id("avg_log_sync_time"), Relation::Relevance, trig}));
    EXPECT_TRUE(g.find_edge({trig, Relation::Relevance, tool_vertex_id("logsync_verifier")}));
    // symptom plus one vertex per experience fragment hang off the trigger
    std::size_t contained = 0;
    for (const Edge* e : g.incident(trig)) contained += e->relation == Relation::Containment ? 1 : 0;
    EXPECT_EQ(contained, lfs.experience.size() + 1);
    // the same metric declared by two models yields one vertex
    EXPECT_EQ(g.stats().vertices_by_kind.at(VertexKind::Trigger), models.size());
}

TEST(Graph, DuplicateModelIdRejected) {
    auto models = shipped_models();
    models.push_back(models.front());
    try {
        init_from_models(models);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DuplicateModelId);
    }
}

TEST(Graph, EdgeInvariants) {
    ExperienceGraph g;
    g.upsert_vertex(tag("Locks"));
    g.upsert_vertex(metric("x"));
    auto code_of = [&](Edge e) {
        try {
            g.upsert_edge(std::move(e));
        } catch (const Error& err) {
            return err.code();
        }
        return ErrorCode::InvalidArgument;
    };
    EXPECT_EQ(code_of(edge(tag_vertex_id("Locks"), Relation::Relevance, tag_vertex_id("Locks"))), ErrorCode::SelfLoop);
    EXPECT_EQ(code_of(edge(metric_vertex_id("x"), Relation::Synonym, tag_vertex_id("Locks"))),
              ErrorCode::SynonymKindViolation);
    EXPECT_EQ(code_of(edge(metric_vertex_id("x"), Relation::Relevance, "nowhere")), ErrorCode::DanglingEndpoint);
    EXPECT_THROW(g.upsert_vertex({metric_vertex_id("x"), {}, TagPayload{"x"}}), Error);
    EXPECT_THROW(g.set_weight({"a", Relation::Relevance, "b"}, 1.0), Error);
}

TEST(Graph, UpsertMergesDatabasesAndKeepsCreatedBy) {
    ExperienceGraph g;
    EXPECT_TRUE(g.upsert_vertex({"m", {DatabaseKind::Oracle}, MetricPayload{"m", "ms"}}));
    EXPECT_FALSE(g.upsert_vertex({"m", {DatabaseKind::DM8}, MetricPayload{"m", "ms"}}));
    EXPECT_EQ(g.find_vertex("m")->database_tags, (std::set<DatabaseKind>{DatabaseKind::Oracle, DatabaseKind::DM8}));
    g.upsert_vertex(tag("a"));
    auto e = edge("m", Relation::Relevance, tag_vertex_id("a"), 1.0);
    e.created_by = CreatedBy::Enrichment;
    EXPECT_TRUE(g.upsert_edge(e));
    e.created_by = CreatedBy::Manual;
    e.weight = 3;
    EXPECT_FALSE(g.upsert_edge(e));
    const Edge* got = g.find_edge(e.key());
    EXPECT_EQ(got->weight, 3.0);
    EXPECT_EQ(got->created_by, CreatedBy::Enrichment);
}

TEST(Graph, TagNormalization) {
    EXPECT_EQ(normalize_tag_label("  Concurrent__Transactions "), "concurrent transactions");
    EXPECT_EQ(tag_vertex_id("Lock  Contention"), tag_vertex_id("lock_contention"));
}

TEST(Graph, SynonymsAndLocalizeByTag) {
    const auto models = shipped_models();
    auto g = init_from_models(models);
    const std::vector<std::pair<std::string, std::string>> syn{{"Concurrent Transactions", "Concurrency"}};
    EXPECT_EQ(add_synonyms(g, syn), 1u);
    EXPECT_EQ(add_synonyms(g, syn), 0u);
    EXPECT_TRUE(validate_graph(g, models).empty());

    LocalizeQuery q;
    q.kinds = std::set<VertexKind>{VertexKind::Metric};
    q.tag_labels = std::set<std::string>{"concurrent transactions"};
    const auto ids = localize(g, q);
    EXPECT_EQ(ids, (std::vector<std::string>{metric_vertex_id("avg_log_sync_time"), metric_vertex_id("redo_buffer_busy")}));

    LocalizeQuery pg;
    pg.kinds = std::set<VertexKind>{VertexKind::Trigger};
    pg.database = DatabaseKind::PostgreSQL;
    EXPECT_EQ(localize(g, pg), (std::vector<std::string>{trigger_vertex_id_for("DIRTY_PAGE_WRITES")}));
}

TEST(Graph, ExpandMatchesBfsOracle) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        const auto g = random_graph(rng, 40, 70);
        std::set<std::string> seeds{"v000", "v017"};
        const int depth = 1 + static_cast<int>(rng() % 4);
        const std::size_t budget = 3 + rng() % 40;
        const double min_w = static_cast<double>(rng() % 3);
        const auto ex = expand(g, seeds, {depth, budget, min_w});
        std::set<std::string> got;
        for (const auto& [id, v] : ex.subgraph.vertices()) got.insert(id);
        ASSERT_EQ(got, bfs_oracle(g, seeds, depth, budget, min_w)) << "trial " << trial;
        for (const auto& [v, p] : ex.parent) EXPECT_EQ(ex.depth.at(p) + 1, ex.depth.at(v));
        // induced: every original edge between reached vertices is kept
        for (const auto& [k, e] : g.edges()) {
            if (got.count(k.src) && got.count(k.dst)) {
                EXPECT_TRUE(ex.subgraph.find_edge(k));
            }
        }
    }
    EXPECT_THROW(expand(ExperienceGraph{}, {"ghost"}, {}), Error);
}

TEST(Graph, AggregateMetricsGroupsByMetricId) {
    ExperienceGraph g;
    g.upsert_vertex({"m1", {}, MetricPayload{"cpu", "%"}});
    g.upsert_vertex({"m2", {}, MetricPayload{"cpu", "%"}});
    g.upsert_vertex({"m3", {}, MetricPayload{"io", ""}});
    const auto view = aggregate_metrics(g);
    ASSERT_EQ(view.size(), 2u);
    EXPECT_EQ(view[0], (MetricViewEntry{"cpu", {"m1", "m2"}}));
}

TEST(Graph, EnrichLinksSharedTagsAndSimilarProfiles) {
    ExperienceGraph g;
    g.upsert_vertex(metric("a"));
    g.upsert_vertex(metric("b"));
    g.upsert_vertex(metric("c"));
    const std::int64_t t = 1700000000;
    std::vector<double> rise, rise2, noise;
    std::mt19937_64 rng(1);
    for (int i = 0; i < 30; ++i) {
        rise.push_back(i);
        rise2.push_back(3.0 * i + 7);
        noise.push_back(static_cast<double>(rng() % 100));
    }
    const auto store = store_from({{"a", ending_at(t, 60, rise)}, {"b", ending_at(t, 60, rise2)}, {"c", ending_at(t, 60, noise)}});
    EXPECT_NEAR(profile_similarity(store, "a", "b"), 1.0, 1e-9);
    EXPECT_LT(profile_similarity(store, "a", "c"), 0.9);
    const auto added = enrich(g, store, 0.9);
    EXPECT_EQ(added, 1u);
    const auto between = g.between(metric_vertex_id("a"), metric_vertex_id("b"), Relation::Relevance);
    ASSERT_EQ(between.size(), 1u);
    EXPECT_EQ(between[0]->created_by, CreatedBy::Enrichment);
    EXPECT_EQ(enrich(g, store, 0.9), 0u);
}

TEST(Graph, PersistenceRoundTripIsByteStable) {
    const auto models = shipped_models();
    auto g = init_from_models(models);
    add_synonyms(g, std::vector<std::pair<std::string, std::string>>{{"Locks", "Lock Contention"}});
    Edge extra = edge(trigger_vertex_id_for("CPU_SPIKE"), Relation::Relevance, trigger_vertex_id_for("LOG_FILE_SYNC"), 2.5);
    extra.created_by = CreatedBy::Evolution;
    extra.extra["note"] = "x";
    g.upsert_edge(extra);
    const auto dir = omx::testing::scratch_dir("graph");
    save_graph(g, (dir / "a.json").string());
    const auto back = load_graph((dir / "a.json").string());
    EXPECT_EQ(back, g);
    save_graph(back, (dir / "b.json").string());
    EXPECT_EQ(slurp(dir / "a.json"), slurp(dir / "b.json"));
}

TEST(Graph, CorruptFilesAreRejected) {
    const auto dir = omx::testing::scratch_dir("graph_corrupt");
    auto code_for = [&](const std::string& text) {
        std::ofstream(dir / "g.json") << text;
        try {
            load_graph((dir / "g.json").string());
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    EXPECT_EQ(code_for("garbage"), ErrorCode::CorruptGraphFile);
    EXPECT_EQ(code_for(""), ErrorCode::CorruptGraphFile);
    auto good = graph_to_string(init_from_models(shipped_models()));
    EXPECT_NO_THROW(graph_from_string(good));
    auto truncated = good.substr(0, good.size() / 2);
    EXPECT_THROW(graph_from_string(truncated), Error);
    EXPECT_THROW(load_graph((dir / "missing.json").string()), Error);
}
