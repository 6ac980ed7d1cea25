// omx: command line entry point for ingest, detection, graph management,
// diagnosis, simulation and evaluation.

#include "omx/config.hpp"
#include "omx/errors.hpp"
#include "omx/evaluation.hpp"
#include "omx/pipeline.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::string config_path;
    std::string data_dir;
    bool json_output = false;
    std::string llm_mode;
    std::string llm_url;
    std::string llm_model;
    int llm_timeout = 0;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw omx::Error(omx::ErrorCode::IoError, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw omx::Error(omx::ErrorCode::IoError, "cannot write " + path);
    out << text;
    if (!out) throw omx::Error(omx::ErrorCode::IoError, "write failed: " + path);
}

void persist_graph(const omx::ExperienceGraph& g, const std::string& path) {
    if (auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
    omx::save_graph(g, path);
}

omx::EngineConfig load_engine_config(const Globals& g) {
    std::string path = g.config_path;
    if (path.empty()) {
        if (const char* env = std::getenv("OMX_CONFIG"); env && *env) path = env;
    }
    omx::EngineConfig cfg = path.empty() ? omx::EngineConfig{} : omx::load_config(path);
    if (!g.data_dir.empty()) cfg.paths.data_dir = g.data_dir;
    if (fs::path(cfg.paths.graph_file).is_relative()) {
        cfg.paths.graph_file = (fs::path(cfg.paths.data_dir) / cfg.paths.graph_file).string();
    }
    if (!g.llm_mode.empty()) cfg.llm.mode = omx::parse_llm_mode(g.llm_mode);
    if (!g.llm_url.empty()) cfg.llm.base_url = g.llm_url;
    if (!g.llm_model.empty()) cfg.llm.model_name = g.llm_model;
    if (g.llm_timeout > 0) cfg.llm.timeout_seconds = g.llm_timeout;
    cfg.llm.validate();
    return cfg;
}

std::string store_path(const omx::EngineConfig& cfg) { return (fs::path(cfg.paths.data_dir) / "store.jsonl").string(); }
std::string events_path(const omx::EngineConfig& cfg) { return (fs::path(cfg.paths.data_dir) / "events.jsonl").string(); }

omx::MetricStore load_store(const omx::EngineConfig& cfg) {
    omx::MetricStore store;
    const auto path = store_path(cfg);
    if (fs::exists(path)) store.ingest_text(read_file(path), omx::IngestFormat::JSONL);
    return store;
}

std::vector<std::pair<std::string, std::string>> load_synonyms(const std::string& models_dir) {
    std::vector<std::pair<std::string, std::string>> pairs;
    const auto path = fs::path(models_dir).parent_path() / "synonyms.json";
    if (!fs::exists(path)) return pairs;
    const auto doc = json::parse(read_file(path.string()));
    for (const auto& p : doc.at("synonyms")) pairs.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    return pairs;
}

omx::ExperienceGraph seed_graph(const std::vector<omx::AnomalyModel>& models, const std::string& models_dir) {
    auto g = omx::init_from_models(models);
    omx::add_synonyms(g, load_synonyms(models_dir));
    return g;
}

omx::ExperienceGraph current_graph(const omx::EngineConfig& cfg, const std::vector<omx::AnomalyModel>& models) {
    if (fs::exists(cfg.paths.graph_file)) return omx::load_graph(cfg.paths.graph_file);
    spdlog::info("no graph at {}; using the seed graph built from {}", cfg.paths.graph_file, cfg.paths.models_dir);
    return seed_graph(models, cfg.paths.models_dir);
}

void print_stats(const omx::ExperienceGraph& g, bool as_json) {
    const auto s = g.stats();
    if (as_json) {
        json j = {{"vertices", s.vertex_count}, {"edges", s.edge_count}};
        for (const auto& [k, n] : s.vertices_by_kind) j["vertices_by_kind"][std::string(omx::to_string(k))] = n;
        for (const auto& [r, n] : s.edges_by_relation) j["edges_by_relation"][std::string(omx::to_string(r))] = n;
        std::cout << j.dump() << "\n";
        return;
    }
    std::cout << "vertices " << s.vertex_count << "\n";
    for (const auto& [k, n] : s.vertices_by_kind) std::cout << "  " << omx::to_string(k) << " " << n << "\n";
    std::cout << "edges " << s.edge_count << "\n";
    for (const auto& [r, n] : s.edges_by_relation) std::cout << "  " << omx::to_string(r) << " " << n << "\n";
}

std::vector<omx::AnomalyEvent> read_events(const std::string& path) {
    std::vector<omx::AnomalyEvent> out;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        out.push_back(json::parse(line).get<omx::AnomalyEvent>());
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_st("omx"));
    spdlog::set_pattern("omx: %l: %v");

    CLI::App app{"omx - experience-graph driven database anomaly diagnosis"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    app.add_option("--config", g.config_path, "Engine configuration file (default: $OMX_CONFIG)");
    app.add_option("--data-dir", g.data_dir, "Directory holding store.jsonl, events.jsonl and graph.json");
    app.add_flag("--json", g.json_output, "Line-delimited JSON output");

    std::function<void()> action;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Merge JSONL or CSV metric files into the store");
    std::vector<std::string> ingest_files;
    std::string ingest_format;
    ingest->add_option("files", ingest_files, "Metric files")->required()->check(CLI::ExistingFile);
    ingest->add_option("--format", ingest_format, "jsonl or csv (default: by extension)")
        ->check(CLI::IsMember({"jsonl", "csv"}));
    ingest->callback([&] {
        action = [&] {
            const auto cfg = load_engine_config(g);
            auto store = load_store(cfg);
            std::size_t total = 0;
            for (const auto& f : ingest_files) {
                const bool csv = ingest_format.empty() ? fs::path(f).extension() == ".csv" : ingest_format == "csv";
                total += store.ingest_text(read_file(f), csv ? omx::IngestFormat::CSV : omx::IngestFormat::JSONL);
            }
            write_file(store_path(cfg), store.to_jsonl());
            if (g.json_output) {
                std::cout << json{{"ingested", total}, {"points", store.point_count()}, {"store", store_path(cfg)}}.dump()
                          << "\n";
            } else {
                std::cout << "ingested " << total << " records; store holds " << store.point_count() << " points\n";
            }
        };
    });

    // detect
    auto* detect = app.add_subcommand("detect", "Evaluate anomaly models against the store");
    std::int64_t now = 0;
    std::int64_t from = 0;
    std::int64_t to = 0;
    std::int64_t step = 60;
    auto* now_opt = detect->add_option("--now", now, "Evaluation time (unix seconds)");
    auto* from_opt = detect->add_option("--from", from, "Scan start (unix seconds)");
    detect->add_option("--to", to, "Scan end (unix seconds)");
    detect->add_option("--step", step, "Scan step in seconds")->check(CLI::PositiveNumber);
    now_opt->excludes(from_opt);
    detect->callback([&] {
        if (!*now_opt && !*from_opt) throw CLI::RequiredError("--now or --from/--to");
        action = [&] {
            const auto cfg = load_engine_config(g);
            const auto models = omx::load_models(cfg.paths.models_dir);
            const auto store = load_store(cfg);
            omx::DetectResult r = *now_opt ? omx::detect(models, store, now, cfg.trend)
                                           : omx::detect_range(models, store, from, to, step, cfg.trend);
            for (const auto& d : r.diagnostics) {
                spdlog::warn("model {}: {} {}", d.model_id, omx::to_string(d.code), d.message);
            }
            std::string lines;
            for (const auto& e : r.events) lines += json(e).dump() + "\n";
            write_file(events_path(cfg), lines);
            for (const auto& e : r.events) {
                if (g.json_output) {
                    std::cout << json(e).dump() << "\n";
                } else {
                    std::cout << e.event_id() << " window " << e.window_start << ".." << e.window_end << "\n";
                    for (const auto& leaf : e.evidence) std::cout << "  " << omx::render_leaf(leaf) << "\n";
                }
            }
            if (!g.json_output) std::cout << r.events.size() << " event(s)\n";
        };
    });

    // graph
    auto* graph = app.add_subcommand("graph", "Build, enrich, inspect and persist the experience graph");
    graph->require_subcommand(1);
    graph->fallthrough();
    auto* g_build = graph->add_subcommand("build", "Build the seed graph from the anomaly models");
    auto* g_enrich = graph->add_subcommand("enrich", "Add tag and similarity edges using the store");
    double sim_threshold = 0.9;
    g_enrich->add_option("--threshold", sim_threshold, "Profile similarity threshold")->check(CLI::Range(-1.0, 1.0));
    auto* g_stats = graph->add_subcommand("stats", "Vertex and edge counts");
    auto* g_query = graph->add_subcommand("query", "Localize vertices and optionally expand around them");
    std::vector<std::string> q_kinds;
    std::vector<std::string> q_tags;
    std::string q_db;
    std::string q_prefix;
    int q_depth = 0;
    std::size_t q_max = 64;
    g_query->add_option("--kind", q_kinds, "Vertex kinds (Trigger, Metric, Experience, Tool, Tag, Auxiliary)");
    g_query->add_option("--tag", q_tags, "Tag labels");
    g_query->add_option("--database", q_db, "Database kind");
    g_query->add_option("--prefix", q_prefix, "Vertex id prefix");
    g_query->add_option("--expand", q_depth, "Expand the matches to this depth")->check(CLI::NonNegativeNumber);
    g_query->add_option("--max-vertices", q_max, "Expansion vertex budget");
    auto* g_save = graph->add_subcommand("save", "Write the current graph in canonical form");
    std::string save_out;
    g_save->add_option("--out", save_out, "Destination file")->required();
    auto* g_load = graph->add_subcommand("load", "Validate a graph file and install it as the current graph");
    std::string load_in;
    g_load->add_option("--in", load_in, "Graph file")->required()->check(CLI::ExistingFile);

    g_build->callback([&] {
        action = [&] {
            const auto cfg = load_engine_config(g);
            const auto models = omx::load_models(cfg.paths.models_dir);
            const auto graph_v = seed_graph(models, cfg.paths.models_dir);
            persist_graph(graph_v, cfg.paths.graph_file);
            print_stats(graph_v, g.json_output);
        };
    });
    g_enrich->callback([&] {
        action = [&] {
            const auto cfg = load_engine_config(g);
            const auto models = omx::load_models(cfg.paths.models_dir);
            auto graph_v = current_graph(cfg, models);
            const auto store = load_store(cfg);
            const auto added = omx::enrich(graph_v, store, sim_threshold);
            persist_graph(graph_v, cfg.paths.graph_file);
            if (g.json_output) {
                std::cout << json{{"added_edges", added}}.dump() << "\n";
            } else {
                std::cout << "added " << added << " enrichment edge(s)\n";
            }
        };
    });
    g_stats->callback([&] {
        action = [&] {
            const auto cfg = load_engine_config(g);
            print_stats(current_graph(cfg, omx::load_models(cfg.paths.models_dir)), g.json_output);
        };
    });
    g_query->callback([&] {
        action = [&] {
            const auto cfg = load_engine_config(g);
            const auto graph_v = current_graph(cfg, omx::load_models(cfg.paths.models_dir));
            omx::LocalizeQuery q;
            if (!q_kinds.empty()) {
                q.kinds.emplace();
                for (const auto& k : q_kinds) q.kinds->insert(omx::parse_vertex_kind(k));
            }
            if (!q_tags.empty()) q.tag_labels = std::set<std::string>(q_tags.begin(), q_tags.end());
            if (!q_db.empty()) q.database = omx::parse_database_kind(q_db);
            if (!q_prefix.empty()) q.id_prefix = q_prefix;
            auto ids = omx::localize(graph_v, q);
            if (q_depth > 0 && !ids.empty()) {
                const auto ex = omx::expand(graph_v, std::set<std::string>(ids.begin(), ids.end()),
                                            omx::ExpandLimits{q_depth, q_max, 0.0});
                ids.clear();
                for (const auto& [id, v] : ex.subgraph.vertices()) ids.push_back(id);
                const auto view = omx::aggregate_metrics(ex.subgraph);
                for (const auto& entry : view) spdlog::info("metric view: {}", entry.metric_id);
            }
            for (const auto& id : ids) {
                if (g.json_output) {
                    std::cout << json{{"id", id}, {"kind", std::string(omx::to_string(graph_v.find_vertex(id)->kind()))}}.dump()
                              << "\n";
                } else {
                    std::cout << id << "\n";
                }
            }
        };
    });
    g_save->callback([&] {
        action = [&] {
            const auto cfg = load_engine_config(g);
            persist_graph(current_graph(cfg, omx::load_models(cfg.paths.models_dir)), save_out);
            if (!g.json_output) std::cout << "saved " << save_out << "\n";
        };
    });
    g_load->callback([&] {
        action = [&] {
            const auto cfg = load_engine_config(g);
            const auto graph_v = omx::load_graph(load_in);
            const auto models = omx::load_models(cfg.paths.models_dir);
            const auto violations = omx::validate_graph(graph_v, models);
            for (const auto& v : violations) spdlog::error("{}: {}", v.subject, v.reason);
            if (!violations.empty()) throw omx::Error(omx::ErrorCode::CorruptGraphFile, "graph failed validation");
            persist_graph(graph_v, cfg.paths.graph_file);
            print_stats(graph_v, g.json_output);
        };
    });

    // diagnose
    auto* diagnose = app.add_subcommand("diagnose", "Evolve the graph around an event and produce a report");
    std::string event_id;
    std::string dump_context;
    std::string report_out;
    bool update_graph = false;
    diagnose->add_option("--event", event_id, "Event id (MODEL@ts) from events.jsonl")->required();
    diagnose->add_option("--dump-context", dump_context, "Write the diagnosis context as JSON");
    diagnose->add_option("--out", report_out, "Write the report here instead of stdout");
    diagnose->add_flag("--update-graph", update_graph, "Persist reinforced cross-edges to the graph file");
    for (auto* sub : {diagnose}) {
        sub->add_option("--llm-mode", g.llm_mode, "remote or mock")->check(CLI::IsMember({"remote", "mock"}));
        sub->add_option("--llm-url", g.llm_url, "Chat-completions endpoint URL");
        sub->add_option("--llm-model", g.llm_model, "Model name sent to the endpoint");
        sub->add_option("--llm-timeout", g.llm_timeout, "Timeout in seconds")->check(CLI::PositiveNumber);
    }
    diagnose->callback([&] {
        action = [&] {
            const auto cfg = load_engine_config(g);
            const auto models = omx::load_models(cfg.paths.models_dir);
            const auto store = load_store(cfg);
            const auto events = read_events(events_path(cfg));
            const auto it = std::find_if(events.begin(), events.end(),
                                         [&](const omx::AnomalyEvent& e) { return e.event_id() == event_id; });
            if (it == events.end()) throw omx::Error(omx::ErrorCode::InvalidArgument, "no event " + event_id);
            auto graph_v = current_graph(cfg, models);
            const auto tools = omx::ToolRegistry::with_builtins();
            auto ctx = omx::evolve(*it, graph_v, store, tools, cfg.evolution);
            if (!dump_context.empty()) write_file(dump_context, json(ctx).dump(2) + "\n");
            if (update_graph) persist_graph(graph_v, cfg.paths.graph_file);
            const auto outcome = omx::complete_diagnosis(std::move(ctx), omx::find_model(models, it->model_id), cfg.llm, &store);
            for (const auto& f : outcome.findings) {
                spdlog::warn("cause {}: {} {}", f.cause_index + 1, omx::to_string(f.kind), f.detail);
            }
            const auto text = omx::render_report(outcome.report);
            if (!report_out.empty()) {
                write_file(report_out, text);
            } else if (g.json_output) {
                json causes = json::array();
                for (const auto& c : outcome.report.root_causes) causes.push_back(c.label);
                std::cout << json{{"event", event_id}, {"causes", causes}, {"findings", outcome.findings.size()}}.dump()
                          << "\n";
            } else {
                std::cout << text;
            }
        };
    });

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate a scenario's metrics and ground truth");
    std::string scenario_name;
    std::uint64_t sim_seed = 1;
    std::string sim_out;
    std::string sim_catalog;
    std::int64_t sim_duration = 0;
    std::int64_t sim_cadence = 0;
    simulate->add_option("--scenario", scenario_name, "Scenario name")->required();
    simulate->add_option("--seed", sim_seed, "Random seed");
    simulate->add_option("--out", sim_out, "Output directory")->required();
    simulate->add_option("--catalog", sim_catalog, "Scenario catalog (default: shipped catalog)");
    simulate->add_option("--duration", sim_duration, "Duration in seconds")->check(CLI::PositiveNumber);
    simulate->add_option("--cadence", sim_cadence, "Sampling cadence in seconds")->check(CLI::PositiveNumber);
    simulate->callback([&] {
        action = [&] {
            const auto catalog = sim_catalog.empty() ? omx::default_catalog() : omx::load_catalog(sim_catalog);
            const auto* sc = catalog.find(scenario_name);
            if (!sc) throw omx::Error(omx::ErrorCode::InvalidArgument, "unknown scenario " + scenario_name);
            const auto data = omx::generate(*sc, sim_seed, sim_duration ? sim_duration : catalog.defaults.duration_seconds,
                                            sim_cadence ? sim_cadence : catalog.defaults.cadence_seconds,
                                            catalog.defaults.start);
            write_file((fs::path(sim_out) / "metrics.jsonl").string(), data.store.to_jsonl());
            write_file((fs::path(sim_out) / "ground_truth.json").string(), json(data.truth).dump(2) + "\n");
            if (g.json_output) {
                std::cout << json{{"scenario", sc->name}, {"seed", sim_seed}, {"points", data.store.point_count()},
                                  {"start", data.start}, {"end", data.end}}.dump()
                          << "\n";
            } else {
                std::cout << "wrote " << data.store.point_count() << " points for " << sc->name << " to " << sim_out
                          << " (" << data.start << ".." << data.end << ")\n";
            }
        };
    });

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Score a diagnoser over the scenario catalog");
    std::string eval_catalog;
    std::string eval_seeds = "1..10";
    std::string eval_out;
    std::string diagnoser_kind = "pipeline";
    double sigma = 0.1;
    evaluate->add_option("--catalog", eval_catalog, "Scenario catalog (default: shipped catalog)");
    evaluate->add_option("--seeds", eval_seeds, "Seeds as A..B or a comma list");
    evaluate->add_option("--out", eval_out, "CSV output path");
    evaluate->add_option("--diagnoser", diagnoser_kind, "pipeline, oracle or empty")
        ->check(CLI::IsMember({"pipeline", "oracle", "empty"}));
    evaluate->add_option("--sigma", sigma, "Penalty for wrong causes")->check(CLI::NonNegativeNumber);
    evaluate->add_option("--llm-mode", g.llm_mode, "remote or mock")->check(CLI::IsMember({"remote", "mock"}));
    evaluate->callback([&] {
        action = [&] {
            const auto cfg = load_engine_config(g);
            const auto catalog = eval_catalog.empty() ? omx::default_catalog() : omx::load_catalog(eval_catalog);
            const auto seeds = omx::parse_seed_list(eval_seeds);
            omx::Diagnoser diag;
            if (diagnoser_kind == "oracle") {
                diag = omx::oracle_diagnoser();
            } else if (diagnoser_kind == "empty") {
                diag = omx::empty_diagnoser();
            } else {
                auto res = std::make_shared<omx::PipelineResources>();
                res->models = omx::load_models(cfg.paths.models_dir);
                res->graph = seed_graph(res->models, cfg.paths.models_dir);
                res->tools = omx::ToolRegistry::with_builtins();
                res->evolution = cfg.evolution;
                res->llm = cfg.llm;
                res->trend = cfg.trend;
                diag = omx::pipeline_diagnoser(res);
            }
            const auto summary = omx::run_suite(catalog, diag, seeds, sigma);
            for (const auto& c : summary.cases) {
                if (!c.error.empty()) spdlog::warn("{}: diagnoser failed: {}", c.case_id, c.error);
            }
            const auto csv = omx::to_csv(summary);
            if (!eval_out.empty()) write_file(eval_out, csv);
            if (g.json_output) {
                std::cout << json{{"cases", summary.cases.size()}, {"mean_accuracy", summary.mean_accuracy},
                                  {"mean_precision", summary.mean_precision}, {"mean_recall", summary.mean_recall},
                                  {"mean_f1", summary.mean_f1}}.dump()
                          << "\n";
            } else {
                if (eval_out.empty()) std::cout << csv;
                std::printf("cases %zu  accuracy %.6f  precision %.6f  recall %.6f  f1 %.6f\n", summary.cases.size(),
                            summary.mean_accuracy, summary.mean_precision, summary.mean_recall, summary.mean_f1);
            }
        };
    });

    // tool
    auto* tool = app.add_subcommand("tool", "Run diagnostic tools");
    tool->require_subcommand(1);
    tool->fallthrough();
    auto* tool_run = tool->add_subcommand("run", "Run one tool against a window of the store");
    std::string tool_id;
    std::int64_t tool_at = 0;
    std::int64_t tool_window = 600;
    std::vector<std::string> tool_params;
    tool_run->add_option("id", tool_id, "Tool id")->required();
    tool_run->add_option("--at", tool_at, "Window end (default: last stored timestamp)");
    tool_run->add_option("--window", tool_window, "Window length in seconds")->check(CLI::PositiveNumber);
    tool_run->add_option("--param", tool_params, "key=value parameter");
    tool_run->callback([&] {
        action = [&] {
            const auto cfg = load_engine_config(g);
            const auto store = load_store(cfg);
            std::int64_t end = tool_at;
            if (end == 0) {
                const auto range = store.time_range();
                if (!range) throw omx::Error(omx::ErrorCode::InvalidArgument, "store is empty");
                end = range->second;
            }
            omx::ToolParams params;
            for (const auto& kv : tool_params) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw omx::Error(omx::ErrorCode::InvalidArgument, "bad --param " + kv);
                params[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
            const omx::WindowedSource snapshot(store, end - tool_window + 1, end);
            const auto findings = omx::ToolRegistry::with_builtins().run_tool(tool_id, snapshot, params);
            if (g.json_output) {
                std::cout << json(findings).dump() << "\n";
                return;
            }
            for (const auto& item : findings.items) {
                std::cout << "[" << omx::to_string(item.severity) << "] " << item.message << "\n";
                for (const auto& e : item.evidence) {
                    std::cout << "    metric " << e.metric_id << " " << e.stat << "=" << omx::format_value(e.value) << "\n";
                }
            }
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (action) action();
    } catch (const omx::Error& e) {
        spdlog::error("{}", e.what());
        return 1;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
    return 0;
}
