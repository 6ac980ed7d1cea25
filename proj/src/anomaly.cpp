#include "omx/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace omx {

using nlohmann::json;

namespace {

constexpr double kEqualTolerance = 1e-9;

std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

const json& require(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key)) throw SchemaError(join_path(path, key), "missing");
    return j.at(key);
}

std::string require_string(const json& j, const std::string& key, const std::string& path) {
    const auto& v = require(j, key, path);
    if (!v.is_string()) throw SchemaError(join_path(path, key), "expected string");
    return v.get<std::string>();
}

std::int64_t require_positive_int(const json& j, const std::string& key, const std::string& path) {
    const auto& v = require(j, key, path);
    if (!v.is_number_integer()) throw SchemaError(join_path(path, key), "expected integer");
    const auto n = v.get<std::int64_t>();
    if (n <= 0) throw SchemaError(join_path(path, key), "must be positive");
    return n;
}

std::vector<std::string> optional_strings(const json& j, const std::string& key, const std::string& path) {
    if (!j.contains(key)) return {};
    const auto& v = j.at(key);
    if (!v.is_array()) throw SchemaError(join_path(path, key), "expected array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) throw SchemaError(join_path(path, key) + "[" + std::to_string(i) + "]", "expected string");
        out.push_back(v[i].get<std::string>());
    }
    return out;
}

DetectionExpr parse_expr(const json& j, const std::string& path, const std::set<std::string>& declared) {
    if (!j.is_object()) throw SchemaError(path, "expected object");
    const auto op = require_string(j, "op", path);
    if (op == "cmp") {
        auto metric = require_string(j, "metric", path);
        if (!declared.count(metric)) throw SchemaError(join_path(path, "metric"), "undeclared metric '" + metric + "'");
        const auto stat = require_string(j, "stat", path);
        std::int64_t window = j.contains("window_seconds") ? require_positive_int(j, "window_seconds", path) : 60;
        StatSpec spec = parse_stat_name(stat, window);
        if (spec.kind == StatKind::Trend) throw SchemaError(join_path(path, "stat"), "use op 'trend' for trend leaves");
        const auto cmp = parse_compare_op(require_string(j, "cmp", path));
        const auto& th = require(j, "threshold", path);
        if (!th.is_number()) throw SchemaError(join_path(path, "threshold"), "expected number");
        const double threshold = th.get<double>();
        if (!std::isfinite(threshold)) throw Error(ErrorCode::BadThreshold, join_path(path, "threshold"));
        return DetectionExpr::compare(std::move(metric), spec, cmp, threshold);
    }
    if (op == "trend") {
        auto metric = require_string(j, "metric", path);
        if (!declared.count(metric)) throw SchemaError(join_path(path, "metric"), "undeclared metric '" + metric + "'");
        const auto window = require_positive_int(j, "window_seconds", path);
        const auto& t = require(j, "trend", path);
        TrendClass trend;
        try {
            if (t.is_number_integer()) {
                trend = trend_from_code(t.get<int>());
            } else if (t.is_string()) {
                trend = trend_from_label(t.get<std::string>());
            } else {
                throw SchemaError(join_path(path, "trend"), "expected code or label");
            }
        } catch (const SchemaError&) {
            throw;
        } catch (const Error& e) {
            throw SchemaError(join_path(path, "trend"), e.detail());
        }
        return DetectionExpr::trend_is(std::move(metric), window, trend);
    }
    if (op == "and" || op == "or") {
        const auto& children = require(j, "children", path);
        if (!children.is_array() || children.empty()) {
            throw SchemaError(join_path(path, "children"), "expected non-empty array");
        }
        std::vector<DetectionExpr> parsed;
        for (std::size_t i = 0; i < children.size(); ++i) {
            parsed.push_back(parse_expr(children[i], join_path(path, "children") + "[" + std::to_string(i) + "]", declared));
        }
        return op == "and" ? DetectionExpr::all_of(std::move(parsed)) : DetectionExpr::any_of(std::move(parsed));
    }
    if (op == "not") {
        return DetectionExpr::negate(parse_expr(require(j, "child", path), join_path(path, "child"), declared));
    }
    throw SchemaError(join_path(path, "op"), "unknown op '" + op + "'");
}

json expr_to_json(const DetectionExpr& e) {
    switch (e.kind) {
    case DetectionExpr::Kind::Compare:
        return {{"op", "cmp"},
                {"metric", e.metric},
                {"stat", stat_name(e.stat)},
                {"window_seconds", e.stat.window_seconds},
                {"cmp", std::string(to_string(e.op))},
                {"threshold", e.threshold}};
    case DetectionExpr::Kind::TrendIs:
        return {{"op", "trend"},
                {"metric", e.metric},
                {"window_seconds", e.stat.window_seconds},
                {"trend", static_cast<int>(e.trend)}};
    case DetectionExpr::Kind::And:
    case DetectionExpr::Kind::Or: {
        json children = json::array();
        for (const auto& c : e.children) children.push_back(expr_to_json(c));
        return {{"op", e.kind == DetectionExpr::Kind::And ? "and" : "or"}, {"children", children}};
    }
    case DetectionExpr::Kind::Not:
        return {{"op", "not"}, {"child", expr_to_json(e.children.at(0))}};
    }
    return {};
}

bool compare(double observed, CompareOp op, double threshold) {
    switch (op) {
    case CompareOp::Greater: return observed > threshold;
    case CompareOp::GreaterEqual: return observed >= threshold;
    case CompareOp::Less: return observed < threshold;
    case CompareOp::LessEqual: return observed <= threshold;
    case CompareOp::Equal: return std::abs(observed - threshold) <= kEqualTolerance;
    }
    return false;
}

bool eval_node(const DetectionExpr& e, const MetricSource& source, std::int64_t at, const TrendConfig& trend_cfg,
               std::vector<LeafEvidence>& evidence) {
    switch (e.kind) {
    case DetectionExpr::Kind::Compare: {
        if (!source.has_metric(e.metric)) throw Error(ErrorCode::MissingMetric, e.metric);
        const double observed = source.derive_stat(e.metric, e.stat, at, trend_cfg).numeric();
        evidence.push_back({e.metric, e.stat, observed});
        return compare(observed, e.op, e.threshold);
    }
    case DetectionExpr::Kind::TrendIs: {
        if (!source.has_metric(e.metric)) throw Error(ErrorCode::MissingMetric, e.metric);
        StatSpec spec{StatKind::Trend, 0, e.stat.window_seconds};
        const auto stat = source.derive_stat(e.metric, spec, at, trend_cfg);
        const auto trend = std::get<TrendClass>(stat.value);
        evidence.push_back({e.metric, spec, static_cast<double>(static_cast<int>(trend))});
        return trend == e.trend;
    }
    case DetectionExpr::Kind::And: {
        bool all = true;
        for (const auto& c : e.children) all = eval_node(c, source, at, trend_cfg, evidence) && all;
        return all;
    }
    case DetectionExpr::Kind::Or: {
        bool any = false;
        for (const auto& c : e.children) any = eval_node(c, source, at, trend_cfg, evidence) || any;
        return any;
    }
    case DetectionExpr::Kind::Not:
        return !eval_node(e.children.at(0), source, at, trend_cfg, evidence);
    }
    return false;
}

void collect_metrics(const DetectionExpr& e, std::vector<std::string>& out) {
    if (e.kind == DetectionExpr::Kind::Compare || e.kind == DetectionExpr::Kind::TrendIs) {
        if (std::find(out.begin(), out.end(), e.metric) == out.end()) out.push_back(e.metric);
    }
    for (const auto& c : e.children) collect_metrics(c, out);
}

std::int64_t longest_window(const DetectionExpr& e) {
    std::int64_t w = (e.kind == DetectionExpr::Kind::Compare || e.kind == DetectionExpr::Kind::TrendIs)
                         ? e.stat.window_seconds
                         : 0;
    for (const auto& c : e.children) w = std::max(w, longest_window(c));
    return w;
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string render_node(const DetectionExpr& e, const std::map<std::string, std::string>& units, bool top) {
    switch (e.kind) {
    case DetectionExpr::Kind::Compare: {
        std::string s = stat_name(e.stat) + "(" + e.metric + ", " + std::to_string(e.stat.window_seconds) +
                        "s) " + std::string(to_string(e.op)) + " " + format_number(e.threshold);
        auto it = units.find(e.metric);
        if (it != units.end() && !it->second.empty()) s += it->second;
        return s;
    }
    case DetectionExpr::Kind::TrendIs:
        return "trend(" + e.metric + ", " + std::to_string(e.stat.window_seconds) + "s) = " +
               std::to_string(static_cast<int>(e.trend)) + " (" + std::string(trend_label(e.trend)) + ")";
    case DetectionExpr::Kind::And:
    case DetectionExpr::Kind::Or: {
        const char* sep = e.kind == DetectionExpr::Kind::And ? " AND " : " OR ";
        std::string s;
        for (std::size_t i = 0; i < e.children.size(); ++i) {
            if (i) s += sep;
            s += render_node(e.children[i], units, false);
        }
        return (top || e.children.size() == 1) ? s : "(" + s + ")";
    }
    case DetectionExpr::Kind::Not:
        return "NOT (" + render_node(e.children.at(0), units, true) + ")";
    }
    return {};
}

} // namespace

std::string_view to_string(CompareOp op) {
    switch (op) {
    case CompareOp::Greater: return ">";
    case CompareOp::GreaterEqual: return ">=";
    case CompareOp::Less: return "<";
    case CompareOp::LessEqual: return "<=";
    case CompareOp::Equal: return "=";
    }
    return ">";
}

CompareOp parse_compare_op(std::string_view text) {
    if (text == ">") return CompareOp::Greater;
    if (text == ">=" || text == "≥") return CompareOp::GreaterEqual;
    if (text == "<") return CompareOp::Less;
    if (text == "<=" || text == "≤") return CompareOp::LessEqual;
    if (text == "=" || text == "==") return CompareOp::Equal;
    throw SchemaError("cmp", "unknown comparison '" + std::string(text) + "'");
}

DetectionExpr DetectionExpr::compare(std::string metric, StatSpec stat, CompareOp op, double threshold) {
    DetectionExpr e;
    e.kind = Kind::Compare;
    e.metric = std::move(metric);
    e.stat = stat;
    e.op = op;
    e.threshold = threshold;
    return e;
}

DetectionExpr DetectionExpr::trend_is(std::string metric, std::int64_t window_seconds, TrendClass trend) {
    DetectionExpr e;
    e.kind = Kind::TrendIs;
    e.metric = std::move(metric);
    e.stat = StatSpec{StatKind::Trend, 0, window_seconds};
    e.trend = trend;
    return e;
}

DetectionExpr DetectionExpr::all_of(std::vector<DetectionExpr> children) {
    DetectionExpr e;
    e.kind = Kind::And;
    e.children = std::move(children);
    return e;
}

DetectionExpr DetectionExpr::any_of(std::vector<DetectionExpr> children) {
    DetectionExpr e;
    e.kind = Kind::Or;
    e.children = std::move(children);
    return e;
}

DetectionExpr DetectionExpr::negate(DetectionExpr child) {
    DetectionExpr e;
    e.kind = Kind::Not;
    e.children.push_back(std::move(child));
    return e;
}

const DeclaredMetric* AnomalyModel::find_metric(const std::string& id) const {
    for (const auto& m : metrics) {
        if (m.id == id) return &m;
    }
    return nullptr;
}

std::map<std::string, std::string> AnomalyModel::units() const {
    std::map<std::string, std::string> out;
    for (const auto& m : metrics) out[m.id] = m.unit;
    return out;
}

std::string trigger_vertex_id_for(const std::string& model_id) { return "trigger:" + model_id; }

std::string AnomalyEvent::event_id() const { return model_id + "@" + std::to_string(fired_at); }

AnomalyModel parse_model(const json& doc) {
    if (doc.is_null() || (doc.is_object() && doc.empty())) throw SchemaError("", "empty document");
    if (!doc.is_object()) throw SchemaError("", "expected object");

    AnomalyModel m;
    m.model_id = require_string(doc, "id", "");
    if (m.model_id.empty()) throw SchemaError("id", "empty");
    m.name = require_string(doc, "name", "");
    m.symptom_description = require_string(doc, "symptom", "");
    try {
        m.database_kind = parse_database_kind(require_string(doc, "database", ""));
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw SchemaError("database", e.detail());
    }
    m.eval_period_seconds = require_positive_int(doc, "period_seconds", "");

    const auto& freq = require(doc, "freq", "");
    const auto k = require_positive_int(freq, "k", "freq");
    const auto n = require_positive_int(freq, "n", "freq");
    if (k > n) throw SchemaError("freq", "k>n");
    m.freq = FrequencyControl{static_cast<int>(k), static_cast<int>(n)};

    const auto& metrics = require(doc, "metrics", "");
    if (!metrics.is_array() || metrics.empty()) throw SchemaError("metrics", "expected non-empty array");
    std::set<std::string> declared;
    for (std::size_t i = 0; i < metrics.size(); ++i) {
        const std::string path = "metrics[" + std::to_string(i) + "]";
        DeclaredMetric dm;
        dm.id = require_string(metrics[i], "id", path);
        if (dm.id.empty()) throw SchemaError(path + ".id", "empty");
        if (!declared.insert(dm.id).second) throw SchemaError(path + ".id", "duplicate metric '" + dm.id + "'");
        if (metrics[i].contains("unit")) dm.unit = require_string(metrics[i], "unit", path);
        dm.tags = optional_strings(metrics[i], "tags", path);
        m.metrics.push_back(std::move(dm));
    }

    m.expr = parse_expr(require(doc, "expr", ""), "expr", declared);

    m.trigger_vertex_id = doc.contains("trigger_vertex") ? require_string(doc, "trigger_vertex", "")
                                                         : trigger_vertex_id_for(m.model_id);
    m.tags = optional_strings(doc, "tags", "");

    if (doc.contains("experience")) {
        const auto& ex = doc.at("experience");
        if (!ex.is_array()) throw SchemaError("experience", "expected array");
        for (std::size_t i = 0; i < ex.size(); ++i) {
            const std::string path = "experience[" + std::to_string(i) + "]";
            ExperienceFragment f;
            f.text = require_string(ex[i], "text", path);
            if (ex[i].contains("source")) f.source = require_string(ex[i], "source", path);
            f.tags = optional_strings(ex[i], "tags", path);
            f.metrics = optional_strings(ex[i], "metrics", path);
            for (const auto& id : f.metrics) {
                if (!declared.count(id)) throw SchemaError(path + ".metrics", "undeclared metric '" + id + "'");
            }
            m.experience.push_back(std::move(f));
        }
    }
    if (doc.contains("tools")) {
        const auto& tools = doc.at("tools");
        if (!tools.is_array()) throw SchemaError("tools", "expected array");
        for (std::size_t i = 0; i < tools.size(); ++i) {
            const std::string path = "tools[" + std::to_string(i) + "]";
            ToolBinding t;
            t.tool_id = require_string(tools[i], "id", path);
            t.tags = optional_strings(tools[i], "tags", path);
            m.tools.push_back(std::move(t));
        }
    }
    return m;
}

AnomalyModel parse_model(std::string_view document) {
    if (document.find_first_not_of(" \t\r\n") == std::string_view::npos) {
        throw SchemaError("", "empty document");
    }
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        throw SchemaError("", std::string("invalid JSON: ") + e.what());
    }
    return parse_model(doc);
}

json model_to_json(const AnomalyModel& m) {
    json metrics = json::array();
    for (const auto& dm : m.metrics) metrics.push_back({{"id", dm.id}, {"unit", dm.unit}, {"tags", dm.tags}});
    json experience = json::array();
    for (const auto& f : m.experience) {
        experience.push_back({{"text", f.text}, {"source", f.source}, {"tags", f.tags}, {"metrics", f.metrics}});
    }
    json tools = json::array();
    for (const auto& t : m.tools) tools.push_back({{"id", t.tool_id}, {"tags", t.tags}});
    return {{"id", m.model_id},
            {"name", m.name},
            {"symptom", m.symptom_description},
            {"database", std::string(to_string(m.database_kind))},
            {"period_seconds", m.eval_period_seconds},
            {"freq", {{"k", m.freq.k}, {"n", m.freq.n}}},
            {"metrics", metrics},
            {"expr", expr_to_json(m.expr)},
            {"trigger_vertex", m.trigger_vertex_id},
            {"tags", m.tags},
            {"experience", experience},
            {"tools", tools}};
}

std::string serialize_model(const AnomalyModel& model) { return model_to_json(model).dump(2) + "\n"; }

std::vector<AnomalyModel> load_models(const std::string& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) throw Error(ErrorCode::IoError, "not a directory: " + directory);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<AnomalyModel> models;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw Error(ErrorCode::IoError, "cannot read " + f.string());
        std::stringstream ss;
        ss << in.rdbuf();
        try {
            models.push_back(parse_model(std::string_view(ss.str())));
        } catch (const SchemaError& e) {
            throw SchemaError(f.filename().string() + ":" + e.path(), e.reason());
        }
    }
    return models;
}

ExprResult evaluate_expr(const DetectionExpr& expr, const MetricSource& source, std::int64_t at,
                         const TrendConfig& trend_cfg) {
    ExprResult r;
    r.fired = eval_node(expr, source, at, trend_cfg, r.evidence);
    return r;
}

bool apply_frequency_control(std::span<const bool> history, const FrequencyControl& freq) {
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(freq.n), history.size());
    const auto hits = std::count(history.end() - static_cast<std::ptrdiff_t>(take), history.end(), true);
    return hits >= freq.k;
}

bool apply_frequency_control(const std::vector<bool>& history, const FrequencyControl& freq) {
    const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(freq.n), history.size());
    const auto hits = std::count(history.end() - static_cast<std::ptrdiff_t>(take), history.end(), true);
    return hits >= freq.k;
}

DetectResult detect(std::span<const AnomalyModel> models, const MetricSource& source, std::int64_t now,
                    const TrendConfig& trend_cfg) {
    DetectResult result;
    for (const auto& model : models) {
        const auto refs = referenced_metrics(model.expr);
        bool missing = false;
        for (const auto& id : refs) {
            if (!source.has_metric(id)) {
                result.diagnostics.push_back({model.model_id, ErrorCode::MissingMetric, id});
                missing = true;
            }
        }
        if (missing) continue;

        std::vector<bool> history;
        std::vector<LeafEvidence> evidence;
        std::vector<LeafEvidence> latest;
        bool failed = false;
        for (int j = model.freq.n - 1; j >= 0; --j) {
            const std::int64_t at = now - static_cast<std::int64_t>(j) * model.eval_period_seconds;
            try {
                auto r = evaluate_expr(model.expr, source, at, trend_cfg);
                history.push_back(r.fired);
                if (r.fired) evidence = r.evidence;
                latest = std::move(r.evidence);
            } catch (const InsufficientData&) {
                // not enough data for this evaluation: it does not count
            } catch (const Error& e) {
                result.diagnostics.push_back({model.model_id, e.code(), e.detail()});
                failed = true;
                break;
            }
        }
        if (failed || history.empty()) continue;
        if (!apply_frequency_control(history, model.freq)) continue;

        AnomalyEvent ev;
        ev.model_id = model.model_id;
        ev.fired_at = now;
        ev.window_end = now;
        ev.window_start = now - static_cast<std::int64_t>(model.freq.n - 1) * model.eval_period_seconds -
                          longest_window(model.expr) + 1;
        ev.evidence = evidence.empty() ? latest : evidence;
        ev.history = std::move(history);
        result.events.push_back(std::move(ev));
    }
    std::sort(result.events.begin(), result.events.end(), [](const AnomalyEvent& a, const AnomalyEvent& b) {
        return std::tie(a.model_id, a.fired_at) < std::tie(b.model_id, b.fired_at);
    });
    return result;
}

DetectResult detect_range(std::span<const AnomalyModel> models, const MetricSource& source, std::int64_t t_begin,
                          std::int64_t t_end, std::int64_t step, const TrendConfig& trend_cfg) {
    if (step <= 0) throw Error(ErrorCode::InvalidArgument, "step must be positive");
    DetectResult all;
    std::set<std::tuple<std::string, int, std::string>> seen_diag;
    for (std::int64_t t = t_begin; t <= t_end; t += step) {
        auto r = detect(models, source, t, trend_cfg);
        for (auto& e : r.events) all.events.push_back(std::move(e));
        for (auto& d : r.diagnostics) {
            if (seen_diag.emplace(d.model_id, static_cast<int>(d.code), d.message).second) {
                all.diagnostics.push_back(std::move(d));
            }
        }
    }
    std::stable_sort(all.events.begin(), all.events.end(), [](const AnomalyEvent& a, const AnomalyEvent& b) {
        return std::tie(a.model_id, a.fired_at) < std::tie(b.model_id, b.fired_at);
    });
    return all;
}

std::vector<std::string> referenced_metrics(const DetectionExpr& expr) {
    std::vector<std::string> out;
    collect_metrics(expr, out);
    return out;
}

std::string render_expr(const DetectionExpr& expr, const std::map<std::string, std::string>& units) {
    return render_node(expr, units, true);
}

std::string render_leaf(const LeafEvidence& leaf) {
    if (leaf.stat.kind == StatKind::Trend) {
        const auto code = static_cast<int>(leaf.observed);
        return "trend(" + leaf.metric_id + ", " + std::to_string(leaf.stat.window_seconds) + "s) = " +
               std::to_string(code) + " (" + std::string(trend_label(trend_from_code(code))) + ")";
    }
    return stat_name(leaf.stat) + "(" + leaf.metric_id + ", " + std::to_string(leaf.stat.window_seconds) +
           "s) = " + format_number(leaf.observed);
}

void to_json(json& j, const LeafEvidence& e) {
    j = {{"metric_id", e.metric_id},
         {"stat", stat_name(e.stat)},
         {"window_seconds", e.stat.window_seconds},
         {"observed", e.observed}};
}

void from_json(const json& j, LeafEvidence& e) {
    e.metric_id = j.at("metric_id").get<std::string>();
    e.stat = parse_stat_name(j.at("stat").get<std::string>(), j.at("window_seconds").get<std::int64_t>());
    e.observed = j.at("observed").get<double>();
}

void to_json(json& j, const AnomalyEvent& e) {
    j = {{"event_id", e.event_id()},
         {"model_id", e.model_id},
         {"fired_at", e.fired_at},
         {"window", {e.window_start, e.window_end}},
         {"evidence", e.evidence},
         {"history", e.history}};
}

void from_json(const json& j, AnomalyEvent& e) {
    e.model_id = j.at("model_id").get<std::string>();
    e.fired_at = j.at("fired_at").get<std::int64_t>();
    e.window_start = j.at("window").at(0).get<std::int64_t>();
    e.window_end = j.at("window").at(1).get<std::int64_t>();
    e.evidence = j.at("evidence").get<std::vector<LeafEvidence>>();
    e.history = j.at("history").get<std::vector<bool>>();
}

} // namespace omx
