#include "omx/tools.hpp"

#include "omx/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>

namespace omx {

std::string_view to_string(Severity s) {
    switch (s) {
    case Severity::Info: return "info";
    case Severity::Warn: return "warn";
    case Severity::Critical: return "critical";
    }
    return "info";
}

Severity parse_severity(std::string_view text) {
    if (text == "info") return Severity::Info;
    if (text == "warn") return Severity::Warn;
    if (text == "critical") return Severity::Critical;
    throw Error(ErrorCode::InvalidArgument, "unknown severity '" + std::string(text) + "'");
}

bool ToolRegistry::register_tool(const std::string& tool_id, ToolAnalyzer analyzer) {
    if (tools_.count(tool_id)) throw Error(ErrorCode::DuplicateTool, tool_id);
    tools_.emplace(tool_id, std::move(analyzer));
    return true;
}

std::vector<std::string> ToolRegistry::tool_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, fn] : tools_) out.push_back(id);
    return out;
}

ToolFindings ToolRegistry::run_tool(const std::string& tool_id, const MetricSource& snapshot,
                                    const ToolParams& params) const {
    auto it = tools_.find(tool_id);
    if (it == tools_.end()) throw Error(ErrorCode::UnknownTool, tool_id);
    ToolFindings f = it->second(snapshot, params);
    f.tool_id = tool_id;
    if (auto bad = unresolved_evidence(f, snapshot); !bad.empty()) {
        throw Error(ErrorCode::InvalidArgument,
                    "tool " + tool_id + " cited metric '" + bad.front().metric_id + "' absent from its snapshot");
    }
    return f;
}

ToolRegistry ToolRegistry::with_builtins() {
    ToolRegistry r;
    r.register_tool("logsync_verifier", logsync_verifier);
    r.register_tool("redoarchive_inspector", redoarchive_inspector);
    return r;
}

std::vector<FindingEvidence> unresolved_evidence(const ToolFindings& findings, const MetricSource& snapshot) {
    std::vector<FindingEvidence> out;
    for (const auto& item : findings.items) {
        for (const auto& ev : item.evidence) {
            if (!snapshot.has_metric(ev.metric_id)) out.push_back(ev);
        }
    }
    return out;
}

namespace {

struct Summary {
    double min = 0.0;
    double max = 0.0;
    double avg = 0.0;
    double last = 0.0;
};

std::optional<Summary> summarize(const MetricSource& s, const std::string& metric) {
    if (!s.has_metric(metric)) return std::nullopt;
    const auto pts = s.get_window(metric, std::numeric_limits<std::int64_t>::min() / 4,
                                  std::numeric_limits<std::int64_t>::max() / 4);
    if (pts.empty()) return std::nullopt;
    Summary out;
    out.min = out.max = pts.front().value;
    double sum = 0.0;
    for (const auto& p : pts) {
        out.min = std::min(out.min, p.value);
        out.max = std::max(out.max, p.value);
        sum += p.value;
    }
    out.avg = sum / static_cast<double>(pts.size());
    out.last = pts.back().value;
    return out;
}

std::string param(const ToolParams& p, const std::string& key, const std::string& fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

double param_num(const ToolParams& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    if (it == p.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw Error(ErrorCode::InvalidArgument, "tool parameter " + key + " is not a number: " + it->second);
    }
}

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

FindingItem missing(const std::string& metric) {
    return {Severity::Warn, "metric " + metric + " missing from snapshot (MissingMetric)", {}};
}

} // namespace

ToolFindings logsync_verifier(const MetricSource& snapshot, const ToolParams& params) {
    const auto wait_metric = param(params, "wait_metric", "avg_log_sync_time");
    const auto redo_metric = param(params, "redo_metric", "redo_generation_rate");
    const auto commit_metric = param(params, "commit_metric", "user_commits");
    const double wait_threshold = param_num(params, "wait_threshold_ms", 60.0);
    const double redo_baseline = param_num(params, "redo_baseline", 20.0);
    const double commit_baseline = param_num(params, "commit_baseline", 150.0);

    ToolFindings f{"logsync_verifier", {}};
    if (auto w = summarize(snapshot, wait_metric)) {
        if (w->max > wait_threshold) {
            f.items.push_back({Severity::Critical,
                               "log sync wait peaked at " + num(w->max) + "ms, above the " + num(wait_threshold) +
                                   "ms baseline; commits are stalled behind redo flushes by the log writer",
                               {{wait_metric, "max", w->max}, {wait_metric, "avg", w->avg}}});
        } else {
            f.items.push_back({Severity::Info, "log sync wait within baseline (max " + num(w->max) + "ms)",
                               {{wait_metric, "max", w->max}}});
        }
    } else {
        f.items.push_back(missing(wait_metric));
    }

    if (auto r = summarize(snapshot, redo_metric)) {
        if (r->avg > redo_baseline) {
            f.items.push_back({Severity::Warn,
                               "redo generation averages " + num(r->avg) + " above baseline " + num(redo_baseline) +
                                   "; review redo log file size and log_buffer",
                               {{redo_metric, "avg", r->avg}}});
        }
    } else {
        f.items.push_back(missing(redo_metric));
    }

    if (auto c = summarize(snapshot, commit_metric)) {
        if (c->avg > commit_baseline) {
            f.items.push_back({Severity::Warn,
                               "commit rate averages " + num(c->avg) + " above baseline " + num(commit_baseline) +
                                   "; frequent small commits amplify log sync waits",
                               {{commit_metric, "avg", c->avg}}});
        }
    } else {
        f.items.push_back(missing(commit_metric));
    }
    return f;
}

ToolFindings redoarchive_inspector(const MetricSource& snapshot, const ToolParams& params) {
    const auto archive_metric = param(params, "archive_metric", "archive_log_size_mb");
    const auto redo_size_metric = param(params, "redo_size_metric", "redo_log_size_mb");
    const auto switch_metric = param(params, "switch_metric", "log_switches");
    const auto log_buffer_metric = param(params, "log_buffer_metric", "param_log_buffer_mb");
    const auto lag_metric = param(params, "archive_lag_metric", "param_archive_lag_target");
    const double ratio_bound = param_num(params, "size_ratio_bound", 2.0);
    const double switch_threshold = param_num(params, "switch_threshold", 6.0);
    const double log_buffer_floor = param_num(params, "log_buffer_floor_mb", 32.0);

    ToolFindings f{"redoarchive_inspector", {}};
    auto archive = summarize(snapshot, archive_metric);
    auto redo = summarize(snapshot, redo_size_metric);
    if (archive && redo) {
        const double ratio = redo->last > 0.0 ? archive->max / redo->last : std::numeric_limits<double>::infinity();
        if (ratio > ratio_bound) {
            f.items.push_back({Severity::Warn,
                               "archive logs reach " + num(ratio) + "x the redo log size (bound " + num(ratio_bound) +
                                   "); redo log files are undersized",
                               {{archive_metric, "max", archive->max}, {redo_size_metric, "last", redo->last}}});
        }
    } else {
        if (!archive) f.items.push_back(missing(archive_metric));
        if (!redo) f.items.push_back(missing(redo_size_metric));
    }

    if (auto s = summarize(snapshot, switch_metric)) {
        if (s->max > switch_threshold) {
            f.items.push_back({Severity::Critical,
                               "rapid redo log switching: up to " + num(s->max) + " switches per interval (threshold " +
                                   num(switch_threshold) + ")",
                               {{switch_metric, "max", s->max}}});
        }
    } else {
        f.items.push_back(missing(switch_metric));
    }

    // The parameter value may be passed directly; otherwise it is read from
    // the parameter series in the snapshot.
    if (params.count("log_buffer_mb")) {
        const double lb = param_num(params, "log_buffer_mb", 0.0);
        if (lb < log_buffer_floor) {
            f.items.push_back({Severity::Warn,
                               "log_buffer is " + num(lb) + "MB, below the " + num(log_buffer_floor) + "MB floor",
                               {}});
        }
    } else if (auto lb = summarize(snapshot, log_buffer_metric)) {
        if (lb->last < log_buffer_floor) {
            f.items.push_back({Severity::Warn,
                               "log_buffer is " + num(lb->last) + "MB, below the " + num(log_buffer_floor) + "MB floor",
                               {{log_buffer_metric, "last", lb->last}}});
        }
    } else {
        f.items.push_back(missing(log_buffer_metric));
    }

    if (auto lag = summarize(snapshot, lag_metric)) {
        if (lag->last <= 0.0) {
            f.items.push_back({Severity::Info, "archive_lag_target is disabled (0)", {{lag_metric, "last", lag->last}}});
        } else {
            f.items.push_back({Severity::Info, "archive_lag_target forces a log switch every " + num(lag->last) + "s",
                               {{lag_metric, "last", lag->last}}});
        }
    }
    return f;
}

void to_json(nlohmann::json& j, const ToolFindings& f) {
    j = {{"tool_id", f.tool_id}, {"items", nlohmann::json::array()}};
    for (const auto& item : f.items) {
        nlohmann::json ev = nlohmann::json::array();
        for (const auto& e : item.evidence) ev.push_back({{"metric_id", e.metric_id}, {"stat", e.stat}, {"value", e.value}});
        j["items"].push_back({{"severity", std::string(to_string(item.severity))}, {"message", item.message}, {"evidence", ev}});
    }
}

void from_json(const nlohmann::json& j, ToolFindings& f) {
    f.tool_id = j.at("tool_id").get<std::string>();
    f.items.clear();
    for (const auto& ji : j.at("items")) {
        FindingItem item;
        item.severity = parse_severity(ji.at("severity").get<std::string>());
        item.message = ji.at("message").get<std::string>();
        for (const auto& je : ji.at("evidence")) {
            item.evidence.push_back({je.at("metric_id").get<std::string>(), je.at("stat").get<std::string>(),
                                     je.at("value").get<double>()});
        }
        f.items.push_back(std::move(item));
    }
}

} // namespace omx
