#include "omx/diagnosis.hpp"

#include "omx/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

namespace omx {

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

namespace {

std::string metric_line(const std::string& metric_id, const DiagnosisContext& ctx, const ADFResult* adf) {
    std::string line = "- metric " + metric_id;
    auto it = ctx.metric_summaries.find(metric_id);
    if (it == ctx.metric_summaries.end()) return line + ": no data in the screening window";
    const auto& s = it->second;
    const auto& u = s.unit;
    line += " (" + (u.empty() ? std::string("no unit") : u) + ") window " + std::to_string(s.t0) + ".." +
            std::to_string(s.t1) + ", " + std::to_string(s.count) + " points: min=" + format_value(s.min) + u +
            ", max=" + format_value(s.max) + u + ", avg=" + format_value(s.avg) + u + ", last=" +
            format_value(s.last) + u;
    if (adf) {
        line += "; ADF score " + format_value(adf->score) + " (sigma " + format_value(adf->sigma) + ", baseline " +
                format_value(adf->baseline) + ", deviation " + format_value(adf->deviation) + ")";
    }
    return line;
}

std::string severity_tag(Severity s) { return "[" + std::string(to_string(s)) + "]"; }

} // namespace

DiagnosisPrompt build_prompt(const DiagnosisContext& ctx, const AnomalyModel& model) {
    if (ctx.explored_paths.empty()) throw Error(ErrorCode::EmptyContext, ctx.anomaly.event_id());
    DiagnosisPrompt p;
    const auto& ev = ctx.anomaly;

    std::ostringstream a;
    a << "Anomaly " << model.model_id << " (" << model.name << ") on " << to_string(model.database_kind)
      << ": " << model.symptom_description << "\n";
    a << "Fired at " << ev.fired_at << ", detection window " << ev.window_start << ".." << ev.window_end << ".\n";
    a << "Observed when firing:";
    for (const auto& leaf : ev.evidence) a << "\n- " << render_leaf(leaf);
    p.anomaly = a.str();

    std::ostringstream l;
    l << render_expr(model.expr, model.units()) << "\n";
    l << "Frequency control: fires when at least " << model.freq.k << " of the last " << model.freq.n
      << " evaluations (every " << model.eval_period_seconds << "s) are true.";
    p.condition = l.str();

    std::ostringstream m;
    if (ctx.abnormal_metrics.empty()) {
        m << "Abnormal metrics: none (no metric abnormal)\n";
    } else {
        m << "Abnormal metrics:\n";
        for (const auto& [id, r] : ctx.abnormal_metrics) m << metric_line(id, ctx, &r) << "\n";
    }
    if (ctx.normal_metrics.empty()) {
        m << "Normal metrics: none";
    } else {
        m << "Normal metrics:";
        for (const auto& id : ctx.normal_metrics) m << "\n" << metric_line(id, ctx, nullptr);
    }
    p.metrics = m.str();

    std::ostringstream e;
    if (ctx.experience_texts.empty()) e << "No experience fragment was reached.";
    bool first = true;
    for (const auto& [vid, text] : ctx.experience_texts) {
        if (!first) e << "\n";
        first = false;
        e << "- (" << vid << ") " << text;
    }
    for (const auto& tf : ctx.tool_findings) {
        for (const auto& item : tf.items) {
            e << "\n- tool " << tf.tool_id << " " << severity_tag(item.severity) << " " << item.message;
        }
    }
    p.experience = e.str();

    std::ostringstream o;
    o << "Answer with exactly these level-1 sections, in order:\n"
      << "# " << kSectionValidation << "\n"
      << "State 'Real anomaly: yes' or 'Real anomaly: no' followed by the rationale.\n"
      << "# " << kSectionRootCause << "\n"
      << "List between 1 and 5 causes as '## <n>. <CAUSE LABEL>'. Support each cause with lines of the form\n"
      << "'Evidence: metric <id> max=<value><unit>, avg=<value><unit>' using only metrics and values given above.\n"
      << "# " << kSectionRecovery << "\n"
      << "One '- ' bullet per recovery action.\n"
      << "# " << kSectionSummary << "\n"
      << "A short summary.\n"
      << "# " << kSectionSql << "\n"
      << "Relevant SQL statements, or 'none'.";
    p.output_spec = o.str();
    return p;
}

std::string render_prompt(const DiagnosisPrompt& p) {
    std::string out;
    auto add = [&](std::string_view head, const std::string& body) {
        out += head;
        out += "\n";
        out += body;
        out += "\n\n";
    };
    add(kPromptAnomaly, p.anomaly);
    add(kPromptCondition, p.condition);
    add(kPromptMetrics, p.metrics);
    add(kPromptExperience, p.experience);
    add(kPromptOutput, p.output_spec);
    return out;
}

std::vector<EvidenceRef> extract_evidence(std::string_view text) {
    static const std::regex mention(R"(\bmetric\s+([A-Za-z_][A-Za-z0-9_.:\-]*))");
    static const std::regex stat(
        R"(\b(max|min|avg|mean|last|p[0-9]{1,2})\s*=\s*(-?[0-9]+(?:\.[0-9]+)?(?:[eE][-+]?[0-9]+)?)([A-Za-z%/]*))");
    std::vector<EvidenceRef> out;
    const std::string s(text);
    std::vector<std::pair<std::size_t, std::string>> mentions;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), mention); it != std::sregex_iterator(); ++it) {
        mentions.emplace_back(static_cast<std::size_t>(it->position(0) + it->length(0)), (*it)[1].str());
    }
    for (std::size_t i = 0; i < mentions.size(); ++i) {
        const std::size_t begin = mentions[i].first;
        std::size_t end = i + 1 < mentions.size() ? mentions[i + 1].first - mentions[i + 1].second.size() : s.size();
        // A citation does not continue past the end of its line.
        end = std::min(end, s.find('\n', begin) == std::string::npos ? s.size() : s.find('\n', begin));
        if (end <= begin) continue;
        const std::string segment = s.substr(begin, end - begin);
        for (auto it = std::sregex_iterator(segment.begin(), segment.end(), stat); it != std::sregex_iterator(); ++it) {
            out.push_back({mentions[i].second, (*it)[1].str(), std::stod((*it)[2].str()), (*it)[3].str()});
        }
    }
    return out;
}

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) lines.push_back(std::move(cur));
    return lines;
}

std::string join_trimmed(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& l : lines) {
        if (!out.empty()) out += "\n";
        out += l;
    }
    return trim(out);
}

bool is_level1(const std::string& line) { return line.size() > 2 && line[0] == '#' && line[1] == ' '; }

} // namespace

DiagnosisReport parse_report(std::string_view raw) {
    const std::vector<std::string_view> titles{kSectionValidation, kSectionRootCause, kSectionRecovery, kSectionSummary,
                                               kSectionSql};
    std::map<std::string, std::vector<std::string>> sections; // canonical title -> body lines
    std::string current;
    for (const auto& line : split_lines(raw)) {
        if (is_level1(line)) {
            const std::string head = lower(trim(line.substr(2)));
            current.clear();
            for (auto t : titles) {
                if (head == lower(std::string(t))) current = std::string(t);
            }
            if (!current.empty()) sections[current];
            continue;
        }
        if (!current.empty()) sections[current].push_back(line);
    }
    for (auto t : titles) {
        if (!sections.count(std::string(t))) throw MissingSection(std::string(t));
    }

    DiagnosisReport r;
    {
        std::vector<std::string> rest;
        static const std::regex verdict(R"(^\s*real anomaly\s*:\s*(yes|no|true|false)\b.*$)", std::regex::icase);
        bool seen = false;
        for (const auto& line : sections[std::string(kSectionValidation)]) {
            std::smatch m;
            if (!seen && std::regex_match(line, m, verdict)) {
                const auto v = lower(m[1].str());
                r.is_real_anomaly = v == "yes" || v == "true";
                seen = true;
            } else {
                rest.push_back(line);
            }
        }
        r.rationale = join_trimmed(rest);
    }

    {
        static const std::regex cause_head(R"(^##\s*(?:[0-9]+[.)]\s*)?(.+?)\s*$)");
        std::vector<std::pair<std::string, std::vector<std::string>>> causes;
        for (const auto& line : sections[std::string(kSectionRootCause)]) {
            std::smatch m;
            if (line.rfind("##", 0) == 0 && std::regex_match(line, m, cause_head)) {
                causes.push_back({trim(m[1].str()), {}});
            } else if (!causes.empty()) {
                causes.back().second.push_back(line);
            }
        }
        if (causes.empty()) throw Error(ErrorCode::NoCauses, "root cause section lists no cause");
        if (causes.size() > 5) throw TooManyCauses(causes.size());
        for (auto& [label, body] : causes) {
            RootCause c;
            c.label = label;
            std::vector<std::string> reasoning;
            for (const auto& l : body) {
                if (trim(l).rfind("Evidence:", 0) != 0) reasoning.push_back(l);
            }
            c.reasoning = join_trimmed(reasoning);
            c.evidence_refs = extract_evidence(join_trimmed(body));
            r.root_causes.push_back(std::move(c));
        }
    }

    for (const auto& line : sections[std::string(kSectionRecovery)]) {
        const auto t = trim(line);
        if (t.rfind("- ", 0) == 0 || t.rfind("* ", 0) == 0) {
            r.recovery.push_back(trim(t.substr(2)));
        } else if (!t.empty()) {
            r.recovery.push_back(t);
        }
    }
    r.summary = join_trimmed(sections[std::string(kSectionSummary)]);
    const auto sql = join_trimmed(sections[std::string(kSectionSql)]);
    if (!sql.empty() && lower(sql) != "none") r.sql_context = sql;
    return r;
}

std::string render_report(const DiagnosisReport& r) {
    std::ostringstream o;
    o << "# " << kSectionValidation << "\n";
    o << "Real anomaly: " << (r.is_real_anomaly ? "yes" : "no") << "\n";
    if (!r.rationale.empty()) o << r.rationale << "\n";
    o << "\n# " << kSectionRootCause << "\n";
    for (std::size_t i = 0; i < r.root_causes.size(); ++i) {
        const auto& c = r.root_causes[i];
        o << "## " << (i + 1) << ". " << c.label << "\n";
        if (!c.reasoning.empty()) o << c.reasoning << "\n";
        // Consecutive refs to the same metric share one evidence line.
        std::size_t j = 0;
        while (j < c.evidence_refs.size()) {
            const auto& id = c.evidence_refs[j].metric_id;
            o << "Evidence: metric " << id;
            bool first = true;
            for (; j < c.evidence_refs.size() && c.evidence_refs[j].metric_id == id; ++j) {
                const auto& e = c.evidence_refs[j];
                o << (first ? " " : ", ") << e.stat << "=" << format_value(e.value) << e.unit;
                first = false;
            }
            o << "\n";
        }
    }
    o << "\n# " << kSectionRecovery << "\n";
    for (const auto& a : r.recovery) o << "- " << a << "\n";
    o << "\n# " << kSectionSummary << "\n" << r.summary << "\n";
    o << "\n# " << kSectionSql << "\n" << (r.sql_context ? *r.sql_context : std::string("none")) << "\n";
    return o.str();
}

std::string_view to_string(AuthenticityKind kind) {
    return kind == AuthenticityKind::UnknownMetric ? "UnknownMetric" : "ValueMismatch";
}

std::vector<AuthenticityFinding> validate_evidence(const DiagnosisReport& report, const DiagnosisContext& context,
                                                   const MetricSource* store) {
    std::vector<AuthenticityFinding> out;
    for (std::size_t i = 0; i < report.root_causes.size(); ++i) {
        for (const auto& ref : report.root_causes[i].evidence_refs) {
            if (!context.has_metric(ref.metric_id)) {
                out.push_back({i, AuthenticityKind::UnknownMetric,
                               "metric " + ref.metric_id + " is not part of the supplied evidence"});
                continue;
            }
            auto it = context.metric_summaries.find(ref.metric_id);
            if (it == context.metric_summaries.end()) {
                out.push_back({i, AuthenticityKind::ValueMismatch, "metric " + ref.metric_id + " has no data to cite"});
                continue;
            }
            const auto& s = it->second;
            std::optional<double> actual;
            if (ref.stat == "max") actual = s.max;
            else if (ref.stat == "min") actual = s.min;
            else if (ref.stat == "avg" || ref.stat == "mean") actual = s.avg;
            else if (ref.stat == "last") actual = s.last;
            else if (store && ref.stat.size() > 1 && ref.stat[0] == 'p') {
                std::vector<double> values;
                for (const auto& p : store->get_window(ref.metric_id, s.t0, s.t1)) values.push_back(p.value);
                if (!values.empty()) actual = nearest_rank_percentile(values, std::stoi(ref.stat.substr(1)));
            }
            if (!actual) continue;
            const double tol = std::max(0.01 * std::fabs(*actual), 0.01);
            if (std::fabs(ref.value - *actual) > tol) {
                out.push_back({i, AuthenticityKind::ValueMismatch,
                               "metric " + ref.metric_id + " " + ref.stat + " claimed " + format_value(ref.value) +
                                   " but the data gives " + format_value(*actual)});
            }
        }
    }
    return out;
}

} // namespace omx
