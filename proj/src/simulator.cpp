#include "omx/simulator.hpp"

#include "omx/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace omx {

namespace {

constexpr double kArCoefficient = 0.6;
constexpr double kNoiseFraction = 0.05;
constexpr double kPi = 3.14159265358979323846;

const std::vector<std::string> kVocabulary{
    "HIGH DATA SELECT",           "LOW REDO FILE SIZE",        "LOW REDO GROUP COUNT",
    "LOG BUFFER SETTING NOT ENOUGH", "TABLE INITTRANS NOT ENOUGH", "BUFFER BUSY WAIT",
    "ENQ LOCK WAIT",              "LATCH WAIT",                "HIGH MEMORY USAGE",
    "HIGH CPU USAGE",             "BGWRITER PARAMETER PROBLEM", "SHARED BUFFER NOT ENOUGH",
    "CHECKPOINT PARAMETER PROBLEM", "WAL PARAMETER PROBLEM",   "TABLE DEAD TUPLE",
    "INDEX PROBLEM",              "STATISTICS EXPIRED",
};

// Column indexes (1-based) checked for each database.
const std::map<DatabaseKind, std::vector<int>> kObserved{
    {DatabaseKind::Oracle, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10}},
    {DatabaseKind::DM8, {1, 4, 6, 7, 8, 9, 10}},
    {DatabaseKind::MySQL, {1, 6, 7, 8, 9, 10}},
    {DatabaseKind::PostgreSQL, {11, 12, 13, 14, 15, 16, 17}},
};

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

// Box-Muller on the raw engine output; std::normal_distribution is not
// reproducible across standard libraries.
class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : rng_(seed) {}
    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        has_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

private:
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 rng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::string upper_trim(std::string s) {
    std::string out;
    bool space = false;
    for (unsigned char c : s) {
        if (std::isspace(c)) {
            space = !out.empty();
            continue;
        }
        if (space) out.push_back(' ');
        space = false;
        out.push_back(static_cast<char>(std::toupper(c)));
    }
    return out;
}

Transform parse_transform(const nlohmann::json& j, const std::string& path) {
    Transform t;
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "level_shift") {
        t.kind = Transform::Kind::LevelShift;
        t.delta = j.at("delta").get<double>();
    } else if (kind == "ramp") {
        t.kind = Transform::Kind::Ramp;
        t.slope_per_minute = j.at("slope_per_minute").get<double>();
    } else if (kind == "spike_train") {
        t.kind = Transform::Kind::SpikeTrain;
        t.period_seconds = j.at("period_seconds").get<std::int64_t>();
        t.amplitude = j.at("amplitude").get<double>();
        if (t.period_seconds <= 0) throw SchemaError(path + ".period_seconds", "must be > 0");
    } else {
        throw SchemaError(path + ".kind", "unknown transform '" + kind + "'");
    }
    return t;
}

double apply_transform(const Transform& t, std::int64_t since_start, std::int64_t cadence) {
    switch (t.kind) {
    case Transform::Kind::LevelShift: return t.delta;
    case Transform::Kind::Ramp: return t.slope_per_minute * static_cast<double>(since_start) / 60.0;
    case Transform::Kind::SpikeTrain: return since_start % t.period_seconds < cadence ? t.amplitude : 0.0;
    }
    return 0.0;
}

} // namespace

std::string_view to_string(AnomalyCategory c) {
    switch (c) {
    case AnomalyCategory::LogSync: return "log_sync";
    case AnomalyCategory::Contention: return "contention";
    case AnomalyCategory::SqlOptimization: return "sql_optimization";
    case AnomalyCategory::SystemResource: return "system_resource";
    case AnomalyCategory::WritePerformance: return "write_performance";
    }
    return "log_sync";
}

AnomalyCategory parse_category(std::string_view text) {
    for (int i = 0; i <= static_cast<int>(AnomalyCategory::WritePerformance); ++i) {
        if (to_string(static_cast<AnomalyCategory>(i)) == text) return static_cast<AnomalyCategory>(i);
    }
    throw SchemaError("category", "unknown category '" + std::string(text) + "'");
}

const std::vector<std::string>& cause_vocabulary() { return kVocabulary; }

std::vector<std::string> causes_for_database(DatabaseKind db) {
    auto it = kObserved.find(db);
    if (it == kObserved.end()) return kVocabulary;
    std::vector<std::string> out;
    for (int col : it->second) out.push_back(kVocabulary[static_cast<std::size_t>(col - 1)]);
    return out;
}

bool is_known_cause(const std::string& label) {
    const auto norm = upper_trim(label);
    return std::find(kVocabulary.begin(), kVocabulary.end(), norm) != kVocabulary.end();
}

const Scenario* Catalog::find(const std::string& name) const {
    for (const auto& s : scenarios) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

void validate_scenario(const Scenario& s) {
    if (s.name.empty()) throw SchemaError("name", "empty");
    if (s.truth_causes.empty()) throw SchemaError(s.name + ".truth_causes", "must be non-empty");
    for (const auto& c : s.truth_causes) {
        if (!is_known_cause(c)) throw Error(ErrorCode::InvalidArgument, s.name + ": unknown cause label '" + c + "'");
    }
    for (const auto& inj : s.injected) {
        const bool declared = std::any_of(s.metrics.begin(), s.metrics.end(),
                                          [&](const MetricProfile& m) { return m.id == inj.metric_id; });
        if (!declared) throw SchemaError(s.name + ".injections", "undeclared metric '" + inj.metric_id + "'");
        if (inj.end_offset <= inj.start_offset) throw SchemaError(s.name + ".injections", "empty window");
    }
}

Catalog parse_catalog(const nlohmann::json& doc) {
    Catalog cat;
    try {
        if (doc.contains("defaults")) {
            const auto& d = doc.at("defaults");
            cat.defaults.start = d.value("start", cat.defaults.start);
            cat.defaults.duration_seconds = d.value("duration_seconds", cat.defaults.duration_seconds);
            cat.defaults.cadence_seconds = d.value("cadence_seconds", cat.defaults.cadence_seconds);
        }
        std::map<DatabaseKind, std::vector<MetricProfile>> profiles;
        for (auto it = doc.at("databases").begin(); it != doc.at("databases").end(); ++it) {
            const auto db = parse_database_kind(it.key());
            for (const auto& jm : it.value().at("metrics")) {
                MetricProfile m;
                m.id = jm.at("id").get<std::string>();
                m.unit = jm.value("unit", "");
                m.nominal = jm.at("nominal").get<double>();
                m.noise = jm.value("noise", true);
                if (jm.contains("clamp_max")) m.clamp_max = jm.at("clamp_max").get<double>();
                if (jm.contains("category")) m.category_path = jm.at("category").get<std::vector<std::string>>();
                profiles[db].push_back(std::move(m));
            }
        }
        for (const auto& js : doc.at("scenarios")) {
            Scenario s;
            s.name = js.at("name").get<std::string>();
            const std::string path = "scenarios." + s.name;
            s.category = parse_category(js.at("category").get<std::string>());
            s.database_kind = parse_database_kind(js.at("database").get<std::string>());
            s.intended_model = js.value("intended_model", "");
            s.metrics = profiles[s.database_kind];
            if (js.contains("nominal_overrides")) {
                for (auto o = js.at("nominal_overrides").begin(); o != js.at("nominal_overrides").end(); ++o) {
                    auto m = std::find_if(s.metrics.begin(), s.metrics.end(),
                                          [&](const MetricProfile& p) { return p.id == o.key(); });
                    if (m == s.metrics.end()) throw SchemaError(path + ".nominal_overrides", "unknown metric " + o.key());
                    m->nominal = o.value().get<double>();
                }
            }
            for (const auto& ji : js.value("injections", nlohmann::json::array())) {
                Injection inj;
                inj.metric_id = ji.at("metric").get<std::string>();
                inj.start_offset = ji.at("start_offset").get<std::int64_t>();
                inj.end_offset = ji.at("end_offset").get<std::int64_t>();
                inj.transform = parse_transform(ji.at("transform"), path + ".transform");
                s.injected.push_back(std::move(inj));
            }
            s.truth_causes = js.at("truth_causes").get<std::vector<std::string>>();
            validate_scenario(s);
            cat.scenarios.push_back(std::move(s));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError("catalog", e.what());
    }
    return cat;
}

Catalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path, e.what());
    }
    return parse_catalog(doc);
}

Catalog default_catalog() { return load_catalog(std::string(OMX_DATA_DIR) + "/scenarios.json"); }

GeneratedData generate(const Scenario& scenario, std::uint64_t seed, std::int64_t duration_seconds,
                       std::int64_t cadence_seconds, std::int64_t start) {
    if (cadence_seconds <= 0) throw Error(ErrorCode::BadWindow, "cadence must be > 0");
    if (duration_seconds < cadence_seconds) throw Error(ErrorCode::BadWindow, "duration shorter than one cadence");
    std::int64_t longest = 0;
    for (const auto& inj : scenario.injected) {
        if (inj.start_offset < 0 || inj.end_offset > duration_seconds || inj.end_offset <= inj.start_offset) {
            throw Error(ErrorCode::BadWindow, "injection on " + inj.metric_id + " lies outside the generated range");
        }
        longest = std::max(longest, inj.end_offset - inj.start_offset);
    }
    if (duration_seconds < 2 * longest) throw Error(ErrorCode::BadWindow, "duration below twice the longest injection");

    GeneratedData out;
    out.start = start;
    const std::int64_t steps = duration_seconds / cadence_seconds;
    out.end = start + (steps - 1) * cadence_seconds;

    std::vector<MetricPoint> points;
    for (const auto& m : scenario.metrics) {
        out.store.declare_series({m.id, scenario.database_kind, m.category_path, m.unit});
        Gaussian g(seed * 0x9E3779B97F4A7C15ULL ^ fnv1a(m.id));
        const double marginal_sd = kNoiseFraction * std::fabs(m.nominal);
        const double innovation_sd = marginal_sd * std::sqrt(1.0 - kArCoefficient * kArCoefficient);
        double e = marginal_sd * g.next();
        for (std::int64_t i = 0; i < steps; ++i) {
            if (i > 0) e = kArCoefficient * e + innovation_sd * g.next();
            const std::int64_t offset = i * cadence_seconds;
            double v = m.nominal + (m.noise ? e : 0.0);
            for (const auto& inj : scenario.injected) {
                if (inj.metric_id == m.id && offset >= inj.start_offset && offset < inj.end_offset) {
                    v += apply_transform(inj.transform, offset - inj.start_offset, cadence_seconds);
                }
            }
            v = std::max(v, 0.0);
            if (m.clamp_max) v = std::min(v, *m.clamp_max);
            points.push_back({m.id, start + offset, v});
        }
    }
    out.store.commit(std::move(points));

    out.truth.causes = scenario.truth_causes;
    for (const auto& inj : scenario.injected) {
        out.truth.windows.push_back({inj.metric_id, start + inj.start_offset, start + inj.end_offset});
    }
    return out;
}

void to_json(nlohmann::json& j, const GroundTruth& g) {
    j = {{"causes", g.causes}, {"windows", nlohmann::json::array()}};
    for (const auto& w : g.windows) j["windows"].push_back({{"metric_id", w.metric_id}, {"t0", w.t0}, {"t1", w.t1}});
}

void from_json(const nlohmann::json& j, GroundTruth& g) {
    g.causes = j.at("causes").get<std::vector<std::string>>();
    g.windows.clear();
    for (const auto& w : j.at("windows")) {
        g.windows.push_back({w.at("metric_id").get<std::string>(), w.at("t0").get<std::int64_t>(),
                             w.at("t1").get<std::int64_t>()});
    }
}

} // namespace omx
