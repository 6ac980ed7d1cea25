#pragma once

#include "omx/metric_store.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace omx {

enum class AnomalyCategory { LogSync, Contention, SqlOptimization, SystemResource, WritePerformance };

std::string_view to_string(AnomalyCategory c);
AnomalyCategory parse_category(std::string_view text);

// The root-cause labels used for scoring, in their canonical spelling.
const std::vector<std::string>& cause_vocabulary();
// Labels observed for one database; Generic returns the whole vocabulary.
std::vector<std::string> causes_for_database(DatabaseKind db);
bool is_known_cause(const std::string& label);

struct MetricProfile {
    std::string id;
    std::string unit;
    double nominal = 0.0;
    bool noise = true;              // parameter series stay flat
    std::optional<double> clamp_max;
    std::vector<std::string> category_path{"uncategorized"};
    bool operator==(const MetricProfile&) const = default;
};

struct Transform {
    enum class Kind { LevelShift, Ramp, SpikeTrain };
    Kind kind = Kind::LevelShift;
    double delta = 0.0;            // level_shift
    double slope_per_minute = 0.0; // ramp
    std::int64_t period_seconds = 0; // spike_train
    double amplitude = 0.0;          // spike_train
    bool operator==(const Transform&) const = default;
};

struct Injection {
    std::string metric_id;
    std::int64_t start_offset = 0; // seconds from the generated start, inclusive
    std::int64_t end_offset = 0;   // exclusive
    Transform transform;
    bool operator==(const Injection&) const = default;
};

struct Scenario {
    std::string name;
    AnomalyCategory category = AnomalyCategory::LogSync;
    DatabaseKind database_kind = DatabaseKind::Generic;
    std::string intended_model;
    std::vector<MetricProfile> metrics;
    std::vector<Injection> injected;
    std::vector<std::string> truth_causes;
    bool operator==(const Scenario&) const = default;
};

struct SimulationDefaults {
    std::int64_t start = 1699999200; // hour aligned
    std::int64_t duration_seconds = 7200;
    std::int64_t cadence_seconds = 60;
};

struct Catalog {
    SimulationDefaults defaults;
    std::vector<Scenario> scenarios;

    const Scenario* find(const std::string& name) const;
};

// Throws SchemaError for structural problems and InvalidArgument for labels
// outside the vocabulary.
Catalog parse_catalog(const nlohmann::json& doc);
Catalog load_catalog(const std::string& path);
// The catalog shipped in the data directory.
Catalog default_catalog();
void validate_scenario(const Scenario& s);

struct InjectionWindow {
    std::string metric_id;
    std::int64_t t0 = 0; // inclusive
    std::int64_t t1 = 0; // exclusive
    bool operator==(const InjectionWindow&) const = default;
};

struct GroundTruth {
    std::vector<std::string> causes;
    std::vector<InjectionWindow> windows;
    bool operator==(const GroundTruth&) const = default;
};

struct GeneratedData {
    MetricStore store;
    GroundTruth truth;
    std::int64_t start = 0;
    std::int64_t end = 0; // last timestamp emitted
};

// Throws BadWindow when an injection falls outside the range or the range is
// shorter than twice the longest injection.
GeneratedData generate(const Scenario& scenario, std::uint64_t seed, std::int64_t duration_seconds,
                       std::int64_t cadence_seconds, std::int64_t start = SimulationDefaults{}.start);

void to_json(nlohmann::json& j, const GroundTruth& g);
void from_json(const nlohmann::json& j, GroundTruth& g);

} // namespace omx
