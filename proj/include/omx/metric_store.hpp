#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace omx {

enum class DatabaseKind { Oracle, MySQL, PostgreSQL, DM8, Generic };

std::string_view to_string(DatabaseKind kind);
DatabaseKind parse_database_kind(std::string_view text);

struct MetricPoint {
    std::string metric_id;
    std::int64_t ts = 0;
    double value = 0.0;

    bool operator==(const MetricPoint&) const = default;
};

struct SeriesInfo {
    std::string metric_id;
    DatabaseKind database_kind = DatabaseKind::Generic;
    std::vector<std::string> category_path{"uncategorized"};
    std::string unit;
};

struct MetricSeries {
    std::string metric_id;
    DatabaseKind database_kind = DatabaseKind::Generic;
    std::vector<std::string> category_path{"uncategorized"};
    std::string unit;
    std::vector<MetricPoint> points; // strictly increasing ts
};

// Codes are fixed: 0 stable, 1 sharp decline, 2 slow decline, 3 sharp rise,
// 4 slow rise, 5 fluctuating.
enum class TrendClass : int {
    Stable = 0,
    SharpDecline = 1,
    SlowDecline = 2,
    SharpRise = 3,
    SlowRise = 4,
    Fluctuating = 5,
};

std::string_view trend_label(TrendClass trend);
TrendClass trend_from_code(int code);
TrendClass trend_from_label(std::string_view label);

struct TrendConfig {
    double stable_band = 0.05;   // |r| below this (with low residual) is stable
    double sharp_change = 0.3;   // |r| at or above this is "sharp"
    double residual_cv = 0.2;    // residual coefficient of variation bound for stable
};

enum class StatKind { Last, Delta, RollingMean, Min, Max, Percentile, Trend };

struct StatSpec {
    StatKind kind = StatKind::Last;
    int percentile = 0;              // only for Percentile
    std::int64_t window_seconds = 60;

    bool operator==(const StatSpec&) const = default;
};

// "last", "delta", "mean", "min", "max", "p95", "trend"
std::string stat_name(StatKind kind, int percentile = 0);
std::string stat_name(const StatSpec& spec);
// Parses the stat name part of a spec; throws UnknownStatSpec.
StatSpec parse_stat_name(std::string_view name, std::int64_t window_seconds);

struct DerivedStat {
    StatSpec spec;
    std::variant<double, TrendClass> value;

    double numeric() const;
};

// Pure statistics over a value sequence (already windowed, time ordered).
double compute_stat(StatKind kind, int percentile, std::span<const double> values);
double nearest_rank_percentile(std::span<const double> values, int percentile);
TrendClass classify_trend(std::span<const double> values, const TrendConfig& cfg = {});

// Read access to windows of metric data. Implemented by the live store and by
// immutable snapshots handed to tools.
class MetricSource {
public:
    virtual ~MetricSource() = default;
    virtual bool has_metric(const std::string& metric_id) const = 0;
    // Points with t0 <= ts <= t1 in ts order; throws UnknownMetric.
    virtual std::vector<MetricPoint> get_window(const std::string& metric_id, std::int64_t t0,
                                                std::int64_t t1) const = 0;
    virtual std::optional<SeriesInfo> series_info(const std::string& metric_id) const = 0;

    // Points in the half-open window (t_end - window_seconds, t_end].
    std::vector<MetricPoint> window_ending(const std::string& metric_id, std::int64_t t_end,
                                           std::int64_t window_seconds) const;
    std::vector<double> values_ending(const std::string& metric_id, std::int64_t t_end,
                                      std::int64_t window_seconds) const;

    DerivedStat derive_stat(const std::string& metric_id, const StatSpec& spec, std::int64_t t_end,
                            const TrendConfig& trend_cfg = {}) const;
};

enum class IngestFormat { JSONL, CSV };

class MetricSnapshot;

class MetricStore : public MetricSource {
public:
    MetricStore() = default;
    MetricStore(const MetricStore& other);
    MetricStore& operator=(const MetricStore& other);

    // All-or-nothing: a malformed record aborts the batch before commit.
    std::size_t ingest_points(std::span<const std::string> lines, IngestFormat format);
    std::size_t ingest_text(std::string_view text, IngestFormat format);

    // Points are sorted on commit; duplicate (metric_id, ts) keeps the last value.
    void commit(std::vector<MetricPoint> points);
    void declare_series(const SeriesInfo& info);

    bool has_metric(const std::string& metric_id) const override;
    std::vector<MetricPoint> get_window(const std::string& metric_id, std::int64_t t0,
                                        std::int64_t t1) const override;
    std::optional<SeriesInfo> series_info(const std::string& metric_id) const override;

    std::vector<std::string> metric_ids() const;
    std::size_t point_count() const;
    std::optional<std::pair<std::int64_t, std::int64_t>> time_range(const std::string& metric_id) const;
    std::optional<std::pair<std::int64_t, std::int64_t>> time_range() const;

    MetricSnapshot snapshot(std::int64_t t0, std::int64_t t1) const;
    MetricSnapshot snapshot() const;

    // Canonical JSONL: series by metric_id, then points by ts.
    std::string to_jsonl() const;

private:
    mutable std::shared_mutex mu_;
    std::map<std::string, MetricSeries> series_;
};

class MetricSnapshot : public MetricSource {
public:
    MetricSnapshot() = default;
    explicit MetricSnapshot(std::map<std::string, MetricSeries> series);

    bool has_metric(const std::string& metric_id) const override;
    std::vector<MetricPoint> get_window(const std::string& metric_id, std::int64_t t0,
                                        std::int64_t t1) const override;
    std::optional<SeriesInfo> series_info(const std::string& metric_id) const override;
    const std::map<std::string, MetricSeries>& series() const { return series_; }

private:
    std::map<std::string, MetricSeries> series_;
};

} // namespace omx
