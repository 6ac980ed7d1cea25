#include "omx/metric_store.hpp"

#include "omx/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace omx {

using nlohmann::json;

std::string_view to_string(DatabaseKind kind) {
    switch (kind) {
    case DatabaseKind::Oracle: return "Oracle";
    case DatabaseKind::MySQL: return "MySQL";
    case DatabaseKind::PostgreSQL: return "PostgreSQL";
    case DatabaseKind::DM8: return "DM8";
    case DatabaseKind::Generic: return "Generic";
    }
    return "Generic";
}

DatabaseKind parse_database_kind(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "oracle") return DatabaseKind::Oracle;
    if (lower == "mysql") return DatabaseKind::MySQL;
    if (lower == "postgresql" || lower == "postgres") return DatabaseKind::PostgreSQL;
    if (lower == "dm8") return DatabaseKind::DM8;
    if (lower == "generic") return DatabaseKind::Generic;
    throw Error(ErrorCode::InvalidArgument, "unknown database kind '" + std::string(text) + "'");
}

std::string_view trend_label(TrendClass trend) {
    switch (trend) {
    case TrendClass::Stable: return "stable";
    case TrendClass::SharpDecline: return "sharp decline";
    case TrendClass::SlowDecline: return "slow decline";
    case TrendClass::SharpRise: return "sharp rise";
    case TrendClass::SlowRise: return "slow rise";
    case TrendClass::Fluctuating: return "fluctuating";
    }
    return "stable";
}

TrendClass trend_from_code(int code) {
    if (code < 0 || code > 5) {
        throw Error(ErrorCode::OutOfRange, "trend code " + std::to_string(code));
    }
    return static_cast<TrendClass>(code);
}

TrendClass trend_from_label(std::string_view label) {
    for (int code = 0; code <= 5; ++code) {
        if (trend_label(static_cast<TrendClass>(code)) == label) return static_cast<TrendClass>(code);
    }
    throw Error(ErrorCode::OutOfRange, "trend label '" + std::string(label) + "'");
}

std::string stat_name(StatKind kind, int percentile) {
    switch (kind) {
    case StatKind::Last: return "last";
    case StatKind::Delta: return "delta";
    case StatKind::RollingMean: return "mean";
    case StatKind::Min: return "min";
    case StatKind::Max: return "max";
    case StatKind::Percentile: return "p" + std::to_string(percentile);
    case StatKind::Trend: return "trend";
    }
    return "last";
}

std::string stat_name(const StatSpec& spec) { return stat_name(spec.kind, spec.percentile); }

StatSpec parse_stat_name(std::string_view name, std::int64_t window_seconds) {
    StatSpec spec;
    spec.window_seconds = window_seconds;
    if (name == "last" || name == "raw") {
        spec.kind = StatKind::Last;
    } else if (name == "delta") {
        spec.kind = StatKind::Delta;
    } else if (name == "mean" || name == "avg") {
        spec.kind = StatKind::RollingMean;
    } else if (name == "min") {
        spec.kind = StatKind::Min;
    } else if (name == "max") {
        spec.kind = StatKind::Max;
    } else if (name == "trend") {
        spec.kind = StatKind::Trend;
    } else if (name.size() > 1 && name[0] == 'p') {
        int p = 0;
        auto [ptr, ec] = std::from_chars(name.data() + 1, name.data() + name.size(), p);
        if (ec != std::errc{} || ptr != name.data() + name.size() || p < 1 || p > 100) {
            throw Error(ErrorCode::UnknownStatSpec, std::string(name));
        }
        spec.kind = StatKind::Percentile;
        spec.percentile = p;
    } else {
        throw Error(ErrorCode::UnknownStatSpec, std::string(name));
    }
    return spec;
}

double DerivedStat::numeric() const {
    if (const auto* v = std::get_if<double>(&value)) return *v;
    return static_cast<double>(static_cast<int>(std::get<TrendClass>(value)));
}

double nearest_rank_percentile(std::span<const double> values, int percentile) {
    if (values.empty()) throw InsufficientData(1, 0, "percentile");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    auto rank = static_cast<std::size_t>(
        std::ceil(static_cast<double>(percentile) / 100.0 * static_cast<double>(sorted.size())));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

double compute_stat(StatKind kind, int percentile, std::span<const double> values) {
    const std::size_t needed = (kind == StatKind::Delta || kind == StatKind::Trend) ? 2 : 1;
    if (values.size() < needed) throw InsufficientData(needed, values.size(), stat_name(kind, percentile));
    switch (kind) {
    case StatKind::Last: return values.back();
    case StatKind::Delta: return values.back() - values.front();
    case StatKind::RollingMean:
        return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    case StatKind::Min: return *std::min_element(values.begin(), values.end());
    case StatKind::Max: return *std::max_element(values.begin(), values.end());
    case StatKind::Percentile: return nearest_rank_percentile(values, percentile);
    case StatKind::Trend: return static_cast<double>(static_cast<int>(classify_trend(values)));
    }
    return 0.0;
}

TrendClass classify_trend(std::span<const double> values, const TrendConfig& cfg) {
    const std::size_t m = values.size();
    if (m < 2) throw InsufficientData(2, m, "trend");
    constexpr double eps = 1e-9;

    const double n = static_cast<double>(m);
    const double mean_idx = (n - 1.0) / 2.0;
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double dx = static_cast<double>(i) - mean_idx;
        sxy += dx * (values[i] - mean);
        sxx += dx * dx;
    }
    const double slope = sxy / sxx;
    const double scale = std::max(std::abs(mean), eps);
    const double r = slope * (n - 1.0) / scale;

    double ss_res = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double fitted = mean + slope * (static_cast<double>(i) - mean_idx);
        const double e = values[i] - fitted;
        ss_res += e * e;
    }
    const double q = std::sqrt(ss_res / n) / scale;

    if (std::abs(r) < cfg.stable_band && q < cfg.residual_cv) return TrendClass::Stable;
    if (r <= -cfg.sharp_change) return TrendClass::SharpDecline;
    if (r > -cfg.sharp_change && r <= -cfg.stable_band) return TrendClass::SlowDecline;
    if (r >= cfg.sharp_change) return TrendClass::SharpRise;
    if (r >= cfg.stable_band && r < cfg.sharp_change) return TrendClass::SlowRise;
    return TrendClass::Fluctuating;
}

std::vector<MetricPoint> MetricSource::window_ending(const std::string& metric_id, std::int64_t t_end,
                                                     std::int64_t window_seconds) const {
    return get_window(metric_id, t_end - window_seconds + 1, t_end);
}

std::vector<double> MetricSource::values_ending(const std::string& metric_id, std::int64_t t_end,
                                                std::int64_t window_seconds) const {
    auto points = window_ending(metric_id, t_end, window_seconds);
    std::vector<double> values;
    values.reserve(points.size());
    for (const auto& p : points) values.push_back(p.value);
    return values;
}

DerivedStat MetricSource::derive_stat(const std::string& metric_id, const StatSpec& spec,
                                      std::int64_t t_end, const TrendConfig& trend_cfg) const {
    if (spec.window_seconds <= 0) {
        throw Error(ErrorCode::InvalidArgument, "window_seconds must be positive");
    }
    const auto values = values_ending(metric_id, t_end, spec.window_seconds);
    DerivedStat out{spec, 0.0};
    if (spec.kind == StatKind::Trend) {
        out.value = classify_trend(values, trend_cfg);
    } else {
        out.value = compute_stat(spec.kind, spec.percentile, values);
    }
    return out;
}

namespace {

std::vector<MetricPoint> slice(const MetricSeries& series, std::int64_t t0, std::int64_t t1) {
    if (t0 > t1) return {};
    const auto& pts = series.points;
    auto lo = std::lower_bound(pts.begin(), pts.end(), t0,
                               [](const MetricPoint& p, std::int64_t t) { return p.ts < t; });
    auto hi = std::upper_bound(pts.begin(), pts.end(), t1,
                               [](std::int64_t t, const MetricPoint& p) { return t < p.ts; });
    return {lo, hi};
}

SeriesInfo info_of(const MetricSeries& s) {
    return SeriesInfo{s.metric_id, s.database_kind, s.category_path, s.unit};
}

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    for (auto& f : out) {
        auto b = f.find_first_not_of(" \t");
        auto e = f.find_last_not_of(" \t");
        f = (b == std::string::npos) ? std::string() : f.substr(b, e - b + 1);
    }
    return out;
}

bool blank(std::string_view line) {
    return line.find_first_not_of(" \t\r\n") == std::string_view::npos;
}

struct ParsedRecord {
    MetricPoint point;
    std::optional<SeriesInfo> info;
};

ParsedRecord parse_json_record(const std::string& line, std::size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw MalformedRecord(line_no, "invalid JSON");
    }
    if (!j.is_object()) throw MalformedRecord(line_no, "record is not an object");
    if (!j.contains("metric_id") || !j["metric_id"].is_string() || j["metric_id"].get<std::string>().empty()) {
        throw MalformedRecord(line_no, "metric_id missing");
    }
    if (!j.contains("ts") || !j["ts"].is_number_integer()) throw MalformedRecord(line_no, "ts missing or not an integer");
    if (!j.contains("value") || !j["value"].is_number()) throw MalformedRecord(line_no, "value missing or not a number");

    ParsedRecord rec;
    rec.point.metric_id = j["metric_id"].get<std::string>();
    rec.point.ts = j["ts"].get<std::int64_t>();
    rec.point.value = j["value"].get<double>();
    if (rec.point.ts < 0) throw MalformedRecord(line_no, "negative ts");
    if (!std::isfinite(rec.point.value)) {
        throw Error(ErrorCode::NonFiniteValue, "line " + std::to_string(line_no));
    }
    if (j.contains("unit") || j.contains("database") || j.contains("category")) {
        SeriesInfo info;
        info.metric_id = rec.point.metric_id;
        try {
            if (j.contains("unit")) info.unit = j["unit"].get<std::string>();
            if (j.contains("database")) info.database_kind = parse_database_kind(j["database"].get<std::string>());
            if (j.contains("category")) {
                info.category_path = j["category"].get<std::vector<std::string>>();
                if (info.category_path.empty()) throw MalformedRecord(line_no, "empty category");
            }
        } catch (const json::exception&) {
            throw MalformedRecord(line_no, "bad series metadata");
        } catch (const Error& e) {
            if (e.code() == ErrorCode::MalformedRecord) throw;
            throw MalformedRecord(line_no, e.detail());
        }
        rec.info = std::move(info);
    }
    return rec;
}

} // namespace

MetricStore::MetricStore(const MetricStore& other) {
    std::shared_lock lock(other.mu_);
    series_ = other.series_;
}

MetricStore& MetricStore::operator=(const MetricStore& other) {
    if (this != &other) {
        std::map<std::string, MetricSeries> copy;
        {
            std::shared_lock lock(other.mu_);
            copy = other.series_;
        }
        std::unique_lock lock(mu_);
        series_ = std::move(copy);
    }
    return *this;
}

std::size_t MetricStore::ingest_points(std::span<const std::string> lines, IngestFormat format) {
    std::vector<MetricPoint> points;
    std::vector<SeriesInfo> infos;
    points.reserve(lines.size());

    if (format == IngestFormat::JSONL) {
        for (std::size_t i = 0; i < lines.size(); ++i) {
            if (blank(lines[i])) continue;
            auto rec = parse_json_record(lines[i], i + 1);
            if (rec.info) infos.push_back(std::move(*rec.info));
            points.push_back(std::move(rec.point));
        }
    } else {
        std::size_t first = 0;
        while (first < lines.size() && blank(lines[first])) ++first;
        if (first == lines.size()) return 0;
        const auto header = split_csv(lines[first]);
        auto col = [&](const char* name) -> std::size_t {
            auto it = std::find(header.begin(), header.end(), name);
            if (it == header.end()) throw MalformedRecord(first + 1, std::string("header lacks ") + name);
            return static_cast<std::size_t>(it - header.begin());
        };
        const std::size_t c_id = col("metric_id");
        const std::size_t c_ts = col("ts");
        const std::size_t c_val = col("value");
        for (std::size_t i = first + 1; i < lines.size(); ++i) {
            if (blank(lines[i])) continue;
            const std::size_t line_no = i + 1;
            const auto f = split_csv(lines[i]);
            if (f.size() != header.size()) throw MalformedRecord(line_no, "column count");
            MetricPoint p;
            p.metric_id = f[c_id];
            if (p.metric_id.empty()) throw MalformedRecord(line_no, "metric_id missing");
            const auto& ts = f[c_ts];
            auto [tp, tec] = std::from_chars(ts.data(), ts.data() + ts.size(), p.ts);
            if (tec != std::errc{} || tp != ts.data() + ts.size() || p.ts < 0) {
                throw MalformedRecord(line_no, "bad ts");
            }
            const auto& vs = f[c_val];
            auto [vp, vec] = std::from_chars(vs.data(), vs.data() + vs.size(), p.value);
            if (vec != std::errc{} || vp != vs.data() + vs.size()) throw MalformedRecord(line_no, "bad value");
            if (!std::isfinite(p.value)) throw Error(ErrorCode::NonFiniteValue, "line " + std::to_string(line_no));
            points.push_back(std::move(p));
        }
    }

    const std::size_t count = points.size();
    {
        std::unique_lock lock(mu_);
        for (const auto& info : infos) {
            auto& s = series_[info.metric_id];
            s.metric_id = info.metric_id;
            s.database_kind = info.database_kind;
            s.category_path = info.category_path;
            s.unit = info.unit;
        }
    }
    commit(std::move(points));
    return count;
}

std::size_t MetricStore::ingest_text(std::string_view text, IngestFormat format) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            if (start < text.size()) lines.emplace_back(text.substr(start));
            break;
        }
        lines.emplace_back(text.substr(start, nl - start));
        start = nl + 1;
    }
    return ingest_points(lines, format);
}

void MetricStore::commit(std::vector<MetricPoint> points) {
    std::map<std::string, std::vector<MetricPoint>> grouped;
    for (auto& p : points) grouped[p.metric_id].push_back(std::move(p));

    std::unique_lock lock(mu_);
    for (auto& [id, incoming] : grouped) {
        auto& s = series_[id];
        if (s.metric_id.empty()) s.metric_id = id;
        auto& pts = s.points;
        pts.insert(pts.end(), std::make_move_iterator(incoming.begin()), std::make_move_iterator(incoming.end()));
        std::stable_sort(pts.begin(), pts.end(),
                         [](const MetricPoint& a, const MetricPoint& b) { return a.ts < b.ts; });
        // Keep the last of each run of equal timestamps.
        std::vector<MetricPoint> dedup;
        dedup.reserve(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i + 1 < pts.size() && pts[i + 1].ts == pts[i].ts) continue;
            dedup.push_back(std::move(pts[i]));
        }
        pts = std::move(dedup);
    }
}

void MetricStore::declare_series(const SeriesInfo& info) {
    if (info.category_path.empty()) {
        throw Error(ErrorCode::InvalidArgument, "category_path must be non-empty for " + info.metric_id);
    }
    std::unique_lock lock(mu_);
    auto& s = series_[info.metric_id];
    s.metric_id = info.metric_id;
    s.database_kind = info.database_kind;
    s.category_path = info.category_path;
    s.unit = info.unit;
}

bool MetricStore::has_metric(const std::string& metric_id) const {
    std::shared_lock lock(mu_);
    return series_.count(metric_id) > 0;
}

std::vector<MetricPoint> MetricStore::get_window(const std::string& metric_id, std::int64_t t0,
                                                 std::int64_t t1) const {
    std::shared_lock lock(mu_);
    auto it = series_.find(metric_id);
    if (it == series_.end()) throw Error(ErrorCode::UnknownMetric, metric_id);
    return slice(it->second, t0, t1);
}

std::optional<SeriesInfo> MetricStore::series_info(const std::string& metric_id) const {
    std::shared_lock lock(mu_);
    auto it = series_.find(metric_id);
    if (it == series_.end()) return std::nullopt;
    return info_of(it->second);
}

std::vector<std::string> MetricStore::metric_ids() const {
    std::shared_lock lock(mu_);
    std::vector<std::string> ids;
    ids.reserve(series_.size());
    for (const auto& [id, s] : series_) ids.push_back(id);
    return ids;
}

std::size_t MetricStore::point_count() const {
    std::shared_lock lock(mu_);
    std::size_t n = 0;
    for (const auto& [id, s] : series_) n += s.points.size();
    return n;
}

std::optional<std::pair<std::int64_t, std::int64_t>> MetricStore::time_range(const std::string& metric_id) const {
    std::shared_lock lock(mu_);
    auto it = series_.find(metric_id);
    if (it == series_.end() || it->second.points.empty()) return std::nullopt;
    return std::make_pair(it->second.points.front().ts, it->second.points.back().ts);
}

std::optional<std::pair<std::int64_t, std::int64_t>> MetricStore::time_range() const {
    std::shared_lock lock(mu_);
    std::optional<std::pair<std::int64_t, std::int64_t>> out;
    for (const auto& [id, s] : series_) {
        if (s.points.empty()) continue;
        if (!out) {
            out = std::make_pair(s.points.front().ts, s.points.back().ts);
        } else {
            out->first = std::min(out->first, s.points.front().ts);
            out->second = std::max(out->second, s.points.back().ts);
        }
    }
    return out;
}

MetricSnapshot MetricStore::snapshot(std::int64_t t0, std::int64_t t1) const {
    std::shared_lock lock(mu_);
    std::map<std::string, MetricSeries> copy;
    for (const auto& [id, s] : series_) {
        MetricSeries c = s;
        c.points = slice(s, t0, t1);
        copy.emplace(id, std::move(c));
    }
    return MetricSnapshot(std::move(copy));
}

MetricSnapshot MetricStore::snapshot() const {
    std::shared_lock lock(mu_);
    return MetricSnapshot(series_);
}

std::string MetricStore::to_jsonl() const {
    std::shared_lock lock(mu_);
    std::string out;
    for (const auto& [id, s] : series_) {
        bool first = true;
        for (const auto& p : s.points) {
            json j = {{"metric_id", id}, {"ts", p.ts}, {"value", p.value}};
            if (first) {
                j["unit"] = s.unit;
                j["database"] = std::string(to_string(s.database_kind));
                j["category"] = s.category_path;
                first = false;
            }
            out += j.dump();
            out += '\n';
        }
    }
    return out;
}

MetricSnapshot::MetricSnapshot(std::map<std::string, MetricSeries> series) : series_(std::move(series)) {}

bool MetricSnapshot::has_metric(const std::string& metric_id) const { return series_.count(metric_id) > 0; }

std::vector<MetricPoint> MetricSnapshot::get_window(const std::string& metric_id, std::int64_t t0,
                                                    std::int64_t t1) const {
    auto it = series_.find(metric_id);
    if (it == series_.end()) throw Error(ErrorCode::UnknownMetric, metric_id);
    return slice(it->second, t0, t1);
}

std::optional<SeriesInfo> MetricSnapshot::series_info(const std::string& metric_id) const {
    auto it = series_.find(metric_id);
    if (it == series_.end()) return std::nullopt;
    return info_of(it->second);
}

} // namespace omx
