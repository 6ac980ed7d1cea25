#pragma once

#include "omx/anomaly.hpp"
#include "omx/metric_store.hpp"

#include <filesystem>
#include <stdexcept>
#include <unistd.h>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace omx::testing {

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("omx_test_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

using SeriesMap = std::map<std::string, std::vector<std::pair<std::int64_t, double>>>;

inline MetricStore store_from(const SeriesMap& series) {
    MetricStore store;
    std::vector<MetricPoint> pts;
    for (const auto& [id, values] : series) {
        for (const auto& [ts, v] : values) pts.push_back({id, ts, v});
    }
    store.commit(std::move(pts));
    return store;
}

// Evenly spaced series ending at t_end.
inline std::vector<std::pair<std::int64_t, double>> ending_at(std::int64_t t_end, std::int64_t cadence,
                                                              const std::vector<double>& values) {
    std::vector<std::pair<std::int64_t, double>> out;
    const auto n = static_cast<std::int64_t>(values.size());
    for (std::int64_t i = 0; i < n; ++i) out.emplace_back(t_end - (n - 1 - i) * cadence, values[static_cast<std::size_t>(i)]);
    return out;
}

// Ten points over the last 600 s that classify as `trend` and end at `raw`.
inline std::vector<double> shaped(double raw, TrendClass trend) {
    std::vector<double> v(10);
    auto line = [&](double a, double b) {
        for (int i = 0; i < 10; ++i) v[static_cast<std::size_t>(i)] = raw * (a + (b - a) * i / 9.0);
    };
    switch (trend) {
    case TrendClass::Stable: line(1, 1); break;
    case TrendClass::SharpRise: line(0.5, 1); break;
    case TrendClass::SlowRise: line(0.9, 1); break;
    case TrendClass::SharpDecline: line(1.5, 1); break;
    case TrendClass::SlowDecline: line(1.1, 1); break;
    case TrendClass::Fluctuating:
        v = {1, 1.5, .5, 1.5, .5, .5, 1.5, .5, 1.5, 1};
        for (auto& x : v) x *= raw;
        break;
    }
    return v;
}

inline std::vector<AnomalyModel> shipped_models() { return load_models(std::string(OMX_DATA_DIR) + "/models"); }

inline const AnomalyModel& model_named(const std::vector<AnomalyModel>& models, const std::string& id) {
    for (const auto& m : models) {
        if (m.model_id == id) return m;
    }
    throw std::runtime_error("no model " + id);
}

} // namespace omx::testing
