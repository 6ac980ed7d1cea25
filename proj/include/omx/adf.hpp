#pragma once

#include "omx/metric_store.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "json.hpp"

namespace omx {

struct ADFConfig {
    double theta = 10.0;             // volatility threshold
    double score_threshold = 10.0;   // tau; defaults to theta
    int baseline_window = 30;        // W, points averaged for the baseline
    std::array<double, 24> hour_factors = filled(1.0);
    double sigma_floor = 1e-9;       // epsilon
    int shuffle_trials = 100;        // M, permutations used for rho_R
    std::uint64_t rng_seed = 42;

    // Throws InvalidArgument when a field is out of range.
    void validate() const;

    bool operator==(const ADFConfig&) const = default;

private:
    static std::array<double, 24> filled(double v) {
        std::array<double, 24> a{};
        a.fill(v);
        return a;
    }
};

struct Volatility {
    double sigma = 0.0;
    double c_v = 0.0;
    double rho_v = 0.0;
    double rho_r = 0.0;
};

struct ADFResult {
    double sigma = 0.0;
    double c_v = 0.0;
    double rho_v = 0.0;
    double rho_r = 0.0;
    double baseline = 0.0;
    double deviation = 0.0;
    double state_value = 0.0;
    double w1 = 0.0;
    double w2 = 1.0;
    double score = 0.0;
    bool abnormal = false;

    bool operator==(const ADFResult&) const = default;
};

// Lag-1 autocorrelation; a series with zero variance (or fewer than two
// points) has autocorrelation 0.
double lag1_autocorrelation(std::span<const double> xs);

// Throws InsufficientData when |X| < 2.
Volatility volatility(std::span<const double> xs, const ADFConfig& cfg);

int hour_of_day(std::int64_t t);

// Mean of the last W values strictly before t, scaled by the hour factor of t.
// Throws InsufficientData when no point precedes t.
double baseline(std::span<const MetricPoint> history, std::int64_t t, const ADFConfig& cfg);

ADFResult evaluate_with_baseline(std::span<const double> xs, double x_t, double baseline_value,
                                 const ADFConfig& cfg);

ADFResult evaluate(std::span<const double> xs, double x_t, std::int64_t t, std::span<const MetricPoint> history,
                   const ADFConfig& cfg);

void to_json(nlohmann::json& j, const ADFConfig& c);
void from_json(const nlohmann::json& j, ADFConfig& c);
void to_json(nlohmann::json& j, const ADFResult& r);
void from_json(const nlohmann::json& j, ADFResult& r);

} // namespace omx
