#include "omx/adf.hpp"

#include "omx/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace omx {

void ADFConfig::validate() const {
    auto bad = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, "adf: " + what); };
    if (!(theta > 0.0) || !std::isfinite(theta)) bad("theta must be finite and > 0");
    if (!std::isfinite(score_threshold)) bad("score_threshold must be finite");
    if (baseline_window < 1) bad("baseline_window must be >= 1");
    for (double f : hour_factors) {
        if (!(f > 0.0) || !std::isfinite(f)) bad("hour_factors must be finite and > 0");
    }
    if (!(sigma_floor > 0.0) || !std::isfinite(sigma_floor)) bad("sigma_floor must be finite and > 0");
    if (shuffle_trials < 1) bad("shuffle_trials must be >= 1");
}

double lag1_autocorrelation(std::span<const double> xs) {
    if (xs.size() < 2) return 0.0;
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double d = xs[i] - mean;
        den += d * d;
        if (i + 1 < xs.size()) num += d * (xs[i + 1] - mean);
    }
    if (den <= 0.0) return 0.0;
    return num / den;
}

namespace {

// Fisher-Yates written out so the permutation sequence is identical on every
// standard library (std::shuffle's use of the engine is unspecified).
void seeded_shuffle(std::vector<double>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

double sample_stddev(std::span<const double> xs) {
    const double n = static_cast<double>(xs.size());
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / (n - 1.0));
}

} // namespace

Volatility volatility(std::span<const double> xs, const ADFConfig& cfg) {
    if (xs.size() < 2) throw InsufficientData(2, xs.size(), "adf window");
    Volatility out;
    out.sigma = sample_stddev(xs);

    std::vector<double> v(xs.size() - 1);
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) v[i] = std::fabs(xs[i + 1] - xs[i]);
    out.rho_v = lag1_autocorrelation(v);

    std::mt19937_64 rng(cfg.rng_seed);
    double acc = 0.0;
    std::vector<double> shuffled;
    for (int m = 0; m < cfg.shuffle_trials; ++m) {
        shuffled = v;
        seeded_shuffle(shuffled, rng);
        acc += lag1_autocorrelation(shuffled);
    }
    out.rho_r = acc / static_cast<double>(cfg.shuffle_trials);

    const double sign = out.rho_r < 0.0 ? -1.0 : 1.0;
    out.c_v = out.rho_v / (sign * std::max(std::fabs(out.rho_r), cfg.sigma_floor));
    return out;
}

int hour_of_day(std::int64_t t) {
    const std::int64_t h = (t / 3600) % 24;
    return static_cast<int>(h < 0 ? h + 24 : h);
}

double baseline(std::span<const MetricPoint> history, std::int64_t t, const ADFConfig& cfg) {
    auto end = std::lower_bound(history.begin(), history.end(), t,
                                [](const MetricPoint& p, std::int64_t v) { return p.ts < v; });
    const auto available = static_cast<std::size_t>(end - history.begin());
    if (available == 0) throw InsufficientData(1, 0, "baseline history before t");
    const std::size_t take = std::min<std::size_t>(available, static_cast<std::size_t>(cfg.baseline_window));
    double sum = 0.0;
    for (auto it = end - static_cast<std::ptrdiff_t>(take); it != end; ++it) sum += it->value;
    return sum / static_cast<double>(take) * cfg.hour_factors[static_cast<std::size_t>(hour_of_day(t))];
}

ADFResult evaluate_with_baseline(std::span<const double> xs, double x_t, double baseline_value,
                                 const ADFConfig& cfg) {
    const Volatility vol = volatility(xs, cfg);
    ADFResult r;
    r.sigma = vol.sigma;
    r.c_v = vol.c_v;
    r.rho_v = vol.rho_v;
    r.rho_r = vol.rho_r;
    r.baseline = baseline_value;
    r.deviation = std::fabs(x_t - baseline_value);

    const double sigma_eff = std::max(r.sigma, cfg.sigma_floor);
    r.state_value = r.deviation <= sigma_eff ? 1.0 - r.deviation / sigma_eff : r.deviation / sigma_eff;
    r.w1 = r.sigma / (r.sigma + cfg.theta);
    r.w2 = 1.0 - r.w1;
    r.score = r.w1 * r.sigma + r.w2 * r.state_value;
    r.abnormal = r.score > cfg.score_threshold;
    return r;
}

ADFResult evaluate(std::span<const double> xs, double x_t, std::int64_t t, std::span<const MetricPoint> history,
                   const ADFConfig& cfg) {
    if (xs.size() < 2) throw InsufficientData(2, xs.size(), "adf window");
    return evaluate_with_baseline(xs, x_t, baseline(history, t, cfg), cfg);
}

void to_json(nlohmann::json& j, const ADFConfig& c) {
    j = {{"theta", c.theta},
         {"score_threshold", c.score_threshold},
         {"baseline_window", c.baseline_window},
         {"hour_factors", c.hour_factors},
         {"sigma_floor", c.sigma_floor},
         {"shuffle_trials", c.shuffle_trials},
         {"rng_seed", c.rng_seed}};
}

void from_json(const nlohmann::json& j, ADFConfig& c) {
    ADFConfig d;
    c.theta = j.value("theta", d.theta);
    // tau follows theta unless given explicitly
    c.score_threshold = j.value("score_threshold", c.theta);
    c.baseline_window = j.value("baseline_window", d.baseline_window);
    if (j.contains("hour_factors")) {
        const auto& hf = j.at("hour_factors");
        if (!hf.is_array() || hf.size() != 24) {
            throw Error(ErrorCode::InvalidArgument, "adf: hour_factors must have 24 entries");
        }
        for (std::size_t i = 0; i < 24; ++i) c.hour_factors[i] = hf[i].get<double>();
    } else {
        c.hour_factors = d.hour_factors;
    }
    c.sigma_floor = j.value("sigma_floor", d.sigma_floor);
    c.shuffle_trials = j.value("shuffle_trials", d.shuffle_trials);
    c.rng_seed = j.value("rng_seed", d.rng_seed);
    c.validate();
}

void to_json(nlohmann::json& j, const ADFResult& r) {
    j = {{"sigma", r.sigma},         {"c_v", r.c_v},         {"rho_v", r.rho_v},
         {"rho_r", r.rho_r},         {"baseline", r.baseline}, {"deviation", r.deviation},
         {"state_value", r.state_value}, {"w1", r.w1},       {"w2", r.w2},
         {"score", r.score},         {"abnormal", r.abnormal}};
}

void from_json(const nlohmann::json& j, ADFResult& r) {
    r.sigma = j.at("sigma").get<double>();
    r.c_v = j.at("c_v").get<double>();
    r.rho_v = j.at("rho_v").get<double>();
    r.rho_r = j.at("rho_r").get<double>();
    r.baseline = j.at("baseline").get<double>();
    r.deviation = j.at("deviation").get<double>();
    r.state_value = j.at("state_value").get<double>();
    r.w1 = j.at("w1").get<double>();
    r.w2 = j.at("w2").get<double>();
    r.score = j.at("score").get<double>();
    r.abnormal = j.at("abnormal").get<bool>();
}

} // namespace omx
