#include "omx/adf.hpp"
#include "omx/errors.hpp"
#include "omx/simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

using namespace omx;

namespace {

Scenario single(double nominal, std::vector<Injection> inj = {}) {
    Scenario s;
    s.name = "unit";
    s.category = AnomalyCategory::SystemResource;
    s.database_kind = DatabaseKind::MySQL;
    s.metrics.push_back({"m", "u", nominal, true, std::nullopt, {"x"}});
    s.metrics.push_back({"param_flat", "", 64, false, std::nullopt, {"param"}});
    s.injected = std::move(inj);
    s.truth_causes = {"HIGH CPU USAGE"};
    return s;
}

std::vector<double> values(const GeneratedData& d, const std::string& id, std::int64_t t0, std::int64_t t1) {
    std::vector<double> out;
    for (const auto& p : d.store.get_window(id, t0, t1)) out.push_back(p.value);
    return out;
}

double mean(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

double sd(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

} // namespace

TEST(Simulator, DeterministicPerSeed) {
    const auto catalog = default_catalog();
    for (const auto& sc : catalog.scenarios) {
        const auto a = generate(sc, 7, 7200, 60);
        const auto b = generate(sc, 7, 7200, 60);
        const auto c = generate(sc, 8, 7200, 60);
        EXPECT_EQ(a.store.to_jsonl(), b.store.to_jsonl()) << sc.name;
        EXPECT_NE(a.store.to_jsonl(), c.store.to_jsonl()) << sc.name;
        EXPECT_EQ(a.truth.causes, sc.truth_causes);
        EXPECT_EQ(a.truth.windows.size(), sc.injected.size());
        EXPECT_EQ(a.end, a.start + 7200 - 60);
    }
}

TEST(Simulator, NoiseStatistics) {
    const auto d = generate(single(50), 11, 60 * 20000, 60);
    const auto v = values(d, "m", d.start, d.end);
    ASSERT_EQ(v.size(), 20000u);
    EXPECT_NEAR(mean(v), 50.0, 0.5);
    EXPECT_NEAR(sd(v), 2.5, 0.15);
    EXPECT_NEAR(lag1_autocorrelation(v), 0.6, 0.03);
    const auto flat = values(d, "param_flat", d.start, d.end);
    EXPECT_EQ(*std::min_element(flat.begin(), flat.end()), 64.0);
    EXPECT_EQ(*std::max_element(flat.begin(), flat.end()), 64.0);
}

TEST(Simulator, TransformsApplyOnlyInsideWindow) {
    Transform shift;
    shift.delta = 40;
    auto d = generate(single(20, {{"m", 3600, 5400, shift}}), 1, 7200, 60);
    EXPECT_NEAR(mean(values(d, "m", d.start + 3600, d.start + 5399)), 60, 2);
    EXPECT_NEAR(mean(values(d, "m", d.start, d.start + 3599)), 20, 2);
    EXPECT_NEAR(mean(values(d, "m", d.start + 5400, d.end)), 20, 2);
    EXPECT_EQ(d.truth.windows.front(), (InjectionWindow{"m", d.start + 3600, d.start + 5400}));

    Transform ramp;
    ramp.kind = Transform::Kind::Ramp;
    ramp.slope_per_minute = 10;
    d = generate(single(20, {{"m", 3600, 5400, ramp}}), 1, 7200, 60);
    const auto r = values(d, "m", d.start + 3600, d.start + 5399);
    EXPECT_GT(r.back() - r.front(), 250);

    Transform spikes;
    spikes.kind = Transform::Kind::SpikeTrain;
    spikes.period_seconds = 300;
    spikes.amplitude = 200;
    d = generate(single(20, {{"m", 3600, 5400, spikes}}), 1, 7200, 60);
    int high = 0;
    for (double x : values(d, "m", d.start + 3600, d.start + 5399)) high += x > 120 ? 1 : 0;
    EXPECT_EQ(high, 6); // one sample per 300 s period
}

TEST(Simulator, ClampsAndBadWindows) {
    Transform drop;
    drop.delta = -500;
    auto s = single(20, {{"m", 3600, 5400, drop}});
    s.metrics[0].clamp_max = 22.0;
    const auto d = generate(s, 2, 7200, 60);
    for (const auto& p : d.store.get_window("m", d.start, d.end)) {
        EXPECT_GE(p.value, 0.0);
        EXPECT_LE(p.value, 22.0);
    }
    auto code_of = [](const Scenario& sc, std::int64_t dur) {
        try {
            generate(sc, 1, dur, 60);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::InvalidArgument;
    };
    EXPECT_EQ(code_of(single(20, {{"m", 3600, 5400, drop}}), 3000), ErrorCode::BadWindow);
    EXPECT_EQ(code_of(single(20, {{"m", 100, 1000, drop}}), 1500), ErrorCode::BadWindow);
    EXPECT_EQ(code_of(single(20, {{"m", 5000, 8000, drop}}), 7200), ErrorCode::BadWindow);
}

TEST(Catalog, ShippedCatalogCoversEveryCategory) {
    const auto catalog = default_catalog();
    ASSERT_GE(catalog.scenarios.size(), 5u);
    std::set<AnomalyCategory> cats;
    for (const auto& sc : catalog.scenarios) {
        cats.insert(sc.category);
        EXPECT_NO_THROW(validate_scenario(sc));
        const auto allowed = causes_for_database(sc.database_kind);
        for (const auto& c : sc.truth_causes) {
            EXPECT_NE(std::find(allowed.begin(), allowed.end(), c), allowed.end()) << sc.name << ": " << c;
        }
    }
    EXPECT_EQ(cats.size(), 5u);
    for (const char* name : {"log_sync_delay", "redo_surge", "hot_block_contention", "cpu_spike", "dirty_page_writes"}) {
        EXPECT_TRUE(catalog.find(name)) << name;
    }
    EXPECT_EQ(catalog.find("log_sync_delay")->database_kind, DatabaseKind::Oracle);
    EXPECT_EQ(catalog.find("cpu_spike")->database_kind, DatabaseKind::MySQL);
    EXPECT_EQ(catalog.find("dirty_page_writes")->database_kind, DatabaseKind::PostgreSQL);
}

TEST(Catalog, VocabularyAndErrors) {
    EXPECT_EQ(cause_vocabulary().size(), 17u);
    EXPECT_TRUE(is_known_cause("LOW REDO FILE SIZE"));
    EXPECT_FALSE(is_known_cause("GREMLINS"));
    EXPECT_EQ(causes_for_database(DatabaseKind::Generic).size(), 17u);
    auto s = single(20);
    s.truth_causes = {"GREMLINS"};
    EXPECT_THROW(validate_scenario(s), Error);
    EXPECT_THROW(parse_catalog(nlohmann::json{{"scenarios", 5}}), SchemaError);
}

TEST(Catalog, GroundTruthJson) {
    GroundTruth g{{"A", "B"}, {{"m", 10, 20}}};
    EXPECT_EQ(nlohmann::json(g).get<GroundTruth>(), g);
}
