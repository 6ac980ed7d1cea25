#include "omx/errors.hpp"
#include "omx/metric_store.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

using namespace omx;
using omx::testing::store_from;

namespace {

const std::vector<double> kExample{12, 14, 55, 58, 61};

double oracle_mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

} // namespace

TEST(Stats, WorkedExampleMeanDeltaTrend) {
    EXPECT_DOUBLE_EQ(compute_stat(StatKind::RollingMean, 0, kExample), 40.0);
    EXPECT_DOUBLE_EQ(compute_stat(StatKind::Delta, 0, kExample), 49.0);
    EXPECT_DOUBLE_EQ(compute_stat(StatKind::Last, 0, kExample), 61.0);
    EXPECT_DOUBLE_EQ(compute_stat(StatKind::Min, 0, kExample), 12.0);
    EXPECT_DOUBLE_EQ(compute_stat(StatKind::Max, 0, kExample), 61.0);
    EXPECT_EQ(classify_trend(kExample), TrendClass::SharpRise);
}

TEST(Stats, NearestRankPercentileMatchesSortedIndexing) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> v(1 + rng() % 40);
        for (auto& x : v) x = u(rng);
        auto sorted = v;
        std::sort(sorted.begin(), sorted.end());
        for (int p : {1, 50, 90, 95, 100}) {
            // smallest value with at least p% of the sample at or below it
            double want = sorted.back();
            for (std::size_t i = 0; i < sorted.size(); ++i) {
                if (100.0 * static_cast<double>(i + 1) >= p * static_cast<double>(sorted.size())) {
                    want = sorted[i];
                    break;
                }
            }
            EXPECT_EQ(nearest_rank_percentile(v, p), want) << "p=" << p << " n=" << v.size();
        }
    }
}

TEST(Stats, InsufficientDataCarriesCounts) {
    try {
        compute_stat(StatKind::Delta, 0, std::vector<double>{1.0});
        FAIL() << "expected InsufficientData";
    } catch (const InsufficientData& e) {
        EXPECT_EQ(e.needed(), 2u);
        EXPECT_EQ(e.got(), 1u);
    }
    EXPECT_THROW(compute_stat(StatKind::Last, 0, std::vector<double>{}), InsufficientData);
    EXPECT_THROW(classify_trend(std::vector<double>{3.0}), InsufficientData);
}

TEST(Stats, TrendClassesForHandBuiltShapes) {
    auto line = [](double a, double b) {
        std::vector<double> v;
        for (int i = 0; i < 10; ++i) v.push_back(a + (b - a) * i / 9.0);
        return v;
    };
    EXPECT_EQ(classify_trend(std::vector<double>(10, 5.0)), TrendClass::Stable);
    EXPECT_EQ(classify_trend(line(50, 100)), TrendClass::SharpRise);
    EXPECT_EQ(classify_trend(line(90, 100)), TrendClass::SlowRise);
    EXPECT_EQ(classify_trend(line(150, 100)), TrendClass::SharpDecline);
    EXPECT_EQ(classify_trend(line(110, 100)), TrendClass::SlowDecline);
    EXPECT_EQ(classify_trend(std::vector<double>{1, 1.5, .5, 1.5, .5, .5, 1.5, .5, 1.5, 1}), TrendClass::Fluctuating);
}

TEST(StatNames, RoundTrip) {
    for (const char* name : {"last", "delta", "mean", "min", "max", "p50", "p95", "trend"}) {
        EXPECT_EQ(stat_name(parse_stat_name(name, 60)), name);
    }
    EXPECT_THROW(parse_stat_name("median", 60), Error);
    EXPECT_THROW(parse_stat_name("p0", 60), Error);
    EXPECT_THROW(parse_stat_name("p101", 60), Error);
    for (int code = 0; code <= 5; ++code) {
        const auto t = trend_from_code(code);
        EXPECT_EQ(trend_from_label(trend_label(t)), t);
    }
}

TEST(Store, JsonlIngestSortsAndKeepsLastDuplicate) {
    MetricStore s;
    const auto n = s.ingest_text(R"({"metric_id":"a","ts":120,"value":3}
{"metric_id":"a","ts":60,"value":1}

{"metric_id":"a","ts":120,"value":4,"unit":"ms","database":"Oracle","category":["io","redo"]}
)",
                                 IngestFormat::JSONL);
    EXPECT_EQ(n, 3u);
    const auto w = s.get_window("a", 0, 1000);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w[0].ts, 60);
    EXPECT_EQ(w[1].value, 4.0);
    const auto info = s.series_info("a");
    ASSERT_TRUE(info);
    EXPECT_EQ(info->unit, "ms");
    EXPECT_EQ(info->database_kind, DatabaseKind::Oracle);
    EXPECT_EQ(info->category_path, (std::vector<std::string>{"io", "redo"}));
}

TEST(Store, CsvIngestWithReorderedColumns) {
    MetricStore s;
    EXPECT_EQ(s.ingest_text("value,ts,metric_id\n1.5,60,x\n2.5,120,x\n", IngestFormat::CSV), 2u);
    EXPECT_EQ(s.get_window("x", 0, 200).back().value, 2.5);
}

TEST(Store, MalformedBatchIsAllOrNothing) {
    MetricStore s;
    try {
        s.ingest_text("{\"metric_id\":\"a\",\"ts\":1,\"value\":1}\n{\"metric_id\":\"a\",\"ts\":\"x\",\"value\":1}\n",
                      IngestFormat::JSONL);
        FAIL();
    } catch (const MalformedRecord& e) {
        EXPECT_EQ(e.line_no(), 2u);
    }
    EXPECT_FALSE(s.has_metric("a"));
    EXPECT_THROW(s.ingest_text("metric_id,ts,value\na,1,nan\n", IngestFormat::CSV), Error);
    EXPECT_THROW(s.ingest_text("metric_id,ts\na,1\n", IngestFormat::CSV), MalformedRecord);
    EXPECT_THROW(s.ingest_text("metric_id,ts,value\na,1\n", IngestFormat::CSV), MalformedRecord);
    EXPECT_EQ(s.point_count(), 0u);
}

TEST(Store, NonFiniteValueCode) {
    MetricStore s;
    try {
        s.ingest_text("metric_id,ts,value\na,1,inf\n", IngestFormat::CSV);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonFiniteValue);
    }
}

TEST(Store, WindowsAreInclusiveAndHalfOpenEnding) {
    const auto s = store_from({{"m", {{60, 1}, {120, 2}, {180, 3}, {240, 4}}}});
    EXPECT_EQ(s.get_window("m", 120, 180).size(), 2u);
    // (240-120, 240] excludes 120
    const auto v = s.values_ending("m", 240, 120);
    EXPECT_EQ(v, (std::vector<double>{3, 4}));
    EXPECT_THROW(s.get_window("nope", 0, 1), Error);
    EXPECT_DOUBLE_EQ(s.derive_stat("m", StatSpec{StatKind::RollingMean, 0, 240}, 240).numeric(),
                     oracle_mean({1, 2, 3, 4}));
    EXPECT_THROW(s.derive_stat("m", StatSpec{StatKind::Last, 0, 0}, 240), Error);
}

TEST(Store, JsonlRoundTripIsCanonical) {
    MetricStore s;
    s.declare_series({"b", DatabaseKind::MySQL, {"cpu"}, "%"});
    s.commit({{"b", 20, 1.25}, {"a", 10, 3}, {"b", 10, -2}});
    const auto text = s.to_jsonl();
    MetricStore t;
    t.ingest_text(text, IngestFormat::JSONL);
    EXPECT_EQ(t.to_jsonl(), text);
    EXPECT_EQ(t.metric_ids(), (std::vector<std::string>{"a", "b"}));
    EXPECT_EQ(t.series_info("b")->unit, "%");
    const auto r = t.time_range();
    ASSERT_TRUE(r);
    EXPECT_EQ(r->first, 10);
    EXPECT_EQ(r->second, 20);
}

TEST(Store, SnapshotIsIsolatedFromLaterWrites) {
    MetricStore s;
    s.commit({{"m", 1, 1}, {"m", 2, 2}, {"m", 3, 3}});
    const auto snap = s.snapshot(2, 3);
    s.commit({{"m", 4, 4}});
    EXPECT_EQ(snap.get_window("m", 0, 10).size(), 2u);
    EXPECT_EQ(s.get_window("m", 0, 10).size(), 4u);
}

TEST(Store, ConcurrentReadersDuringIngest) {
    MetricStore s;
    s.commit({{"m", 0, 0}});
    std::thread writer([&] {
        for (int i = 1; i <= 500; ++i) s.commit({{"m", i, static_cast<double>(i)}});
    });
    std::size_t last = 0;
    for (int i = 0; i < 500; ++i) {
        const auto n = s.get_window("m", 0, 1000).size();
        EXPECT_GE(n, last);
        last = n;
    }
    writer.join();
    EXPECT_EQ(s.point_count(), 501u);
}
