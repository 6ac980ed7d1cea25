#include "omx/errors.hpp"
#include "omx/evolution.hpp"
#include "omx/tools.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace omx;
using omx::testing::ending_at;
using omx::testing::store_from;

namespace {

constexpr std::int64_t kT = 1700003000;

bool has_item(const ToolFindings& f, Severity s, const std::string& needle) {
    for (const auto& i : f.items) {
        if (i.severity == s && i.message.find(needle) != std::string::npos) return true;
    }
    return false;
}

} // namespace

TEST(Tools, LogSyncVerifierFlagsSlowFlushes) {
    const auto store = store_from({{"avg_log_sync_time", ending_at(kT, 60, {5, 6, 75, 80})},
                                   {"redo_generation_rate", ending_at(kT, 60, {30, 30, 30, 30})},
                                   {"user_commits", ending_at(kT, 60, {80, 80, 80, 80})}});
    const auto f = logsync_verifier(store, {});
    EXPECT_TRUE(has_item(f, Severity::Critical, "log writer"));
    EXPECT_TRUE(has_item(f, Severity::Warn, "redo generation"));
    EXPECT_FALSE(has_item(f, Severity::Warn, "commit rate"));
    EXPECT_EQ(f.items.front().evidence.front().value, 80.0);
}

TEST(Tools, LogSyncVerifierThresholdParameter) {
    const auto store = store_from({{"avg_log_sync_time", ending_at(kT, 60, {5, 6, 75, 80})}});
    const auto f = logsync_verifier(store, {{"wait_threshold_ms", "100"}});
    EXPECT_TRUE(has_item(f, Severity::Info, "within baseline"));
    // absent series are reported, not fatal
    EXPECT_TRUE(has_item(f, Severity::Warn, "redo_generation_rate"));
    EXPECT_TRUE(has_item(f, Severity::Warn, "user_commits"));
}

TEST(Tools, RedoArchiveInspector) {
    const auto store = store_from({{"archive_log_size_mb", ending_at(kT, 60, {60, 150})},
                                   {"redo_log_size_mb", ending_at(kT, 60, {50, 50})},
                                   {"log_switches", ending_at(kT, 60, {2, 10})},
                                   {"param_log_buffer_mb", ending_at(kT, 60, {8, 8})},
                                   {"param_archive_lag_target", ending_at(kT, 60, {0, 0})}});
    const auto f = redoarchive_inspector(store, {});
    EXPECT_TRUE(has_item(f, Severity::Warn, "undersized"));
    EXPECT_TRUE(has_item(f, Severity::Critical, "rapid redo log switching"));
    EXPECT_TRUE(has_item(f, Severity::Warn, "log_buffer"));
    EXPECT_TRUE(has_item(f, Severity::Info, "disabled"));

    const auto direct = redoarchive_inspector(store, {{"log_buffer_mb", "64"}});
    EXPECT_FALSE(has_item(direct, Severity::Warn, "log_buffer"));
}

TEST(Tools, RegistryErrors) {
    auto reg = ToolRegistry::with_builtins();
    EXPECT_EQ(reg.tool_ids(), (std::vector<std::string>{"logsync_verifier", "redoarchive_inspector"}));
    try {
        reg.register_tool("logsync_verifier", logsync_verifier);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DuplicateTool);
    }
    const MetricStore empty;
    try {
        reg.run_tool("nope", empty);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UnknownTool);
    }
}

TEST(Tools, UnresolvedEvidenceRaises) {
    ToolRegistry reg;
    reg.register_tool("liar", [](const MetricSource&, const ToolParams&) {
        return ToolFindings{"liar", {{Severity::Warn, "made up", {{"ghost_metric", "max", 1}}}}};
    });
    const auto store = store_from({{"real", ending_at(kT, 60, {1})}});
    try {
        reg.run_tool("liar", store);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InvalidArgument);
    }
    const ToolFindings bogus{"x", {{Severity::Info, "m", {{"ghost_metric", "max", 1}, {"real", "max", 1}}}}};
    const auto missing = unresolved_evidence(bogus, store);
    ASSERT_EQ(missing.size(), 1u);
    EXPECT_EQ(missing[0].metric_id, "ghost_metric");
}

TEST(Tools, WindowedSnapshotLimitsWhatToolsSee) {
    const auto store = store_from({{"avg_log_sync_time", ending_at(kT, 60, {90, 90, 5, 5})}});
    const WindowedSource recent(store, kT - 119, kT);
    const auto f = logsync_verifier(recent, {});
    EXPECT_TRUE(has_item(f, Severity::Info, "within baseline"));
    EXPECT_EQ(recent.get_window("avg_log_sync_time", 0, kT + 1000).size(), 2u);
}

TEST(Tools, DeterministicAndJsonRoundTrip) {
    const auto store = store_from({{"avg_log_sync_time", ending_at(kT, 60, {5, 6, 75, 80})}});
    const auto reg = ToolRegistry::with_builtins();
    const auto a = reg.run_tool("logsync_verifier", store);
    const auto b = reg.run_tool("logsync_verifier", store);
    EXPECT_EQ(a, b);
    EXPECT_EQ(nlohmann::json(a).get<ToolFindings>(), a);
}
