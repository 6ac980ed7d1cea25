#include "omx/config.hpp"
#include "omx/errors.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace omx;

TEST(Config, RoundTripThroughFile) {
    EngineConfig cfg;
    cfg.paths.data_dir = "/var/lib/omx";
    cfg.adf.theta = 12;
    cfg.adf.score_threshold = 12;
    cfg.evolution.max_rounds = 3;
    cfg.evolution.score_thresholds["cpu_usage"] = 20;
    cfg.llm.mode = LlmMode::Remote;
    cfg.llm.base_url = "http://localhost:8000/v1/chat/completions";
    cfg.trend.sharp_change = 0.4;
    const auto dir = omx::testing::scratch_dir("config");
    save_config(cfg, (dir / "c.json").string());
    const auto back = load_config((dir / "c.json").string());
    EXPECT_EQ(back.paths.data_dir, cfg.paths.data_dir);
    EXPECT_EQ(back.adf, cfg.adf);
    EXPECT_EQ(back.evolution.adf, cfg.adf) << "evolution screening uses the top-level detector settings";
    EXPECT_EQ(back.evolution.max_rounds, 3);
    EXPECT_EQ(back.evolution.score_thresholds, cfg.evolution.score_thresholds);
    EXPECT_EQ(back.llm.base_url, cfg.llm.base_url);
    EXPECT_EQ(back.trend.sharp_change, 0.4);
    EXPECT_EQ(config_to_json(back), config_to_json(cfg));
}

TEST(Config, MissingKeysTakeDefaults) {
    const auto cfg = config_from_json(nlohmann::json::object());
    EXPECT_EQ(cfg.adf, ADFConfig{});
    EXPECT_EQ(cfg.evolution.max_rounds, 5);
    EXPECT_EQ(cfg.llm.mode, LlmMode::Mock);
    const auto partial = config_from_json(nlohmann::json{{"adf", {{"theta", 8.0}}}});
    EXPECT_EQ(partial.adf.theta, 8.0);
    EXPECT_EQ(partial.adf.score_threshold, 8.0);
}

TEST(Config, ShippedConfigLoads) {
    const auto cfg = load_config(std::string(OMX_DATA_DIR) + "/config.json");
    EXPECT_EQ(cfg.llm.mode, LlmMode::Mock);
}

TEST(Config, MalformedInputIsSchemaError) {
    EXPECT_THROW(config_from_json(nlohmann::json{{"adf", {{"theta", "high"}}}}), SchemaError);
    EXPECT_THROW(config_from_json(nlohmann::json{{"adf", {{"theta", -3.0}}}}), SchemaError);
    EXPECT_THROW(config_from_json(nlohmann::json::array()), SchemaError);
    const auto dir = omx::testing::scratch_dir("config_bad");
    std::ofstream(dir / "bad.json") << "{ nope";
    EXPECT_THROW(load_config((dir / "bad.json").string()), SchemaError);
    EXPECT_THROW(load_config((dir / "absent.json").string()), Error);
}
