#include "omx/errors.hpp"
#include "omx/evaluation.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace omx;

namespace {

double brute_accuracy(int ac, int aw, int aa, double sigma) {
    if (aa <= 0) return 0.0;
    const double penalized = static_cast<double>(ac) - sigma * static_cast<double>(aw);
    if (penalized < 0.0) return 0.0;
    return penalized / static_cast<double>(aa);
}

std::vector<std::string> labels(const std::string& prefix, int n) {
    std::vector<std::string> v;
    for (int i = 0; i < n; ++i) v.push_back(prefix + std::to_string(i));
    return v;
}

} // namespace

TEST(Accuracy, FullIntegerGrid) {
    for (double sigma : {0.1, 0.5}) {
        for (int aa = 0; aa <= 6; ++aa) {
            for (int ac = 0; ac <= aa; ++ac) {
                for (int aw = 0; aw <= 6; ++aw) {
                    auto predicted = labels("T", ac);
                    const auto wrong = labels("W", aw);
                    predicted.insert(predicted.end(), wrong.begin(), wrong.end());
                    const auto s = score_case(predicted, labels("T", aa), sigma);
                    ASSERT_EQ(s.a_c, ac);
                    ASSERT_EQ(s.a_w, aw);
                    ASSERT_EQ(s.a_a, aa);
                    ASSERT_NEAR(s.accuracy, brute_accuracy(ac, aw, aa, sigma), 1e-12)
                        << ac << "," << aw << "," << aa << " sigma " << sigma;
                    const double p = ac + aw == 0 ? 0.0 : static_cast<double>(ac) / (ac + aw);
                    const double r = aa == 0 ? 0.0 : static_cast<double>(ac) / aa;
                    ASSERT_NEAR(s.precision, p, 1e-12);
                    ASSERT_NEAR(s.recall, r, 1e-12);
                    ASSERT_NEAR(s.f1, p + r == 0 ? 0.0 : 2 * p * r / (p + r), 1e-12);
                }
            }
        }
    }
}

TEST(Accuracy, SpotValues) {
    EXPECT_NEAR(score_case({"a", "b", "x"}, {"a", "b", "c"}, 0.1).accuracy, 0.633333333, 1e-9);
    EXPECT_EQ(score_case({"x"}, {"a"}, 0.1).accuracy, 0.0);
    EXPECT_EQ(score_case({}, {}, 0.1).accuracy, 0.0);
}

TEST(Accuracy, LabelsNormalizeAndDeduplicate) {
    EXPECT_EQ(normalize_label("  Low   Redo\tFile size "), "low redo file size");
    const auto s = score_case({"LOW REDO FILE SIZE", "low redo  file size"}, {"Low Redo File Size"});
    EXPECT_EQ(s.a_c, 1);
    EXPECT_EQ(s.a_w, 0);
    EXPECT_EQ(s.accuracy, 1.0);
}

TEST(Heval, WeightsAndRange) {
    EXPECT_NEAR(heval(1, 1, 0.5), 0.8, 1e-12);
    EXPECT_NEAR(heval(0, 0, 1), 0.4, 1e-12);
    EXPECT_NEAR(heval(1, 0, 0), 0.3, 1e-12);
    for (double bad : {-0.01, 1.01, std::nan("")}) {
        try {
            heval(bad, 0.5, 0.5);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::OutOfRange);
        }
    }
}

TEST(Suite, OracleAndEmptyBounds) {
    const auto catalog = default_catalog();
    const auto oracle = run_suite(catalog, oracle_diagnoser(), {1, 2});
    EXPECT_EQ(oracle.cases.size(), catalog.scenarios.size() * 2);
    EXPECT_EQ(oracle.mean_accuracy, 1.0);
    EXPECT_EQ(run_suite(catalog, empty_diagnoser(), {1, 2}).mean_accuracy, 0.0);
    for (std::size_t i = 1; i < oracle.cases.size(); ++i) EXPECT_LT(oracle.cases[i - 1].case_id, oracle.cases[i].case_id);
    EXPECT_EQ(oracle.cases.front().case_id, oracle.cases.front().scenario + "-s001");
}

TEST(Suite, FailingDiagnoserScoresZeroAndRecordsError) {
    Catalog c = default_catalog();
    c.scenarios.resize(1);
    const Diagnoser boom = [](const Scenario&, std::uint64_t, const GeneratedData&) -> std::vector<std::string> {
        throw Error(ErrorCode::Timeout, "model took too long");
    };
    const auto s = run_suite(c, boom, {1});
    ASSERT_EQ(s.cases.size(), 1u);
    EXPECT_EQ(s.cases[0].score.accuracy, 0.0);
    EXPECT_NE(s.cases[0].error.find("took too long"), std::string::npos);
}

TEST(Suite, CsvLayout) {
    Catalog c = default_catalog();
    c.scenarios.resize(1);
    const auto csv = to_csv(run_suite(c, oracle_diagnoser(), {3}));
    const auto nl = csv.find('\n');
    EXPECT_EQ(csv.substr(0, nl), "case_id,scenario,seed,a_c,a_w,a_a,precision,recall,f1,accuracy");
    const auto row = csv.substr(nl + 1);
    EXPECT_EQ(row.rfind(c.scenarios[0].name + "-s003," + c.scenarios[0].name + ",3,", 0), 0u) << row;
    EXPECT_NE(row.find(",1.000000,1.000000,1.000000,1.000000"), std::string::npos) << row;
}

TEST(Suite, SeedLists) {
    EXPECT_EQ(parse_seed_list("1..4"), (std::vector<std::uint64_t>{1, 2, 3, 4}));
    EXPECT_EQ(parse_seed_list("9,1,4"), (std::vector<std::uint64_t>{9, 1, 4}));
    EXPECT_EQ(parse_seed_list("7"), (std::vector<std::uint64_t>{7}));
    EXPECT_THROW(parse_seed_list("5..2"), Error);
    EXPECT_THROW(parse_seed_list("a"), Error);
    EXPECT_THROW(parse_seed_list(""), Error);
}
