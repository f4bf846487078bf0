// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fdsic;

TEST(Metric, Examples) {
    const auto y = test::random_signal(1000, 1);
    EXPECT_NEAR(cancellation_db(y, y, 0), 0.0, 1e-12);
    SignalBuffer tenth = y;
    for (auto& v : tenth.samples) v /= 10.0;
    EXPECT_NEAR(cancellation_db(y, tenth, 0), -20.0, 1e-9);
    SignalBuffer zero;
    zero.samples.assign(y.size(), Complex{});
    EXPECT_EQ(cancellation_db(y, zero, 0), -std::numeric_limits<double>::infinity());
}

TEST(Metric, SkipAndWindow) {
    SignalBuffer y, r;
    y.samples = {{100, 0}, {1, 0}, {1, 0}};
    r.samples = {{0, 0}, {0.1, 0}, {0.1, 0}};
    EXPECT_NEAR(cancellation_db(y, r, 1), -20.0, 1e-9);
    EXPECT_NEAR(cancellation_db(y, r, 1, 2), -20.0, 1e-9);
}

TEST(Metric, Errors) {
    const auto y = test::random_signal(10, 1);
    EXPECT_THROW(cancellation_db(y, test::random_signal(9, 1), 0), ConfigError);
    SignalBuffer zero;
    zero.samples.assign(10, Complex{});
    EXPECT_THROW(cancellation_db(zero, y, 0), NumericError);
    EXPECT_THROW(cancellation_db(y, y, 10), NumericError);
}

TEST(Metric, InvariantToCommonComplexScaling) {
    std::mt19937_64 rng(2);
    const auto y = test::random_signal(500, 3), r = test::random_signal(500, 4, 0.1);
    const double base = cancellation_db(y, r, 0);
    for (auto s : test::random_complex(10, rng)) {
        SignalBuffer ys = y, rs = r;
        for (auto& v : ys.samples) v *= s;
        for (auto& v : rs.samples) v *= s;
        EXPECT_NEAR(cancellation_db(ys, rs, 0), base, 1e-9);
    }
}

TEST(Sweep, SmallestQWithinTolerance) {
    const std::vector<SweepRow> rows{{8, "nn", 0, -10}, {9, "nn", 0, -29.6}, {10, "nn", 0, -28}, {11, "nn", 0, -29.8},
                                     {12, "nn", 0, -30}, {8, "poly", 0, -5}, {12, "poly", 0, -5}};
    EXPECT_EQ(smallest_q_within(rows, "nn", -30, 0.5), 11);
    EXPECT_EQ(smallest_q_within(rows, "poly", -30, 0.5), -1);
    EXPECT_EQ(smallest_q_within(rows, "linear", -30, 0.5), -1);
}

TEST(Sweep, CsvFormatAndErrors) {
    std::ostringstream os;
    write_sweep_csv(os, {{17, "nn", 13, -41.0123456789}});
    EXPECT_EQ(os.str(), "q,canceller,frac_bits,cancellation_db\n17,nn,13,-41.012346\n");
    const auto d = test::small_dataset(2);
    const std::vector<AnyModel> none;
    SweepSpec s;
    EXPECT_THROW(sweep_q(d.x, d.y, none, s), ConfigError);
    s.split = 100;
    s.q_min = 1;
    EXPECT_THROW(sweep_q(d.x, d.y, none, s), ConfigError);
}

TEST(Sweep, SingleQGivesOneRowPerCanceller) {
    const auto d = test::small_dataset(10);
    const auto split = split_index(d.x.size(), 0.7);
    const std::vector<AnyModel> models{ls_estimate_linear(head(d.x, split), head(d.y, split), 6),
                                       ls_estimate_poly(head(d.x, split), head(d.y, split), 4, 3)};
    SweepSpec s;
    s.q_min = s.q_max = 16;
    s.split = split;
    const auto rows = sweep_q(d.x, d.y, models, s);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].canceller, "linear");
    EXPECT_EQ(rows[1].canceller, "poly");
}

// Cancellation at Q + 4 is never more than 0.2 dB worse than at Q.
TEST(Sweep, MonotoneWithinTolerance) {
    const auto d = test::small_dataset(30);
    const auto split = split_index(d.x.size(), 0.7);
    const auto xt = head(d.x, split), yt = head(d.y, split);
    TrainConfig tc;
    tc.epochs = 20;
    const std::vector<AnyModel> models{ls_estimate_linear(xt, yt, 8), ls_estimate_poly(xt, yt, 6, 5), nn_train(xt, yt, 6, 8, tc)};
    SweepSpec s;
    s.q_min = 6;
    s.q_max = 28;
    s.split = split;
    const auto rows = sweep_q(d.x, d.y, models, s);
    std::map<std::pair<std::string, int>, double> db;
    for (const auto& r : rows) db[{r.canceller, r.q}] = r.cancellation_db;
    for (const auto& [key, v] : db) {
        const auto up = db.find({key.first, key.second + 4});
        if (up != db.end()) {
            EXPECT_LE(up->second, v + 0.2) << key.first << " Q=" << key.second;
        }
    }
    for (const auto& m : models) {
        const double f = cancellation_db(d.y, cancel(d.y, predict(m, d.x)), split);
        const double q28 = db[{canceller_name(m), 28}];
        EXPECT_NEAR(q28, f, 0.1) << canceller_name(m);
    }
}
