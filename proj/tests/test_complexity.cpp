// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fdsic;

TEST(Complexity, TableOperatingPoint) {
    EXPECT_EQ(poly_counts(13, 7), (OpCount{780, 1818, 520}));
    EXPECT_EQ(nn_counts(13, 18), (OpCount{543, 611, 550}));
    const auto p = poly_counts(13, 7), n = nn_counts(13, 18);
    EXPECT_LE(n.real_mults, p.real_mults);
    EXPECT_LE(n.real_adds, p.real_adds);
}

TEST(Complexity, SmallAndDegenerateCases) {
    EXPECT_EQ(poly_counts(1, 1), (OpCount{6, 12, 4}));
    const auto lin = nn_counts(13, 0);
    EXPECT_EQ(lin.real_mults, 39);
    EXPECT_EQ(lin.real_adds, 89);
    EXPECT_EQ(lin, linear_counts(13));
    EXPECT_THROW(poly_counts(13, 6), ConfigError);
    EXPECT_THROW(poly_counts(0, 7), ConfigError);
    EXPECT_THROW(nn_counts(13, -1), ConfigError);
}

TEST(Complexity, BasisCountDivisibleByFour) {
    for (int p = 1; p <= 15; p += 2) {
        EXPECT_EQ((p + 1) * (p + 3) % 4, 0) << p;
        EXPECT_EQ(poly_counts(1, p).real_mults * 4, 3 * (p + 1) * (p + 3));
        EXPECT_EQ(poly_counts(1, p).real_adds * 4, 7 * (p + 1) * (p + 3) - 8);
    }
}

TEST(Complexity, InstrumentedCountsMatchFormulas) {
    const auto x = test::random_signal(40, 1);
    std::mt19937_64 rng(2);
    for (int l : {1, 4, 13}) {
        const LinearModel lin{test::random_complex(std::size_t(l), rng)};
        EXPECT_EQ(empirical_count(lin, x).core, linear_counts(l)) << l;
        for (int p : {1, 3, 5, 7}) {
            const PolyModel m{l, p, test::random_complex(PolyModel::coefficient_count(l, p), rng)};
            for (int lanes : {1, 2, 4}) EXPECT_EQ(empirical_count(m, x, lanes).core, poly_counts(l, p)) << l << " " << p;
        }
        for (int h : {1, 10, 18}) {
            auto m = nn_init(l, h, 3);
            m.linear = lin;
            const auto e = empirical_count(m, x, NnLanes{2 * l, 2, 2});
            EXPECT_EQ(e.core, nn_counts(l, h)) << l << " " << h;
            EXPECT_EQ(e.auxiliary.real_adds, 2);
            EXPECT_EQ(e.auxiliary.real_mults, 0);
        }
    }
}

TEST(Complexity, ParameterCountsEqualSerializedCoefficients) {
    const PolyModel p{13, 7, std::vector<Complex>(PolyModel::coefficient_count(13, 7))};
    EXPECT_EQ(2 * std::int64_t(p.coeffs.size()), poly_counts(13, 7).real_params);
    auto n = nn_init(13, 18, 1);
    const std::int64_t serialized = n.w1.size() + n.b1.size() + n.w2.size() + n.b2.size() + 2 * std::int64_t(n.linear.taps.size());
    EXPECT_EQ(serialized, nn_counts(13, 18).real_params);
    const auto json = model_to_json(AnyModel{n});
    EXPECT_EQ(std::int64_t(json["w1"].size() * json["w1"][0].size() + json["b1"].size() + json["w2"].size() * json["w2"][0].size() +
                           json["b2"].size() + 2 * json["linear_taps"].size()),
              serialized);
}

TEST(Complexity, PolyAuxiliaryIsBasisOfNewestSample) {
    const PolyModel m{13, 7, std::vector<Complex>(260)};
    const auto e = empirical_count(m, test::random_signal(20, 3));
    EXPECT_EQ(e.auxiliary.real_mults, 46);
    EXPECT_EQ(e.auxiliary.real_adds, 31);
}

TEST(Complexity, TableText) {
    std::ostringstream os;
    write_complexity_table(os, 13, 7, 18);
    const std::string t = os.str();
    for (const char* s : {"Real Parameters", "520", "550", "780", "543", "1818", "611", "Poly (L=13, P=7)", "NN (L=13, N_h=18)"})
        EXPECT_NE(t.find(s), std::string::npos) << s;
}
