// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include "test_util.hpp"

using namespace fdsic;

namespace {

NNModel some_nn() {
    auto m = nn_init(3, 4, 5);
    m.b1 << 0.1, -0.2, 1.0 / 3.0, 1e-300;
    m.b2 << std::numeric_limits<double>::min(), -7.25;
    m.denorm_shift = -6;
    m.linear.taps = {{0.1, 0.2}, {-1.0 / 7.0, 3.0}, {0.0, -0.0}};
    return m;
}

} // namespace

TEST(ModelIo, RoundTripIsExact) {
    std::mt19937_64 rng(1);
    const AnyModel lin = LinearModel{test::random_complex(5, rng)};
    const AnyModel poly = PolyModel{3, 5, test::random_complex(PolyModel::coefficient_count(3, 5), rng)};
    const AnyModel nn = some_nn();
    for (const auto& m : {lin, poly, nn}) {
        const auto back = model_from_string(model_to_string(m));
        ASSERT_EQ(back.index(), m.index());
        const auto x = test::random_signal(50, 2);
        EXPECT_EQ(predict(back, x).samples, predict(m, x).samples);
        EXPECT_EQ(model_to_string(back), model_to_string(m));
    }
    const auto n = std::get<NNModel>(model_from_string(model_to_string(nn)));
    EXPECT_EQ(n.w1, std::get<NNModel>(nn).w1);
    EXPECT_EQ(n.b1, std::get<NNModel>(nn).b1);
    EXPECT_EQ(n.denorm_shift, -6);
}

TEST(ModelIo, FileRoundTripAndIoErrors) {
    const auto path = (std::filesystem::temp_directory_path() / "fdsic_model.json").string();
    save_model(path, AnyModel{some_nn()});
    EXPECT_EQ(load_model(path).index(), 2u);
    std::filesystem::remove(path);
    EXPECT_THROW(load_model("/nonexistent/m.json"), IoError);
    EXPECT_THROW(save_model("/nonexistent/dir/m.json", AnyModel{some_nn()}), IoError);
}

TEST(ModelIo, MalformedDocuments) {
    auto good = model_to_json(AnyModel{some_nn()});
    EXPECT_THROW(model_from_string("{"), FormatError);
    EXPECT_THROW(model_from_string("[]"), FormatError);
    auto j = good;
    j["version"] = 2;
    EXPECT_THROW(model_from_json(j), FormatError);
    j = good;
    j["kind"] = "cnn";
    EXPECT_THROW(model_from_json(j), FormatError);
    j = good;
    j["w1"][0].erase(0);
    EXPECT_THROW(model_from_json(j), FormatError);
    j = good;
    j.erase("b2");
    EXPECT_THROW(model_from_json(j), FormatError);
    j = good;
    j["b1"][0] = "x";
    EXPECT_THROW(model_from_json(j), FormatError);
    auto p = model_to_json(AnyModel{PolyModel{2, 3, std::vector<Complex>(12)}});
    p["order"] = 4;
    EXPECT_THROW(model_from_json(p), FormatError);
    // Format errors are I/O errors for exit-code purposes.
    EXPECT_THROW(model_from_string("{"), IoError);
}

TEST(Config, DefaultsRoundTripThroughText) {
    RunConfig c;
    c.ofdm.num_symbols = 123;
    c.chain.channel_taps = {{0.5, -0.25}, {0.1, 0.0}};
    c.train.optimizer = Optimizer::sgd;
    c.lambda = 1e-7;
    std::ostringstream os;
    write_config(os, c);
    std::istringstream is(os.str());
    const auto back = parse_config(is);
    std::ostringstream os2;
    write_config(os2, back);
    EXPECT_EQ(os2.str(), os.str());
    EXPECT_EQ(back.ofdm.num_symbols, 123);
    EXPECT_EQ(back.chain.channel_taps, c.chain.channel_taps);
    EXPECT_EQ(back.chain.iq_k2, c.chain.iq_k2);
}

TEST(Config, ParsesCommentsAndComplexValues) {
    std::istringstream is("# header\n  seed = 99  # trailing\n\niq_k2 = 0.01:-0.02\npa_a3 = 0.5\n");
    const auto c = parse_config(is);
    EXPECT_EQ(c.ofdm.seed, 99u);
    EXPECT_EQ(c.chain.iq_k2, Complex(0.01, -0.02));
    EXPECT_EQ(c.chain.pa_coeffs[1], Complex(0.5, 0));
}

TEST(Config, Errors) {
    for (const char* text : {"bogus = 1\n", "seed\n", "seed = \n", "seed = 1.5\n", "noise_power = abc\n", "train_fraction = 1\n",
                             "used_subcarriers = 64\n", "optimizer = lbfgs\n", "iq_k2 = 2\n", "epochs = -1\n"}) {
        std::istringstream is(text);
        EXPECT_THROW(parse_config(is), ConfigError) << text;
    }
    EXPECT_THROW(load_config("/nonexistent/x.cfg"), IoError);
    EXPECT_EQ(split_index(10, 0.7), 7u);
}
