#include <cstdlib>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "ergocap/config.hpp"
#include "ergocap/csv.hpp"

using namespace ergocap;

namespace {

const char* kBase = R"(
[network]
lambda = 0.01
d = 5
alpha = 3.0
beta = 2.0

[channel]
states = [0.5, 2.0]
transition = [[0.9, 0.1], [0.3, 0.7]]
)";

std::string config_error(const std::string& text) {
    try {
        config::parse_string(text);
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
        return e.what();
    }
    ADD_FAILURE() << "no error raised";
    return {};
}

}  // namespace

TEST(Config, ParsesNetworkAndChannel) {
    const auto spec = config::parse_string(kBase);
    EXPECT_DOUBLE_EQ(spec.network.lambda, 0.01);
    EXPECT_DOUBLE_EQ(spec.network.d, 5.0);  // integers accepted as numbers
    EXPECT_DOUBLE_EQ(spec.network.delta, 1.0);
    EXPECT_NEAR(spec.model().phi(0), 0.75, 1e-12);
    EXPECT_FALSE(spec.im.has_value());
    EXPECT_FALSE(spec.sweep.has_value());
}

TEST(Config, ParsesOptionalSections) {
    const auto spec = config::parse_string(std::string(kBase) + R"(
[im]
gamma = [0.6, 0.7]
cancellation = true
candidate = "excluded"

[mc]
trials = 500
seed = 99
window_radius = 80.0
threads = 2

[sweep]
axis = "delta"
values = [1, 2.5]

[caot]
g = 2

[outputs]
bounds = "b.csv"
)");
    ASSERT_TRUE(spec.im);
    EXPECT_EQ(spec.im->gamma_mins, spec.im->gammas);
    EXPECT_TRUE(spec.im->cancellation_enabled);
    EXPECT_EQ(spec.im->candidate, CandidatePower::Excluded);
    EXPECT_EQ(spec.mc.trials, 500u);
    EXPECT_EQ(spec.mc.seed, 99u);
    EXPECT_DOUBLE_EQ(spec.mc.window(3.0), 80.0);
    EXPECT_EQ(spec.sweep->axis, "delta");
    EXPECT_EQ(spec.sweep->values.size(), 2u);
    EXPECT_EQ(*spec.caot_g, 1u);
    EXPECT_EQ(spec.outputs.at("bounds"), "b.csv");
}

TEST(Config, InvariantOnlyChannel) {
    const auto spec = config::parse_string(R"(
[channel]
states = [0.5, 2.0]
invariant = [0.8, 0.2]
)");
    EXPECT_NEAR(spec.model().phi(0), 0.8, 1e-14);
}

TEST(Config, ErrorsNameTheField) {
    EXPECT_NE(config_error(R"(
[network]
d = 0.5
[channel]
states = [1.0]
invariant = [1.0]
)").find("network"), std::string::npos);
    EXPECT_NE(config_error(std::string(kBase) + "[mc]\ntrails = 3\n").find("mc.trails"), std::string::npos);
    EXPECT_NE(config_error(std::string(kBase) + "[sweep]\naxis = \"gamma\"\n").find("sweep.axis"), std::string::npos);
    EXPECT_NE(config_error(std::string(kBase) + "[sweep]\naxis = \"d\"\nvalues = [2.0, 0.5]\n").find("sweep.values[1]"),
              std::string::npos);
    EXPECT_NE(config_error(std::string(kBase) + "[caot]\ng = 3\n").find("caot.g"), std::string::npos);
    EXPECT_NE(config_error(std::string(kBase) + "[im]\ngamma = [0.5]\n").find("im"), std::string::npos);
    EXPECT_NE(config_error(R"(
[channel]
states = [0.5, 2.0]
transition = [[0.9, 0.2], [0.3, 0.7]]
)").find("row 1"), std::string::npos);
    EXPECT_NE(config_error(R"(
[channel]
states = [0.5, 2.0]
invariant = [0.5, 0.5]
transition = [[0.5, 0.5], [0.5, 0.5]]
)").find("exactly one"), std::string::npos);
    EXPECT_NE(config_error("[network]\nlambda = \"x\"\n[channel]\nstates=[1.0]\ninvariant=[1.0]\n").find("network.lambda"),
              std::string::npos);
    EXPECT_NE(config_error("[network\n").find("<memory>:"), std::string::npos);
    EXPECT_NE(config_error("[network]\n").find("channel"), std::string::npos);
}

TEST(Config, SweepFieldAccess) {
    NetworkParams p;
    config::network_field(p, "epsilon") = 0.2;
    EXPECT_DOUBLE_EQ(p.epsilon, 0.2);
    EXPECT_THROW(config::network_field(p, "zeta"), Error);
}

TEST(Csv, SeventeenDigitsRoundTrip) {
    for (const double x : {0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, -2.5, 0.0}) {
        const auto s = csv::format(x);
        EXPECT_EQ(std::strtod(s.c_str(), nullptr), x) << s;
    }
    EXPECT_EQ(csv::format(0.1), "0.10000000000000001");
}

TEST(Csv, MetadataHeaderRows) {
    std::ostringstream os;
    csv::Writer w(os);
    w.meta("seed", "7");
    w.meta("lambda", 0.5);
    w.header({"a", "b", "c"});
    w.row({1.5, std::int64_t{2}, std::string("x")});
    EXPECT_EQ(os.str(), "# seed: 7\n# lambda: 0.5\na,b,c\n1.5,2,x\n");
    EXPECT_THROW(w.row({1.0}), Error);
    EXPECT_THROW(w.meta("late", "x"), Error);
    EXPECT_EQ(w.rows(), 1u);
}
