#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "ergocap/montecarlo.hpp"

using namespace ergocap;

namespace {

ChannelModel fig1_model() { return ChannelModel::from_invariant({0.5, 2.0}, {0.5, 0.5}); }

NetworkParams fig1_params(double delta = 1.0) {
    NetworkParams p;
    p.lambda = 0.01;
    p.d = 5.0;
    p.alpha = 3.0;
    p.beta = 2.0;
    p.delta = delta;
    return p;
}

ExperimentConfig small_cfg(std::size_t trials, std::uint64_t seed = 7) {
    ExperimentConfig c;
    c.trials = trials;
    c.seed = seed;
    c.threads = 1;
    return c;
}

ImPolicy fig4_policy(double gamma = 0.6) {
    ImPolicy p = ImPolicy::identity(2);
    p.gammas = {gamma, gamma};
    p.gamma_mins = p.gammas;
    p.cancellation_enabled = true;
    return p;
}

template <class F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorKind::Config;
}

}  // namespace

TEST(ExperimentConfig, Validation) {
    ExperimentConfig c;
    c.tail_fraction = 0.1;
    EXPECT_THROW(c.validate(), Error);
    c.tail_fraction = 0.005;
    c.trials = 0;
    EXPECT_THROW(c.validate(), Error);
    c.trials = 10;
    c.window_radius = 50.0;
    EXPECT_DOUBLE_EQ(c.window(3.0), 50.0);
}

TEST(Moments, MergeMatchesSequential) {
    mc::detail::Moments all, a, b;
    for (int i = 0; i < 1000; ++i) {
        const double x = std::sin(i * 0.37) * 5.0 + i * 1e-3;
        all.add(x);
        (i < 400 ? a : b).add(x);
    }
    a.merge(b);
    EXPECT_NEAR(a.mean, all.mean, 1e-12);
    EXPECT_NEAR(a.m2, all.m2, 1e-9);
    EXPECT_EQ(a.n, all.n);
}

TEST(Isotonic, PoolsAdjacentViolators) {
    const auto fit = mc::isotonic_nonincreasing({5.0, 3.0, 4.0, 1.0, 2.0, 2.0}, std::vector<double>(6, 1.0));
    const std::vector<double> expect{5.0, 3.5, 3.5, 5.0 / 3.0, 5.0 / 3.0, 5.0 / 3.0};
    ASSERT_EQ(fit.size(), expect.size());
    for (std::size_t i = 0; i < fit.size(); ++i) EXPECT_NEAR(fit[i], expect[i], 1e-12);
}

TEST(Outage, ZeroIntensityIsExactlyZero) {
    const auto q = mc::estimate_qbar(0.0, fig1_params(), fig1_model(), nullptr, small_cfg(2000));
    EXPECT_EQ(q.total.mean, 0.0);
    EXPECT_EQ(q.total.std_error, 0.0);
    EXPECT_EQ(mc::estimate_qk(0.0, 1, fig1_params(), fig1_model(), nullptr, small_cfg(2000)).mean, 0.0);
}

TEST(Outage, SingleStateQbarEqualsQk) {
    const auto m = ChannelModel::from_invariant({1.0}, {1.0});
    const auto cfg = small_cfg(3000);
    const auto a = mc::estimate_qbar(2e-3, fig1_params(), m, nullptr, cfg).total;
    const auto b = mc::estimate_qk(2e-3, 0, fig1_params(), m, nullptr, cfg);
    // Same outcomes, accumulated as a running mean on one side and a count on the other.
    EXPECT_DOUBLE_EQ(a.mean, b.mean);
    EXPECT_DOUBLE_EQ(a.std_error, b.std_error);
}

TEST(Outage, BitIdenticalAcrossThreadCounts) {
    auto cfg = small_cfg(5000);
    const auto a = mc::estimate_qbar(3e-3, fig1_params(), fig1_model(), nullptr, cfg);
    cfg.threads = 3;
    const auto b = mc::estimate_qbar(3e-3, fig1_params(), fig1_model(), nullptr, cfg);
    EXPECT_EQ(a.total.mean, b.total.mean);
    EXPECT_EQ(a.total.std_error, b.total.std_error);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(a.per_state[k].mean, b.per_state[k].mean);
}

TEST(Outage, WorseStateHasMoreOutage) {
    const auto q = mc::estimate_qbar(1e-3, fig1_params(), fig1_model(), nullptr, small_cfg(20000));
    const auto& a = q.per_state[0];
    const auto& b = q.per_state[1];
    EXPECT_GE(a.mean + 3.0 * std::hypot(a.std_error, b.std_error), b.mean);
    EXPECT_GT(a.mean, b.mean);
}

TEST(Outage, NondecreasingInLambda) {
    const auto m = fig1_model();
    double prev = 0.0, prev_se = 0.0;
    for (const double lambda : {1e-4, 4e-4, 1.6e-3, 6.4e-3}) {
        const auto q = mc::estimate_qbar(lambda, fig1_params(), m, nullptr, small_cfg(4000)).total;
        EXPECT_GE(q.mean + 3.0 * std::hypot(q.std_error, prev_se), prev);
        prev = q.mean;
        prev_se = q.std_error;
    }
}

TEST(Outage, SandwichedByBoundsAtDeltaOne) {
    const auto m = fig1_model();
    for (const double lambda : {1e-4, 1e-3, 1e-2}) {
        NetworkParams p = fig1_params();
        p.lambda = lambda;
        const auto q = mc::estimate_qbar(lambda, p, m, nullptr, small_cfg(10000));
        for (std::size_t k = 0; k < 2; ++k) {
            const auto b = bounds::outage_bounds(lambda, k, p, m);
            const auto& e = q.per_state[k];
            EXPECT_GE(e.mean + 3.0 * e.std_error, b.lower) << "lambda=" << lambda << " k=" << k;
            EXPECT_LE(e.mean - 3.0 * e.std_error, b.upper) << "lambda=" << lambda << " k=" << k;
        }
    }
}

TEST(Outage, ImBoundsSandwichInSparseRegime) {
    const auto m = fig1_model();
    // delta = 1 keeps the lower bound valid in a sparse network.
    NetworkParams p = fig1_params(1.0);
    p.d = 10.0;
    p.lambda = 2e-4;
    auto pol = fig4_policy();
    auto cfg = small_cfg(20000);
    std::vector<double> nu_c;
    for (std::size_t k = 0; k < 2; ++k) nu_c.push_back(mc::estimate_nu_c(p.lambda, k, pol, p, m, cfg).thinned.mean);
    pol.nu_c = nu_c;
    const auto with = mc::estimate_qbar(p.lambda, p, m, &pol, cfg);
    const auto without = mc::estimate_qbar(p.lambda, p, m, nullptr, cfg);
    for (std::size_t k = 0; k < 2; ++k) {
        const auto b = bounds::im_outage_bounds(p.lambda, k, pol, p, m);
        const auto& e = with.per_state[k];
        EXPECT_GE(e.hi(3.0), b.lower);
        EXPECT_LE(e.lo(3.0), b.upper);
        EXPECT_LT(e.mean, without.per_state[k].mean);
    }
}

TEST(Outage, BurnInMatchesStationarySampling) {
    Eigen::MatrixXd t(2, 2);
    t << 0.9, 0.1, 0.3, 0.7;
    const auto m = ChannelModel::validate({0.5, 2.0}, t);
    auto cfg = small_cfg(4000);
    cfg.window_radius = 40.0;
    const auto a = mc::estimate_qbar(5e-3, fig1_params(), m, nullptr, cfg).total;
    cfg.burn_in = 1000;
    const auto b = mc::estimate_qbar(5e-3, fig1_params(), m, nullptr, cfg).total;
    EXPECT_NEAR(a.mean, b.mean, 3.0 * std::hypot(a.std_error, b.std_error));
}

TEST(Search, VacuousConstraintHitsUpperEdge) {
    mc::SearchOptions opt;
    opt.lambda_max = 2e-3;
    opt.strict = false;
    const auto s = mc::find_max_intensity(0.999, fig1_params(), fig1_model(), nullptr, small_cfg(500), opt);
    EXPECT_TRUE(s.at_upper_edge);
    EXPECT_EQ(s.lambda_hat, 2e-3);
    opt.strict = true;
    EXPECT_EQ(kind_of([&] { mc::find_max_intensity(0.999, fig1_params(), fig1_model(), nullptr, small_cfg(500), opt); }),
              ErrorKind::BracketFailure);
}

TEST(Search, BracketHasConfidentEnds) {
    const auto cfg = small_cfg(4000);
    const auto s = mc::find_max_intensity(0.1, fig1_params(), fig1_model(), nullptr, cfg);
    EXPECT_LT(s.lambda_lo, s.lambda_hi);
    EXPECT_GE(s.lambda_hat, s.lambda_lo);
    EXPECT_LE(s.lambda_hat, s.lambda_hi);
    EXPECT_LT(s.q_lo.hi(3.0), 0.1);
    EXPECT_GT(s.q_hi.lo(3.0), 0.1);
    const auto b = bounds::etc_bounds(0.1, fig1_params(), fig1_model());
    EXPECT_LE(s.lambda_lo, b.lambda_upper);
    EXPECT_GE(s.lambda_hi, b.lambda_lower);
}

TEST(Search, StraddlingProbeStillGetsConclusiveBracket) {
    const auto cfg = small_cfg(2000);
    mc::SearchOptions opt;
    opt.max_trials_per_point = 2000;  // any ambiguous probe straddles at once
    for (const double eps : {0.05, 0.1, 0.2}) {
        const auto s = mc::find_max_intensity(eps, fig1_params(), fig1_model(), nullptr, cfg, opt);
        EXPECT_GT(s.lambda_lo, 0.0) << eps;
        EXPECT_LT(s.q_lo.hi(3.0), eps);
        EXPECT_GT(s.q_hi.lo(3.0), eps);
        EXPECT_GE(s.lambda_hat, s.lambda_lo);
        EXPECT_LE(s.lambda_hat, s.lambda_hi);
        // Narrower than the first expansion cell [0, eps / (pi d^2)].
        EXPECT_LT(s.lambda_hi - s.lambda_lo, 0.9 * eps / (std::numbers::pi * 25.0)) << eps;
    }
}

TEST(Etc, LinearInBAndFormsAgree) {
    const auto cfg = small_cfg(4000);
    NetworkParams p = fig1_params();
    const auto a = mc::estimate_etc(0.1, p, fig1_model(), nullptr, cfg);
    p.b = 2.0;
    const auto b = mc::estimate_etc(0.1, p, fig1_model(), nullptr, cfg);
    EXPECT_DOUBLE_EQ(b.etc.mean, 2.0 * a.etc.mean);
    EXPECT_DOUBLE_EQ(b.etc_throughput.mean, 2.0 * a.etc_throughput.mean);
    EXPECT_NEAR(a.etc.mean, a.etc_throughput.mean, 3.0 * std::hypot(a.etc.std_error, a.etc_throughput.std_error));
}

TEST(Etc, CaotWithFirstThresholdEqualsPlainEtc) {
    const auto cfg = small_cfg(3000);
    const auto a = mc::estimate_etc(0.1, fig1_params(), fig1_model(), nullptr, cfg);
    const auto b = mc::estimate_caot(0.1, 0, fig1_params(), fig1_model(), cfg);
    EXPECT_EQ(a.etc.mean, b.etc.etc.mean);
    EXPECT_EQ(a.search.lambda_hat, b.etc.search.lambda_hat);
    EXPECT_EQ(b.phi_g, 1.0);
    EXPECT_EQ(kind_of([&] { mc::estimate_caot(0.1, 2, fig1_params(), fig1_model(), cfg); }), ErrorKind::BadThreshold);
}

TEST(NuC, RequiresCancellation) {
    auto pol = fig4_policy();
    pol.cancellation_enabled = false;
    EXPECT_EQ(kind_of([&] { mc::estimate_nu_c(0.01, 0, pol, fig1_params(), fig1_model(), small_cfg(10)); }),
              ErrorKind::PolicyDisabled);
}

TEST(NuC, ViewsDifferByGammaFactor) {
    const auto e = mc::estimate_nu_c(0.01, 1, fig4_policy(), fig1_params(), fig1_model(), small_cfg(2000));
    EXPECT_NEAR(e.power_scaling.mean, e.count.mean / 0.01, 1e-12);
    EXPECT_NEAR(e.thinned.mean, e.power_scaling.mean / std::pow(0.6, 2.0 / 3.0), 1e-9);
}

TEST(NuC, LargerBetaShrinksCancellation) {
    const auto m = fig1_model();
    const auto cfg = small_cfg(3000);
    double prev = std::numeric_limits<double>::infinity();
    for (const double beta : {0.5, 2.0, 8.0}) {
        NetworkParams p = fig1_params();
        p.beta = beta;
        const auto e = mc::estimate_nu_c(0.005, 0, fig4_policy(), p, m, cfg);
        EXPECT_LE(e.count.mean, prev);
        prev = e.count.mean;
    }
}

TEST(NuC, SmallGammaEmptiesScaledCancellation) {
    const auto e = mc::estimate_nu_c(0.01, 0, fig4_policy(1e-3), fig1_params(), fig1_model(), small_cfg(1000));
    EXPECT_LT(e.count.mean, 0.05);
    EXPECT_TRUE(std::isfinite(e.thinned.mean));
}

TEST(NuC, FigureFourBelowNu) {
    NetworkParams p = fig1_params(2.0);
    p.d = 10.0;
    p.lambda = 0.02;
    const auto m = fig1_model();
    const double nu = bounds::constants(p, m).nu;
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_LT(mc::estimate_nu_c(p.lambda, k, fig4_policy(), p, m, small_cfg(500)).thinned.mean, nu);
    }
}

TEST(NuC, TableIsNonincreasing) {
    NetworkParams p = fig1_params(2.0);
    p.d = 10.0;
    p.lambda = 0.002;
    const auto t = mc::nu_c_table(p.lambda, 1, 0.4, fig4_policy(), p, fig1_model(), small_cfg(300));
    ASSERT_EQ(t.gammas.size(), 16u);
    EXPECT_DOUBLE_EQ(t.gammas.front(), 0.4);
    EXPECT_DOUBLE_EQ(t.gammas.back(), 1.0);
    for (std::size_t i = 1; i < t.nu_c.size(); ++i) EXPECT_LE(t.nu_c[i], t.nu_c[i - 1]);
}

TEST(DeltaCount, ZeroIntensity) {
    const auto r = mc::verify_delta_count(0.0, 0, fig1_params(), fig1_model(), small_cfg(100));
    EXPECT_EQ(r.mean, 0.0);
    EXPECT_EQ(r.predicted, 0.0);
}

TEST(DeltaCount, MatchesCampbellCount) {
    const auto r = mc::verify_delta_count(0.01, 0, fig1_params(), fig1_model(), small_cfg(10000));
    EXPECT_LT(r.rel_error, 0.03);
    EXPECT_FALSE(r.negative_prediction);
}

TEST(DeltaCount, GrowsLikeDSquared) {
    NetworkParams a = fig1_params(), b = fig1_params();
    b.d = 10.0;
    const auto cfg = small_cfg(6000);
    const auto ra = mc::verify_delta_count(0.01, 1, a, fig1_model(), cfg);
    const auto rb = mc::verify_delta_count(0.01, 1, b, fig1_model(), cfg);
    // Region areas scale with d^2 once the unit exclusion is negligible.
    const double ratio = (rb.mean + 0.01 * bounds::kPi) / (ra.mean + 0.01 * bounds::kPi);
    EXPECT_NEAR(ratio, 4.0, 0.15);
}

TEST(DeltaCount, FlagsNegativePrediction) {
    NetworkParams p;
    p.d = 1.1;
    p.beta = 0.1;
    const auto m = ChannelModel::from_invariant({1.0}, {1.0});
    EXPECT_TRUE(mc::verify_delta_count(0.01, 0, p, m, small_cfg(10)).negative_prediction);
}

TEST(InterferenceMoments, ZeroIntensity) {
    const auto r = mc::verify_interference_moments(0.0, 0, fig1_params(), fig1_model(), small_cfg(10));
    EXPECT_EQ(r.mean, 0.0);
    EXPECT_EQ(r.variance, 0.0);
    EXPECT_EQ(r.mean_formula, 0.0);
}

TEST(InterferenceMoments, MeanMatchesAndVarianceMatchesCampbell) {
    auto cfg = small_cfg(6000);
    const auto r = mc::verify_interference_moments(0.01, 1, fig1_params(), fig1_model(), cfg);
    EXPECT_NEAR(r.mean_campbell, r.mean_formula, 1e-12 * r.mean_formula);
    EXPECT_NEAR(r.mean, r.mean_formula, 4.0 * r.mean_stderr + 0.005 * r.mean_formula);
    EXPECT_NEAR(r.variance / r.variance_campbell, 1.0, 0.15);
    EXPECT_LT(r.truncated_fraction, 0.005);
}

TEST(InterferenceMoments, VanishWithLargeDelta) {
    double prev_mean = std::numeric_limits<double>::infinity(), prev_var = prev_mean;
    for (const double delta : {1.0, 10.0, 100.0, 1e4}) {
        const auto r = mc::verify_interference_moments(0.0, 0, fig1_params(delta), fig1_model(), small_cfg(10));
        const auto c = bounds::constants(fig1_params(delta), fig1_model());
        const double mean = 0.01 * std::pow(0.5, 1.0 / 3.0) * c.eta;
        const double var = 0.01 * std::pow(0.5, 2.0 / 3.0) * c.sigma2;
        EXPECT_LT(mean, prev_mean);
        EXPECT_LT(var, prev_var);
        EXPECT_EQ(r.mean, 0.0);
        prev_mean = mean;
        prev_var = var;
    }
    // eta scales as delta^(2/a - 1) and sigma2 as delta^(1/a - 1).
    const auto c1 = bounds::constants(fig1_params(1.0), fig1_model());
    const auto c4 = bounds::constants(fig1_params(1e4), fig1_model());
    EXPECT_NEAR(c4.eta / c1.eta, std::pow(1e4, -1.0 / 3.0), 1e-12);
    EXPECT_NEAR(c4.sigma2 / c1.sigma2, std::pow(1e4, -2.0 / 3.0), 1e-12);
}
