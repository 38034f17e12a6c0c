#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "sunlit/diffusion.hpp"
#include "sunlit/error.hpp"
#include "sunlit/training.hpp"
#include "test_support.hpp"

using namespace sunlit;
using namespace sunlit::diffusion;

TEST(Schedule, SmallExamples) {
    const auto one = make_schedule(1, 0.5, 0.5);
    ASSERT_EQ(one.alpha_bars.size(), 1u);
    EXPECT_DOUBLE_EQ(one.alpha_bars[0], 0.5);
    const auto two = make_schedule(2, 0.1, 0.2);
    EXPECT_NEAR(two.alpha_bars[0], 0.9, 1e-15);
    EXPECT_NEAR(two.alpha_bars[1], 0.72, 1e-15);
    EXPECT_THROW(make_schedule(0, 0.1, 0.2), DomainError);
    EXPECT_THROW(make_schedule(10, 0.3, 0.2), DomainError);
    EXPECT_THROW(make_schedule(10, 0.0, 0.2), DomainError);
    EXPECT_THROW(make_schedule(10, 0.1, 1.0), DomainError);
}

TEST(Schedule, MatchesBruteForceOracle) {
    const auto s = make_schedule(1000, 1e-4, 0.02);
    std::ifstream in(std::string(SUNLIT_TEST_DATA) + "/schedule_oracle.csv");
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        const auto comma = line.find(',');
        const int t = std::stoi(line.substr(0, comma));
        EXPECT_NEAR(s.alpha_bars[static_cast<std::size_t>(t)], std::stod(line.substr(comma + 1)), 1e-12) << t;
        ++rows;
    }
    EXPECT_EQ(rows, 8);
    EXPECT_NEAR(s.alpha_bars[999], 4.04e-5, 5e-6);
}

TEST(Schedule, ConsistentAndDecreasing) {
    const auto s = make_schedule(1000, 1e-4, 0.02);
    double prod = 1.0;
    for (int t = 0; t < 1000; ++t) {
        prod *= 1.0 - s.betas[static_cast<std::size_t>(t)];
        EXPECT_NEAR(s.alpha_bars[static_cast<std::size_t>(t)], prod, 1e-12);
        if (t > 0)
            EXPECT_LT(s.alpha_bars[static_cast<std::size_t>(t)], s.alpha_bars[static_cast<std::size_t>(t - 1)]);
    }
}

TEST(ForwardNoise, ClosedForm) {
    NoiseSchedule s;
    s.betas = {0.0};
    s.alpha_bars = {1.0};
    const Eigen::MatrixXd x0 = Eigen::MatrixXd::Random(16, 2);
    const Eigen::MatrixXd eps = Eigen::MatrixXd::Random(16, 2);
    EXPECT_EQ(forward_noise(x0, 0, eps, s), x0);

    const auto full = make_schedule(1000, 1e-4, 0.02);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(16, 2);
    EXPECT_NEAR((forward_noise(zero, 500, eps, full) - std::sqrt(1 - full.alpha_bars[500]) * eps).norm(), 0.0,
                1e-15);
    EXPECT_THROW(forward_noise(x0, 0, Eigen::MatrixXd::Zero(15, 2), s), ContractError);
    EXPECT_THROW(forward_noise(x0, 1000, eps, full), ContractError);
}

TEST(ForwardNoise, Superposition) {
    const auto s = make_schedule(1000, 1e-4, 0.02);
    const Eigen::MatrixXd a = Eigen::MatrixXd::Random(8, 3), b = Eigen::MatrixXd::Random(8, 3);
    const Eigen::MatrixXd eps = Eigen::MatrixXd::Random(8, 3);
    const Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(8, 3);
    for (int t : {0, 100, 999}) {
        const Eigen::MatrixXd lhs = forward_noise(2.0 * a + 3.0 * b, t, eps, s);
        const Eigen::MatrixXd rhs = 2.0 * forward_noise(a, t, zero, s) + 3.0 * forward_noise(b, t, zero, s) +
                                    forward_noise(zero, t, eps, s);
        EXPECT_NEAR((lhs - rhs).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    }
}

TEST(ForwardNoise, MonteCarloVariance) {
    const auto s = make_schedule(1000, 1e-4, 0.02);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::MatrixXd eps(1, 100000);
    for (Eigen::Index i = 0; i < eps.cols(); ++i)
        eps(0, i) = n(rng);
    const Eigen::MatrixXd x0 = Eigen::MatrixXd::Constant(1, eps.cols(), 0.4);
    for (int t : {10, 300, 900}) {
        const Eigen::RowVectorXd x = forward_noise(x0, t, eps, s).row(0);
        const double var = (x.array() - x.mean()).square().sum() / (x.size() - 1);
        EXPECT_NEAR(var / (1 - s.alpha_bars[static_cast<std::size_t>(t)]), 1.0, 0.02);
    }
}

TEST(EpsLoss, OracleAndZeroDenoisers) {
    const auto s = make_schedule(1000, 1e-4, 0.02);
    const Eigen::MatrixXd x0 = test::tiny_batch(4, 1);
    const Eigen::MatrixXd cond = Eigen::MatrixXd::Zero(6, 4);
    // Same draw order as eps_loss, so this predictor knows the true noise.
    Rng shadow(9);
    const NoiseDraw d = draw_noise(64, 4, 1000, shadow);
    int col = 0;
    NoisePredictor oracle = [&](const Eigen::MatrixXd&, int, const Eigen::MatrixXd&) -> Eigen::MatrixXd {
        return d.eps.col(col++);
    };
    Rng rng(9);
    EXPECT_NEAR(eps_loss(oracle, x0, cond, s, rng), 0.0, 1e-20);

    NoisePredictor zero = [](const Eigen::MatrixXd& x, int, const Eigen::MatrixXd&) -> Eigen::MatrixXd {
        return Eigen::MatrixXd::Zero(x.rows(), x.cols());
    };
    // E||eps||^2 = 64 per image; over 4000 images the chi^2 mean has sd 64*sqrt(2/256000).
    const Eigen::MatrixXd big = Eigen::MatrixXd::Zero(64, 4000);
    Rng r2(10);
    EXPECT_NEAR(eps_loss(zero, big, Eigen::MatrixXd::Zero(6, 4000), s, r2), 64.0, 64.0 * 0.02);

    EXPECT_THROW(eps_loss(zero, Eigen::MatrixXd(64, 0), Eigen::MatrixXd(6, 0), s, rng), ContractError);
}

TEST(EpsLoss, Deterministic) {
    const auto m = test::tiny_model(3);
    const Eigen::MatrixXd x0 = test::tiny_batch(4, 2);
    const Eigen::MatrixXd cond = Eigen::MatrixXd::Random(6, 4);
    Rng a(5), b(5);
    EXPECT_EQ(eps_loss(predictor_of(m), x0, cond, m.schedule, a), eps_loss(predictor_of(m), x0, cond, m.schedule, b));
}

TEST(Denoiser, OutputShape) {
    const auto m = test::tiny_model(3);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(64, 3);
    EXPECT_EQ(m.predict(x, 10, Eigen::MatrixXd::Zero(6, 3)).rows(), 64);
    EXPECT_EQ(m.predict(x, 10, Eigen::MatrixXd::Zero(6, 3)).cols(), 3);
    EXPECT_THROW(m.predict(x, 10, Eigen::MatrixXd::Zero(5, 3)), ContractError);
}

TEST(Denoiser, GradientsMatchFiniteDifferences) {
    auto model = test::tiny_model(21);
    // Move off the zero-initialised gate so every path carries gradient.
    model.denoiser.gate_weight.setConstant(0.05);
    const Eigen::MatrixXd x0 = test::tiny_batch(4, 3);
    const Eigen::MatrixXd cond = Eigen::MatrixXd::Random(6, 4);
    Rng rng(8);
    NoiseDraw noise = draw_noise(64, 4, 1000, rng);
    noise.t = {3, 150, 600, 990};
    DenoiserParams grads = model.denoiser.zeros_like();
    Eigen::MatrixXd d_cond;
    training::denoiser_objective(model, x0, cond, noise, &grads, &d_cond);
    auto fn = [&](std::span<const double> p) {
        auto m = model;
        test::assign(m.denoiser, p);
        return training::denoiser_objective(m, x0, cond, noise);
    };
    const auto point = test::flatten(model.denoiser);
    EXPECT_LE(training::grad_check(fn, point, test::flatten(grads), 400, 1e-5, 2), 1e-4);

    // Gradient wrt the condition columns.
    std::vector<double> cpoint(cond.data(), cond.data() + cond.size());
    std::vector<double> canalytic(d_cond.data(), d_cond.data() + d_cond.size());
    auto cfn = [&](std::span<const double> p) {
        const Eigen::Map<const Eigen::MatrixXd> c(p.data(), 6, 4);
        return training::denoiser_objective(model, x0, c, noise);
    };
    EXPECT_LE(training::grad_check(cfn, cpoint, canalytic, 24, 1e-4, 3), 1e-4);
}

TEST(Cfg, Algebra) {
    const auto m = test::tiny_model(4);
    const NoisePredictor p = predictor_of(m);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(64, 2);
    const Eigen::MatrixXd cond = Eigen::MatrixXd::Random(6, 2);
    const Eigen::MatrixXd null = m.prompts.null_embedding.replicate(1, 2);
    EXPECT_EQ(cfg_predict(p, x, 500, cond, null, 1.0), p(x, 500, cond));
    EXPECT_EQ(cfg_predict(p, x, 500, cond, null, 0.0), p(x, 500, null));
    const Eigen::MatrixXd same1 = cfg_predict(p, x, 500, null, null, 1.0);
    const Eigen::MatrixXd same7 = cfg_predict(p, x, 500, null, null, 7.5);
    EXPECT_NEAR((same1 - same7).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    EXPECT_THROW(cfg_predict(p, x, 500, cond, null, -1.0), DomainError);
}

TEST(Ddim, StepIdentities) {
    const auto s = make_schedule(1000, 1e-4, 0.02);
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(8, 2), e = Eigen::MatrixXd::Random(8, 2);
    EXPECT_EQ(ddim_step(x, e, 400, 400, s), x);
    EXPECT_THROW(ddim_step(x, e, 1000, 10, s), ContractError);
    EXPECT_THROW(ddim_step(x, e, 10, 11, s), ContractError);

    const Eigen::MatrixXd x0 = Eigen::MatrixXd::Random(8, 2);
    const Eigen::MatrixXd xt = forward_noise(x0, 700, e, s);
    EXPECT_NEAR((ddim_step(xt, e, 700, -1, s) - x0).cwiseAbs().maxCoeff(), 0.0, 1e-10);
}

TEST(Ddim, ScalarHandExample) {
    NoiseSchedule s;
    s.alpha_bars = {0.81, 0.25};
    s.betas = {0.19, 1 - 0.25 / 0.81};
    const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(1, 1, 1.0);
    const Eigen::MatrixXd e = Eigen::MatrixXd::Constant(1, 1, 0.5);
    EXPECT_NEAR(ddim_step(x, e, 1, 0, s)(0, 0), 1.23851, 1e-4);
}

TEST(Ddim, Timesteps) {
    const auto ts = ddim_timesteps(1000, 30);
    ASSERT_EQ(ts.size(), 30u);
    EXPECT_EQ(ts.front(), 999);
    EXPECT_EQ(ts.back(), 0);
    for (std::size_t i = 1; i < ts.size(); ++i)
        EXPECT_LT(ts[i], ts[i - 1]);
    EXPECT_THROW(ddim_timesteps(1000, 1001), ContractError);
}

TEST(Ddim, OracleDenoiserRecoversCleanImage) {
    const auto s = make_schedule(1000, 1e-4, 0.02);
    const Eigen::MatrixXd x0 = test::tiny_batch(3, 7);
    const Eigen::MatrixXd eps = Eigen::MatrixXd::Random(64, 3);
    // Returns the noise consistent with x0 for any x_t on the trajectory.
    NoisePredictor oracle = [&](const Eigen::MatrixXd& x, int t, const Eigen::MatrixXd&) -> Eigen::MatrixXd {
        const double ab = s.alpha_bar(t);
        return (x - std::sqrt(ab) * x0) / std::sqrt(1 - ab);
    };
    const Eigen::MatrixXd none = Eigen::MatrixXd::Zero(1, 3);
    for (bool clip : {false, true}) {
        SamplerConfig cfg{1000, 0, 1.0, clip};
        const Eigen::MatrixXd out = ddim_sample(oracle, s, forward_noise(x0, 999, eps, s), none, none, none, cfg);
        EXPECT_NEAR((out - x0).cwiseAbs().maxCoeff(), 0.0, 1e-6);
        cfg.steps = 30;
        const Eigen::MatrixXd out30 = ddim_sample(oracle, s, forward_noise(x0, 999, eps, s), none, none, none, cfg);
        EXPECT_NEAR((out30 - x0).cwiseAbs().maxCoeff(), 0.0, 1e-6);
    }
}

TEST(SamplePartial, EqualContextsMatchSingleContext) {
    const auto m = test::tiny_model(5);
    const std::vector<std::string> w{"night"};
    const PromptContext ctx = PromptContext::from_words(m.prompts, w);
    for (int sw : {0, 7, 15, 30}) {
        const auto a = sample_partial(m, ctx, ctx, 3, SamplerConfig{30, sw, 7.5}, 11);
        const auto b = sample(m, ctx, 3, 30, 7.5, 11);
        for (std::size_t i = 0; i < a.size(); ++i)
            EXPECT_TRUE(a[i] == b[i]);
    }
}

TEST(SamplePartial, SwitchBoundaries) {
    const auto m = test::tiny_model(6);
    const std::vector<std::string> w1{"night"}, w2{"day"};
    const PromptContext c1 = PromptContext::from_words(m.prompts, w1);
    const PromptContext c2 = PromptContext::from_words(m.prompts, w2);
    const auto only_second = sample_partial(m, c1, c2, 2, SamplerConfig{30, 0, 7.5}, 3);
    const auto ref_second = sample(m, c2, 2, 30, 7.5, 3);
    const auto only_first = sample_partial(m, c1, c2, 2, SamplerConfig{30, 30, 7.5}, 3);
    const auto ref_first = sample(m, c1, 2, 30, 7.5, 3);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_TRUE(only_second[i] == ref_second[i]);
        EXPECT_TRUE(only_first[i] == ref_first[i]);
    }
    EXPECT_THROW(sample_partial(m, c1, c2, 2, SamplerConfig{30, 31, 7.5}, 3), ContractError);
    EXPECT_THROW(sample_partial(m, c1, c2, 2, SamplerConfig{1001, 0, 7.5}, 3), ContractError);
}

TEST(SamplePartial, DeterministicAndClamped) {
    const auto m = test::tiny_model(7);
    const auto a = sample(m, PromptContext::null(), 4, 30, 7.5, 19);
    const auto b = sample(m, PromptContext::null(), 4, 30, 7.5, 19);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_TRUE(a[i] == b[i]);
        EXPECT_GE(a[i].pixels().minCoeff(), 0.0);
        EXPECT_LE(a[i].pixels().maxCoeff(), 1.0);
    }
}

TEST(Prompts, PoolingAndLookup) {
    const auto m = test::tiny_model(8);
    const std::vector<std::string> w{"scene", "day"};
    const PromptContext ctx = PromptContext::from_words(m.prompts, w);
    EXPECT_EQ(ctx.embeddings.rows(), 2);
    const Eigen::VectorXd pooled = ctx.pooled(m.prompts);
    EXPECT_NEAR((pooled - 0.5 * (m.prompts.embeddings.row(0) + m.prompts.embeddings.row(2)).transpose()).norm(), 0.0,
                1e-15);
    EXPECT_EQ(PromptContext::null().pooled(m.prompts), m.prompts.null_embedding);
    const std::vector<std::string> bad{"dragon"};
    EXPECT_ANY_THROW(PromptContext::from_words(m.prompts, bad));
}

TEST(Model, SaveLoadRoundTrip) {
    const auto m = test::tiny_model(9);
    const auto path = std::filesystem::temp_directory_path() / "sunlit_model_test.bin";
    save_model(path, m);
    const auto back = load_model(path);
    EXPECT_EQ(back.checksum(), m.checksum());
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(64, 2);
    const Eigen::MatrixXd c = Eigen::MatrixXd::Random(6, 2);
    EXPECT_EQ(back.predict(x, 42, c), m.predict(x, 42, c));
    std::filesystem::remove(path);
}
