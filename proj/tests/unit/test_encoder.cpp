#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "sunlit/encoder.hpp"
#include "sunlit/error.hpp"
#include "sunlit/training.hpp"
#include "test_support.hpp"

using namespace sunlit;
using namespace sunlit::encoder;

namespace {

Eigen::MatrixXd random_matrix(int r, int c, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, scale);
    Eigen::MatrixXd m(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            m(i, j) = n(rng);
    return m;
}

// Identity-initialised net with every parameter perturbed.
ContextNet perturbed_net(int tokens, int dim, int centers, std::uint64_t seed) {
    ContextNet net = ContextNet::create(random_matrix(tokens, dim, seed), centers);
    net.rbf.log_gammas += random_matrix(centers, 1, seed + 1, 0.3);
    net.saln.weight_scale = random_matrix(dim, centers, seed + 2, 0.5);
    net.saln.weight_shift = random_matrix(dim, centers, seed + 3, 0.5);
    net.saln.bias_scale += random_matrix(dim, 1, seed + 4, 0.2);
    net.saln.bias_shift = random_matrix(dim, 1, seed + 5, 0.2);
    return net;
}

} // namespace

TEST(Rbf, UniformCentersAndWidths) {
    const RbfLayer l = RbfLayer::uniform(16);
    ASSERT_EQ(l.size(), 16);
    for (int j = 0; j < 16; ++j)
        EXPECT_DOUBLE_EQ(l.centers[j], j / 15.0);
    const double spacing = 1.0 / 15.0;
    EXPECT_NEAR(l.gammas()[0], 1.0 / (2 * spacing * spacing), 1e-9);
    // Neighbouring kernels overlap at exp(-0.5).
    EXPECT_NEAR(l.encode(l.centers[3])[4], std::exp(-0.5), 1e-12);
}

TEST(Rbf, Examples) {
    RbfLayer l = RbfLayer::uniform(3);
    for (int j = 0; j < 3; ++j)
        EXPECT_EQ(l.encode(l.centers[j])[j], 1.0);
    l.log_gammas.setConstant(std::log(10.0));
    EXPECT_NEAR(l.encode(0.3)[1], 0.67032, 1e-5);
    l.log_gammas.setConstant(-60.0);
    for (double v : {0.0, 0.4, 1.0})
        EXPECT_NEAR(l.encode(v).minCoeff(), 1.0, 1e-12);
    EXPECT_THROW(l.encode(1.5), DomainError);
    EXPECT_THROW(l.encode(-0.1), DomainError);
}

TEST(Rbf, AnalyticDerivative) {
    const RbfLayer l = RbfLayer::uniform(16);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    const double h = 1e-6;
    for (int k = 0; k < 100; ++k) {
        const double v = u(rng);
        const Eigen::VectorXd analytic = l.encode_derivative(v);
        const Eigen::VectorXd numeric = (l.encode(v + h) - l.encode(v - h)) / (2 * h);
        for (int j = 0; j < l.size(); ++j) {
            const double denom = std::max(1e-8, std::abs(analytic[j]) + std::abs(numeric[j]));
            if (std::abs(analytic[j]) < 1e-9)
                EXPECT_NEAR(numeric[j], analytic[j], 1e-8);
            else
                EXPECT_LE(std::abs(analytic[j] - numeric[j]) / denom, 1e-6);
        }
    }
}

TEST(Saln, IdentityInitialisation) {
    const Eigen::MatrixXd base = random_matrix(3, 8, 1);
    const SalnParams p = SalnParams::identity(base, 16);
    const Eigen::MatrixXd out = saln_modulate(p, RbfLayer::uniform(16).encode(0.7));
    EXPECT_EQ(out, layer_norm_rows(base, p.epsilon));
}

TEST(Saln, ConstantRowGivesShift) {
    SalnParams p = SalnParams::identity(Eigen::MatrixXd::Constant(1, 4, 2.5), 2);
    p.weight_shift = random_matrix(4, 2, 2);
    p.bias_shift = random_matrix(4, 1, 3);
    const Eigen::VectorXd h = Eigen::Vector2d(0.3, 0.9);
    const Eigen::MatrixXd out = saln_modulate(p, h);
    EXPECT_NEAR((out.row(0).transpose() - (p.weight_shift * h + p.bias_shift)).norm(), 0.0, 1e-15);
}

TEST(Saln, DifferentFeaturesDifferentOutputs) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        SalnParams p = SalnParams::identity(random_matrix(2, 4, 100 + trial), 3);
        p.weight_scale = random_matrix(4, 3, 200 + trial);
        p.weight_shift = random_matrix(4, 3, 300 + trial);
        const Eigen::Vector3d h1(u(rng), u(rng), u(rng));
        Eigen::Vector3d h2 = h1;
        h2[trial % 3] += 0.1;
        EXPECT_GT((saln_modulate(p, h1) - saln_modulate(p, h2)).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Saln, LayerNormMoments) {
    const Eigen::MatrixXd ln = layer_norm_rows(random_matrix(4, 32, 9, 3.0), 1e-5);
    for (int r = 0; r < 4; ++r) {
        EXPECT_NEAR(ln.row(r).mean(), 0.0, 1e-12);
        EXPECT_NEAR(ln.row(r).squaredNorm() / 32.0, 1.0, 1e-4);
    }
}

TEST(ContextNet, GradientsMatchFiniteDifferences) {
    for (int tokens : {1, 2, 3}) {
        ContextNet net = perturbed_net(tokens, 4, 5, 40 + static_cast<std::uint64_t>(tokens));
        const Eigen::MatrixXd target = random_matrix(tokens, 4, 77);
        const std::vector<double> vs{0.1, 0.45, 0.8, 1.0};
        auto loss_of = [&](const ContextNet& n) {
            double l = 0.0;
            for (double v : vs)
                l += (n.forward(v) - target).squaredNorm();
            return l;
        };
        ContextNet grads = net.zeros_like();
        for (double v : vs)
            net.backward(v, 2.0 * (net.forward(v) - target), grads);
        const auto point = test::flatten(net);
        const auto analytic = test::flatten(grads);
        auto fn = [&](std::span<const double> p) {
            ContextNet n = net;
            test::assign(n, p);
            return loss_of(n);
        };
        EXPECT_LE(training::grad_check(fn, point, analytic, static_cast<int>(point.size()), 1e-5, 1), 1e-4);
    }
}

TEST(ContextTokens, DeterministicAndNamed) {
    const auto scheme = binning::default_scheme(-18, 60);
    const ContextNet net = perturbed_net(2, 8, 16, 3);
    const TokenSet a = context_tokens(-3.0, scheme, net);
    const TokenSet b = context_tokens(-3.0, scheme, net);
    EXPECT_EQ(a.name, "D*");
    EXPECT_EQ(a.embeddings, b.embeddings);
    EXPECT_THROW(context_tokens(70.0, scheme, net), DomainError);
    EXPECT_NO_THROW(context_tokens(70.0, scheme, net, binning::OutOfRange::Clamp));
}

TEST(ContextTokens, UntrainedNetIgnoresAltitude) {
    const auto scheme = binning::default_scheme(-18, 60);
    const ContextNet net = ContextNet::create(random_matrix(2, 8, 4));
    const Eigen::MatrixXd expected = layer_norm_rows(net.saln.base, net.saln.epsilon);
    for (double a : {-18.0, -5.0, 10.0, 60.0})
        EXPECT_EQ(context_tokens(a, scheme, net).embeddings, expected);
}

TEST(ContextNet, TokenCountRange) {
    EXPECT_THROW(ContextNet::create(Eigen::MatrixXd::Zero(0, 4)), DomainError);
    EXPECT_THROW(ContextNet::create(Eigen::MatrixXd::Zero(6, 4)), DomainError);
}

TEST(Serialization, RoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "sunlit_encoder_test";
    std::filesystem::create_directories(dir);
    const ContextNet net = perturbed_net(3, 8, 16, 8);
    save_context_net(dir / "net.bin", net);
    const ContextNet back = load_context_net(dir / "net.bin");
    EXPECT_EQ(test::flatten(back), test::flatten(net));
    EXPECT_EQ(back.rbf.centers, net.rbf.centers);

    const TokenSet tok{"S*", random_matrix(2, 8, 2)};
    save_tokens(dir / "tok.bin", tok);
    const TokenSet tback = load_tokens(dir / "tok.bin");
    EXPECT_EQ(tback.name, "S*");
    EXPECT_EQ(tback.embeddings, tok.embeddings);
    EXPECT_ANY_THROW(load_context_net(dir / "tok.bin"));
    std::filesystem::remove_all(dir);
}
