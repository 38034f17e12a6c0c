#include "sunlit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "sunlit/error.hpp"

namespace sunlit::metrics {

double estimate_noise_sigma(const Image& img) {
    const int W = img.width();
    const int H = img.height();
    if (W < 3 || H < 3)
        throw ContractError("noise estimation needs an image of at least 3x3");
    double total = 0.0;
    for (int y = 1; y < H - 1; ++y) {
        for (int x = 1; x < W - 1; ++x) {
            const double r = img(x - 1, y - 1) - 2.0 * img(x, y - 1) + img(x + 1, y - 1) -
                             2.0 * img(x - 1, y) + 4.0 * img(x, y) - 2.0 * img(x + 1, y) +
                             img(x - 1, y + 1) - 2.0 * img(x, y + 1) + img(x + 1, y + 1);
            total += std::abs(r);
        }
    }
    return std::sqrt(std::numbers::pi / 2.0) * total / (6.0 * (W - 2) * (H - 2));
}

std::vector<double> delta_sigma(std::span<const double> sigmas) {
    if (sigmas.size() < 2)
        throw ContractError("delta_sigma needs at least two buckets");
    std::vector<double> out(sigmas.size() - 1);
    for (std::size_t i = 0; i + 1 < sigmas.size(); ++i)
        out[i] = sigmas[i + 1] - sigmas[i];
    return out;
}

Eigen::VectorXd extract_features(const Image& img) {
    const int W = img.width();
    const int H = img.height();
    const Eigen::VectorXd& p = img.pixels();
    const double mean = p.mean();
    const double var = (p.array() - mean).square().mean();

    double dx = 0.0, dy = 0.0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x + 1 < W; ++x)
            dx += std::abs(img(x + 1, y) - img(x, y));
    for (int y = 0; y + 1 < H; ++y)
        for (int x = 0; x < W; ++x)
            dy += std::abs(img(x, y + 1) - img(x, y));
    dx /= static_cast<double>(std::max(1, (W - 1) * H));
    dy /= static_cast<double>(std::max(1, W * (H - 1)));

    std::vector<double> sorted(p.data(), p.data() + p.size());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t q = std::max<std::size_t>(1, sorted.size() / 4);
    const double low = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(q), 0.0) / q;
    const double high = std::accumulate(sorted.end() - static_cast<std::ptrdiff_t>(q), sorted.end(), 0.0) / q;

    const int half = H / 2;
    double upper = 0.0, lower = 0.0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            (y < half ? upper : lower) += img(x, y);
    upper /= static_cast<double>(half * W);
    lower /= static_cast<double>((H - half) * W);

    Eigen::VectorXd f(kFeatureDim);
    f << mean, std::sqrt(var), estimate_noise_sigma(img), dx, dy, high, low, upper - lower;
    return f;
}

FeatureStats fit_stats(std::span<const Eigen::VectorXd> features) {
    if (features.size() < 2)
        throw ContractError("fit_stats needs at least two samples");
    const Eigen::Index d = features.front().size();
    FeatureStats s;
    s.count = features.size();
    s.mean = Eigen::VectorXd::Zero(d);
    for (const auto& f : features) {
        if (f.size() != d)
            throw ContractError("feature vectors differ in length");
        s.mean += f;
    }
    s.mean /= static_cast<double>(s.count);
    s.covariance = Eigen::MatrixXd::Zero(d, d);
    for (const auto& f : features) {
        const Eigen::VectorXd c = f - s.mean;
        s.covariance.noalias() += c * c.transpose();
    }
    s.covariance /= static_cast<double>(s.count - 1);
    s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
    return s;
}

FeatureStats fit_image_stats(std::span<const Image> images) {
    std::vector<Eigen::VectorXd> feats;
    feats.reserve(images.size());
    for (const auto& img : images)
        feats.push_back(extract_features(img));
    return fit_stats(feats);
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
    const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

namespace {

constexpr double kRidge = 1e-6;

// Returns the smallest eigenvalue; throws when clearly indefinite.
double check_psd(const Eigen::MatrixXd& c) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(c, Eigen::EigenvaluesOnly);
    const double tol = 1e-10 * std::max(1.0, c.cwiseAbs().maxCoeff());
    const double lowest = eig.eigenvalues().minCoeff();
    if (lowest < -tol)
        throw NumericError("covariance is not positive semi-definite");
    return lowest;
}

} // namespace

double frechet_gaussian(const FeatureStats& a, const FeatureStats& b) {
    const Eigen::Index d = a.mean.size();
    if (b.mean.size() != d || a.covariance.rows() != d || b.covariance.rows() != d)
        throw ContractError("feature statistics differ in dimension");
    // Near-singular small-sample covariances get a ridge before the square roots.
    const bool singular = std::min(check_psd(a.covariance), check_psd(b.covariance)) < kRidge;
    const Eigen::MatrixXd ridge = (singular ? kRidge : 0.0) * Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd c1 = a.covariance + ridge;
    const Eigen::MatrixXd c2 = b.covariance + ridge;
    const Eigen::MatrixXd r1 = sqrtm_psd(c1);
    const Eigen::MatrixXd cross = sqrtm_psd(r1 * c2 * r1);
    double dist = (a.mean - b.mean).squaredNorm() + c1.trace() + c2.trace() - 2.0 * cross.trace();
    if (dist < -1e-8)
        throw NumericError("negative Frechet distance " + std::to_string(dist));
    return std::max(dist, 0.0);
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]])
            ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            r[idx[k]] = avg;
        i = j + 1;
    }
    return r;
}

} // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw ContractError("spearman needs two equally long sequences of length >= 2");
    const auto rx = ranks(x);
    const auto ry = ranks(y);
    const Eigen::Map<const Eigen::VectorXd> a(rx.data(), static_cast<Eigen::Index>(rx.size()));
    const Eigen::Map<const Eigen::VectorXd> b(ry.data(), static_cast<Eigen::Index>(ry.size()));
    const Eigen::VectorXd ca = a.array() - a.mean();
    const Eigen::VectorXd cb = b.array() - b.mean();
    const double denom = std::sqrt(ca.squaredNorm() * cb.squaredNorm());
    return denom == 0.0 ? 0.0 : ca.dot(cb) / denom;
}

} // namespace sunlit::metrics
