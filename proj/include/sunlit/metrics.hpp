#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "sunlit/image.hpp"

namespace sunlit::metrics {

/// Immerkaer's fast blind estimate of additive Gaussian noise: the mask
/// [1 -2 1; -2 4 -2; 1 -2 1] annihilates affine (and additively separable)
/// structure, so sigma = sqrt(pi/2) * sum|response| / (6 (W-2)(H-2)).
double estimate_noise_sigma(const Image& img);

/// out[i] = sigmas[i+1] - sigmas[i]
std::vector<double> delta_sigma(std::span<const double> sigmas);

inline constexpr int kFeatureDim = 8;

/// [mean, std, noise sigma, mean |dx|, mean |dy|, mean of brightest quarter,
///  mean of darkest quarter, upper-half minus lower-half mean]
Eigen::VectorXd extract_features(const Image& img);

struct FeatureStats {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    std::size_t count = 0;
};

/// Sample mean and unbiased covariance. Needs >= 2 samples.
FeatureStats fit_stats(std::span<const Eigen::VectorXd> features);
FeatureStats fit_image_stats(std::span<const Image> images);

/// ||mu1 - mu2||^2 + tr(C1 + C2 - 2 (C1^1/2 C2 C1^1/2)^1/2)
double frechet_gaussian(const FeatureStats& a, const FeatureStats& b);

/// Symmetric PSD square root via eigendecomposition, negative eigenvalues clamped.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& m);

/// Spearman rank correlation (average ranks for ties).
double spearman(std::span<const double> x, std::span<const double> y);

} // namespace sunlit::metrics
