// Dynamic context tokens: normalized altitude -> RBF features -> SALN
// modulation of a set of static embeddings.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sunlit/binning.hpp"

namespace sunlit::encoder {

inline constexpr int kDefaultCenters = 16;
inline constexpr int kDefaultEmbeddingDim = 32;

/// A named M x d block of embedding vectors (S* or D*).
struct TokenSet {
    std::string name;
    Eigen::MatrixXd embeddings; ///< rows are tokens

    int count() const noexcept { return static_cast<int>(embeddings.rows()); }
    int dim() const noexcept { return static_cast<int>(embeddings.cols()); }
};

void save_tokens(const std::filesystem::path& path, const TokenSet& tokens);
TokenSet load_tokens(const std::filesystem::path& path);

/// Gaussian RBF features over fixed, uniformly spaced centers on [0, 1].
/// Widths are stored as log-gamma so they stay positive under training.
struct RbfLayer {
    Eigen::VectorXd centers;
    Eigen::VectorXd log_gammas;

    /// J centers at j/(J-1); gamma_j = 1/(2 spacing^2).
    static RbfLayer uniform(int count);

    int size() const noexcept { return static_cast<int>(centers.size()); }
    Eigen::VectorXd gammas() const { return log_gammas.array().exp(); }

    /// phi_j = exp(-gamma_j (v - c_j)^2). Requires v in [0, 1].
    Eigen::VectorXd encode(double v) const;
    /// d phi_j / d v
    Eigen::VectorXd encode_derivative(double v) const;
};

/// Style-adaptive layer norm over M static embeddings of width d.
/// out_m = (W_s h + b_s) * LN(e_m) + (W_b h + b_b)
struct SalnParams {
    Eigen::MatrixXd weight_scale; ///< d x J
    Eigen::VectorXd bias_scale;   ///< d
    Eigen::MatrixXd weight_shift; ///< d x J
    Eigen::VectorXd bias_shift;   ///< d
    Eigen::MatrixXd base;         ///< M x d
    double epsilon = 1e-5;

    /// Identity modulation (scale 1, shift 0) around the given embeddings.
    static SalnParams identity(const Eigen::MatrixXd& base, int features);

    int tokens() const noexcept { return static_cast<int>(base.rows()); }
    int dim() const noexcept { return static_cast<int>(base.cols()); }
};

/// Row-wise layer normalization without affine terms.
Eigen::MatrixXd layer_norm_rows(const Eigen::MatrixXd& x, double epsilon);

Eigen::MatrixXd saln_modulate(const SalnParams& params, const Eigen::VectorXd& features);

/// Trainable pieces of the context network, also used as the gradient container.
struct ContextNet {
    RbfLayer rbf;
    SalnParams saln;

    /// M tokens of width d, initialised from `seed_embeddings` (M x d).
    static ContextNet create(const Eigen::MatrixXd& seed_embeddings, int centers = kDefaultCenters);

    /// Zero-valued copy with matching shapes; centers are kept.
    ContextNet zeros_like() const;

    /// Trainable tensors in a fixed order (centers excluded).
    std::vector<Eigen::Map<Eigen::VectorXd>> trainable();
    std::vector<Eigen::Map<const Eigen::VectorXd>> trainable() const;

    Eigen::MatrixXd forward(double normalized) const;

    /// Accumulates d loss / d parameters into `grads` given d loss / d output.
    void backward(double normalized, const Eigen::MatrixXd& d_out, ContextNet& grads) const;
};

void save_context_net(const std::filesystem::path& path, const ContextNet& net);
ContextNet load_context_net(const std::filesystem::path& path);

/// normalize -> rbf_encode -> saln_modulate, named "D*".
TokenSet context_tokens(double altitude_deg, const binning::BinScheme& scheme, const ContextNet& net,
                        binning::OutOfRange policy = binning::OutOfRange::Error);

/// Same, from an already normalized altitude.
TokenSet context_tokens_normalized(double normalized, const ContextNet& net);

} // namespace sunlit::encoder
