// Pixel-space denoising diffusion at desk scale: linear-beta schedule,
// dense epsilon-predictor, classifier-free guidance and deterministic DDIM
// with a mid-trajectory switch of the conditioning context.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "sunlit/encoder.hpp"
#include "sunlit/image.hpp"
#include "sunlit/rng.hpp"

namespace sunlit::diffusion {

struct NoiseSchedule {
    std::vector<double> betas;
    std::vector<double> alpha_bars;

    int steps() const noexcept { return static_cast<int>(betas.size()); }
    /// alpha_bar at t; t = -1 denotes the clean endpoint (alpha_bar = 1).
    double alpha_bar(int t) const;
};

/// Linear betas from beta_start to beta_end over T steps.
NoiseSchedule make_schedule(int T = 1000, double beta_start = 1e-4, double beta_end = 0.02);

/// sqrt(ab_t) x0 + sqrt(1 - ab_t) eps, column-wise with one step per column.
Eigen::MatrixXd forward_noise(const Eigen::MatrixXd& x0, std::span<const int> t, const Eigen::MatrixXd& eps,
                              const NoiseSchedule& s);
Eigen::MatrixXd forward_noise(const Eigen::MatrixXd& x0, int t, const Eigen::MatrixXd& eps, const NoiseSchedule& s);

/// Sinusoidal embedding of the timestep, one column per entry of `t`.
Eigen::MatrixXd timestep_embedding(std::span<const int> t, int dim);

struct DenoiserConfig {
    int width = 32;
    int height = 32;
    int time_dim = 64;
    int cond_dim = encoder::kDefaultEmbeddingDim;
    int hidden = 256;
    int layers = 3;

    int pixels() const noexcept { return width * height; }
    int input_dim() const noexcept { return pixels() + time_dim + cond_dim; }
};

/// Dense epsilon-predictor. The input is [x_t; time embedding; pooled
/// condition] followed by SiLU hidden layers. The output is
/// g x_t + sqrt(ab_t) F(h), where g is the Wiener gain for a per-sample pixel
/// noise level exp(rho(h)). This lets per-pixel noise bypass the hidden
/// bottleneck, and F stays bounded near t = T.
struct DenoiserParams {
    DenoiserConfig config;
    std::vector<Eigen::MatrixXd> weights; ///< layers + 1 matrices, last is the output head
    std::vector<Eigen::VectorXd> biases;
    Eigen::VectorXd gate_weight; ///< hidden
    Eigen::VectorXd gate_bias;   ///< size 1
    std::vector<double> alpha_bars; ///< schedule used by the head; not trained

    static DenoiserParams init(const DenoiserConfig& config, const NoiseSchedule& schedule, std::uint64_t seed);
    DenoiserParams zeros_like() const;

    std::vector<Eigen::Map<Eigen::VectorXd>> trainable();
    std::vector<Eigen::Map<const Eigen::VectorXd>> trainable() const;

    struct Tape {
        Eigen::MatrixXd input;
        std::vector<Eigen::MatrixXd> pre;  ///< pre-activations per hidden layer
        std::vector<Eigen::MatrixXd> post; ///< activations per hidden layer
        Eigen::RowVectorXd gate; ///< unsquashed log noise level
        Eigen::RowVectorXd skip;  ///< 1 / sqrt(1 - ab_t) per column
        Eigen::RowVectorXd scale; ///< sqrt(ab_t) / sqrt(1 - ab_t) per column
        Eigen::RowVectorXd g;     ///< gain on x_t
        Eigen::MatrixXd head;
    };

    Eigen::MatrixXd predict(const Eigen::MatrixXd& x_t, std::span<const int> t, const Eigen::MatrixXd& cond) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x_t, std::span<const int> t, const Eigen::MatrixXd& cond,
                            Tape& tape) const;
    /// Reverse pass. `grads` (parameter gradients, accumulated) and `d_cond`
    /// (gradient wrt the condition columns, overwritten) are optional.
    void backward(const Tape& tape, const Eigen::MatrixXd& d_out, DenoiserParams* grads,
                  Eigen::MatrixXd* d_cond) const;

private:
    Eigen::MatrixXd head_output(const Eigen::MatrixXd& x_t, Tape& tape) const;
    void head_backward(const Eigen::MatrixXd& x_t, const Tape& tape, const Eigen::MatrixXd& d_out,
                       Eigen::MatrixXd& d_head, Eigen::RowVectorXd& d_gate) const;
};

/// The frozen toy text encoder: one embedding per vocabulary word plus the
/// null context used for unconditional prediction.
struct PromptTable {
    std::vector<std::string> vocabulary;
    Eigen::MatrixXd embeddings; ///< vocabulary x d
    Eigen::VectorXd null_embedding;

    static PromptTable init(std::vector<std::string> vocabulary, int dim, std::uint64_t seed);
    int index_of(const std::string& word) const;
    Eigen::MatrixXd lookup(std::span<const std::string> words) const;
};

/// Ordered embedding sequence; an empty sequence is the null context.
struct PromptContext {
    Eigen::MatrixXd embeddings; ///< n x d

    static PromptContext null() { return {}; }
    static PromptContext from_tokens(const encoder::TokenSet& tokens) { return {tokens.embeddings}; }
    static PromptContext from_words(const PromptTable& table, std::span<const std::string> words);
    PromptContext then(const PromptContext& other) const;

    bool is_null() const noexcept { return embeddings.rows() == 0; }
    /// Mean of the embeddings, or the table's null vector.
    Eigen::VectorXd pooled(const PromptTable& table) const;
};

struct DiffusionModel {
    NoiseSchedule schedule;
    DenoiserParams denoiser;
    PromptTable prompts;

    /// FNV-1a over every denoiser and prompt-table parameter bit pattern.
    std::uint64_t checksum() const;
    Eigen::MatrixXd predict(const Eigen::MatrixXd& x_t, int t, const Eigen::MatrixXd& cond) const;
};

void save_model(const std::filesystem::path& path, const DiffusionModel& model);
DiffusionModel load_model(const std::filesystem::path& path);

/// Noise predictor signature used by the sampler: (x_t, t, cond columns) -> eps.
using NoisePredictor = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&, int, const Eigen::MatrixXd&)>;

NoisePredictor predictor_of(const DiffusionModel& model);

/// Mean over the batch of ||eps - eps_hat||^2 with t ~ U{0..T-1} and
/// eps ~ N(0, I), drawn from `rng` (all t first, then eps column by column).
double eps_loss(const NoisePredictor& predict, const Eigen::MatrixXd& x0, const Eigen::MatrixXd& cond,
                const NoiseSchedule& s, Rng& rng);

struct NoiseDraw {
    std::vector<int> t;
    Eigen::MatrixXd eps;
};
NoiseDraw draw_noise(Eigen::Index pixels, Eigen::Index batch, int T, Rng& rng);

/// (1 - w) eps_u + w eps_c with eps_u predicted under the null condition.
Eigen::MatrixXd cfg_predict(const NoisePredictor& predict, const Eigen::MatrixXd& x_t, int t,
                            const Eigen::MatrixXd& cond, const Eigen::MatrixXd& null_cond, double w);

/// Deterministic (eta = 0) DDIM update from t to t_prev (t_prev = -1 is the
/// clean endpoint).
Eigen::MatrixXd ddim_step(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_hat, int t, int t_prev,
                          const NoiseSchedule& s);

/// `steps` timesteps uniformly spread over {0..T-1}, descending, starting at T-1.
std::vector<int> ddim_timesteps(int T, int steps);

struct SamplerConfig {
    int steps = 30;
    int switch_step = 15;
    double guidance = 7.5;
    /// Clip the clean-image estimate to [0, 1] at every step and re-derive
    /// the noise estimate from it.
    bool clip_x0 = true;
};

/// Runs DDIM from x_T; steps 1..switch_step use `cond_first`, the rest
/// `cond_second`. Returns the raw (unclamped) endpoint.
Eigen::MatrixXd ddim_sample(const NoisePredictor& predict, const NoiseSchedule& s, Eigen::MatrixXd x_T,
                            const Eigen::MatrixXd& cond_first, const Eigen::MatrixXd& cond_second,
                            const Eigen::MatrixXd& null_cond, const SamplerConfig& cfg);

/// Two-phase sampling of `count` images from seeded Gaussian noise, clamped to [0, 1].
std::vector<Image> sample_partial(const DiffusionModel& model, const PromptContext& first,
                                  const PromptContext& second, int count, const SamplerConfig& cfg,
                                  std::uint64_t seed);

/// Single-context sampling.
std::vector<Image> sample(const DiffusionModel& model, const PromptContext& ctx, int count, int steps,
                          double guidance, std::uint64_t seed);

} // namespace sunlit::diffusion
