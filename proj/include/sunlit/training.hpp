// Optimization of the toy base denoiser, the structure token S* (textual
// inversion against a frozen model) and the context network that produces
// D* from altitude.
#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "sunlit/binning.hpp"
#include "sunlit/dataprep.hpp"
#include "sunlit/diffusion.hpp"
#include "sunlit/encoder.hpp"

namespace sunlit::training {

struct OptimConfig {
    double learning_rate = 0.005;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    int epochs = 5;
    int batch_size = 8;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
};

/// Adam with decoupled weight decay. State is allocated lazily to match the
/// parameter list handed to the first step; later calls must pass the same
/// layout.
class AdamW {
public:
    explicit AdamW(const OptimConfig& cfg) : cfg_(cfg) {}

    void step(std::span<Eigen::Map<Eigen::VectorXd>> params,
              std::span<const Eigen::Map<const Eigen::VectorXd>> grads);
    int steps_taken() const noexcept { return t_; }

private:
    OptimConfig cfg_;
    int t_ = 0;
    std::vector<Eigen::VectorXd> m_, v_;
};

struct TrainReport {
    std::vector<double> epoch_losses;
    double final_loss = 0.0;
    double wall_seconds = 0.0;
    nlohmann::json config;
    std::uint64_t checksum = 0;

    nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Toy text encoder vocabulary and captions

/// "scene" followed by illumination words, coarse to fine in altitude.
const std::vector<std::string>& base_vocabulary();

/// Illumination word for an altitude (one of the vocabulary's light words).
const std::string& illumination_word(double altitude_deg);

struct BaseOptions {
    diffusion::DenoiserConfig denoiser;
    int schedule_steps = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
    double cond_dropout = 0.1;    ///< probability of training on the null context
    double caption_dropout = 0.2; ///< probability of dropping the illumination word
    double ema_decay = 0.999;     ///< the returned model is the weight average; 0 disables
    /// Per-sample gradient weight 1 / alpha_bar_t (the v-prediction MSE).
    /// Reported losses stay unweighted.
    bool v_weighting = true;
};

struct BaseResult {
    diffusion::DiffusionModel model;
    TrainReport report;
};

/// Trains denoiser and prompt table jointly from scratch. Deterministic
/// given cfg.seed. Throws NumericError on divergence (an epoch mean above
/// ten times the mean loss of the first epoch, or of the first 200 batches if
/// that is longer) or non-finite loss.
BaseResult train_base(std::span<const dataprep::CorpusItem> corpus, const OptimConfig& cfg,
                      const BaseOptions& opts = {});

// ---------------------------------------------------------------------------
// Gradients of the frozen-model objectives

struct EmbeddingGrad {
    double loss = 0.0;
    Eigen::MatrixXd d_cond; ///< d x batch, gradient wrt pooled condition columns
};

/// Loss mean_b ||eps_b - eps_hat(x_t, t, cond_b)||^2 and its gradient wrt
/// the condition columns, for a fixed noise draw.
EmbeddingGrad condition_gradient(const diffusion::DiffusionModel& model, const Eigen::MatrixXd& x0,
                                 const Eigen::MatrixXd& cond, const diffusion::NoiseDraw& noise);

/// Denoising objective for structure tokens (prompt consists solely of the tokens).
double structure_objective(const diffusion::DiffusionModel& model, const Eigen::MatrixXd& tokens,
                           const Eigen::MatrixXd& x0, const diffusion::NoiseDraw& noise,
                           Eigen::MatrixXd* d_tokens = nullptr);

/// Denoising objective for the context network: condition = pooled D*(a_b).
double context_objective(const diffusion::DiffusionModel& model, const encoder::ContextNet& net,
                         std::span<const double> normalized, const Eigen::MatrixXd& x0,
                         const diffusion::NoiseDraw& noise, encoder::ContextNet* grads = nullptr);

/// Parameter gradient of the plain eps loss for a fixed noise draw.
double denoiser_objective(const diffusion::DiffusionModel& model, const Eigen::MatrixXd& x0,
                          const Eigen::MatrixXd& cond, const diffusion::NoiseDraw& noise,
                          diffusion::DenoiserParams* grads = nullptr, Eigen::MatrixXd* d_cond = nullptr);

// ---------------------------------------------------------------------------
// Token training

/// Daytime (altitude > 0) items; then a seeded `fraction` of them (at least one).
std::vector<dataprep::CorpusItem> structure_subset(std::span<const dataprep::CorpusItem> corpus, double fraction,
                                                   std::uint64_t seed);

struct TokenResult {
    encoder::TokenSet tokens;
    TrainReport report;
};

/// Textual inversion of `token_count` embeddings initialised from `init_word`.
/// Only the tokens change; throws ContractError if the model checksum drifts.
TokenResult train_structure_token(const diffusion::DiffusionModel& model, std::span<const Image> images,
                                  const OptimConfig& cfg, int token_count, const std::string& init_word = "scene");

struct ContextResult {
    encoder::ContextNet net;
    TrainReport report;
};

/// Trains log-gammas, SALN maps and static embeddings on a class-balanced
/// resample of the corpus.
ContextResult train_context_net(const diffusion::DiffusionModel& model, std::span<const dataprep::CorpusItem> corpus,
                                const binning::BinScheme& scheme, encoder::ContextNet net, const OptimConfig& cfg);

/// Mean context-objective loss over `repeats` seeded noise draws on every item.
double context_validation_loss(const diffusion::DiffusionModel& model, const encoder::ContextNet& net,
                               std::span<const dataprep::CorpusItem> items, const binning::BinScheme& scheme,
                               int repeats, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Verification

using LossFn = std::function<double(std::span<const double>)>;

/// Central differences on `probes` random coordinates; returns the largest
/// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
double grad_check(const LossFn& loss, std::span<const double> point, std::span<const double> analytic, int probes,
                  double step, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Embedding selection

struct Candidate {
    encoder::TokenSet tokens;
    double learning_rate = 0.0;
};

struct Selection {
    std::size_t best = 0;
    std::vector<double> scores; ///< Frechet proxy per candidate
};

/// Lowest score wins; ties go to fewer tokens, then lower learning rate.
std::size_t pick_best(std::span<const Candidate> candidates, std::span<const double> scores);

using CandidateGenerator = std::function<std::vector<Image>(const Candidate&)>;

Selection select_best_embedding(std::span<const Candidate> candidates, std::span<const Image> heldout,
                                const CandidateGenerator& generate);

/// Generates `count` images per candidate with the prompt "S*" alone.
Selection select_best_embedding(const diffusion::DiffusionModel& model, std::span<const Candidate> candidates,
                                std::span<const Image> heldout, int count, int steps, double guidance,
                                std::uint64_t seed);

struct SweepCell {
    double learning_rate = 0.0;
    int token_count = 0;
    double frechet = 0.0;
    double final_loss = 0.0;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::vector<Candidate> candidates;
    std::size_t best = 0;
};

/// Learning-rate x token-count grid of structure tokens, ranked by the Frechet proxy.
SweepResult sweep_structure_tokens(const diffusion::DiffusionModel& model, std::span<const Image> train,
                                   std::span<const Image> heldout, std::span<const double> learning_rates,
                                   std::span<const int> token_counts, const OptimConfig& base_cfg, int generate,
                                   std::uint64_t seed);

} // namespace sunlit::training
