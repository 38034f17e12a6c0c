#include "sunlit/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "sunlit/error.hpp"
#include "sunlit/metrics.hpp"
#include "sunlit/rng.hpp"

namespace sunlit::training {

namespace {

using Clock = std::chrono::steady_clock;
using diffusion::DiffusionModel;
using diffusion::NoiseDraw;

template <typename M>
Eigen::Map<Eigen::VectorXd> flat(M& m) {
    return {m.data(), m.size()};
}

template <typename M>
Eigen::Map<const Eigen::VectorXd> flat_c(const M& m) {
    return {m.data(), m.size()};
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void check_finite(double loss, const char* stage) {
    if (!std::isfinite(loss))
        throw NumericError(std::string(stage) + ": loss became non-finite");
}

Eigen::MatrixXd gather(std::span<const dataprep::CorpusItem> items, std::span<const std::size_t> idx) {
    Eigen::MatrixXd x(items.front().image.size(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        x.col(static_cast<Eigen::Index>(i)) = items[idx[i]].image.pixels();
    return x;
}

Eigen::MatrixXd gather(std::span<const Image> images, std::span<const std::size_t> idx) {
    Eigen::MatrixXd x(images.front().size(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        x.col(static_cast<Eigen::Index>(i)) = images[idx[i]].pixels();
    return x;
}

// Drives `epochs` passes over `order` (reshuffled each epoch) in batches.
template <typename BatchFn>
std::vector<double> run_epochs(std::vector<std::size_t> order, const OptimConfig& cfg, Rng& rng, BatchFn&& fn) {
    std::vector<double> epoch_losses;
    for (int e = 0; e < cfg.epochs; ++e) {
        std::shuffle(order.begin(), order.end(), rng);
        double sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            sum += fn(std::span<const std::size_t>(order.data() + start, stop - start));
            ++batches;
        }
        epoch_losses.push_back(sum / static_cast<double>(batches));
    }
    return epoch_losses;
}

} // namespace

void OptimConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw DomainError("learning rate must be finite and non-negative");
    if (!(weight_decay >= 0.0))
        throw DomainError("weight decay must be non-negative");
    if (epochs < 1)
        throw DomainError("epochs must be >= 1");
    if (batch_size < 1)
        throw DomainError("batch size must be >= 1");
}

nlohmann::json OptimConfig::to_json() const {
    return {{"learning_rate", learning_rate}, {"weight_decay", weight_decay}, {"beta1", beta1},
            {"beta2", beta2},                 {"epsilon", epsilon},           {"epochs", epochs},
            {"batch_size", batch_size},       {"seed", seed}};
}

void AdamW::step(std::span<Eigen::Map<Eigen::VectorXd>> params,
                 std::span<const Eigen::Map<const Eigen::VectorXd>> grads) {
    if (params.size() != grads.size())
        throw ContractError("AdamW: parameter and gradient lists differ");
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.push_back(Eigen::VectorXd::Zero(p.size()));
            v_.push_back(Eigen::VectorXd::Zero(p.size()));
        }
    }
    if (m_.size() != params.size())
        throw ContractError("AdamW: parameter layout changed between steps");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    const double lr = cfg_.learning_rate;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i];
        const auto& g = grads[i];
        if (p.size() != g.size() || p.size() != m_[i].size())
            throw ContractError("AdamW: tensor size mismatch");
        m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
        v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseAbs2();
        p *= 1.0 - lr * cfg_.weight_decay;
        p.array() -= lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + cfg_.epsilon);
    }
}

nlohmann::json TrainReport::to_json() const {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(checksum));
    return {{"epoch_losses", epoch_losses}, {"final_loss", final_loss}, {"config", config}, {"checksum", hex}};
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& base_vocabulary() {
    static const std::vector<std::string> vocab{"scene",   "night",  "dusk",    "twilight", "sunrise",
                                                "golden",  "morning", "day",    "noon"};
    return vocab;
}

const std::string& illumination_word(double a) {
    const auto& v = base_vocabulary();
    if (a < -9.0)
        return v[1];
    if (a < -5.0)
        return v[2];
    if (a < -2.0)
        return v[3];
    if (a < 2.0)
        return v[4];
    if (a < 8.0)
        return v[5];
    if (a < 20.0)
        return v[6];
    if (a < 40.0)
        return v[7];
    return v[8];
}

double denoiser_objective(const DiffusionModel& model, const Eigen::MatrixXd& x0, const Eigen::MatrixXd& cond,
                          const NoiseDraw& noise, diffusion::DenoiserParams* grads, Eigen::MatrixXd* d_cond) {
    const Eigen::MatrixXd x_t = diffusion::forward_noise(x0, noise.t, noise.eps, model.schedule);
    diffusion::DenoiserParams::Tape tape;
    const Eigen::MatrixXd diff = model.denoiser.forward(x_t, noise.t, cond, tape) - noise.eps;
    const auto B = static_cast<double>(x0.cols());
    if (grads || d_cond)
        model.denoiser.backward(tape, (2.0 / B) * diff, grads, d_cond);
    return diff.squaredNorm() / B;
}

EmbeddingGrad condition_gradient(const DiffusionModel& model, const Eigen::MatrixXd& x0, const Eigen::MatrixXd& cond,
                                 const NoiseDraw& noise) {
    EmbeddingGrad g;
    g.loss = denoiser_objective(model, x0, cond, noise, nullptr, &g.d_cond);
    return g;
}

double structure_objective(const DiffusionModel& model, const Eigen::MatrixXd& tokens, const Eigen::MatrixXd& x0,
                           const NoiseDraw& noise, Eigen::MatrixXd* d_tokens) {
    const Eigen::VectorXd pooled = tokens.colwise().mean().transpose();
    const Eigen::MatrixXd cond = pooled.replicate(1, x0.cols());
    if (!d_tokens)
        return denoiser_objective(model, x0, cond, noise);
    const EmbeddingGrad g = condition_gradient(model, x0, cond, noise);
    const Eigen::RowVectorXd per_token = g.d_cond.rowwise().sum().transpose() / static_cast<double>(tokens.rows());
    *d_tokens = per_token.replicate(tokens.rows(), 1);
    return g.loss;
}

double context_objective(const DiffusionModel& model, const encoder::ContextNet& net,
                         std::span<const double> normalized, const Eigen::MatrixXd& x0, const NoiseDraw& noise,
                         encoder::ContextNet* grads) {
    if (static_cast<Eigen::Index>(normalized.size()) != x0.cols())
        throw ContractError("context objective needs one altitude per image");
    Eigen::MatrixXd cond(net.saln.dim(), x0.cols());
    for (Eigen::Index b = 0; b < x0.cols(); ++b)
        cond.col(b) = net.forward(normalized[static_cast<std::size_t>(b)]).colwise().mean().transpose();
    if (!grads)
        return denoiser_objective(model, x0, cond, noise);
    const EmbeddingGrad g = condition_gradient(model, x0, cond, noise);
    const auto M = static_cast<double>(net.saln.tokens());
    for (Eigen::Index b = 0; b < x0.cols(); ++b) {
        const Eigen::MatrixXd d_tok = (g.d_cond.col(b).transpose() / M).replicate(net.saln.tokens(), 1);
        net.backward(normalized[static_cast<std::size_t>(b)], d_tok, *grads);
    }
    return g.loss;
}

// ---------------------------------------------------------------------------

BaseResult train_base(std::span<const dataprep::CorpusItem> corpus, const OptimConfig& cfg, const BaseOptions& opts) {
    cfg.validate();
    if (corpus.empty())
        throw ContractError("train_base: empty corpus");
    const auto start = Clock::now();

    BaseResult out;
    DiffusionModel& model = out.model;
    model.schedule = diffusion::make_schedule(opts.schedule_steps, opts.beta_start, opts.beta_end);
    diffusion::DenoiserConfig dc = opts.denoiser;
    dc.width = corpus.front().image.width();
    dc.height = corpus.front().image.height();
    model.denoiser = diffusion::DenoiserParams::init(dc, model.schedule, derive_seed(cfg.seed, 1));
    model.prompts = diffusion::PromptTable::init(base_vocabulary(), dc.cond_dim, derive_seed(cfg.seed, 2));

    Rng rng(derive_seed(cfg.seed, 3));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    AdamW opt(cfg);
    const int scene = model.prompts.index_of("scene");
    // Divergence reference: mean batch loss over the first epoch, extended
    // to at least kWarmupBatches batches.
    constexpr int kWarmupBatches = 200;
    double initial = -1.0, warmup_sum = 0.0;
    int warmup_count = 0;

    auto all_params = [&model] {
        auto params = model.denoiser.trainable();
        params.push_back(flat(model.prompts.embeddings));
        params.push_back(flat(model.prompts.null_embedding));
        return params;
    };
    std::vector<Eigen::VectorXd> ema;
    for (const auto& p : all_params())
        ema.emplace_back(p);
    long updates = 0;

    std::vector<std::size_t> order(corpus.size());
    std::iota(order.begin(), order.end(), 0);
    auto batch_step = [&](std::span<const std::size_t> idx) {
        const auto B = static_cast<Eigen::Index>(idx.size());
        const Eigen::MatrixXd x0 = gather(corpus, idx);
        Eigen::MatrixXd cond(dc.cond_dim, B);
        std::vector<std::vector<int>> words(idx.size());
        for (Eigen::Index b = 0; b < B; ++b) {
            auto& w = words[static_cast<std::size_t>(b)];
            if (unit(rng) >= opts.cond_dropout) {
                w.push_back(scene);
                if (unit(rng) >= opts.caption_dropout)
                    w.push_back(model.prompts.index_of(illumination_word(corpus[idx[static_cast<std::size_t>(b)]].altitude_deg)));
            }
            if (w.empty()) {
                cond.col(b) = model.prompts.null_embedding;
            } else {
                cond.col(b).setZero();
                for (int k : w)
                    cond.col(b) += model.prompts.embeddings.row(k).transpose();
                cond.col(b) /= static_cast<double>(w.size());
            }
        }
        const NoiseDraw noise = diffusion::draw_noise(x0.rows(), B, model.schedule.steps(), rng);

        diffusion::DenoiserParams grads = model.denoiser.zeros_like();
        Eigen::MatrixXd d_cond;
        double loss = 0.0;
        {
            const Eigen::MatrixXd x_t = diffusion::forward_noise(x0, noise.t, noise.eps, model.schedule);
            diffusion::DenoiserParams::Tape tape;
            Eigen::MatrixXd diff = model.denoiser.forward(x_t, noise.t, cond, tape) - noise.eps;
            // Reported loss is the plain eps-MSE; the weighting only shapes the gradient.
            loss = diff.squaredNorm() / static_cast<double>(B);
            if (opts.v_weighting)
                for (Eigen::Index b = 0; b < B; ++b)
                    diff.col(b) /= model.schedule.alpha_bar(noise.t[static_cast<std::size_t>(b)]);
            model.denoiser.backward(tape, (2.0 / static_cast<double>(B)) * diff, &grads, &d_cond);
        }
        check_finite(loss, "train_base");
        if (initial < 0.0) {
            warmup_sum += loss;
            ++warmup_count;
        }

        Eigen::MatrixXd g_emb = Eigen::MatrixXd::Zero(model.prompts.embeddings.rows(), model.prompts.embeddings.cols());
        Eigen::VectorXd g_null = Eigen::VectorXd::Zero(model.prompts.null_embedding.size());
        for (Eigen::Index b = 0; b < B; ++b) {
            const auto& w = words[static_cast<std::size_t>(b)];
            if (w.empty()) {
                g_null += d_cond.col(b);
            } else {
                for (int k : w)
                    g_emb.row(k) += d_cond.col(b).transpose() / static_cast<double>(w.size());
            }
        }

        auto params = all_params();
        std::vector<Eigen::Map<const Eigen::VectorXd>> gs;
        for (auto& g : grads.trainable())
            gs.emplace_back(g.data(), g.size());
        gs.push_back(flat_c(g_emb));
        gs.push_back(flat_c(g_null));
        opt.step(params, gs);
        ++updates;
        const double d = std::min(opts.ema_decay, (1.0 + updates) / (10.0 + updates));
        for (std::size_t i = 0; i < params.size(); ++i)
            ema[i] = d * ema[i] + (1.0 - d) * params[i];
        return loss;
    };

    std::vector<double> losses;
    for (int e = 0; e < cfg.epochs; ++e) {
        OptimConfig one = cfg;
        one.epochs = 1;
        const double mean = run_epochs(order, one, rng, batch_step).front();
        check_finite(mean, "train_base");
        if (initial < 0.0 && warmup_count >= kWarmupBatches)
            initial = warmup_sum / static_cast<double>(warmup_count);
        if (initial >= 0.0 && mean > 10.0 * initial)
            throw NumericError("train_base diverged in epoch " + std::to_string(e + 1));
        losses.push_back(mean);
    }

    if (opts.ema_decay > 0.0) {
        auto params = all_params();
        for (std::size_t i = 0; i < params.size(); ++i)
            params[i] = ema[i];
    }

    out.report.epoch_losses = losses;
    out.report.final_loss = losses.back();
    out.report.config = cfg.to_json();
    out.report.config["ema_decay"] = opts.ema_decay;
    out.report.config["v_weighting"] = opts.v_weighting;
    out.report.config["cond_dropout"] = opts.cond_dropout;
    out.report.config["caption_dropout"] = opts.caption_dropout;
    out.report.config["hidden"] = dc.hidden;
    out.report.config["layers"] = dc.layers;
    out.report.checksum = model.checksum();
    out.report.wall_seconds = seconds_since(start);
    return out;
}

// ---------------------------------------------------------------------------

std::vector<dataprep::CorpusItem> structure_subset(std::span<const dataprep::CorpusItem> corpus, double fraction,
                                                   std::uint64_t seed) {
    std::vector<dataprep::CorpusItem> day;
    for (const auto& item : corpus)
        if (item.altitude_deg > 0.0)
            day.push_back(item);
    if (day.empty())
        throw ContractError("corpus has no daytime (altitude > 0) items");
    Rng rng(seed);
    std::shuffle(day.begin(), day.end(), rng);
    const auto keep = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(fraction * day.size())));
    day.resize(std::min(keep, day.size()));
    return day;
}

TokenResult train_structure_token(const DiffusionModel& model, std::span<const Image> images, const OptimConfig& cfg,
                                  int token_count, const std::string& init_word) {
    cfg.validate();
    if (token_count < 1 || token_count > 5)
        throw DomainError("structure token count must lie in 1..5");
    if (images.empty())
        throw ContractError("train_structure_token: no images");
    const auto start = Clock::now();
    const std::uint64_t before = model.checksum();

    const Eigen::RowVectorXd word = model.prompts.embeddings.row(model.prompts.index_of(init_word));
    Eigen::MatrixXd tokens = word.replicate(token_count, 1);
    Rng init_rng(derive_seed(cfg.seed, 21));
    std::normal_distribution<double> jitter(0.0, 0.01);
    for (Eigen::Index r = 1; r < tokens.rows(); ++r)
        for (Eigen::Index c = 0; c < tokens.cols(); ++c)
            tokens(r, c) += jitter(init_rng);

    Rng rng(derive_seed(cfg.seed, 22));
    AdamW opt(cfg);
    std::vector<std::size_t> order(images.size());
    std::iota(order.begin(), order.end(), 0);
    const auto losses = run_epochs(order, cfg, rng, [&](std::span<const std::size_t> idx) {
        const Eigen::MatrixXd x0 = gather(images, idx);
        const NoiseDraw noise = diffusion::draw_noise(x0.rows(), x0.cols(), model.schedule.steps(), rng);
        Eigen::MatrixXd d_tokens;
        const double loss = structure_objective(model, tokens, x0, noise, &d_tokens);
        check_finite(loss, "train_structure_token");
        std::vector<Eigen::Map<Eigen::VectorXd>> p{flat(tokens)};
        std::vector<Eigen::Map<const Eigen::VectorXd>> g{flat_c(d_tokens)};
        opt.step(p, g);
        return loss;
    });

    if (model.checksum() != before)
        throw ContractError("base model changed during structure-token training");

    TokenResult out;
    out.tokens = {"S*", tokens};
    out.report.epoch_losses = losses;
    out.report.final_loss = losses.back();
    out.report.config = cfg.to_json();
    out.report.config["token_count"] = token_count;
    out.report.config["images"] = images.size();
    out.report.checksum = before;
    out.report.wall_seconds = seconds_since(start);
    return out;
}

ContextResult train_context_net(const DiffusionModel& model, std::span<const dataprep::CorpusItem> corpus,
                                const binning::BinScheme& scheme, encoder::ContextNet net, const OptimConfig& cfg) {
    cfg.validate();
    if (corpus.empty())
        throw ContractError("train_context_net: empty corpus");
    if (net.saln.dim() != model.denoiser.config.cond_dim)
        throw ContractError("context net width does not match the model condition width");
    const auto start = Clock::now();
    const std::uint64_t before = model.checksum();

    std::vector<double> altitudes;
    std::vector<double> normalized;
    for (const auto& item : corpus) {
        altitudes.push_back(item.altitude_deg);
        normalized.push_back(binning::normalize(item.altitude_deg, scheme).value);
    }
    const auto order = binning::resample_balanced(altitudes, scheme, std::nullopt, derive_seed(cfg.seed, 31));

    Rng rng(derive_seed(cfg.seed, 32));
    AdamW opt(cfg);
    const auto losses = run_epochs(order, cfg, rng, [&](std::span<const std::size_t> idx) {
        const Eigen::MatrixXd x0 = gather(corpus, idx);
        std::vector<double> v;
        for (std::size_t i : idx)
            v.push_back(normalized[i]);
        const NoiseDraw noise = diffusion::draw_noise(x0.rows(), x0.cols(), model.schedule.steps(), rng);
        encoder::ContextNet grads = net.zeros_like();
        const double loss = context_objective(model, net, v, x0, noise, &grads);
        check_finite(loss, "train_context_net");
        auto p = net.trainable();
        const auto& cg = grads;
        auto g = cg.trainable();
        opt.step(p, g);
        return loss;
    });

    if (model.checksum() != before)
        throw ContractError("base model changed during context-net training");

    ContextResult out;
    out.net = std::move(net);
    out.report.epoch_losses = losses;
    out.report.final_loss = losses.back();
    out.report.config = cfg.to_json();
    out.report.config["bins"] = nlohmann::json::parse(scheme.to_json());
    out.report.config["resampled"] = order.size();
    out.report.checksum = before;
    out.report.wall_seconds = seconds_since(start);
    return out;
}

double context_validation_loss(const DiffusionModel& model, const encoder::ContextNet& net,
                               std::span<const dataprep::CorpusItem> items, const binning::BinScheme& scheme,
                               int repeats, std::uint64_t seed) {
    if (items.empty() || repeats < 1)
        throw ContractError("validation needs items and repeats >= 1");
    double total = 0.0;
    std::size_t n = 0;
    constexpr std::size_t kChunk = 64;
    for (int r = 0; r < repeats; ++r) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(r)));
        for (std::size_t startIdx = 0; startIdx < items.size(); startIdx += kChunk) {
            std::vector<std::size_t> idx;
            std::vector<double> v;
            for (std::size_t i = startIdx; i < std::min(items.size(), startIdx + kChunk); ++i) {
                idx.push_back(i);
                v.push_back(binning::normalize(items[i].altitude_deg, scheme).value);
            }
            const Eigen::MatrixXd x0 = gather(items, idx);
            const NoiseDraw noise = diffusion::draw_noise(x0.rows(), x0.cols(), model.schedule.steps(), rng);
            total += context_objective(model, net, v, x0, noise) * static_cast<double>(idx.size());
            n += idx.size();
        }
    }
    return total / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

double grad_check(const LossFn& loss, std::span<const double> point, std::span<const double> analytic, int probes,
                  double step, std::uint64_t seed) {
    if (point.size() != analytic.size() || point.empty())
        throw ContractError("grad_check: point and gradient sizes differ");
    if (probes < 1 || !(step > 0.0))
        throw ContractError("grad_check needs probes >= 1 and a positive step");
    std::vector<double> p(point.begin(), point.end());
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, p.size() - 1);
    double worst = 0.0;
    for (int k = 0; k < probes; ++k) {
        const std::size_t i = pick(rng);
        const double saved = p[i];
        p[i] = saved + step;
        const double up = loss(p);
        p[i] = saved - step;
        const double down = loss(p);
        p[i] = saved;
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericError("grad_check: non-finite loss at probe " + std::to_string(i));
        const double numeric = (up - down) / (2.0 * step);
        const double rel = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
        worst = std::max(worst, rel);
    }
    return worst;
}

// ---------------------------------------------------------------------------

std::size_t pick_best(std::span<const Candidate> candidates, std::span<const double> scores) {
    if (candidates.empty())
        throw ContractError("no candidate embeddings");
    if (scores.size() != candidates.size())
        throw ContractError("one score per candidate required");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const auto key = [&](std::size_t k) {
            return std::tuple(scores[k], candidates[k].tokens.count(), candidates[k].learning_rate);
        };
        if (key(i) < key(best))
            best = i;
    }
    return best;
}

Selection select_best_embedding(std::span<const Candidate> candidates, std::span<const Image> heldout,
                                const CandidateGenerator& generate) {
    if (candidates.empty())
        throw ContractError("no candidate embeddings");
    Selection s;
    if (candidates.size() == 1) {
        s.scores.push_back(0.0);
        return s;
    }
    const auto ref = metrics::fit_image_stats(heldout);
    for (const auto& c : candidates) {
        const auto images = generate(c);
        s.scores.push_back(metrics::frechet_gaussian(metrics::fit_image_stats(images), ref));
    }
    s.best = pick_best(candidates, s.scores);
    return s;
}

Selection select_best_embedding(const DiffusionModel& model, std::span<const Candidate> candidates,
                                std::span<const Image> heldout, int count, int steps, double guidance,
                                std::uint64_t seed) {
    return select_best_embedding(candidates, heldout, [&](const Candidate& c) {
        return diffusion::sample(model, diffusion::PromptContext::from_tokens(c.tokens), count, steps, guidance, seed);
    });
}

SweepResult sweep_structure_tokens(const DiffusionModel& model, std::span<const Image> train,
                                   std::span<const Image> heldout, std::span<const double> learning_rates,
                                   std::span<const int> token_counts, const OptimConfig& base_cfg, int generate,
                                   std::uint64_t seed) {
    SweepResult out;
    for (double lr : learning_rates) {
        for (int count : token_counts) {
            OptimConfig cfg = base_cfg;
            cfg.learning_rate = lr;
            const auto r = train_structure_token(model, train, cfg, count);
            out.candidates.push_back({r.tokens, lr});
            out.cells.push_back({lr, count, 0.0, r.report.final_loss});
        }
    }
    const auto sel = select_best_embedding(model, out.candidates, heldout, generate, 30, 7.5, seed);
    for (std::size_t i = 0; i < out.cells.size(); ++i)
        out.cells[i].frechet = sel.scores[i];
    out.best = sel.best;
    return out;
}

} // namespace sunlit::training
