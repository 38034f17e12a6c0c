#include "sunlit/diffusion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "sunlit/error.hpp"
#include "sunlit/tensor_io.hpp"

namespace sunlit::diffusion {

namespace {

template <typename M>
Eigen::Map<Eigen::VectorXd> flat(M& m) {
    return {m.data(), m.size()};
}

template <typename M>
Eigen::Map<const Eigen::VectorXd> flat_c(const M& m) {
    return {m.data(), m.size()};
}

Eigen::MatrixXd silu(const Eigen::MatrixXd& a) {
    return (a.array() / (1.0 + (-a.array()).exp())).matrix();
}

Eigen::MatrixXd silu_grad(const Eigen::MatrixXd& a) {
    const Eigen::ArrayXXd sig = 1.0 / (1.0 + (-a.array()).exp());
    return (sig * (1.0 + a.array() * (1.0 - sig))).matrix();
}

void check_step(const NoiseSchedule& s, int t) {
    if (t < 0 || t >= s.steps())
        throw ContractError("timestep " + std::to_string(t) + " outside [0, " + std::to_string(s.steps()) + ")");
}

} // namespace

double NoiseSchedule::alpha_bar(int t) const {
    if (t == -1)
        return 1.0;
    check_step(*this, t);
    return alpha_bars[static_cast<std::size_t>(t)];
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 1)
        throw DomainError("schedule needs T >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0))
        throw DomainError("schedule needs 0 < beta_start <= beta_end < 1");
    NoiseSchedule s;
    s.betas.resize(static_cast<std::size_t>(T));
    s.alpha_bars.resize(static_cast<std::size_t>(T));
    double prod = 1.0;
    for (int t = 0; t < T; ++t) {
        const double beta = T == 1 ? beta_start : beta_start + (beta_end - beta_start) * t / (T - 1);
        prod *= 1.0 - beta;
        s.betas[static_cast<std::size_t>(t)] = beta;
        s.alpha_bars[static_cast<std::size_t>(t)] = prod;
    }
    return s;
}

Eigen::MatrixXd forward_noise(const Eigen::MatrixXd& x0, std::span<const int> t, const Eigen::MatrixXd& eps,
                              const NoiseSchedule& s) {
    if (x0.rows() != eps.rows() || x0.cols() != eps.cols() || static_cast<Eigen::Index>(t.size()) != x0.cols())
        throw ContractError("forward_noise: shape mismatch");
    Eigen::MatrixXd out(x0.rows(), x0.cols());
    for (Eigen::Index c = 0; c < x0.cols(); ++c) {
        const double ab = s.alpha_bar(t[static_cast<std::size_t>(c)]);
        out.col(c) = std::sqrt(ab) * x0.col(c) + std::sqrt(1.0 - ab) * eps.col(c);
    }
    return out;
}

Eigen::MatrixXd forward_noise(const Eigen::MatrixXd& x0, int t, const Eigen::MatrixXd& eps, const NoiseSchedule& s) {
    const std::vector<int> ts(static_cast<std::size_t>(x0.cols()), t);
    return forward_noise(x0, ts, eps, s);
}

Eigen::MatrixXd timestep_embedding(std::span<const int> t, int dim) {
    const int half = dim / 2;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(t.size()));
    for (std::size_t c = 0; c < t.size(); ++c) {
        for (int i = 0; i < half; ++i) {
            const double freq = std::exp(-std::log(10000.0) * i / half);
            const double arg = t[c] * freq;
            out(i, static_cast<Eigen::Index>(c)) = std::sin(arg);
            out(half + i, static_cast<Eigen::Index>(c)) = std::cos(arg);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Denoiser

namespace {

// Learned log pixel-noise level, squashed into [ln 0.001, ln 0.25].
const double kLogNoiseMid = 0.5 * (std::log(0.001) + std::log(0.25));
const double kLogNoiseHalf = 0.5 * (std::log(0.25) - std::log(0.001));

double log_noise(double z) { return kLogNoiseMid + kLogNoiseHalf * std::tanh(z); }

} // namespace

DenoiserParams DenoiserParams::init(const DenoiserConfig& config, const NoiseSchedule& schedule,
                                    std::uint64_t seed) {
    if (config.layers < 1 || config.hidden < 1 || config.pixels() < 1 || config.time_dim < 2)
        throw ContractError("invalid denoiser configuration");
    if (schedule.steps() < 1)
        throw ContractError("denoiser needs a noise schedule");
    DenoiserParams p;
    p.config = config;
    p.alpha_bars = schedule.alpha_bars;
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    // The first layer is scaled per input block (pixels, time, condition) so
    // the short time and condition blocks are not swamped by the pixels.
    const int blocks[3] = {config.pixels(), config.time_dim, config.cond_dim};
    int fan_in = config.input_dim();
    for (int l = 0; l <= config.layers; ++l) {
        const int fan_out = l == config.layers ? config.pixels() : config.hidden;
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            double scale = std::sqrt(1.0 / fan_in);
            if (l == 0) {
                const int block = j < blocks[0] ? 0 : j < blocks[0] + blocks[1] ? 1 : 2;
                scale = std::sqrt(1.0 / (3.0 * blocks[block]));
            }
            for (Eigen::Index i = 0; i < w.rows(); ++i)
                w(i, j) = scale * normal(rng);
        }
        p.weights.push_back(std::move(w));
        p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
        fan_in = config.hidden;
    }
    p.gate_weight = Eigen::VectorXd::Zero(config.hidden);
    p.gate_bias = Eigen::VectorXd::Constant(1, std::atanh((std::log(0.03) - kLogNoiseMid) / kLogNoiseHalf));
    return p;
}

DenoiserParams DenoiserParams::zeros_like() const {
    DenoiserParams g;
    g.config = config;
    g.alpha_bars = alpha_bars;
    for (const auto& w : weights)
        g.weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : biases)
        g.biases.push_back(Eigen::VectorXd::Zero(b.size()));
    g.gate_weight = Eigen::VectorXd::Zero(gate_weight.size());
    g.gate_bias = Eigen::VectorXd::Zero(1);
    return g;
}

std::vector<Eigen::Map<Eigen::VectorXd>> DenoiserParams::trainable() {
    std::vector<Eigen::Map<Eigen::VectorXd>> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(flat(weights[l]));
        out.push_back(flat(biases[l]));
    }
    out.push_back(flat(gate_weight));
    out.push_back(flat(gate_bias));
    return out;
}

std::vector<Eigen::Map<const Eigen::VectorXd>> DenoiserParams::trainable() const {
    std::vector<Eigen::Map<const Eigen::VectorXd>> out;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        out.push_back(flat_c(weights[l]));
        out.push_back(flat_c(biases[l]));
    }
    out.push_back(flat_c(gate_weight));
    out.push_back(flat_c(gate_bias));
    return out;
}

Eigen::MatrixXd DenoiserParams::predict(const Eigen::MatrixXd& x_t, std::span<const int> t,
                                        const Eigen::MatrixXd& cond) const {
    Tape tape;
    return forward(x_t, t, cond, tape);
}

Eigen::MatrixXd DenoiserParams::forward(const Eigen::MatrixXd& x_t, std::span<const int> t,
                                        const Eigen::MatrixXd& cond, Tape& tape) const {
    const Eigen::Index B = x_t.cols();
    if (x_t.rows() != config.pixels() || cond.rows() != config.cond_dim || cond.cols() != B ||
        static_cast<Eigen::Index>(t.size()) != B)
        throw ContractError("denoiser input shape mismatch");

    tape.skip.resize(B);
    tape.scale.resize(B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const int tb = t[static_cast<std::size_t>(b)];
        if (tb < 0 || tb >= static_cast<int>(alpha_bars.size()))
            throw ContractError("timestep outside the denoiser schedule");
        const double ab = alpha_bars[static_cast<std::size_t>(tb)];
        tape.skip[b] = 1.0 / std::sqrt(1.0 - ab);
        tape.scale[b] = std::sqrt(ab) * tape.skip[b];
    }

    tape.input.resize(config.input_dim(), B);
    tape.input.topRows(config.pixels()) = x_t;
    tape.input.middleRows(config.pixels(), config.time_dim) = timestep_embedding(t, config.time_dim);
    tape.input.bottomRows(config.cond_dim) = cond;

    tape.pre.clear();
    tape.post.clear();
    const Eigen::MatrixXd* h = &tape.input;
    for (int l = 0; l < config.layers; ++l) {
        Eigen::MatrixXd a = weights[static_cast<std::size_t>(l)] * *h;
        a.colwise() += biases[static_cast<std::size_t>(l)];
        tape.post.push_back(silu(a));
        tape.pre.push_back(std::move(a));
        h = &tape.post.back();
    }
    tape.gate = (gate_weight.transpose() * *h).array() + gate_bias[0];
    tape.head = weights.back() * *h;
    tape.head.colwise() += biases.back();
    return head_output(x_t, tape);
}


// The output is g * x_t + sqrt(abar) * F, where g is the optimal linear
// denoiser gain for a pixel noise level exp(rho) learned per sample.
Eigen::MatrixXd DenoiserParams::head_output(const Eigen::MatrixXd& x_t, Tape& tape) const {
    const Eigen::Index B = x_t.cols();
    tape.g.resize(B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const double s = 1.0 / tape.skip[b];
        const double c = tape.scale[b] * s;
        const double e = std::exp(2.0 * log_noise(tape.gate[b]));
        tape.g[b] = s / (c * c * e + s * s);
    }
    return x_t * tape.g.asDiagonal() + tape.head * (tape.scale.cwiseQuotient(tape.skip)).asDiagonal();
}

void DenoiserParams::head_backward(const Eigen::MatrixXd& x_t, const Tape& tape, const Eigen::MatrixXd& d_out,
                                   Eigen::MatrixXd& d_head, Eigen::RowVectorXd& d_gate) const {
    const Eigen::RowVectorXd c = tape.scale.cwiseQuotient(tape.skip);
    d_head = d_out * c.asDiagonal();
    const Eigen::RowVectorXd d_g = (d_out.array() * x_t.array()).colwise().sum();
    d_gate.resize(d_g.size());
    for (Eigen::Index b = 0; b < d_g.size(); ++b) {
        const double s = 1.0 / tape.skip[b];
        const double th = std::tanh(tape.gate[b]);
        const double e = std::exp(2.0 * log_noise(tape.gate[b]));
        d_gate[b] = d_g[b] * (-2.0 * tape.g[b] * tape.g[b] * c[b] * c[b] * e / s) * kLogNoiseHalf * (1.0 - th * th);
    }
}

void DenoiserParams::backward(const Tape& tape, const Eigen::MatrixXd& d_out, DenoiserParams* grads,
                              Eigen::MatrixXd* d_cond) const {
    const int L = config.layers;
    const Eigen::MatrixXd& h_last = tape.post.back();
    const auto x_t = tape.input.topRows(config.pixels());

    Eigen::MatrixXd d_head;
    Eigen::RowVectorXd d_gate;
    head_backward(x_t, tape, d_out, d_head, d_gate);
    if (grads) {
        grads->weights.back().noalias() += d_head * h_last.transpose();
        grads->biases.back() += d_head.rowwise().sum();
        grads->gate_weight.noalias() += h_last * d_gate.transpose();
        grads->gate_bias[0] += d_gate.sum();
    }
    Eigen::MatrixXd d_h = weights.back().transpose() * d_head;
    d_h.noalias() += gate_weight * d_gate;

    for (int l = L - 1; l >= 0; --l) {
        const auto ul = static_cast<std::size_t>(l);
        const Eigen::MatrixXd d_a = (d_h.array() * silu_grad(tape.pre[ul]).array()).matrix();
        const Eigen::MatrixXd& h_prev = l == 0 ? tape.input : tape.post[ul - 1];
        if (grads) {
            grads->weights[ul].noalias() += d_a * h_prev.transpose();
            grads->biases[ul] += d_a.rowwise().sum();
        }
        if (l > 0) {
            d_h = weights[ul].transpose() * d_a;
        } else if (d_cond) {
            *d_cond = weights[0].rightCols(config.cond_dim).transpose() * d_a;
        }
    }
}

// ---------------------------------------------------------------------------
// Prompts

PromptTable PromptTable::init(std::vector<std::string> vocabulary, int dim, std::uint64_t seed) {
    PromptTable t;
    t.vocabulary = std::move(vocabulary);
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    t.embeddings.resize(static_cast<Eigen::Index>(t.vocabulary.size()), dim);
    for (Eigen::Index r = 0; r < t.embeddings.rows(); ++r)
        for (Eigen::Index c = 0; c < dim; ++c)
            t.embeddings(r, c) = normal(rng);
    t.null_embedding = Eigen::VectorXd::Zero(dim);
    return t;
}

int PromptTable::index_of(const std::string& word) const {
    const auto it = std::find(vocabulary.begin(), vocabulary.end(), word);
    if (it == vocabulary.end())
        throw DomainError("word '" + word + "' is not in the prompt vocabulary");
    return static_cast<int>(it - vocabulary.begin());
}

Eigen::MatrixXd PromptTable::lookup(std::span<const std::string> words) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(words.size()), embeddings.cols());
    for (std::size_t i = 0; i < words.size(); ++i)
        out.row(static_cast<Eigen::Index>(i)) = embeddings.row(index_of(words[i]));
    return out;
}

PromptContext PromptContext::from_words(const PromptTable& table, std::span<const std::string> words) {
    return {table.lookup(words)};
}

PromptContext PromptContext::then(const PromptContext& other) const {
    if (is_null())
        return other;
    if (other.is_null())
        return *this;
    if (other.embeddings.cols() != embeddings.cols())
        throw ContractError("prompt embedding widths differ");
    PromptContext out;
    out.embeddings.resize(embeddings.rows() + other.embeddings.rows(), embeddings.cols());
    out.embeddings << embeddings, other.embeddings;
    return out;
}

Eigen::VectorXd PromptContext::pooled(const PromptTable& table) const {
    if (is_null())
        return table.null_embedding;
    if (embeddings.cols() != table.null_embedding.size())
        throw ContractError("prompt embedding width does not match the model");
    return embeddings.colwise().mean().transpose();
}

// ---------------------------------------------------------------------------
// Model

std::uint64_t DiffusionModel::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](double d) {
        auto bits = std::bit_cast<std::uint64_t>(d);
        for (int i = 0; i < 8; ++i) {
            h ^= (bits >> (8 * i)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& m : denoiser.trainable())
        for (Eigen::Index i = 0; i < m.size(); ++i)
            mix(m[i]);
    for (Eigen::Index i = 0; i < prompts.embeddings.size(); ++i)
        mix(prompts.embeddings.data()[i]);
    for (Eigen::Index i = 0; i < prompts.null_embedding.size(); ++i)
        mix(prompts.null_embedding[i]);
    return h;
}

Eigen::MatrixXd DiffusionModel::predict(const Eigen::MatrixXd& x_t, int t, const Eigen::MatrixXd& cond) const {
    const std::vector<int> ts(static_cast<std::size_t>(x_t.cols()), t);
    return denoiser.predict(x_t, ts, cond);
}

void save_model(const std::filesystem::path& path, const DiffusionModel& model) {
    io::Archive a;
    a.kind = "diffusion_model";
    const auto& c = model.denoiser.config;
    a.meta = {{"width", c.width},   {"height", c.height},  {"time_dim", c.time_dim},
              {"cond_dim", c.cond_dim}, {"hidden", c.hidden}, {"layers", c.layers},
              {"vocabulary", model.prompts.vocabulary}};
    a.add("schedule.betas", Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
                                model.schedule.betas.data(), model.schedule.steps())));
    for (std::size_t l = 0; l < model.denoiser.weights.size(); ++l) {
        a.add("denoiser.w" + std::to_string(l), model.denoiser.weights[l]);
        a.add("denoiser.b" + std::to_string(l), model.denoiser.biases[l]);
    }
    a.add("denoiser.gate_w", model.denoiser.gate_weight);
    a.add("denoiser.gate_b", model.denoiser.gate_bias);
    a.add("prompts.embeddings", model.prompts.embeddings);
    a.add("prompts.null", model.prompts.null_embedding);
    io::write_archive(path, a);
}

DiffusionModel load_model(const std::filesystem::path& path) {
    const io::Archive a = io::read_archive(path);
    io::expect_kind(a, "diffusion_model");
    DiffusionModel m;
    const Eigen::VectorXd betas = a.vector("schedule.betas");
    double prod = 1.0;
    for (Eigen::Index t = 0; t < betas.size(); ++t) {
        prod *= 1.0 - betas[t];
        m.schedule.betas.push_back(betas[t]);
        m.schedule.alpha_bars.push_back(prod);
    }
    auto& c = m.denoiser.config;
    c.width = a.meta.at("width");
    c.height = a.meta.at("height");
    c.time_dim = a.meta.at("time_dim");
    c.cond_dim = a.meta.at("cond_dim");
    c.hidden = a.meta.at("hidden");
    c.layers = a.meta.at("layers");
    for (int l = 0; l <= c.layers; ++l) {
        m.denoiser.weights.push_back(a.matrix("denoiser.w" + std::to_string(l)));
        m.denoiser.biases.push_back(a.vector("denoiser.b" + std::to_string(l)));
    }
    m.denoiser.gate_weight = a.vector("denoiser.gate_w");
    m.denoiser.gate_bias = a.vector("denoiser.gate_b");
    m.denoiser.alpha_bars = m.schedule.alpha_bars;
    m.prompts.vocabulary = a.meta.at("vocabulary").get<std::vector<std::string>>();
    m.prompts.embeddings = a.matrix("prompts.embeddings");
    m.prompts.null_embedding = a.vector("prompts.null");
    return m;
}

NoisePredictor predictor_of(const DiffusionModel& model) {
    return [&model](const Eigen::MatrixXd& x, int t, const Eigen::MatrixXd& cond) { return model.predict(x, t, cond); };
}

// ---------------------------------------------------------------------------
// Loss and sampling

NoiseDraw draw_noise(Eigen::Index pixels, Eigen::Index batch, int T, Rng& rng) {
    NoiseDraw d;
    std::uniform_int_distribution<int> step(0, T - 1);
    d.t.resize(static_cast<std::size_t>(batch));
    for (auto& t : d.t)
        t = step(rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    d.eps.resize(pixels, batch);
    for (Eigen::Index c = 0; c < batch; ++c)
        for (Eigen::Index r = 0; r < pixels; ++r)
            d.eps(r, c) = normal(rng);
    return d;
}

double eps_loss(const NoisePredictor& predict, const Eigen::MatrixXd& x0, const Eigen::MatrixXd& cond,
                const NoiseSchedule& s, Rng& rng) {
    if (x0.cols() == 0)
        throw ContractError("eps_loss: empty batch");
    const NoiseDraw d = draw_noise(x0.rows(), x0.cols(), s.steps(), rng);
    const Eigen::MatrixXd x_t = forward_noise(x0, d.t, d.eps, s);
    double total = 0.0;
    // Columns may carry different timesteps; the predictor API takes one t.
    for (Eigen::Index c = 0; c < x0.cols(); ++c) {
        const Eigen::MatrixXd pred = predict(x_t.col(c), d.t[static_cast<std::size_t>(c)], cond.col(c));
        total += (d.eps.col(c) - pred).squaredNorm();
    }
    return total / static_cast<double>(x0.cols());
}

Eigen::MatrixXd cfg_predict(const NoisePredictor& predict, const Eigen::MatrixXd& x_t, int t,
                            const Eigen::MatrixXd& cond, const Eigen::MatrixXd& null_cond, double w) {
    if (!(w >= 0.0))
        throw DomainError("guidance scale must be >= 0");
    const Eigen::Index B = x_t.cols();
    Eigen::MatrixXd x2(x_t.rows(), 2 * B);
    x2 << x_t, x_t;
    Eigen::MatrixXd c2(cond.rows(), 2 * B);
    c2 << null_cond, cond;
    const Eigen::MatrixXd eps = predict(x2, t, c2);
    return (1.0 - w) * eps.leftCols(B) + w * eps.rightCols(B);
}

Eigen::MatrixXd ddim_step(const Eigen::MatrixXd& x_t, const Eigen::MatrixXd& eps_hat, int t, int t_prev,
                          const NoiseSchedule& s) {
    check_step(s, t);
    if (t_prev < -1 || t_prev > t)
        throw ContractError("ddim_step needs -1 <= t_prev <= t");
    if (t_prev == t)
        return x_t;
    const double ab = s.alpha_bar(t);
    const double ab_prev = s.alpha_bar(t_prev);
    const Eigen::MatrixXd x0_hat = (x_t - std::sqrt(1.0 - ab) * eps_hat) / std::sqrt(ab);
    return std::sqrt(ab_prev) * x0_hat + std::sqrt(1.0 - ab_prev) * eps_hat;
}

std::vector<int> ddim_timesteps(int T, int steps) {
    if (steps < 1 || steps > T)
        throw ContractError("DDIM needs 1 <= steps <= T");
    std::vector<int> ts(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        const double frac = steps == 1 ? 1.0 : static_cast<double>(steps - 1 - i) / (steps - 1);
        ts[static_cast<std::size_t>(i)] = static_cast<int>(std::lround(frac * (T - 1)));
    }
    return ts;
}

Eigen::MatrixXd ddim_sample(const NoisePredictor& predict, const NoiseSchedule& s, Eigen::MatrixXd x,
                            const Eigen::MatrixXd& cond_first, const Eigen::MatrixXd& cond_second,
                            const Eigen::MatrixXd& null_cond, const SamplerConfig& cfg) {
    if (cfg.switch_step < 0 || cfg.switch_step > cfg.steps)
        throw ContractError("switch_step must lie in [0, steps]");
    const std::vector<int> ts = ddim_timesteps(s.steps(), cfg.steps);
    for (std::size_t i = 0; i < ts.size(); ++i) {
        const int t = ts[i];
        const int t_prev = i + 1 < ts.size() ? ts[i + 1] : -1;
        const Eigen::MatrixXd& cond = static_cast<int>(i) < cfg.switch_step ? cond_first : cond_second;
        Eigen::MatrixXd eps = cfg_predict(predict, x, t, cond, null_cond, cfg.guidance);
        if (cfg.clip_x0) {
            const double ab = s.alpha_bar(t);
            const Eigen::MatrixXd x0 =
                ((x - std::sqrt(1.0 - ab) * eps) / std::sqrt(ab)).cwiseMax(0.0).cwiseMin(1.0);
            eps = (x - std::sqrt(ab) * x0) / std::sqrt(1.0 - ab);
        }
        x = ddim_step(x, eps, t, t_prev, s);
    }
    return x;
}

namespace {

Eigen::MatrixXd initial_noise(const DenoiserConfig& c, int count, std::uint64_t seed) {
    if (count < 1)
        throw ContractError("sample count must be positive");
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd x(c.pixels(), count);
    for (Eigen::Index col = 0; col < x.cols(); ++col)
        for (Eigen::Index r = 0; r < x.rows(); ++r)
            x(r, col) = normal(rng);
    return x;
}

Eigen::MatrixXd broadcast(const Eigen::VectorXd& v, int count) { return v.replicate(1, count); }

} // namespace

std::vector<Image> sample_partial(const DiffusionModel& model, const PromptContext& first,
                                  const PromptContext& second, int count, const SamplerConfig& cfg,
                                  std::uint64_t seed) {
    if (cfg.steps > model.schedule.steps())
        throw ContractError("sampler steps exceed the schedule length");
    const auto& c = model.denoiser.config;
    Eigen::MatrixXd x = ddim_sample(predictor_of(model), model.schedule, initial_noise(c, count, seed),
                                    broadcast(first.pooled(model.prompts), count),
                                    broadcast(second.pooled(model.prompts), count),
                                    broadcast(model.prompts.null_embedding, count), cfg);
    x = x.cwiseMax(0.0).cwiseMin(1.0);
    return unstack_columns(x, c.width, c.height);
}

std::vector<Image> sample(const DiffusionModel& model, const PromptContext& ctx, int count, int steps,
                          double guidance, std::uint64_t seed) {
    return sample_partial(model, ctx, ctx, count, SamplerConfig{steps, 0, guidance}, seed);
}

} // namespace sunlit::diffusion
