#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "sunlit/dataprep.hpp"
#include "sunlit/diffusion.hpp"

namespace sunlit::test {

template <typename Params>
std::vector<double> flatten(const Params& p) {
    std::vector<double> out;
    for (const auto& m : p.trainable())
        out.insert(out.end(), m.data(), m.data() + m.size());
    return out;
}

template <typename Params>
void assign(Params& p, std::span<const double> values) {
    std::size_t k = 0;
    for (auto m : p.trainable())
        for (Eigen::Index i = 0; i < m.size(); ++i)
            m[i] = values[k++];
}

/// 8x8 model with a small trunk, for gradient and sampler checks.
inline diffusion::DiffusionModel tiny_model(std::uint64_t seed, int T = 1000) {
    diffusion::DiffusionModel m;
    m.schedule = diffusion::make_schedule(T, 1e-4, 0.02);
    diffusion::DenoiserConfig c;
    c.width = 8;
    c.height = 8;
    c.hidden = 16;
    c.layers = 2;
    c.time_dim = 8;
    c.cond_dim = 6;
    m.denoiser = diffusion::DenoiserParams::init(c, m.schedule, seed);
    m.prompts = diffusion::PromptTable::init({"scene", "night", "day"}, c.cond_dim, seed + 1);
    return m;
}

inline dataprep::SceneConfig tiny_scene() {
    dataprep::SceneConfig s;
    s.width = 8;
    s.height = 8;
    return s;
}

inline Eigen::MatrixXd tiny_batch(int count, std::uint64_t seed) {
    const auto cfg = tiny_scene();
    Eigen::MatrixXd x(64, count);
    for (int i = 0; i < count; ++i)
        x.col(i) = dataprep::generate_scene(-10.0 + 15.0 * i, cfg, seed + static_cast<std::uint64_t>(i)).image.pixels();
    return x;
}

} // namespace sunlit::test
