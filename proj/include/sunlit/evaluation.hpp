// Altitude sweep evaluation: generated vs ground-truth synthetic sets.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "sunlit/binning.hpp"
#include "sunlit/dataprep.hpp"
#include "sunlit/diffusion.hpp"
#include "sunlit/encoder.hpp"

namespace sunlit::metrics {

inline const std::vector<double> kDefaultSweep{0.0, 0.33, 0.66, 1.0};

struct EvalOptions {
    std::vector<double> normalized = kDefaultSweep;
    int per_condition = 64;
    diffusion::SamplerConfig sampler;
    dataprep::SceneConfig scene; ///< ground-truth generator
    std::uint64_t seed = 0;
    bool keep_images = false;
};

struct EvalRow {
    double normalized = 0.0;
    double altitude_deg = 0.0;
    double mean_luminance = 0.0;
    double mean_sigma = 0.0;
    double gt_luminance = 0.0;
    double gt_sigma = 0.0;
    double frechet = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    std::vector<double> delta_sigma;
    std::vector<double> gt_delta_sigma;
    std::vector<std::vector<Image>> generated; ///< filled when keep_images is set
    nlohmann::json config;

    nlohmann::json to_json() const;
    /// Aligned columns: one header row of conditions, then Delta-sigma rows.
    std::string table() const;
};

/// Sampling uses D*(a) for the first `switch_step` steps and S* afterwards.
/// All conditions share the sampling seed so rows are paired; ground-truth
/// set i uses derive_seed(seed, i + 1).
EvalReport eval_sweep(const diffusion::DiffusionModel& model, const encoder::TokenSet& structure,
                      const encoder::ContextNet& net, const binning::BinScheme& scheme, const EvalOptions& opts);

/// Mean luminance of D*(a)-then-S* samples at each normalized altitude.
std::vector<double> luminance_sweep(const diffusion::DiffusionModel& model, const encoder::TokenSet& structure,
                                    const encoder::ContextNet& net, std::span<const double> normalized, int count,
                                    const diffusion::SamplerConfig& sampler, std::uint64_t seed);

double mean_luminance(std::span<const Image> images);
double mean_noise_sigma(std::span<const Image> images);

} // namespace sunlit::metrics
