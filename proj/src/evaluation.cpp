#include "sunlit/evaluation.hpp"

#include <cstdio>
#include <sstream>

#include "sunlit/error.hpp"
#include "sunlit/metrics.hpp"
#include "sunlit/rng.hpp"

namespace sunlit::metrics {

namespace {

std::vector<Image> generate(const diffusion::DiffusionModel& model, const encoder::TokenSet& structure,
                            const encoder::ContextNet& net, double normalized, int count,
                            const diffusion::SamplerConfig& sampler, std::uint64_t seed) {
    const auto first = diffusion::PromptContext::from_tokens(encoder::context_tokens_normalized(normalized, net));
    const auto second = diffusion::PromptContext::from_tokens(structure);
    return diffusion::sample_partial(model, first, second, count, sampler, seed);
}

std::string fmt(double v, const char* spec = "%.4f") {
    char buf[32];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

} // namespace

double mean_luminance(std::span<const Image> images) {
    if (images.empty())
        throw ContractError("mean_luminance: no images");
    double s = 0.0;
    for (const auto& im : images)
        s += im.mean();
    return s / static_cast<double>(images.size());
}

double mean_noise_sigma(std::span<const Image> images) {
    if (images.empty())
        throw ContractError("mean_noise_sigma: no images");
    double s = 0.0;
    for (const auto& im : images)
        s += estimate_noise_sigma(im);
    return s / static_cast<double>(images.size());
}

std::vector<double> luminance_sweep(const diffusion::DiffusionModel& model, const encoder::TokenSet& structure,
                                    const encoder::ContextNet& net, std::span<const double> normalized, int count,
                                    const diffusion::SamplerConfig& sampler, std::uint64_t seed) {
    std::vector<double> out;
    for (double v : normalized)
        out.push_back(mean_luminance(generate(model, structure, net, v, count, sampler, seed)));
    return out;
}

EvalReport eval_sweep(const diffusion::DiffusionModel& model, const encoder::TokenSet& structure,
                      const encoder::ContextNet& net, const binning::BinScheme& scheme, const EvalOptions& opts) {
    if (opts.normalized.empty())
        throw ContractError("eval_sweep: no altitude conditions");
    if (opts.per_condition < 2)
        throw ContractError("eval_sweep: need at least two images per condition");
    EvalReport report;
    std::vector<double> sig, gt_sig;
    for (std::size_t i = 0; i < opts.normalized.size(); ++i) {
        EvalRow row;
        row.normalized = opts.normalized[i];
        row.altitude_deg = binning::denormalize(row.normalized, scheme);

        auto images = generate(model, structure, net, row.normalized, opts.per_condition, opts.sampler, opts.seed);
        std::vector<Image> gt;
        const std::uint64_t gt_seed = derive_seed(opts.seed, i + 1);
        for (int j = 0; j < opts.per_condition; ++j)
            gt.push_back(dataprep::generate_scene(row.altitude_deg, opts.scene,
                                                  derive_seed(gt_seed, static_cast<std::uint64_t>(j)))
                             .image);

        row.mean_luminance = mean_luminance(images);
        row.mean_sigma = mean_noise_sigma(images);
        row.gt_luminance = mean_luminance(gt);
        row.gt_sigma = mean_noise_sigma(gt);
        row.frechet = frechet_gaussian(fit_image_stats(images), fit_image_stats(gt));
        sig.push_back(row.mean_sigma);
        gt_sig.push_back(row.gt_sigma);
        report.rows.push_back(row);
        if (opts.keep_images)
            report.generated.push_back(std::move(images));
    }
    report.delta_sigma = delta_sigma(sig);
    report.gt_delta_sigma = delta_sigma(gt_sig);
    report.config = {{"normalized", opts.normalized},
                     {"per_condition", opts.per_condition},
                     {"steps", opts.sampler.steps},
                     {"switch_step", opts.sampler.switch_step},
                     {"guidance", opts.sampler.guidance},
                     {"seed", opts.seed},
                     {"bins", nlohmann::json::parse(scheme.to_json())},
                     {"noise_estimator", "immerkaer"},
                     {"feature_proxy", "handcrafted 8-d features; not comparable to Inception FID"}};
    return report;
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& r : rows)
        rows_json.push_back({{"normalized", r.normalized},
                             {"altitude_deg", r.altitude_deg},
                             {"mean_luminance", r.mean_luminance},
                             {"mean_sigma", r.mean_sigma},
                             {"gt_luminance", r.gt_luminance},
                             {"gt_sigma", r.gt_sigma},
                             {"frechet", r.frechet}});
    return {{"rows", rows_json}, {"delta_sigma", delta_sigma}, {"gt_delta_sigma", gt_delta_sigma}, {"config", config}};
}

std::string EvalReport::table() const {
    std::ostringstream out;
    const auto cell = [&](const std::string& s) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%14s", s.c_str());
        out << buf;
    };
    const auto label = [&](const std::string& s) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%-18s", s.c_str());
        out << buf;
    };
    label("a_hat");
    for (const auto& r : rows)
        cell(fmt(r.normalized, "%.2f"));
    out << '\n';
    label("altitude (deg)");
    for (const auto& r : rows)
        cell(fmt(r.altitude_deg, "%.2f"));
    out << '\n';
    label("proxy FID");
    for (const auto& r : rows)
        cell(fmt(r.frechet, "%.3f"));
    out << '\n';
    label("luminance");
    for (const auto& r : rows)
        cell(fmt(r.mean_luminance));
    out << '\n';
    label("luminance (GT)");
    for (const auto& r : rows)
        cell(fmt(r.gt_luminance));
    out << '\n';
    label("sigma");
    for (const auto& r : rows)
        cell(fmt(r.mean_sigma));
    out << '\n';
    label("sigma (GT)");
    for (const auto& r : rows)
        cell(fmt(r.gt_sigma));
    out << '\n';
    label("delta sigma");
    cell("");
    for (double d : delta_sigma)
        cell(fmt(d, "%+.4f"));
    out << '\n';
    label("delta sigma (GT)");
    cell("");
    for (double d : gt_delta_sigma)
        cell(fmt(d, "%+.4f"));
    out << '\n';
    return out.str();
}

} // namespace sunlit::metrics
