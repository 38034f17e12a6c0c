#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sunlit/binning.hpp"
#include "sunlit/image.hpp"
#include "sunlit/sample.hpp"

namespace sunlit::dataprep {

// ---------------------------------------------------------------------------
// Metadata

struct ParseIssue {
    std::size_t line = 0; ///< 1-based
    std::string message;
};

struct IngestResult {
    std::vector<GeoSample> samples;
    std::vector<ParseIssue> issues;
};

/// JSONL with keys lat, lon, utc (ISO-8601) and optional tags, altitude_deg,
/// image. Blank lines are ignored. Strict mode throws ParseError on the first
/// malformed line; lenient mode records it and skips the line.
IngestResult ingest_metadata(std::istream& in, bool strict);
IngestResult ingest_metadata(const std::filesystem::path& path, bool strict);

/// One output line; altitude and normalized value are printed with 4 decimals.
std::string to_jsonl(const GeoSample& s, const std::optional<binning::NormalizedAltitude>& norm = std::nullopt);

/// Drops every sample tagged "rain" (case-insensitive), keeping order.
std::vector<GeoSample> filter_rain(const std::vector<GeoSample>& samples);

// ---------------------------------------------------------------------------
// Synthetic scenes

struct SceneConfig {
    int width = 32;
    int height = 32;
    double day_luminance = 0.8;
    double night_luminance = 0.05;
    double twilight_slope = 1.0 / 3.0; ///< per degree
    double sigma_min = 0.005;
    double sigma_max = 0.06;
    double black_level = 0.1; ///< sensor pedestal added before noise
    std::uint64_t geometry_seed = 0;
    int layout_count = 4; ///< distinct viewpoints; 0 gives every seed its own layout

    void validate() const;
};

double logistic(double x);

/// L_night + (L_day - L_night) * logistic(k a)
double brightness_model(double altitude_deg, const SceneConfig& cfg);

/// sigma_min + (sigma_max - sigma_min) * (1 - logistic(k a))
double noise_model(double altitude_deg, const SceneConfig& cfg);

/// Noise-free reflectance layout in [0, 1]: sky gradient, dark horizon
/// band, ground, and 1-3 soft-edged buildings chosen by `seed`.
Image scene_layout(const SceneConfig& cfg, std::uint64_t seed);

struct Scene {
    Image image;
    double altitude_deg = 0.0;
    double luminance = 0.0;
    double sigma = 0.0;
};

/// black_level + L(a) * layout + N(0, sigma(a)^2), clamped to [0, 1]. The
/// layout is scene_layout(cfg, seed mod layout_count).
Scene generate_scene(double altitude_deg, const SceneConfig& cfg, std::uint64_t seed);

struct CorpusItem {
    Image image;
    double altitude_deg = 0.0;
};

/// `per_bin` scenes per bin with altitudes uniform inside each bin interval.
/// Item i uses seed derive_seed(seed, i).
std::vector<CorpusItem> build_corpus(const binning::BinScheme& scheme, int per_bin, const SceneConfig& cfg,
                                     std::uint64_t seed);

/// CSV with columns path, altitude_deg, normalized, bin.
void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& image_paths,
                    const std::vector<CorpusItem>& corpus, const binning::BinScheme& scheme);

} // namespace sunlit::dataprep
