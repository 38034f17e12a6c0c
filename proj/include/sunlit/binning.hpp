// Scalar quantization with residual encoding of solar altitude.
//
// An altitude a in [b_0, b_K] maps to (Q(a) + R(a)) / K where Q is the index of
// the bin containing a and R the normalized offset inside that bin. Coarse bin
// identity survives in the integer part while intra-bin variation is kept in
// the fractional part, so narrow twilight bins get as much of [0, 1] as wide
// daylight ones.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sunlit/sample.hpp"

namespace sunlit::binning {

/// Strictly increasing, finite bin edges b_0 < ... < b_K with K >= 1.
class BinScheme {
public:
    explicit BinScheme(std::vector<double> edges);

    std::span<const double> edges() const noexcept { return edges_; }
    int bins() const noexcept { return static_cast<int>(edges_.size()) - 1; }
    double lower() const noexcept { return edges_.front(); }
    double upper() const noexcept { return edges_.back(); }
    double edge(int i) const { return edges_.at(static_cast<std::size_t>(i)); }

    /// "[b_i, b_{i+1})", closed on the right for the last bin.
    std::string interval(int bin) const;

    /// JSON array of numbers.
    std::string to_json() const;
    static BinScheme from_json(std::string_view json);

    /// Parses "a_min,-6,-4,-2,a_max"; the literals a_min/a_max resolve to the
    /// supplied dataset extremes.
    static BinScheme parse(std::string_view spec, std::optional<double> a_min = std::nullopt,
                           std::optional<double> a_max = std::nullopt);

    friend bool operator==(const BinScheme&, const BinScheme&) = default;

private:
    std::vector<double> edges_;
};

struct NormalizedAltitude {
    int bin_index = 0;
    double residual = 0.0;
    double value = 0.0;
};

/// Out-of-domain handling at inference time. Strict is the default.
enum class OutOfRange { Error, Clamp };

int quantize(double altitude_deg, const BinScheme& scheme, OutOfRange policy = OutOfRange::Error);
double residual(double altitude_deg, const BinScheme& scheme, OutOfRange policy = OutOfRange::Error);
NormalizedAltitude normalize(double altitude_deg, const BinScheme& scheme,
                             OutOfRange policy = OutOfRange::Error);

/// Piecewise-linear inverse of normalize on [0, 1].
double denormalize(double value, const BinScheme& scheme);

/// [a_min, -6, -4, -2, a_max]
BinScheme default_scheme(double a_min, double a_max);

/// 2 degree steps from -12 through +6, flanked by the data extremes.
/// Requires a_min < -12 and a_max > 6.
BinScheme recommended_scheme(double a_min, double a_max);

/// Draws `target_per_bin` indices per bin uniformly with replacement from the
/// bin's members and shuffles the result. Every bin must be occupied.
/// Without an explicit target the largest bin count is used.
std::vector<std::size_t> resample_balanced(std::span<const double> altitudes, const BinScheme& scheme,
                                           std::optional<std::size_t> target_per_bin, std::uint64_t seed);

std::vector<std::size_t> resample_balanced(std::span<const GeoSample> samples, const BinScheme& scheme,
                                           std::optional<std::size_t> target_per_bin, std::uint64_t seed);

/// Per-bin member count.
std::vector<std::size_t> histogram(std::span<const double> altitudes, const BinScheme& scheme);

} // namespace sunlit::binning
