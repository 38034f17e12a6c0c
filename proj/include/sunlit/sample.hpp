#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sunlit {

/// Calendar timestamp, proleptic Gregorian, UTC, seconds resolution.
struct UtcTime {
    int year = 2000;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;

    /// Accepts `YYYY-MM-DDTHH:MM:SS` followed by `Z`, `+00:00` or nothing.
    /// A fractional-seconds part is accepted and truncated.
    static UtcTime parse(std::string_view iso);
    std::string to_iso8601() const;

    /// Seconds since 1970-01-01T00:00:00Z.
    long long unix_seconds() const;
    static UtcTime from_unix_seconds(long long s);

    friend bool operator==(const UtcTime&, const UtcTime&) = default;
};

/// One capture record: where and when, free-form tags, and the derived altitude.
struct GeoSample {
    double latitude_deg = 0.0;
    double longitude_deg = 0.0;
    UtcTime utc;
    std::vector<std::string> tags; ///< lowercase
    std::optional<double> altitude_deg;
    std::optional<std::string> image;

    bool has_tag(std::string_view tag) const;
};

std::string to_lower(std::string_view s);

} // namespace sunlit
