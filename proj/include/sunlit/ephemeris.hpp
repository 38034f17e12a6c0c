// Solar ephemeris
// Low-precision solar position (NOAA / Meeus series), geometric altitude.
#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "sunlit/sample.hpp"

namespace sunlit::ephemeris {

/// TT - UT, treated as constant over the validity window [s].
inline constexpr double kDeltaTSeconds = 69.0;

/// J2000.0 epoch as a Julian day.
inline constexpr double kJ2000 = 2451545.0;

/// First instant outside the validity window is 2100-01-01T00:00:00Z.
inline constexpr int kFirstValidYear = 1950;
inline constexpr int kLastValidYear = 2099;

struct GeoTime {
    double latitude_deg = 0.0;
    double longitude_deg = 0.0;
    UtcTime utc;
};

struct SolarCoordinates {
    double declination_deg = 0.0;
    double equation_of_time_minutes = 0.0;
};

struct SolarPosition {
    double altitude_deg = 0.0; ///< geometric, not refracted
    double declination_deg = 0.0;
    double hour_angle_deg = 0.0; ///< in [-180, 180), negative before solar noon
    double julian_day = 0.0;     ///< UT based
};

/// Throws RangeError if the timestamp lies outside [1950-01-01, 2100-01-01).
void check_window(const UtcTime& utc);

/// Throws RangeError on out-of-range coordinates or timestamp.
void validate(const GeoTime& gt);

/// Continuous Julian day of a UTC timestamp (leap seconds ignored).
double julian_day(const UtcTime& utc);

/// Declination and equation of time for a UT Julian day.
SolarCoordinates solar_coordinates(double jd);

SolarPosition solar_altitude(const GeoTime& gt);

/// Altitude recomputed from stored declination and hour angle.
double altitude_from_components(double latitude_deg, const SolarPosition& pos);

/// Approximate atmospheric refraction [deg] to add to a geometric altitude
/// (standard-atmosphere fit used by the NOAA calculator).
double refraction_correction(double geometric_altitude_deg);

struct LabelOptions {
    bool strict = false;
    bool refraction = false;
};

struct RecordError {
    std::size_t index = 0;
    std::string message;
};

struct LabelResult {
    std::vector<GeoSample> samples;
    std::vector<RecordError> errors;
};

/// Fills altitude_deg for every record. Order preserving; in lenient mode a
/// bad record is reported by index and skipped, in strict mode it throws.
LabelResult label_batch(const std::vector<GeoSample>& records, const LabelOptions& opts = {});

} // namespace sunlit::ephemeris
