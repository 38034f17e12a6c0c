#include "sunlit/ephemeris.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sunlit/error.hpp"

namespace sunlit::ephemeris {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double wrap_degrees(double x) {
    x = std::fmod(x, 360.0);
    return x < 0.0 ? x + 360.0 : x;
}

} // namespace

void check_window(const UtcTime& utc) {
    if (utc.year < kFirstValidYear || utc.year > kLastValidYear)
        throw RangeError("timestamp " + utc.to_iso8601() + " outside validity window [1950-01-01, 2100-01-01)");
}

void validate(const GeoTime& gt) {
    if (!std::isfinite(gt.latitude_deg) || gt.latitude_deg < -90.0 || gt.latitude_deg > 90.0)
        throw RangeError("latitude " + std::to_string(gt.latitude_deg) + " outside [-90, 90]");
    if (!std::isfinite(gt.longitude_deg) || gt.longitude_deg < -180.0 || gt.longitude_deg > 180.0)
        throw RangeError("longitude " + std::to_string(gt.longitude_deg) + " outside [-180, 180]");
    check_window(gt.utc);
}

double julian_day(const UtcTime& utc) {
    check_window(utc);
    // 1970-01-01T00:00:00Z is JD 2440587.5.
    const long long s = utc.unix_seconds();
    const long long days = s >= 0 ? s / 86400 : -((-s + 86399) / 86400);
    const long long secs = s - days * 86400;
    return 2440587.5 + static_cast<double>(days) + static_cast<double>(secs) / 86400.0;
}

SolarCoordinates solar_coordinates(double jd) {
    // 1949-12-31T12:00Z .. 2100-01-01T00:00Z, with half a day of slack for callers
    // passing a noon-centred day.
    if (!std::isfinite(jd) || jd < 2433282.0 || jd > 2488070.0)
        throw RangeError("julian day " + std::to_string(jd) + " outside validity window");

    const double T = (jd + kDeltaTSeconds / 86400.0 - kJ2000) / 36525.0;

    const double mean_long = wrap_degrees(280.46646 + T * (36000.76983 + T * 0.0003032));
    const double mean_anom = 357.52911 + T * (35999.05029 - 0.0001537 * T);
    const double ecc = 0.016708634 - T * (0.000042037 + 0.0000001267 * T);

    const double M = mean_anom * kDeg;
    const double center = std::sin(M) * (1.914602 - T * (0.004817 + 0.000014 * T)) +
                          std::sin(2.0 * M) * (0.019993 - 0.000101 * T) + std::sin(3.0 * M) * 0.000289;
    const double true_long = mean_long + center;

    const double omega = (125.04 - 1934.136 * T) * kDeg;
    const double apparent_long = (true_long - 0.00569 - 0.00478 * std::sin(omega)) * kDeg;

    const double mean_obliq = 23.0 + (26.0 + (21.448 - T * (46.815 + T * (0.00059 - T * 0.001813))) / 60.0) / 60.0;
    const double obliq = (mean_obliq + 0.00256 * std::cos(omega)) * kDeg;

    SolarCoordinates out;
    out.declination_deg = std::asin(std::sin(obliq) * std::sin(apparent_long)) / kDeg;

    const double y = std::pow(std::tan(obliq / 2.0), 2);
    const double L0 = mean_long * kDeg;
    const double eot_rad = y * std::sin(2.0 * L0) - 2.0 * ecc * std::sin(M) +
                           4.0 * ecc * y * std::sin(M) * std::cos(2.0 * L0) -
                           0.5 * y * y * std::sin(4.0 * L0) - 1.25 * ecc * ecc * std::sin(2.0 * M);
    out.equation_of_time_minutes = 4.0 * eot_rad / kDeg;
    return out;
}

double altitude_from_components(double latitude_deg, const SolarPosition& pos) {
    const double phi = latitude_deg * kDeg;
    const double dec = pos.declination_deg * kDeg;
    const double ha = pos.hour_angle_deg * kDeg;
    double s = std::sin(phi) * std::sin(dec) + std::cos(phi) * std::cos(dec) * std::cos(ha);
    s = std::clamp(s, -1.0, 1.0);
    return std::asin(s) / kDeg;
}

SolarPosition solar_altitude(const GeoTime& gt) {
    validate(gt);
    SolarPosition pos;
    pos.julian_day = julian_day(gt.utc);
    const SolarCoordinates sc = solar_coordinates(pos.julian_day);
    pos.declination_deg = sc.declination_deg;

    const double minutes_utc = gt.utc.hour * 60.0 + gt.utc.minute + gt.utc.second / 60.0;
    const double true_solar_minutes = minutes_utc + sc.equation_of_time_minutes + 4.0 * gt.longitude_deg;
    double ha = wrap_degrees(true_solar_minutes / 4.0 - 180.0);
    if (ha >= 180.0)
        ha -= 360.0;
    pos.hour_angle_deg = ha;
    pos.altitude_deg = altitude_from_components(gt.latitude_deg, pos);
    return pos;
}

double refraction_correction(double alt) {
    if (alt > 85.0)
        return 0.0;
    const double te = std::tan(alt * kDeg);
    double arcsec = 0.0;
    if (alt > 5.0)
        arcsec = 58.1 / te - 0.07 / (te * te * te) + 0.000086 / std::pow(te, 5);
    else if (alt > -0.575)
        arcsec = 1735.0 + alt * (-518.2 + alt * (103.4 + alt * (-12.79 + alt * 0.711)));
    else
        arcsec = -20.772 / te;
    return arcsec / 3600.0;
}

LabelResult label_batch(const std::vector<GeoSample>& records, const LabelOptions& opts) {
    LabelResult out;
    out.samples.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        const GeoSample& rec = records[i];
        try {
            const SolarPosition pos = solar_altitude({rec.latitude_deg, rec.longitude_deg, rec.utc});
            GeoSample labeled = rec;
            labeled.altitude_deg = opts.refraction ? pos.altitude_deg + refraction_correction(pos.altitude_deg)
                                                   : pos.altitude_deg;
            out.samples.push_back(std::move(labeled));
        } catch (const RangeError& e) {
            if (opts.strict)
                throw RangeError("record " + std::to_string(i) + ": " + e.what());
            out.errors.push_back({i, e.what()});
        }
    }
    return out;
}

} // namespace sunlit::ephemeris
