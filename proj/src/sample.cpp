#include "sunlit/sample.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdio>

#include "sunlit/error.hpp"

namespace sunlit {

namespace {

int parse_field(std::string_view iso, std::size_t pos, std::size_t len) {
    if (pos + len > iso.size())
        throw DomainError("truncated timestamp '" + std::string(iso) + "'");
    int value = 0;
    const char* first = iso.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw DomainError("malformed timestamp '" + std::string(iso) + "'");
    return value;
}

void expect_char(std::string_view iso, std::size_t pos, char c) {
    if (pos >= iso.size() || (iso[pos] != c && !(c == 'T' && iso[pos] == ' ')))
        throw DomainError("malformed timestamp '" + std::string(iso) + "'");
}

} // namespace

UtcTime UtcTime::parse(std::string_view iso) {
    UtcTime t;
    t.year = parse_field(iso, 0, 4);
    expect_char(iso, 4, '-');
    t.month = parse_field(iso, 5, 2);
    expect_char(iso, 7, '-');
    t.day = parse_field(iso, 8, 2);
    expect_char(iso, 10, 'T');
    t.hour = parse_field(iso, 11, 2);
    expect_char(iso, 13, ':');
    t.minute = parse_field(iso, 14, 2);
    expect_char(iso, 16, ':');
    t.second = parse_field(iso, 17, 2);

    std::string_view rest = iso.substr(19);
    if (!rest.empty() && rest.front() == '.') {
        std::size_t n = 1;
        while (n < rest.size() && std::isdigit(static_cast<unsigned char>(rest[n])))
            ++n;
        if (n == 1)
            throw DomainError("malformed timestamp '" + std::string(iso) + "'");
        rest.remove_prefix(n);
    }
    if (!(rest.empty() || rest == "Z" || rest == "+00:00"))
        throw DomainError("timestamp must be UTC: '" + std::string(iso) + "'");

    namespace chr = std::chrono;
    const chr::year_month_day ymd{chr::year{t.year}, chr::month{static_cast<unsigned>(t.month)},
                                  chr::day{static_cast<unsigned>(t.day)}};
    if (!ymd.ok() || t.hour > 23 || t.minute > 59 || t.second > 59)
        throw DomainError("invalid calendar time '" + std::string(iso) + "'");
    return t;
}

std::string UtcTime::to_iso8601() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", year, month, day, hour, minute,
                  second);
    return buf;
}

long long UtcTime::unix_seconds() const {
    namespace chr = std::chrono;
    const chr::sys_days d{chr::year_month_day{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                                    std::chrono::day{static_cast<unsigned>(day)}}};
    return static_cast<long long>(d.time_since_epoch().count()) * 86400LL + hour * 3600LL +
           minute * 60LL + second;
}

UtcTime UtcTime::from_unix_seconds(long long s) {
    using namespace std::chrono;
    long long days = s / 86400;
    long long rem = s % 86400;
    if (rem < 0) {
        rem += 86400;
        --days;
    }
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    UtcTime t;
    t.year = static_cast<int>(ymd.year());
    t.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
    t.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
    t.hour = static_cast<int>(rem / 3600);
    t.minute = static_cast<int>((rem % 3600) / 60);
    t.second = static_cast<int>(rem % 60);
    return t;
}

bool GeoSample::has_tag(std::string_view tag) const {
    const std::string needle = to_lower(tag);
    return std::any_of(tags.begin(), tags.end(), [&](const std::string& t) { return to_lower(t) == needle; });
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace sunlit
