#include "sunlit/binning.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "sunlit/error.hpp"
#include "sunlit/rng.hpp"

namespace sunlit::binning {

namespace {

std::string fmt_deg(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

double checked(double a, const BinScheme& s, OutOfRange policy) {
    if (std::isnan(a))
        throw DomainError("altitude is NaN");
    if (a < s.lower()) {
        if (policy == OutOfRange::Clamp)
            return s.lower();
        throw DomainError("altitude " + fmt_deg(a) + " below lower bound b_0 = " + fmt_deg(s.lower()));
    }
    if (a > s.upper()) {
        if (policy == OutOfRange::Clamp)
            return s.upper();
        throw DomainError("altitude " + fmt_deg(a) + " above upper bound b_K = " + fmt_deg(s.upper()));
    }
    return a;
}

int bin_of(double a, const BinScheme& s) {
    const auto e = s.edges();
    // largest i with b_i <= a, capped at K-1 so that b_K lands in the last bin
    const auto it = std::upper_bound(e.begin(), e.end(), a);
    const int i = static_cast<int>(it - e.begin()) - 1;
    return std::min(i, s.bins() - 1);
}

} // namespace

BinScheme::BinScheme(std::vector<double> edges) : edges_(std::move(edges)) {
    if (edges_.size() < 2)
        throw DomainError("bin scheme needs at least two edges");
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        if (!std::isfinite(edges_[i]))
            throw DomainError("bin edge " + std::to_string(i) + " is not finite");
        if (i > 0 && !(edges_[i] > edges_[i - 1]))
            throw DomainError("bin edges must be strictly increasing (edge " + std::to_string(i) + ")");
    }
}

std::string BinScheme::interval(int bin) const {
    const double lo = edge(bin);
    const double hi = edge(bin + 1);
    return "[" + fmt_deg(lo) + ", " + fmt_deg(hi) + (bin == bins() - 1 ? "]" : ")");
}

std::string BinScheme::to_json() const { return nlohmann::json(edges_).dump(); }

BinScheme BinScheme::from_json(std::string_view json) {
    try {
        return BinScheme(nlohmann::json::parse(json).get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("bin scheme JSON: ") + e.what());
    }
}

BinScheme BinScheme::parse(std::string_view spec, std::optional<double> a_min, std::optional<double> a_max) {
    std::vector<double> edges;
    std::string token;
    std::istringstream in{std::string(spec)};
    while (std::getline(in, token, ',')) {
        token.erase(0, token.find_first_not_of(" \t"));
        token.erase(token.find_last_not_of(" \t") + 1);
        if (token == "a_min") {
            if (!a_min)
                throw DomainError("bin spec uses a_min but no dataset minimum is available");
            edges.push_back(*a_min);
        } else if (token == "a_max") {
            if (!a_max)
                throw DomainError("bin spec uses a_max but no dataset maximum is available");
            edges.push_back(*a_max);
        } else {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(token, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != token.size())
                throw DomainError("bad bin edge '" + token + "'");
            edges.push_back(v);
        }
    }
    return BinScheme(std::move(edges));
}

int quantize(double a, const BinScheme& scheme, OutOfRange policy) {
    return bin_of(checked(a, scheme, policy), scheme);
}

double residual(double a, const BinScheme& scheme, OutOfRange policy) {
    a = checked(a, scheme, policy);
    const int i = bin_of(a, scheme);
    const double lo = scheme.edge(i);
    const double hi = scheme.edge(i + 1);
    if (a == hi)
        return 1.0;
    return (a - lo) / (hi - lo);
}

NormalizedAltitude normalize(double a, const BinScheme& scheme, OutOfRange policy) {
    NormalizedAltitude n;
    a = checked(a, scheme, policy);
    n.bin_index = bin_of(a, scheme);
    n.residual = residual(a, scheme);
    n.value = (static_cast<double>(n.bin_index) + n.residual) / static_cast<double>(scheme.bins());
    return n;
}

double denormalize(double v, const BinScheme& scheme) {
    if (!(v >= 0.0 && v <= 1.0))
        throw DomainError("normalized value " + fmt_deg(v) + " outside [0, 1]");
    const int K = scheme.bins();
    const double q = v * K;
    const int i = std::min(static_cast<int>(std::floor(q)), K - 1);
    const double r = q - i;
    if (r == 0.0)
        return scheme.edge(i);
    if (r == 1.0)
        return scheme.edge(i + 1);
    const double lo = scheme.edge(i);
    const double hi = scheme.edge(i + 1);
    return lo + r * (hi - lo);
}

BinScheme default_scheme(double a_min, double a_max) { return BinScheme({a_min, -6.0, -4.0, -2.0, a_max}); }

BinScheme recommended_scheme(double a_min, double a_max) {
    if (!(a_min < -12.0))
        throw DomainError("recommended scheme needs a_min < -12, got " + fmt_deg(a_min));
    if (!(a_max > 6.0))
        throw DomainError("recommended scheme needs a_max > 6, got " + fmt_deg(a_max));
    std::vector<double> edges{a_min};
    for (int e = -12; e <= 6; e += 2)
        edges.push_back(e);
    edges.push_back(a_max);
    return BinScheme(std::move(edges));
}

std::vector<std::size_t> histogram(std::span<const double> altitudes, const BinScheme& scheme) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(scheme.bins()), 0);
    for (double a : altitudes)
        ++counts[static_cast<std::size_t>(quantize(a, scheme))];
    return counts;
}

std::vector<std::size_t> resample_balanced(std::span<const double> altitudes, const BinScheme& scheme,
                                           std::optional<std::size_t> target_per_bin, std::uint64_t seed) {
    const auto K = static_cast<std::size_t>(scheme.bins());
    std::vector<std::vector<std::size_t>> members(K);
    for (std::size_t i = 0; i < altitudes.size(); ++i)
        members[static_cast<std::size_t>(quantize(altitudes[i], scheme))].push_back(i);

    std::size_t largest = 0;
    for (std::size_t b = 0; b < K; ++b) {
        if (members[b].empty())
            throw DomainError("bin " + scheme.interval(static_cast<int>(b)) +
                              " is empty; the scheme is too fine for the data");
        largest = std::max(largest, members[b].size());
    }
    const std::size_t target = target_per_bin.value_or(largest);

    Rng rng(seed);
    std::vector<std::size_t> out;
    out.reserve(K * target);
    for (const auto& m : members) {
        std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
        for (std::size_t n = 0; n < target; ++n)
            out.push_back(m[pick(rng)]);
    }
    std::shuffle(out.begin(), out.end(), rng);
    return out;
}

std::vector<std::size_t> resample_balanced(std::span<const GeoSample> samples, const BinScheme& scheme,
                                           std::optional<std::size_t> target_per_bin, std::uint64_t seed) {
    std::vector<double> alts;
    alts.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].altitude_deg)
            throw ContractError("sample " + std::to_string(i) + " has no altitude; label it first");
        alts.push_back(*samples[i].altitude_deg);
    }
    return resample_balanced(alts, scheme, target_per_bin, seed);
}

} // namespace sunlit::binning
