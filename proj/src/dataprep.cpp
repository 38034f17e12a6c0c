#include "sunlit/dataprep.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "sunlit/error.hpp"
#include "sunlit/rng.hpp"

namespace sunlit::dataprep {

namespace {

using nlohmann::json;

GeoSample parse_record(const std::string& line) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::exception& e) {
        throw DomainError(std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object())
        throw DomainError("record is not a JSON object");
    auto number = [&](const char* key) {
        if (!obj.contains(key))
            throw DomainError(std::string("missing key '") + key + "'");
        if (!obj[key].is_number())
            throw DomainError(std::string("key '") + key + "' must be a number");
        return obj[key].get<double>();
    };
    GeoSample s;
    s.latitude_deg = number("lat");
    s.longitude_deg = number("lon");
    if (!obj.contains("utc") || !obj["utc"].is_string())
        throw DomainError("key 'utc' must be an ISO-8601 string");
    s.utc = UtcTime::parse(obj["utc"].get<std::string>());
    if (obj.contains("tags")) {
        if (!obj["tags"].is_array())
            throw DomainError("key 'tags' must be an array of strings");
        for (const auto& t : obj["tags"]) {
            if (!t.is_string())
                throw DomainError("key 'tags' must be an array of strings");
            s.tags.push_back(to_lower(t.get<std::string>()));
        }
    }
    if (obj.contains("altitude_deg"))
        s.altitude_deg = number("altitude_deg");
    if (obj.contains("image")) {
        if (!obj["image"].is_string())
            throw DomainError("key 'image' must be a string");
        s.image = obj["image"].get<std::string>();
    }
    return s;
}

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    std::string out = buf;
    if (out == "-0.0000")
        out = "0.0000";
    return out;
}

} // namespace

IngestResult ingest_metadata(std::istream& in, bool strict) {
    IngestResult out;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos)
            continue;
        try {
            out.samples.push_back(parse_record(line));
        } catch (const DomainError& e) {
            if (strict)
                throw ParseError("line " + std::to_string(number) + ": " + e.what(), number);
            out.issues.push_back({number, e.what()});
        }
    }
    if (in.bad())
        throw IoError("read error in metadata stream");
    return out;
}

IngestResult ingest_metadata(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    return ingest_metadata(in, strict);
}

std::string to_jsonl(const GeoSample& s, const std::optional<binning::NormalizedAltitude>& norm) {
    std::string out = "{\"lat\":" + json(s.latitude_deg).dump() + ",\"lon\":" + json(s.longitude_deg).dump() +
                      ",\"utc\":" + json(s.utc.to_iso8601()).dump() + ",\"tags\":" + json(s.tags).dump();
    if (s.image)
        out += ",\"image\":" + json(*s.image).dump();
    if (s.altitude_deg)
        out += ",\"altitude_deg\":" + fixed4(*s.altitude_deg);
    if (norm)
        out += ",\"normalized\":" + fixed4(norm->value) + ",\"bin\":" + std::to_string(norm->bin_index);
    out += "}";
    return out;
}

std::vector<GeoSample> filter_rain(const std::vector<GeoSample>& samples) {
    std::vector<GeoSample> out;
    for (const auto& s : samples)
        if (!s.has_tag("rain"))
            out.push_back(s);
    return out;
}

void SceneConfig::validate() const {
    if (width < 3 || height < 3)
        throw ContractError("scene must be at least 3x3");
    if (!(0.0 <= night_luminance && night_luminance < day_luminance && day_luminance <= 1.0))
        throw ContractError("scene needs 0 <= L_night < L_day <= 1");
    if (!(0.0 <= sigma_min && sigma_min <= sigma_max))
        throw ContractError("scene needs 0 <= sigma_min <= sigma_max");
    if (!(twilight_slope > 0.0))
        throw ContractError("twilight slope must be positive");
    if (layout_count < 0)
        throw ContractError("layout count must be >= 0");
    if (!(black_level >= 0.0 && black_level + day_luminance <= 1.0))
        throw ContractError("black level must keep the daylight range inside [0, 1]");
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double brightness_model(double a, const SceneConfig& cfg) {
    return cfg.night_luminance + (cfg.day_luminance - cfg.night_luminance) * logistic(cfg.twilight_slope * a);
}

double noise_model(double a, const SceneConfig& cfg) {
    return cfg.sigma_min + (cfg.sigma_max - cfg.sigma_min) * (1.0 - logistic(cfg.twilight_slope * a));
}

namespace {

// Coverage of [lo, hi] with linear ramps of `soft` pixels on each side.
double soft_box(double p, double lo, double hi, double soft) {
    const double rise = std::clamp((p - lo) / soft + 0.5, 0.0, 1.0);
    const double fall = std::clamp((hi - p) / soft + 0.5, 0.0, 1.0);
    return std::min(rise, fall);
}

} // namespace

Image scene_layout(const SceneConfig& cfg, std::uint64_t seed) {
    const int W = cfg.width;
    const int H = cfg.height;
    const int horizon = (H * 5) / 8;
    const int band = std::max(1, H / 16);
    Image img(W, H);
    for (int y = 0; y < H; ++y) {
        double v = 0.45;
        if (y < horizon)
            v = 1.0 - 0.2 * y / std::max(1, horizon - 1);
        else if (y < horizon + band)
            v = 0.3;
        for (int x = 0; x < W; ++x)
            img(x, y) = v;
    }

    Rng rng(derive_seed(cfg.geometry_seed, seed));
    std::uniform_int_distribution<int> count(1, 3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr double kAlbedo[] = {0.35, 0.5, 0.65};
    constexpr double kSoft = 3.0;
    const int buildings = count(rng);
    for (int b = 0; b < buildings; ++b) {
        const double width = W * (0.12 + 0.18 * unit(rng));
        const double left = (W - width) * unit(rng);
        const double tall = horizon * (0.2 + 0.45 * unit(rng));
        const double albedo = kAlbedo[static_cast<int>(unit(rng) * 3.0) % 3];
        for (int y = 0; y < horizon; ++y) {
            const double my = soft_box(y, horizon - tall, horizon + kSoft, kSoft);
            if (my <= 0.0)
                continue;
            for (int x = 0; x < W; ++x) {
                const double m = my * soft_box(x, left, left + width, kSoft);
                img(x, y) = img(x, y) * (1.0 - m) + albedo * m;
            }
        }
    }
    return img;
}

Scene generate_scene(double a, const SceneConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Scene s;
    s.altitude_deg = a;
    s.luminance = brightness_model(a, cfg);
    s.sigma = noise_model(a, cfg);
    s.image = scene_layout(cfg, cfg.layout_count > 0 ? seed % static_cast<std::uint64_t>(cfg.layout_count) : seed);
    s.image.pixels() = (cfg.black_level + s.luminance * s.image.pixels().array()).matrix();
    if (s.sigma > 0.0) {
        Rng rng(derive_seed(seed, 0x6e6f697365ULL));
        std::normal_distribution<double> normal(0.0, s.sigma);
        for (Eigen::Index i = 0; i < s.image.size(); ++i)
            s.image.pixels()[i] += normal(rng);
    }
    s.image.clamp(0.0, 1.0);
    return s;
}

std::vector<CorpusItem> build_corpus(const binning::BinScheme& scheme, int per_bin, const SceneConfig& cfg,
                                     std::uint64_t seed) {
    if (per_bin < 1)
        throw ContractError("per_bin must be >= 1");
    std::vector<CorpusItem> out;
    out.reserve(static_cast<std::size_t>(per_bin * scheme.bins()));
    std::uint64_t index = 0;
    for (int b = 0; b < scheme.bins(); ++b) {
        const double lo = scheme.edge(b);
        const double hi = scheme.edge(b + 1);
        for (int n = 0; n < per_bin; ++n, ++index) {
            const std::uint64_t item_seed = derive_seed(seed, index);
            Rng rng(item_seed);
            const double a = lo + (hi - lo) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
            out.push_back({generate_scene(a, cfg, item_seed).image, a});
        }
    }
    return out;
}

void write_manifest(const std::filesystem::path& path, const std::vector<std::string>& image_paths,
                    const std::vector<CorpusItem>& corpus, const binning::BinScheme& scheme) {
    if (image_paths.size() != corpus.size())
        throw ContractError("manifest needs one path per corpus item");
    std::ofstream os(path);
    if (!os)
        throw IoError("cannot open '" + path.string() + "' for writing");
    os << "path,altitude_deg,normalized,bin\n";
    char buf[128];
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto n = binning::normalize(corpus[i].altitude_deg, scheme);
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%d\n", corpus[i].altitude_deg, n.value, n.bin_index);
        os << image_paths[i] << buf;
    }
    if (!os)
        throw IoError("write failed for '" + path.string() + "'");
}

} // namespace sunlit::dataprep
