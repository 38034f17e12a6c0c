// Command-line pipeline: label, prep, the three training stages, sampling,
// evaluation and replay. Every stage writes run.json echoing its resolved
// configuration so the stage can be re-run from that file alone.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace sunlit::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes.
enum Exit : int { kOk = 0, kData = 1, kIo = 2, kPipeline = 3, kNumeric = 4 };

struct LabelOptions {
    std::string in;
    std::string out;
    bool keep_rain = false;
    std::string bins; ///< empty: no normalized/bin columns
    bool strict = false;
    bool refraction = false;
};

struct PrepOptions {
    std::string out;
    std::uint64_t seed = 0;
    int per_bin = 500;
    std::string bins = "a_min,-6,-4,-2,a_max";
    double a_min = -18.0;
    double a_max = 60.0;
    int width = 32;
    int height = 32;
    double day_luminance = 0.8;
    double night_luminance = 0.05;
    double twilight_slope = 1.0 / 3.0;
    double sigma_min = 0.005;
    double sigma_max = 0.06;
    double black_level = 0.1;
    int layout_count = 4;
    bool write_images = true;
};

struct BaseOptions {
    std::string corpus;
    std::string out;
    std::uint64_t seed = 0;
    double lr = 1e-3;
    double weight_decay = 0.01;
    int epochs = 300;
    int batch = 32;
    int hidden = 256;
    int layers = 3;
    double cond_dropout = 0.1;
    double caption_dropout = 0.2;
    double ema_decay = 0.999;
    bool v_weighting = true;
};

struct StructureOptions {
    std::string corpus;
    std::string base;
    std::string out;
    std::uint64_t seed = 0;
    double lr = 0.005;
    int epochs = 5;
    int batch = 8;
    int tokens = 1;
    double subset = 0.1;
    std::string init_word = "scene";
};

struct SweepOptions {
    std::string corpus;
    std::string base;
    std::string out;
    std::uint64_t seed = 0;
    std::string lrs = "0.001,0.005,0.0001";
    std::string tokens = "1,2,3,4,5";
    int epochs = 5;
    int batch = 8;
    double subset = 0.1;
    int generate = 64; ///< images per candidate for scoring
    int heldout = 64;
};

struct ContextOptions {
    std::string corpus;
    std::string base;
    std::string structure;
    std::string out;
    std::uint64_t seed = 0;
    double lr = 0.01;
    int epochs = 20;
    int batch = 8;
    int centers = 16;
};

struct SampleOptions {
    std::string base;
    std::string structure;
    std::string context;
    std::string out;
    std::uint64_t seed = 0;
    std::string altitude; ///< degrees, or norm:x for a normalized value
    bool clamp = false;   ///< clamp out-of-range degrees instead of failing
    int count = 8;
    int steps = 30;
    int switch_step = 15;
    double guidance = 7.5;
    bool clip_x0 = true;
};

struct EvalOptions {
    std::string corpus;
    std::string base;
    std::string structure;
    std::string context;
    std::string out;
    std::uint64_t seed = 0;
    int per_condition = 64;
    std::string sweep = "0,0.33,0.66,1";
    int steps = 30;
    int switch_step = 15;
    double guidance = 7.5;
    bool clip_x0 = true;
    int sheet_columns = 8;
};

// Stage runners. They throw sunlit errors; `run` maps them to exit codes.
void run_label(const LabelOptions& o);
void run_prep(const PrepOptions& o);
void run_train_base(const BaseOptions& o);
void run_train_structure(const StructureOptions& o);
void run_sweep(const SweepOptions& o);
void run_train_context(const ContextOptions& o);
void run_sample(const SampleOptions& o);
void run_eval(const EvalOptions& o);

/// Re-runs the stage recorded in a run.json. A non-empty `out` redirects
/// the artifacts.
void replay(const std::filesystem::path& run_json, const std::string& out = "");

/// Where a stage writes run.json.
std::filesystem::path run_json_path(const std::string& stage, const std::string& out);

/// Parses arguments and runs the selected subcommand; returns the exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

} // namespace sunlit::cli
