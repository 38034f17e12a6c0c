#include "sunlit/cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "sunlit/binning.hpp"
#include "sunlit/dataprep.hpp"
#include "sunlit/diffusion.hpp"
#include "sunlit/encoder.hpp"
#include "sunlit/ephemeris.hpp"
#include "sunlit/error.hpp"
#include "sunlit/evaluation.hpp"
#include "sunlit/image.hpp"
#include "sunlit/metrics.hpp"
#include "sunlit/rng.hpp"
#include "sunlit/tensor_io.hpp"
#include "sunlit/training.hpp"

namespace sunlit::cli {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LabelOptions, in, out, keep_rain, bins, strict, refraction)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PrepOptions, out, seed, per_bin, bins, a_min, a_max, width, height,
                                                day_luminance, night_luminance, twilight_slope, sigma_min, sigma_max,
                                                black_level, layout_count, write_images)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BaseOptions, corpus, out, seed, lr, weight_decay, epochs, batch,
                                                hidden, layers, cond_dropout, caption_dropout, ema_decay, v_weighting)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(StructureOptions, corpus, base, out, seed, lr, epochs, batch, tokens,
                                                subset, init_word)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SweepOptions, corpus, base, out, seed, lrs, tokens, epochs, batch,
                                                subset, generate, heldout)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ContextOptions, corpus, base, structure, out, seed, lr, epochs, batch,
                                                centers)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SampleOptions, base, structure, context, out, seed, altitude, clamp,
                                                count, steps, switch_step, guidance, clip_x0)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(EvalOptions, corpus, base, structure, context, out, seed,
                                                per_condition, sweep, steps, switch_step, guidance, clip_x0,
                                                sheet_columns)

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void log(const std::string& msg) { std::cerr << msg << '\n'; }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

std::vector<double> parse_doubles(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw DomainError("not a number: '" + item + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos)
            throw DomainError("not a number: '" + item + "'");
        out.push_back(v);
    }
    if (out.empty())
        throw DomainError("empty list");
    return out;
}

std::vector<int> parse_ints(const std::string& list) {
    std::vector<int> out;
    for (double v : parse_doubles(list)) {
        if (v != static_cast<int>(v))
            throw DomainError("not an integer: " + std::to_string(v));
        out.push_back(static_cast<int>(v));
    }
    return out;
}

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

template <class Options>
void write_run_json(const std::string& stage, const Options& o) {
    const json run{{"tool", "sunlit"}, {"version", kToolVersion}, {"stage", stage}, {"config", o}};
    write_json(run_json_path(stage, o.out), run);
}

fs::path make_out_dir(const std::string& out) {
    if (out.empty())
        throw ContractError("--out is required");
    fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create " + out + ": " + ec.message());
    return dir;
}

// Upstream checks: a stage directory is usable once its run.json names one of
// the accepted stages and the named artifact exists.
fs::path require_stage(const std::string& dir, std::initializer_list<const char*> stages, const std::string& artifact) {
    const std::string wanted = *stages.begin();
    if (dir.empty())
        throw PipelineError("no " + wanted + " directory given", wanted);
    const fs::path run = fs::path(dir) / "run.json";
    if (!fs::exists(run))
        throw PipelineError("missing upstream stage '" + wanted + "': " + run.string() + " not found", wanted);
    json j;
    try {
        j = json::parse(io::read_text(run));
    } catch (const json::exception& e) {
        throw PipelineError("unreadable " + run.string() + ": " + e.what(), wanted);
    }
    const std::string got = j.value("stage", "");
    if (std::none_of(stages.begin(), stages.end(), [&](const char* s) { return got == s; }))
        throw PipelineError(dir + " holds stage '" + got + "', expected '" + wanted + "'", wanted);
    const fs::path file = fs::path(dir) / artifact;
    if (!fs::exists(file))
        throw PipelineError("missing upstream artifact from stage '" + wanted + "': " + file.string(), wanted);
    return file;
}

json scene_json(const dataprep::SceneConfig& c) {
    return {{"width", c.width},
            {"height", c.height},
            {"day_luminance", c.day_luminance},
            {"night_luminance", c.night_luminance},
            {"twilight_slope", c.twilight_slope},
            {"sigma_min", c.sigma_min},
            {"sigma_max", c.sigma_max},
            {"black_level", c.black_level},
            {"geometry_seed", c.geometry_seed},
            {"layout_count", c.layout_count}};
}

dataprep::SceneConfig scene_from_json(const json& j) {
    dataprep::SceneConfig c;
    c.width = j.at("width");
    c.height = j.at("height");
    c.day_luminance = j.at("day_luminance");
    c.night_luminance = j.at("night_luminance");
    c.twilight_slope = j.at("twilight_slope");
    c.sigma_min = j.at("sigma_min");
    c.sigma_max = j.at("sigma_max");
    c.black_level = j.at("black_level");
    c.geometry_seed = j.at("geometry_seed");
    c.layout_count = j.at("layout_count");
    return c;
}

struct Corpus {
    std::vector<dataprep::CorpusItem> items;
    binning::BinScheme scheme{std::vector<double>{0.0, 1.0}};
    dataprep::SceneConfig scene;
};

Corpus load_corpus(const std::string& dir) {
    const auto file = require_stage(dir, {"prep"}, "corpus.bin");
    const auto archive = io::read_archive(file);
    io::expect_kind(archive, "corpus");
    Corpus c;
    c.scene = scene_from_json(archive.meta.at("scene"));
    c.scheme = binning::BinScheme(archive.meta.at("bins").get<std::vector<double>>());
    const Eigen::MatrixXd images = archive.matrix("images");
    const Eigen::VectorXd altitudes = archive.vector("altitudes");
    if (images.cols() != altitudes.size() || images.rows() != c.scene.width * c.scene.height)
        throw ContractError("corpus.bin: inconsistent shapes");
    c.items.reserve(static_cast<std::size_t>(images.cols()));
    for (Eigen::Index i = 0; i < images.cols(); ++i)
        c.items.push_back({Image(c.scene.width, c.scene.height, images.col(i)), altitudes[i]});
    return c;
}

diffusion::DiffusionModel load_base(const std::string& dir) {
    return diffusion::load_model(require_stage(dir, {"train-base"}, "model.bin"));
}

encoder::TokenSet load_structure(const std::string& dir) {
    return encoder::load_tokens(require_stage(dir, {"train-structure", "sweep"}, "tokens.bin"));
}

std::pair<encoder::ContextNet, binning::BinScheme> load_context(const std::string& dir) {
    auto net = encoder::load_context_net(require_stage(dir, {"train-context"}, "context.bin"));
    auto scheme = binning::BinScheme::from_json(io::read_text(require_stage(dir, {"train-context"}, "bins.json")));
    return {std::move(net), std::move(scheme)};
}

void log_losses(const training::TrainReport& r) {
    for (std::size_t e = 0; e < r.epoch_losses.size(); ++e)
        log("epoch " + std::to_string(e + 1) + " loss " + fmt("%.6f", r.epoch_losses[e]));
}

std::vector<Image> images_of(std::span<const dataprep::CorpusItem> items) {
    std::vector<Image> out;
    out.reserve(items.size());
    for (const auto& it : items)
        out.push_back(it.image);
    return out;
}

std::string index_name(const char* prefix, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s%05zu%s", prefix, i, ext);
    return buf;
}

diffusion::SamplerConfig sampler_of(int steps, int switch_step, double guidance, bool clip) {
    diffusion::SamplerConfig s;
    s.steps = steps;
    s.switch_step = switch_step;
    s.guidance = guidance;
    s.clip_x0 = clip;
    return s;
}

} // namespace

fs::path run_json_path(const std::string& stage, const std::string& out) {
    if (stage == "label")
        return fs::path(out + ".run.json");
    return fs::path(out) / "run.json";
}

// ---------------------------------------------------------------------------

void run_label(const LabelOptions& o) {
    if (o.in.empty() || o.out.empty())
        throw ContractError("label needs --in and --out");
    auto ingested = dataprep::ingest_metadata(fs::path(o.in), o.strict);
    for (const auto& issue : ingested.issues)
        log("line " + std::to_string(issue.line) + ": " + issue.message + " (skipped)");
    auto records = o.keep_rain ? std::move(ingested.samples) : dataprep::filter_rain(ingested.samples);

    ephemeris::LabelOptions lo;
    lo.strict = o.strict;
    lo.refraction = o.refraction;
    auto labeled = ephemeris::label_batch(records, lo);
    for (const auto& err : labeled.errors)
        log("record " + std::to_string(err.index) + ": " + err.message + " (skipped)");

    std::optional<binning::BinScheme> scheme;
    if (!o.bins.empty() && !labeled.samples.empty()) {
        double lo_a = *labeled.samples.front().altitude_deg;
        double hi_a = lo_a;
        for (const auto& s : labeled.samples) {
            lo_a = std::min(lo_a, *s.altitude_deg);
            hi_a = std::max(hi_a, *s.altitude_deg);
        }
        scheme = binning::BinScheme::parse(o.bins, lo_a, hi_a);
    }

    std::string text;
    for (const auto& s : labeled.samples) {
        std::optional<binning::NormalizedAltitude> norm;
        if (scheme) {
            try {
                norm = binning::normalize(*s.altitude_deg, *scheme);
            } catch (const DomainError& e) {
                if (o.strict)
                    throw;
                log(std::string("outside the bin scheme: ") + e.what() + " (skipped)");
                continue;
            }
        }
        text += dataprep::to_jsonl(s, norm);
        text += '\n';
    }
    const fs::path out(o.out);
    if (out.has_parent_path())
        fs::create_directories(out.parent_path());
    io::write_text(out, text);
    write_run_json("label", o);
    log("labeled " + std::to_string(labeled.samples.size()) + " of " + std::to_string(records.size()) + " records");
}

void run_prep(const PrepOptions& o) {
    const auto dir = make_out_dir(o.out);
    const auto scheme = binning::BinScheme::parse(o.bins, o.a_min, o.a_max);
    dataprep::SceneConfig sc;
    sc.width = o.width;
    sc.height = o.height;
    sc.day_luminance = o.day_luminance;
    sc.night_luminance = o.night_luminance;
    sc.twilight_slope = o.twilight_slope;
    sc.sigma_min = o.sigma_min;
    sc.sigma_max = o.sigma_max;
    sc.black_level = o.black_level;
    sc.layout_count = o.layout_count;
    sc.validate();
    const auto corpus = dataprep::build_corpus(scheme, o.per_bin, sc, o.seed);

    std::vector<std::string> paths;
    if (o.write_images) {
        fs::create_directories(dir / "images");
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            paths.push_back("images/" + index_name("", i, ".pgm"));
            io::write_pgm(dir / paths.back(), corpus[i].image);
        }
    } else {
        for (std::size_t i = 0; i < corpus.size(); ++i)
            paths.emplace_back();
    }
    dataprep::write_manifest(dir / "manifest.csv", paths, corpus, scheme);

    io::Archive archive;
    archive.kind = "corpus";
    archive.meta = {{"scene", scene_json(sc)}, {"bins", std::vector<double>(scheme.edges().begin(), scheme.edges().end())}};
    std::vector<Image> imgs = images_of(corpus);
    Eigen::VectorXd altitudes(static_cast<Eigen::Index>(corpus.size()));
    for (std::size_t i = 0; i < corpus.size(); ++i)
        altitudes[static_cast<Eigen::Index>(i)] = corpus[i].altitude_deg;
    archive.add("images", stack_columns(imgs));
    archive.add("altitudes", altitudes);
    io::write_archive(dir / "corpus.bin", archive);
    io::write_text(dir / "bins.json", scheme.to_json() + "\n");
    write_run_json("prep", o);
    log("wrote " + std::to_string(corpus.size()) + " scenes over " + std::to_string(scheme.bins()) + " bins");
}

void run_train_base(const BaseOptions& o) {
    const auto corpus = load_corpus(o.corpus);
    const auto dir = make_out_dir(o.out);
    training::OptimConfig oc;
    oc.learning_rate = o.lr;
    oc.weight_decay = o.weight_decay;
    oc.epochs = o.epochs;
    oc.batch_size = o.batch;
    oc.seed = o.seed;
    training::BaseOptions bo;
    bo.denoiser.width = corpus.scene.width;
    bo.denoiser.height = corpus.scene.height;
    bo.denoiser.hidden = o.hidden;
    bo.denoiser.layers = o.layers;
    bo.cond_dropout = o.cond_dropout;
    bo.caption_dropout = o.caption_dropout;
    bo.ema_decay = o.ema_decay;
    bo.v_weighting = o.v_weighting;
    const auto result = training::train_base(corpus.items, oc, bo);
    log_losses(result.report);
    diffusion::save_model(dir / "model.bin", result.model);
    write_json(dir / "report.json", result.report.to_json());
    write_run_json("train-base", o);
}

void run_train_structure(const StructureOptions& o) {
    const auto corpus = load_corpus(o.corpus);
    const auto model = load_base(o.base);
    const auto dir = make_out_dir(o.out);
    const auto day = std::count_if(corpus.items.begin(), corpus.items.end(),
                                   [](const auto& it) { return it.altitude_deg > 0.0; });
    log("excluded " + std::to_string(corpus.items.size() - static_cast<std::size_t>(day)) +
        " images at altitude <= 0; " + std::to_string(day) + " daytime images remain");
    const auto subset = training::structure_subset(corpus.items, o.subset, derive_seed(o.seed, 1));
    log("training on " + std::to_string(subset.size()) + " daytime images");
    training::OptimConfig oc;
    oc.learning_rate = o.lr;
    oc.epochs = o.epochs;
    oc.batch_size = o.batch;
    oc.seed = o.seed;
    const auto imgs = images_of(subset);
    const auto result = training::train_structure_token(model, imgs, oc, o.tokens, o.init_word);
    log_losses(result.report);
    encoder::save_tokens(dir / "tokens.bin", result.tokens);
    write_json(dir / "report.json", result.report.to_json());
    write_run_json("train-structure", o);
}

void run_sweep(const SweepOptions& o) {
    const auto corpus = load_corpus(o.corpus);
    const auto model = load_base(o.base);
    const auto dir = make_out_dir(o.out);
    const auto lrs = parse_doubles(o.lrs);
    const auto counts = parse_ints(o.tokens);
    const auto subset = training::structure_subset(corpus.items, o.subset, derive_seed(o.seed, 1));

    // Held-out daytime scenes: the daytime items left out of the training subset.
    std::vector<Image> heldout;
    for (const auto& it : corpus.items) {
        if (static_cast<int>(heldout.size()) >= o.heldout)
            break;
        if (it.altitude_deg <= 0.0)
            continue;
        const bool used = std::any_of(subset.begin(), subset.end(),
                                      [&](const auto& s) { return s.altitude_deg == it.altitude_deg; });
        if (!used)
            heldout.push_back(it.image);
    }
    if (heldout.size() < 2)
        throw ContractError("sweep needs at least two held-out daytime images");

    training::OptimConfig oc;
    oc.epochs = o.epochs;
    oc.batch_size = o.batch;
    oc.seed = o.seed;
    const auto train = images_of(subset);
    const auto result =
        training::sweep_structure_tokens(model, train, heldout, lrs, counts, oc, o.generate, derive_seed(o.seed, 2));

    std::string csv = "learning_rate,token_count,frechet,final_loss\n";
    char line[160];
    for (const auto& c : result.cells) {
        std::snprintf(line, sizeof line, "%.6g,%d,%.9g,%.9g\n", c.learning_rate, c.token_count, c.frechet,
                      c.final_loss);
        csv += line;
    }
    io::write_text(dir / "sweep.csv", csv);
    const auto& best = result.cells[result.best];
    log("best: lr " + fmt("%g", best.learning_rate) + ", " + std::to_string(best.token_count) + " token(s), frechet " +
        fmt("%.4f", best.frechet));
    encoder::save_tokens(dir / "tokens.bin", result.candidates[result.best].tokens);
    write_run_json("sweep", o);
}

void run_train_context(const ContextOptions& o) {
    const auto corpus = load_corpus(o.corpus);
    const auto model = load_base(o.base);
    const auto structure = load_structure(o.structure);
    const auto dir = make_out_dir(o.out);
    const Eigen::MatrixXd seed_rows =
        model.prompts.embeddings.row(model.prompts.index_of("scene")).replicate(structure.count(), 1);
    auto net = encoder::ContextNet::create(seed_rows, o.centers);
    training::OptimConfig oc;
    oc.learning_rate = o.lr;
    oc.epochs = o.epochs;
    oc.batch_size = o.batch;
    oc.seed = o.seed;
    const auto result = training::train_context_net(model, corpus.items, corpus.scheme, std::move(net), oc);
    log_losses(result.report);
    encoder::save_context_net(dir / "context.bin", result.net);
    io::write_text(dir / "bins.json", corpus.scheme.to_json() + "\n");
    write_json(dir / "report.json", result.report.to_json());
    write_run_json("train-context", o);
}

void run_sample(const SampleOptions& o) {
    const auto model = load_base(o.base);
    const auto structure = load_structure(o.structure);
    const auto [net, scheme] = load_context(o.context);
    const auto dir = make_out_dir(o.out);
    if (o.altitude.empty())
        throw ContractError("sample needs --altitude");

    encoder::TokenSet dstar;
    if (o.altitude.rfind("norm:", 0) == 0) {
        const auto v = parse_doubles(o.altitude.substr(5));
        if (v.size() != 1)
            throw DomainError("--altitude norm:x takes one value");
        dstar = encoder::context_tokens_normalized(v[0], net);
    } else {
        const auto v = parse_doubles(o.altitude);
        if (v.size() != 1)
            throw DomainError("--altitude takes one value");
        dstar = encoder::context_tokens(v[0], scheme, net,
                                        o.clamp ? binning::OutOfRange::Clamp : binning::OutOfRange::Error);
    }
    const auto images = diffusion::sample_partial(model, diffusion::PromptContext::from_tokens(dstar),
                                                  diffusion::PromptContext::from_tokens(structure), o.count,
                                                  sampler_of(o.steps, o.switch_step, o.guidance, o.clip_x0), o.seed);
    for (std::size_t i = 0; i < images.size(); ++i)
        io::write_pgm(dir / index_name("sample_", i, ".pgm"), images[i]);
    io::write_batch_f32(dir / "samples.f32", images);
    io::write_png(dir / "grid.png", io::contact_sheet(images, std::min(o.count, 8)));
    write_run_json("sample", o);
    log("mean luminance " + fmt("%.4f", metrics::mean_luminance(images)) + ", noise sigma " +
        fmt("%.4f", metrics::mean_noise_sigma(images)));
}

void run_eval(const EvalOptions& o) {
    const auto corpus = load_corpus(o.corpus);
    const auto model = load_base(o.base);
    const auto structure = load_structure(o.structure);
    const auto [net, scheme] = load_context(o.context);
    const auto dir = make_out_dir(o.out);
    if (o.sheet_columns < 1)
        throw DomainError("--sheet-columns must be positive");

    metrics::EvalOptions eo;
    eo.normalized = parse_doubles(o.sweep);
    eo.per_condition = o.per_condition;
    eo.sampler = sampler_of(o.steps, o.switch_step, o.guidance, o.clip_x0);
    eo.scene = corpus.scene;
    eo.seed = o.seed;
    eo.keep_images = true;
    const auto report = metrics::eval_sweep(model, structure, net, scheme, eo);

    write_json(dir / "report.json", report.to_json());
    io::write_text(dir / "table.txt", report.table());
    // One contact sheet per condition, plus a grid with one row per condition.
    std::vector<Image> rows;
    for (std::size_t c = 0; c < report.generated.size(); ++c) {
        const auto& imgs = report.generated[c];
        io::write_png(dir / index_name("condition_", c, ".png"), io::contact_sheet(imgs, o.sheet_columns));
        const auto n = std::min<std::size_t>(imgs.size(), static_cast<std::size_t>(o.sheet_columns));
        rows.insert(rows.end(), imgs.begin(), imgs.begin() + static_cast<std::ptrdiff_t>(n));
    }
    const int cols = std::min<int>(o.sheet_columns, o.per_condition);
    io::write_png(dir / "grid.png", io::contact_sheet(rows, cols));
    write_run_json("eval", o);
    std::cerr << report.table();
}

void replay(const fs::path& run_json, const std::string& out) {
    json j;
    try {
        j = json::parse(io::read_text(run_json));
    } catch (const json::exception& e) {
        throw ParseError(run_json.string() + ": " + e.what(), 0);
    }
    const std::string stage = j.value("stage", "");
    json cfg = j.at("config");
    if (!out.empty())
        cfg["out"] = out;
    if (stage == "label")
        run_label(cfg.get<LabelOptions>());
    else if (stage == "prep")
        run_prep(cfg.get<PrepOptions>());
    else if (stage == "train-base")
        run_train_base(cfg.get<BaseOptions>());
    else if (stage == "train-structure")
        run_train_structure(cfg.get<StructureOptions>());
    else if (stage == "sweep")
        run_sweep(cfg.get<SweepOptions>());
    else if (stage == "train-context")
        run_train_context(cfg.get<ContextOptions>());
    else if (stage == "sample")
        run_sample(cfg.get<SampleOptions>());
    else if (stage == "eval")
        run_eval(cfg.get<EvalOptions>());
    else
        throw ContractError("unknown stage '" + stage + "' in " + run_json.string());
}

// ---------------------------------------------------------------------------

namespace {

int exit_code_of(const std::exception_ptr& ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const PipelineError& e) {
        std::cerr << "error: " << e.what() << "\nmissing stage: " << e.stage() << '\n';
        return kPipeline;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kNumeric;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kData;
    }
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Solar-altitude conditioned image generation pipeline", "sunlit"};
    app.set_version_flag("--version", kToolVersion);
    app.set_config("--config", "", "INI file with one section per subcommand; flags override it");
    app.require_subcommand(1);

    LabelOptions label;
    auto* c_label = app.add_subcommand("label", "Attach solar altitude to JSONL capture metadata");
    c_label->add_option("--in", label.in, "Input JSONL")->required();
    c_label->add_option("--out", label.out, "Output JSONL")->required();
    c_label->add_flag("--keep-rain", label.keep_rain, "Keep records tagged rain");
    c_label->add_option("--bins", label.bins, "Bin edges, e.g. a_min,-6,-4,-2,a_max; adds normalized and bin");
    c_label->add_flag("--strict", label.strict, "Fail on the first malformed record");
    c_label->add_flag("--refraction", label.refraction, "Apply atmospheric refraction");

    PrepOptions prep;
    auto* c_prep = app.add_subcommand("prep", "Build a balanced synthetic corpus");
    c_prep->add_option("--out", prep.out, "Output directory")->required();
    c_prep->add_option("--seed", prep.seed)->required();
    c_prep->add_option("--per-bin", prep.per_bin)->capture_default_str();
    c_prep->add_option("--bins", prep.bins)->capture_default_str();
    c_prep->add_option("--a-min", prep.a_min)->capture_default_str();
    c_prep->add_option("--a-max", prep.a_max)->capture_default_str();
    c_prep->add_option("--width", prep.width)->capture_default_str();
    c_prep->add_option("--height", prep.height)->capture_default_str();
    c_prep->add_option("--day-luminance", prep.day_luminance)->capture_default_str();
    c_prep->add_option("--night-luminance", prep.night_luminance)->capture_default_str();
    c_prep->add_option("--twilight-slope", prep.twilight_slope)->capture_default_str();
    c_prep->add_option("--sigma-min", prep.sigma_min)->capture_default_str();
    c_prep->add_option("--sigma-max", prep.sigma_max)->capture_default_str();
    c_prep->add_option("--black-level", prep.black_level)->capture_default_str();
    c_prep->add_option("--layout-count", prep.layout_count)->capture_default_str();
    c_prep->add_flag("--images,!--no-images", prep.write_images, "Write PGM files next to corpus.bin");

    BaseOptions base;
    auto* c_base = app.add_subcommand("train-base", "Train the base denoiser and prompt table");
    c_base->add_option("--corpus", base.corpus, "prep directory")->required();
    c_base->add_option("--out", base.out)->required();
    c_base->add_option("--seed", base.seed)->required();
    c_base->add_option("--lr", base.lr)->capture_default_str();
    c_base->add_option("--weight-decay", base.weight_decay)->capture_default_str();
    c_base->add_option("--epochs", base.epochs)->capture_default_str();
    c_base->add_option("--batch", base.batch)->capture_default_str();
    c_base->add_option("--hidden", base.hidden)->capture_default_str();
    c_base->add_option("--layers", base.layers)->capture_default_str();
    c_base->add_option("--cond-dropout", base.cond_dropout)->capture_default_str();
    c_base->add_option("--caption-dropout", base.caption_dropout)->capture_default_str();
    c_base->add_option("--ema", base.ema_decay)->capture_default_str();
    c_base->add_flag("--v-weighting,!--no-v-weighting", base.v_weighting);

    StructureOptions st;
    auto* c_st = app.add_subcommand("train-structure", "Learn the structure token on daytime images");
    c_st->add_option("--corpus", st.corpus)->required();
    c_st->add_option("--base", st.base)->required();
    c_st->add_option("--out", st.out)->required();
    c_st->add_option("--seed", st.seed)->required();
    c_st->add_option("--lr", st.lr)->capture_default_str();
    c_st->add_option("--epochs", st.epochs)->capture_default_str();
    c_st->add_option("--batch", st.batch)->capture_default_str();
    c_st->add_option("--tokens", st.tokens)->capture_default_str();
    c_st->add_option("--subset", st.subset, "Fraction of daytime images used")->capture_default_str();
    c_st->add_option("--init-word", st.init_word)->capture_default_str();

    SweepOptions sw;
    auto* c_sw = app.add_subcommand("sweep", "Grid over learning rate and token count, keep the best token");
    c_sw->add_option("--corpus", sw.corpus)->required();
    c_sw->add_option("--base", sw.base)->required();
    c_sw->add_option("--out", sw.out)->required();
    c_sw->add_option("--seed", sw.seed)->required();
    c_sw->add_option("--lrs", sw.lrs)->capture_default_str();
    c_sw->add_option("--tokens", sw.tokens)->capture_default_str();
    c_sw->add_option("--epochs", sw.epochs)->capture_default_str();
    c_sw->add_option("--batch", sw.batch)->capture_default_str();
    c_sw->add_option("--subset", sw.subset)->capture_default_str();
    c_sw->add_option("--generate", sw.generate, "Images generated per candidate")->capture_default_str();
    c_sw->add_option("--heldout", sw.heldout)->capture_default_str();

    ContextOptions cx;
    auto* c_cx = app.add_subcommand("train-context", "Train the altitude context network");
    c_cx->add_option("--corpus", cx.corpus)->required();
    c_cx->add_option("--base", cx.base)->required();
    c_cx->add_option("--structure", cx.structure)->required();
    c_cx->add_option("--out", cx.out)->required();
    c_cx->add_option("--seed", cx.seed)->required();
    c_cx->add_option("--lr", cx.lr)->capture_default_str();
    c_cx->add_option("--epochs", cx.epochs)->capture_default_str();
    c_cx->add_option("--batch", cx.batch)->capture_default_str();
    c_cx->add_option("--centers", cx.centers)->capture_default_str();

    SampleOptions sa;
    auto* c_sa = app.add_subcommand("sample", "Generate images at one altitude");
    c_sa->add_option("--base", sa.base)->required();
    c_sa->add_option("--structure", sa.structure)->required();
    c_sa->add_option("--context", sa.context)->required();
    c_sa->add_option("--out", sa.out)->required();
    c_sa->add_option("--seed", sa.seed)->required();
    c_sa->add_option("--altitude", sa.altitude, "Degrees, or norm:x for a normalized value")->required();
    c_sa->add_flag("--clamp", sa.clamp, "Clamp altitudes outside the bin scheme");
    c_sa->add_option("--count", sa.count)->capture_default_str();
    c_sa->add_option("--steps", sa.steps)->capture_default_str();
    c_sa->add_option("--switch", sa.switch_step)->capture_default_str();
    c_sa->add_option("--guidance", sa.guidance)->capture_default_str();
    c_sa->add_flag("--clip-x0,!--no-clip-x0", sa.clip_x0);

    EvalOptions ev;
    auto* c_ev = app.add_subcommand("eval", "Altitude sweep report against ground-truth scenes");
    c_ev->add_option("--corpus", ev.corpus)->required();
    c_ev->add_option("--base", ev.base)->required();
    c_ev->add_option("--structure", ev.structure)->required();
    c_ev->add_option("--context", ev.context)->required();
    c_ev->add_option("--out", ev.out)->required();
    c_ev->add_option("--seed", ev.seed)->required();
    c_ev->add_option("--per-condition", ev.per_condition)->capture_default_str();
    c_ev->add_option("--sweep", ev.sweep, "Normalized altitudes")->capture_default_str();
    c_ev->add_option("--steps", ev.steps)->capture_default_str();
    c_ev->add_option("--switch", ev.switch_step)->capture_default_str();
    c_ev->add_option("--guidance", ev.guidance)->capture_default_str();
    c_ev->add_flag("--clip-x0,!--no-clip-x0", ev.clip_x0);
    c_ev->add_option("--sheet-columns", ev.sheet_columns)->capture_default_str();

    std::string replay_file, replay_out;
    auto* c_rp = app.add_subcommand("replay", "Re-run a stage from its run.json");
    c_rp->add_option("run_json", replay_file)->required();
    c_rp->add_option("--out", replay_out, "Write artifacts here instead");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kData;
    }

    try {
        if (*c_label)
            run_label(label);
        else if (*c_prep)
            run_prep(prep);
        else if (*c_base)
            run_train_base(base);
        else if (*c_st)
            run_train_structure(st);
        else if (*c_sw)
            run_sweep(sw);
        else if (*c_cx)
            run_train_context(cx);
        else if (*c_sa)
            run_sample(sa);
        else if (*c_ev)
            run_eval(ev);
        else if (*c_rp)
            replay(replay_file, replay_out);
    } catch (...) {
        return exit_code_of(std::current_exception());
    }
    return kOk;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"sunlit"};
    for (const auto& a : args)
        argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

} // namespace sunlit::cli
