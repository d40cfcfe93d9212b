// Command-line front end: exposes the processing stages (synthesis, image
// enhancement, quality scoring, parameter tuning, background clustering,
// stratified splitting, augmentation, training, weak learning, prediction,
// evaluation) as subcommands over JSON-lines manifests, plus a `pipeline`
// subcommand chaining them end to end. All randomness derives from --seed;
// reports are JSON with sorted keys so equal inputs give byte-equal output.

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "flakeseg/common.hpp"
#include "flakeseg/datasetops.hpp"
#include "flakeseg/enhance.hpp"
#include "flakeseg/grouping.hpp"
#include "flakeseg/image.hpp"
#include "flakeseg/image_io.hpp"
#include "flakeseg/manifest.hpp"
#include "flakeseg/metrics.hpp"
#include "flakeseg/pso.hpp"
#include "flakeseg/quality.hpp"
#include "flakeseg/segmath.hpp"
#include "flakeseg/synth.hpp"

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace flakeseg;

namespace {

// ---------------------------------------------------------------------------
// Sectioned key-value config file
// ---------------------------------------------------------------------------

const std::map<std::string, std::set<std::string>>& config_schema() {
    static const std::map<std::string, std::set<std::string>> schema = {
        {"enhance", {"alpha", "alpha_max", "standard_width", "standard_height"}},
        {"quality", {"lambda", "gamma_act", "grid_rows", "grid_cols", "k_g", "k_e", "tau_l",
                     "tau_u", "delta_hom", "a", "b", "c", "noise_penalty"}},
        {"pso", {"n_agents", "n_iters", "n_runs", "c1", "c2", "omega_max", "omega_min",
                 "alpha_lo", "alpha_hi"}},
        {"cluster", {"k", "k_min", "k_max", "max_iters", "tol"}},
        {"split", {"proportions", "names"}},
        {"augment", {"resize_width", "resize_height", "crop_width", "crop_height", "flip_prob",
                     "photometric_prob", "brightness_delta", "contrast_lo", "contrast_hi",
                     "saturation_lo", "saturation_hi", "hue_delta", "repeats"}},
        {"train", {"learning_rate", "momentum", "weight_decay", "batch_size", "max_iters", "beta",
                   "weak_lr", "tune_agents", "tune_iters", "tune_runs", "beta_lo", "beta_hi"}},
        {"synth", {"n_images", "width", "height", "overexposure_fraction", "overexposure_gain_lo",
                   "overexposure_gain_hi", "vignette_strength", "noise_sigma", "min_vertices",
                   "max_vertices", "min_radius_frac", "max_radius_frac", "contrast_margin"}},
        {"pipeline", {"standard_width", "standard_height", "eval_split"}},
    };
    return schema;
}

struct ConfigFile {
    std::map<std::string, std::map<std::string, std::string>> sections;

    bool has(const std::string& sec, const std::string& key) const {
        auto s = sections.find(sec);
        return s != sections.end() && s->second.count(key) > 0;
    }
    const std::string& raw(const std::string& sec, const std::string& key) const {
        return sections.at(sec).at(key);
    }
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

ConfigFile load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    ConfigFile cfg;
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw Error(path + ":" + std::to_string(line_no) + ": malformed section header");
            section = trim(t.substr(1, t.size() - 2));
            if (config_schema().find(section) == config_schema().end())
                throw Error(path + ":" + std::to_string(line_no) + ": unknown config section [" +
                            section + "]");
            continue;
        }
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw Error(path + ":" + std::to_string(line_no) + ": expected key = value");
        if (section.empty())
            throw Error(path + ":" + std::to_string(line_no) + ": key outside any section");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        if (key.empty()) throw Error(path + ":" + std::to_string(line_no) + ": empty key");
        if (!config_schema().at(section).count(key))
            throw Error(path + ":" + std::to_string(line_no) + ": unknown config key " + section +
                        "." + key);
        if (cfg.sections[section].count(key))
            throw Error(path + ":" + std::to_string(line_no) + ": duplicate key " + section + "." +
                        key);
        cfg.sections[section][key] = value;
    }
    return cfg;
}

double parse_double(const std::string& v, const std::string& what) {
    std::size_t used = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        throw Error("invalid number for " + what + ": '" + v + "'");
    }
    if (used != v.size()) throw Error("invalid number for " + what + ": '" + v + "'");
    return d;
}

long long parse_int(const std::string& v, const std::string& what) {
    std::size_t used = 0;
    long long i = 0;
    try {
        i = std::stoll(v, &used);
    } catch (const std::exception&) {
        throw Error("invalid integer for " + what + ": '" + v + "'");
    }
    if (used != v.size()) throw Error("invalid integer for " + what + ": '" + v + "'");
    return i;
}

// Effective value with flag > config > default precedence.
double pick_num(const CLI::Option* opt, double flag_value, const ConfigFile& cfg,
                const std::string& sec, const std::string& key, double fallback) {
    if (opt != nullptr && opt->count() > 0) return flag_value;
    if (cfg.has(sec, key)) return parse_double(cfg.raw(sec, key), sec + "." + key);
    return fallback;
}

int pick_int(const CLI::Option* opt, int flag_value, const ConfigFile& cfg, const std::string& sec,
             const std::string& key, int fallback) {
    if (opt != nullptr && opt->count() > 0) return flag_value;
    if (cfg.has(sec, key)) return static_cast<int>(parse_int(cfg.raw(sec, key), sec + "." + key));
    return fallback;
}

std::string pick_str(const CLI::Option* opt, const std::string& flag_value, const ConfigFile& cfg,
                     const std::string& sec, const std::string& key, const std::string& fallback) {
    if (opt != nullptr && opt->count() > 0) return flag_value;
    if (cfg.has(sec, key)) return cfg.raw(sec, key);
    return fallback;
}

std::vector<double> parse_proportions(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item), "proportions"));
    if (out.empty()) throw Error("proportions list is empty");
    return out;
}

std::vector<std::string> parse_names(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const std::string name = trim(item);
        if (name.empty()) throw Error("subset names contain an empty entry");
        out.push_back(name);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

struct Common {
    std::uint64_t seed = 0;
    int jobs = 1;
    std::string out;        // report destination; empty = stdout
    bool no_clobber = false;
    std::string config_path;
    ConfigFile cfg;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_option("--seed", c.seed, "Random seed governing all randomness");
    sub->add_option("--jobs", c.jobs, "Worker threads for per-image stages")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", c.out, "Write the JSON report here instead of stdout");
    sub->add_flag("--no-clobber", c.no_clobber, "Refuse to overwrite existing outputs");
    sub->add_option("--config", c.config_path, "Sectioned key-value config file");
}

void finish_common(Common& c) {
    if (c.config_path.empty()) {
        if (const char* env = std::getenv("FLAKESEG_CONFIG")) c.config_path = env;
    }
    if (!c.config_path.empty()) c.cfg = load_config(c.config_path);
}

void check_clobber(const std::string& path, const Common& c) {
    if (c.no_clobber && fs::exists(path)) throw Error("output already exists: " + path);
}

void emit_report(const json& report, const Common& c) {
    const std::string text = report.dump(2) + "\n";
    if (c.out.empty()) {
        std::cout << text;
    } else {
        check_clobber(c.out, c);
        atomic_write_text(c.out, text);
    }
}

// PNG writes go through a same-directory temp file + rename so a killed run
// never leaves a half-written artifact at the final path.
void save_image_atomic(const Image& img, const std::string& path, const Common& c) {
    check_clobber(path, c);
    const std::string tmp = path + ".tmp";
    save_image(img, tmp);
    fs::rename(tmp, path);
}

void save_mask_atomic(const LabelMask& mask, const std::string& path, const Common& c) {
    check_clobber(path, c);
    const std::string tmp = path + ".tmp";
    save_mask(mask, tmp);
    fs::rename(tmp, path);
}

std::string numbered(const std::string& dir, const char* stem, std::size_t i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04zu%s", stem, i, ext);
    return (fs::path(dir) / buf).string();
}

DatasetManifest load_manifest_checked(const std::string& path) {
    if (!fs::exists(path)) throw Error("manifest not found: " + path);
    return load_manifest(path);
}

// Flake classes 1..6 get distinct overlay colors; background stays as-is.
constexpr std::array<std::array<std::uint8_t, 3>, kNumClasses> kOverlayColors = {{
    {0, 0, 0},
    {230, 25, 75},
    {60, 180, 75},
    {255, 225, 25},
    {0, 130, 200},
    {245, 130, 48},
    {145, 30, 180},
}};

Image overlay_image(const Image& img, const LabelMask& mask) {
    Image out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            const int k = mask.at(x, y);
            if (k == 0) continue;
            for (int ch = 0; ch < 3; ++ch) {
                const double mixed = 0.5 * img.at(x, y, ch) + 0.5 * kOverlayColors[k][ch];
                out.at(x, y, ch) = clamp_u8(round_half_away(mixed));
            }
        }
    }
    return out;
}

json stats_to_json(const DatasetStats& stats) {
    return json{{"mean", stats.mean},
                {"median", stats.median},
                {"max_weight", stats.max_weight},
                {"zero_fraction", stats.zero_fraction}};
}

json metric_to_json(const MetricReport& report) {
    json j{{"undefined", report.undefined},
           {"pixel_accuracy", report.pixel_accuracy},
           {"pixel_accuracy_printed", report.pixel_accuracy_printed},
           {"mean_accuracy", report.mean_accuracy},
           {"miou", report.miou},
           {"precision", report.precision},
           {"recall", report.recall},
           {"f1", report.f1},
           {"f1_printed", report.f1_printed},
           {"classes", report.classes},
           {"class_iou", report.class_iou},
           {"class_accuracy", report.class_accuracy}};
    return j;
}

QualityConfig quality_config(const ConfigFile& cfg) {
    QualityConfig q;
    q.lambda = pick_num(nullptr, 0, cfg, "quality", "lambda", q.lambda);
    q.gamma_act = pick_num(nullptr, 0, cfg, "quality", "gamma_act", q.gamma_act);
    q.grid_rows = pick_int(nullptr, 0, cfg, "quality", "grid_rows", q.grid_rows);
    q.grid_cols = pick_int(nullptr, 0, cfg, "quality", "grid_cols", q.grid_cols);
    q.k_g = pick_num(nullptr, 0, cfg, "quality", "k_g", q.k_g);
    q.k_e = pick_num(nullptr, 0, cfg, "quality", "k_e", q.k_e);
    q.tau_l = pick_int(nullptr, 0, cfg, "quality", "tau_l", q.tau_l);
    q.tau_u = pick_int(nullptr, 0, cfg, "quality", "tau_u", q.tau_u);
    q.delta_hom = pick_num(nullptr, 0, cfg, "quality", "delta_hom", q.delta_hom);
    q.a = pick_num(nullptr, 0, cfg, "quality", "a", q.a);
    q.b = pick_num(nullptr, 0, cfg, "quality", "b", q.b);
    q.c = pick_num(nullptr, 0, cfg, "quality", "c", q.c);
    q.noise_penalty = pick_num(nullptr, 0, cfg, "quality", "noise_penalty", q.noise_penalty);
    return q;
}

// ---------------------------------------------------------------------------
// Stage implementations shared between single subcommands and `pipeline`
// ---------------------------------------------------------------------------

struct EnhanceOutcome {
    DatasetManifest manifest;
    json report;
};

// Enhance every image in the manifest; optionally resize images (bilinear)
// and masks (nearest) to a standard size. Writes the stage's images plus a
// manifest into `dir`.
EnhanceOutcome enhance_stage(const DatasetManifest& input, const std::string& dir, double alpha,
                             int std_w, int std_h, const Common& c) {
    if ((std_w == 0) != (std_h == 0))
        throw Error("standard width and height must be given together");
    fs::create_directories(dir);
    GammaParams params;
    params.alpha = alpha;

    const std::size_t n = input.size();
    std::vector<ManifestRecord> records(n);
    std::vector<std::array<double, 3>> before(n), after(n);
    std::vector<int> degenerate(n, 0);

    parallel_for(n, c.jobs, [&](std::size_t i) {
        const ManifestRecord& rec = input.records[i];
        const Image img = load_image(rec.image);
        EnhanceResult res = enhance_image(img, params);
        before[i] = res.saturation_before;
        after[i] = res.saturation_after;
        degenerate[i] = res.degenerate ? 1 : 0;

        Image out_img = std::move(res.image);
        if (std_w > 0 && (out_img.width != std_w || out_img.height != std_h))
            out_img = resize_bilinear(out_img, std_w, std_h);
        ManifestRecord out_rec = rec;
        out_rec.image = numbered(dir, "img", i, ".png");
        save_image_atomic(out_img, out_rec.image, c);

        if (rec.has_mask()) {
            LabelMask mask = load_mask(rec.mask);
            if (mask.width != img.width || mask.height != img.height)
                throw Error("mask dimensions do not match image for " + rec.mask);
            if (std_w > 0 && (mask.width != std_w || mask.height != std_h))
                mask = resize_nearest(mask, std_w, std_h);
            out_rec.mask = numbered(dir, "mask", i, ".png");
            save_mask_atomic(mask, out_rec.mask, c);
        }
        records[i] = std::move(out_rec);
    });

    DatasetManifest out;
    out.records = std::move(records);
    const std::string manifest_path = (fs::path(dir) / "manifest.jsonl").string();
    check_clobber(manifest_path, c);
    save_manifest(out, manifest_path);

    std::array<double, 3> mean_before{}, mean_after{};
    int degenerate_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (int ch = 0; ch < 3; ++ch) {
            mean_before[ch] += before[i][ch] / static_cast<double>(n == 0 ? 1 : n);
            mean_after[ch] += after[i][ch] / static_cast<double>(n == 0 ? 1 : n);
        }
        degenerate_count += degenerate[i];
    }
    json report{{"alpha", alpha},
                {"images", n},
                {"degenerate", degenerate_count},
                {"oversaturation_before", mean_before},
                {"oversaturation_after", mean_after},
                {"manifest", manifest_path}};
    return {std::move(out), std::move(report)};
}

struct ClusterOutcome {
    DatasetManifest manifest;
    json report;
};

ClusterOutcome cluster_stage(const DatasetManifest& input, int k, std::uint64_t seed,
                             const Common& c) {
    if (input.empty()) throw Error("cannot cluster an empty manifest");
    const std::size_t n = input.size();
    std::vector<ChromaPoint> points(n);
    parallel_for(n, c.jobs, [&](std::size_t i) {
        points[i] = chroma_features(load_image(input.records[i].image), i);
    });

    const int k_min = pick_int(nullptr, 0, c.cfg, "cluster", "k_min", 2);
    const int k_max = pick_int(nullptr, 0, c.cfg, "cluster", "k_max", 8);
    const int max_iters = pick_int(nullptr, 0, c.cfg, "cluster", "max_iters", 300);
    const double tol = pick_num(nullptr, 0, c.cfg, "cluster", "tol", 1e-6);

    const Grouping grouping = (k == 0) ? auto_cluster(points, seed, k_min, k_max)
                                       : kmeans_cluster(points, k, seed, max_iters, tol);

    std::vector<std::size_t> sizes(static_cast<std::size_t>(grouping.k), 0);
    for (int g : grouping.assignment) sizes[static_cast<std::size_t>(g)] += 1;

    json report{{"k", grouping.k},
                {"silhouette", grouping.silhouette},
                {"inertia", grouping.inertia},
                {"sizes", sizes},
                {"centroids", grouping.centroids}};
    return {assign_groups(input, grouping), std::move(report)};
}

struct SplitOutcome {
    DatasetManifest manifest;
    json report;
};

SplitOutcome split_stage(const DatasetManifest& input, const std::vector<double>& proportions,
                         const std::vector<std::string>& names, std::uint64_t seed) {
    if (names.size() != proportions.size())
        throw Error("subset names and proportions differ in count");
    const StratifiedSplit split = iterative_stratify(input, proportions, seed);
    DatasetManifest out = input;
    json subsets = json::array();
    for (std::size_t j = 0; j < split.subsets.size(); ++j) {
        for (std::size_t idx : split.subsets[j]) out.records[idx].split = names[j];
        subsets.push_back(json{{"name", names[j]},
                               {"proportion", proportions[j]},
                               {"count", split.subsets[j].size()}});
    }
    return {std::move(out), json{{"subsets", subsets}}};
}

// Evaluate a model over the given records; errors name the offending file.
ConfusionCounts eval_records(const PixelClassifier& model, const DatasetManifest& manifest,
                             const std::vector<std::size_t>& indices, const Common& c,
                             const std::string& overlay_dir) {
    std::vector<ConfusionCounts> partials(indices.size());
    parallel_for(indices.size(), c.jobs, [&](std::size_t j) {
        const ManifestRecord& rec = manifest.records[indices[j]];
        const Image img = load_image(rec.image);
        if (img.width != model.input_w || img.height != model.input_h)
            throw Error("image dimensions do not match the model for " + rec.image);
        const LabelMask truth = load_mask(rec.mask);
        if (truth.width != img.width || truth.height != img.height)
            throw Error("mask dimensions do not match image for " + rec.mask);
        const LabelMask pred = predict(model, img);
        partials[j] = confusion(pred, truth);
        if (!overlay_dir.empty())
            save_image_atomic(overlay_image(img, pred),
                              numbered(overlay_dir, "overlay", indices[j], ".png"), c);
    });
    ConfusionCounts total;
    for (const ConfusionCounts& p : partials) total += p;
    return total;
}

std::vector<std::size_t> masked_indices(const DatasetManifest& manifest, const std::string& split) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const ManifestRecord& rec = manifest.records[i];
        if (!rec.has_mask()) continue;
        if (!split.empty() && rec.split != split) continue;
        out.push_back(i);
    }
    return out;
}

TrainConfig train_config_from(const ConfigFile& cfg, int jobs) {
    TrainConfig t;
    t.learning_rate = pick_num(nullptr, 0, cfg, "train", "learning_rate", t.learning_rate);
    t.momentum = pick_num(nullptr, 0, cfg, "train", "momentum", t.momentum);
    t.weight_decay = pick_num(nullptr, 0, cfg, "train", "weight_decay", t.weight_decay);
    t.batch_size = pick_int(nullptr, 0, cfg, "train", "batch_size", t.batch_size);
    t.max_iters = pick_int(nullptr, 0, cfg, "train", "max_iters", t.max_iters);
    t.beta = pick_num(nullptr, 0, cfg, "train", "beta", t.beta);
    t.weak_lr = pick_num(nullptr, 0, cfg, "train", "weak_lr", t.weak_lr);
    t.jobs = jobs;
    return t;
}

DatasetManifest group_subset(const DatasetManifest& manifest, int group) {
    DatasetManifest out;
    for (const ManifestRecord& rec : manifest.records) {
        if (!rec.group.has_value())
            throw Error("record has no group (run `cluster` first): " + rec.image);
        if (*rec.group == group) out.records.push_back(rec);
    }
    if (out.empty()) throw Error("no records in group " + std::to_string(group));
    return out;
}

double final_loss(const std::vector<double>& history) {
    return history.empty() ? 0.0 : history.back();
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int run_synth(const SynthConfig& synth_cfg, const std::string& dir, const Common& c) {
    fs::create_directories(dir);
    const std::string manifest_path = (fs::path(dir) / "manifest.jsonl").string();
    check_clobber(manifest_path, c);
    const DatasetManifest manifest = generate_corpus(synth_cfg, dir);
    const DatasetStats stats = dataset_stats(manifest);
    json report{{"images", manifest.size()},
                {"dir", dir},
                {"manifest", manifest_path},
                {"class_mean_weights", stats.mean}};
    emit_report(report, c);
    return 0;
}

int run_stats(const std::string& manifest_path, const Common& c) {
    const DatasetManifest manifest = load_manifest_checked(manifest_path);
    json report = stats_to_json(dataset_stats(manifest));
    report["images"] = manifest.size();
    emit_report(report, c);
    return 0;
}

int run_quality(const std::string& image_path, const std::string& manifest_path, const Common& c) {
    const QualityConfig qcfg = quality_config(c.cfg);
    json items = json::array();
    double mean_score = 0.0;
    std::vector<std::string> paths;
    if (!image_path.empty()) {
        paths.push_back(image_path);
    } else {
        const DatasetManifest manifest = load_manifest_checked(manifest_path);
        if (manifest.empty()) throw Error("manifest is empty: " + manifest_path);
        for (const ManifestRecord& rec : manifest.records) paths.push_back(rec.image);
    }
    std::vector<QualityReport> reports(paths.size());
    parallel_for(paths.size(), c.jobs,
                 [&](std::size_t i) { reports[i] = quality_score(load_image(paths[i]), qcfg); });
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const QualityReport& q = reports[i];
        items.push_back(json{{"image", paths[i]},
                             {"m_gradient", q.m_gradient},
                             {"m_entropy", q.m_entropy},
                             {"m_noise", q.m_noise},
                             {"score", q.score},
                             {"gradient_degenerate", q.gradient_degenerate},
                             {"noise_mask_empty", q.noise_mask_empty}});
        mean_score += q.score / static_cast<double>(paths.size());
    }
    emit_report(json{{"items", items}, {"mean_score", mean_score}}, c);
    return 0;
}

int run_enhance(const std::string& manifest_path, const std::string& dir, double alpha, int std_w,
                int std_h, const Common& c) {
    const DatasetManifest manifest = load_manifest_checked(manifest_path);
    EnhanceOutcome outcome = enhance_stage(manifest, dir, alpha, std_w, std_h, c);
    emit_report(outcome.report, c);
    return 0;
}

int run_tune_alpha(const std::string& manifest_path, int agents, int iters, int runs,
                   double alpha_lo, double alpha_hi, const Common& c) {
    const DatasetManifest manifest = load_manifest_checked(manifest_path);
    if (manifest.empty()) throw Error("manifest is empty: " + manifest_path);
    const QualityConfig qcfg = quality_config(c.cfg);

    std::vector<Image> images(manifest.size());
    parallel_for(manifest.size(), c.jobs,
                 [&](std::size_t i) { images[i] = load_image(manifest.records[i].image); });

    const Objective objective = [&](const std::vector<double>& pos) {
        GammaParams params;
        params.alpha = pos[0];
        double total = 0.0;
        for (const Image& img : images) {
            const EnhanceResult res = enhance_image(img, params);
            total += quality_score(res.image, qcfg).score;
        }
        return total / static_cast<double>(images.size());
    };

    SwarmConfig swarm;
    swarm.n_agents = agents;
    swarm.n_iters = iters;
    swarm.n_runs = runs;
    swarm.bounds = {{alpha_lo, alpha_hi}};
    swarm.c1 = pick_num(nullptr, 0, c.cfg, "pso", "c1", swarm.c1);
    swarm.c2 = pick_num(nullptr, 0, c.cfg, "pso", "c2", swarm.c2);
    swarm.omega_max = pick_num(nullptr, 0, c.cfg, "pso", "omega_max", swarm.omega_max);
    swarm.omega_min = pick_num(nullptr, 0, c.cfg, "pso", "omega_min", swarm.omega_min);
    swarm.seed = c.seed;
    swarm.maximize = true;
    swarm.jobs = c.jobs;

    const SwarmResult result = optimize(objective, swarm);
    json runs_json = json::array();
    for (std::size_t r = 0; r < result.run_best_values.size(); ++r) {
        runs_json.push_back(json{{"alpha", result.run_best_positions[r][0]},
                                 {"score", result.run_best_values[r]}});
    }
    emit_report(json{{"alpha", result.best_position[0]},
                     {"score", result.best_value},
                     {"history", result.run_histories[static_cast<std::size_t>(result.best_run)]},
                     {"best_run", result.best_run},
                     {"runs", runs_json}},
                c);
    return 0;
}

int run_cluster(const std::string& manifest_path, int k, const std::string& out_manifest,
                const Common& c) {
    const DatasetManifest manifest = load_manifest_checked(manifest_path);
    ClusterOutcome outcome = cluster_stage(manifest, k, c.seed, c);
    const std::string dest = out_manifest.empty() ? manifest_path : out_manifest;
    if (dest != manifest_path) check_clobber(dest, c);
    save_manifest(outcome.manifest, dest);
    outcome.report["manifest"] = dest;
    emit_report(outcome.report, c);
    return 0;
}

int run_split(const std::string& manifest_path, const std::string& proportions_str,
              const std::string& names_str, const std::string& out_manifest, const Common& c) {
    const DatasetManifest manifest = load_manifest_checked(manifest_path);
    const std::vector<double> proportions = parse_proportions(proportions_str);
    std::vector<std::string> names;
    if (!names_str.empty()) {
        names = parse_names(names_str);
    } else if (proportions.size() == 2) {
        names = {"train", "val"};
    } else if (proportions.size() == 3) {
        names = {"train", "val", "test"};
    } else {
        for (std::size_t j = 0; j < proportions.size(); ++j)
            names.push_back("subset" + std::to_string(j));
    }
    SplitOutcome outcome = split_stage(manifest, proportions, names, c.seed);
    const std::string dest = out_manifest.empty() ? manifest_path : out_manifest;
    if (dest != manifest_path) check_clobber(dest, c);
    save_manifest(outcome.manifest, dest);
    outcome.report["manifest"] = dest;
    emit_report(outcome.report, c);
    return 0;
}

int run_augment(const std::string& manifest_path, const std::string& dir, int repeats,
                const std::string& split, const AugmentConfig& aug, const Common& c) {
    if (repeats < 1) throw Error("repeats must be at least 1");
    const DatasetManifest manifest = load_manifest_checked(manifest_path);
    fs::create_directories(dir);

    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        const ManifestRecord& rec = manifest.records[i];
        if (!rec.has_mask()) continue;
        if (!split.empty() && rec.split != split) continue;
        chosen.push_back(i);
    }

    DatasetManifest out = manifest;
    std::vector<std::vector<ManifestRecord>> extra(chosen.size());
    parallel_for(chosen.size(), c.jobs, [&](std::size_t j) {
        const std::size_t i = chosen[j];
        const ManifestRecord& rec = manifest.records[i];
        const Image img = load_image(rec.image);
        const LabelMask mask = load_mask(rec.mask);
        for (int r = 0; r < repeats; ++r) {
            Rng rng(mix_seed(c.seed, {0x617567u, static_cast<std::uint64_t>(i),
                                      static_cast<std::uint64_t>(r)}));
            const auto [aug_img, aug_mask] = augment(img, mask, aug, rng);
            char buf[64];
            std::snprintf(buf, sizeof(buf), "aug_%04zu_r%02d", i, r);
            ManifestRecord aug_rec = rec;
            aug_rec.image = (fs::path(dir) / (std::string(buf) + ".png")).string();
            aug_rec.mask = (fs::path(dir) / (std::string(buf) + "_mask.png")).string();
            save_image_atomic(aug_img, aug_rec.image, c);
            save_mask_atomic(aug_mask, aug_rec.mask, c);
            extra[j].push_back(std::move(aug_rec));
        }
    });
    std::size_t written = 0;
    for (std::vector<ManifestRecord>& recs : extra) {
        written += recs.size();
        for (ManifestRecord& rec : recs) out.records.push_back(std::move(rec));
    }

    const std::string out_manifest = (fs::path(dir) / "manifest.jsonl").string();
    check_clobber(out_manifest, c);
    save_manifest(out, out_manifest);
    emit_report(json{{"augmented", written},
                     {"source_records", chosen.size()},
                     {"manifest", out_manifest}},
                c);
    return 0;
}

int run_train(const std::string& manifest_path, const std::string& model_out, TrainConfig tcfg,
              bool tune_beta, const std::string& tune_split, const Common& c) {
    const DatasetManifest manifest = load_manifest_checked(manifest_path);
    json report;

    if (tune_beta) {
        const std::vector<std::size_t> val_indices = masked_indices(manifest, tune_split);
        if (val_indices.empty())
            throw Error("beta tuning needs records with masks in split '" + tune_split + "'");
        const Objective objective = [&](const std::vector<double>& pos) {
            TrainConfig probe = tcfg;
            probe.beta = pos[0];
            const TrainResult probe_result = train(manifest, probe, c.seed);
            const ConfusionCounts counts =
                eval_records(probe_result.model, manifest, val_indices, c, "");
            const MetricReport m = evaluate(counts);
            return m.undefined ? 0.0 : m.miou;
        };
        SwarmConfig swarm;
        swarm.n_agents = pick_int(nullptr, 0, c.cfg, "train", "tune_agents", 6);
        swarm.n_iters = pick_int(nullptr, 0, c.cfg, "train", "tune_iters", 8);
        swarm.n_runs = pick_int(nullptr, 0, c.cfg, "train", "tune_runs", 1);
        swarm.bounds = {{pick_num(nullptr, 0, c.cfg, "train", "beta_lo", 0.0),
                         pick_num(nullptr, 0, c.cfg, "train", "beta_hi", 2.0)}};
        swarm.seed = mix_seed(c.seed, {0x62657461u});
        swarm.maximize = true;
        const SwarmResult tuned = optimize(objective, swarm);
        tcfg.beta = tuned.best_position[0];
        report["beta_tuned"] = tcfg.beta;
        report["beta_score"] = tuned.best_value;
    }

    const TrainResult result = train(manifest, tcfg, c.seed);
    check_clobber(model_out, c);
    save_model(result.model, model_out);
    report["model"] = model_out;
    report["iterations"] = result.loss_history.size();
    report["final_loss"] = final_loss(result.loss_history);
    report["beta"] = tcfg.beta;
    report["class_weights"] = result.class_weights_used;
    emit_report(report, c);
    return 0;
}

int run_weaklearn(const std::string& manifest_path, const std::string& model_path, int group,
                  const std::string& model_out, TrainConfig tcfg, const Common& c) {
    const DatasetManifest manifest = load_manifest_checked(manifest_path);
    const PixelClassifier base = load_model(model_path);
    const DatasetManifest subset = group_subset(manifest, group);
    const WeakResult result =
        weak_learn(base, subset, tcfg, mix_seed(c.seed, {0x776bu, static_cast<std::uint64_t>(group)}));
    check_clobber(model_out, c);
    save_model(result.model, model_out);
    emit_report(json{{"group", group},
                     {"model", model_out},
                     {"weak_lr", tcfg.weak_lr},
                     {"param_delta", result.param_delta},
                     {"iterations", result.loss_history.size()},
                     {"final_loss", final_loss(result.loss_history)}},
                c);
    return 0;
}

int run_predict(const std::string& manifest_path, const std::string& model_path,
                const std::string& dir, const std::string& overlays, const Common& c) {
    const DatasetManifest manifest = load_manifest_checked(manifest_path);
    const PixelClassifier model = load_model(model_path);
    fs::create_directories(dir);
    if (!overlays.empty()) fs::create_directories(overlays);

    parallel_for(manifest.size(), c.jobs, [&](std::size_t i) {
        const ManifestRecord& rec = manifest.records[i];
        const Image img = load_image(rec.image);
        if (img.width != model.input_w || img.height != model.input_h)
            throw Error("image dimensions do not match the model for " + rec.image);
        const LabelMask pred = predict(model, img);
        save_mask_atomic(pred, numbered(dir, "pred", i, ".png"), c);
        if (!overlays.empty())
            save_image_atomic(overlay_image(img, pred), numbered(overlays, "overlay", i, ".png"),
                              c);
    });
    emit_report(json{{"images", manifest.size()}, {"dir", dir}}, c);
    return 0;
}

int run_eval(const std::string& manifest_path, const std::string& model_path,
             const std::string& split, const std::string& overlays, const Common& c) {
    const DatasetManifest manifest = load_manifest_checked(manifest_path);
    const PixelClassifier model = load_model(model_path);
    const std::vector<std::size_t> indices = masked_indices(manifest, split);
    if (indices.empty())
        throw Error(split.empty() ? "no records with masks to evaluate"
                                  : "no records with masks in split '" + split + "'");
    if (!overlays.empty()) fs::create_directories(overlays);
    const ConfusionCounts counts = eval_records(model, manifest, indices, c, overlays);
    json report = metric_to_json(evaluate(counts));
    report["images"] = indices.size();
    report["total_pixels"] = counts.total_pixels;
    emit_report(report, c);
    return 0;
}

// The whole flow in order: enhance + standardize, cluster backgrounds,
// stratified split, train the shared model, weak-learn one model per group,
// evaluate each group's model on its own held-out records.
int run_pipeline(const std::string& manifest_path, const std::string& workdir, double alpha,
                 int std_w, int std_h, int k, const std::string& proportions_str,
                 const std::string& eval_split, TrainConfig tcfg, const std::string& overlays,
                 const Common& c) {
    const DatasetManifest input = load_manifest_checked(manifest_path);
    if (input.empty()) throw Error("manifest is empty: " + manifest_path);
    fs::create_directories(workdir);
    json report;

    // Stage 1: enhancement + standardization.
    EnhanceOutcome enhanced = enhance_stage(input, (fs::path(workdir) / "enhanced").string(),
                                            alpha, std_w, std_h, c);
    report["enhance"] = enhanced.report;

    // Stage 2: background grouping.
    ClusterOutcome grouped = cluster_stage(enhanced.manifest, k, mix_seed(c.seed, {1}), c);
    report["cluster"] = grouped.report;

    // Stage 3: stratified split.
    const std::vector<double> proportions = parse_proportions(proportions_str);
    std::vector<std::string> names;
    if (proportions.size() == 2) {
        names = {"train", "val"};
    } else if (proportions.size() == 3) {
        names = {"train", "val", "test"};
    } else {
        for (std::size_t j = 0; j < proportions.size(); ++j)
            names.push_back("subset" + std::to_string(j));
    }
    SplitOutcome split = split_stage(grouped.manifest, proportions, names, mix_seed(c.seed, {2}));
    report["split"] = split.report;

    const std::string annotated_path = (fs::path(workdir) / "manifest.jsonl").string();
    check_clobber(annotated_path, c);
    save_manifest(split.manifest, annotated_path);
    report["manifest"] = annotated_path;

    // Stage 4: shared model on the train split of all groups.
    const TrainResult base = train(split.manifest, tcfg, mix_seed(c.seed, {3}));
    const std::string base_model_path = (fs::path(workdir) / "model.json").string();
    check_clobber(base_model_path, c);
    save_model(base.model, base_model_path);
    report["train"] = json{{"model", base_model_path},
                           {"iterations", base.loss_history.size()},
                           {"final_loss", final_loss(base.loss_history)},
                           {"beta", tcfg.beta},
                           {"class_weights", base.class_weights_used}};

    // Stage 5 + 6: per-group weak learning and evaluation.
    const int n_groups = grouped.report.at("k").get<int>();
    json weak_json = json::array();
    json eval_json = json::array();
    ConfusionCounts overall;
    const std::string overlay_dir = overlays.empty() ? "" : overlays;
    if (!overlay_dir.empty()) fs::create_directories(overlay_dir);
    for (int g = 0; g < n_groups; ++g) {
        const DatasetManifest subset = group_subset(split.manifest, g);
        const WeakResult weak = weak_learn(base.model, subset, tcfg,
                                           mix_seed(c.seed, {4, static_cast<std::uint64_t>(g)}));
        char buf[48];
        std::snprintf(buf, sizeof(buf), "model_group_%d.json", g);
        const std::string group_model_path = (fs::path(workdir) / buf).string();
        check_clobber(group_model_path, c);
        save_model(weak.model, group_model_path);
        weak_json.push_back(json{{"group", g},
                                 {"model", group_model_path},
                                 {"param_delta", weak.param_delta},
                                 {"final_loss", final_loss(weak.loss_history)}});

        std::vector<std::size_t> indices;
        for (std::size_t i = 0; i < split.manifest.size(); ++i) {
            const ManifestRecord& rec = split.manifest.records[i];
            if (!rec.has_mask() || !rec.group.has_value() || *rec.group != g) continue;
            if (!eval_split.empty() && rec.split != eval_split) continue;
            indices.push_back(i);
        }
        json group_eval{{"group", g}, {"images", indices.size()}};
        if (!indices.empty()) {
            const ConfusionCounts counts =
                eval_records(weak.model, split.manifest, indices, c, overlay_dir);
            overall += counts;
            group_eval["metrics"] = metric_to_json(evaluate(counts));
        }
        eval_json.push_back(std::move(group_eval));
    }
    report["weaklearn"] = weak_json;
    report["eval"] = json{{"per_group", eval_json}, {"overall", metric_to_json(evaluate(overall))}};
    report["workdir"] = workdir;
    report["images"] = input.size();

    emit_report(report, c);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Microscope flake segmentation toolkit"};
    app.require_subcommand(1);

    // synth ------------------------------------------------------------
    Common synth_common;
    std::string synth_dir;
    SynthConfig synth_flags;
    CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
    add_common(synth_cmd, synth_common);
    synth_cmd->add_option("--dir", synth_dir, "Output directory")->required();
    auto* o_synth_n = synth_cmd->add_option("--n", synth_flags.n_images, "Number of images");
    auto* o_synth_w = synth_cmd->add_option("--width", synth_flags.width, "Image width");
    auto* o_synth_h = synth_cmd->add_option("--height", synth_flags.height, "Image height");
    auto* o_synth_noise =
        synth_cmd->add_option("--noise-sigma", synth_flags.noise_sigma, "Gaussian noise level");
    auto* o_synth_vig = synth_cmd->add_option("--vignette", synth_flags.vignette_strength,
                                              "Corner darkening strength [0,1)");
    auto* o_synth_over = synth_cmd->add_option(
        "--overexposure-fraction", synth_flags.overexposure_fraction, "Share of bright images");
    auto* o_synth_glo = synth_cmd->add_option("--gain-lo", synth_flags.overexposure_gain_lo,
                                              "Lower luma gain for bright images");
    auto* o_synth_ghi = synth_cmd->add_option("--gain-hi", synth_flags.overexposure_gain_hi,
                                              "Upper luma gain for bright images");

    // stats ------------------------------------------------------------
    Common stats_common;
    std::string stats_manifest;
    CLI::App* stats_cmd = app.add_subcommand("stats", "Class-weight statistics of a corpus");
    add_common(stats_cmd, stats_common);
    stats_cmd->add_option("--manifest", stats_manifest, "Input manifest")->required();

    // enhance ----------------------------------------------------------
    Common enh_common;
    std::string enh_manifest, enh_dir;
    double enh_alpha = 0.0;
    int enh_std_w = 0, enh_std_h = 0;
    CLI::App* enh_cmd = app.add_subcommand("enhance", "Adaptive gamma correction over a corpus");
    add_common(enh_cmd, enh_common);
    enh_cmd->add_option("--manifest", enh_manifest, "Input manifest")->required();
    enh_cmd->add_option("--dir", enh_dir, "Output directory")->required();
    auto* o_enh_alpha = enh_cmd->add_option("--alpha", enh_alpha, "Correction strength");
    auto* o_enh_sw =
        enh_cmd->add_option("--standard-width", enh_std_w, "Resize output to this width");
    auto* o_enh_sh =
        enh_cmd->add_option("--standard-height", enh_std_h, "Resize output to this height");

    // quality ----------------------------------------------------------
    Common qual_common;
    std::string qual_image, qual_manifest;
    CLI::App* qual_cmd = app.add_subcommand("quality", "Noise-aware quality score");
    add_common(qual_cmd, qual_common);
    auto* o_qual_img = qual_cmd->add_option("--image", qual_image, "Score a single image");
    auto* o_qual_man = qual_cmd->add_option("--manifest", qual_manifest, "Score a whole corpus");

    // tune-alpha ---------------------------------------------------------
    Common tune_common;
    std::string tune_manifest;
    int tune_agents = 0, tune_iters = 0, tune_runs = 0;
    double tune_lo = 0.0, tune_hi = 0.0;
    CLI::App* tune_cmd =
        app.add_subcommand("tune-alpha", "Swarm-optimize the correction strength");
    add_common(tune_cmd, tune_common);
    tune_cmd->add_option("--manifest", tune_manifest, "Input manifest")->required();
    auto* o_tune_agents = tune_cmd->add_option("--agents", tune_agents, "Swarm size");
    auto* o_tune_iters = tune_cmd->add_option("--iters", tune_iters, "Iterations per run");
    auto* o_tune_runs = tune_cmd->add_option("--runs", tune_runs, "Independent runs");
    auto* o_tune_lo = tune_cmd->add_option("--alpha-lo", tune_lo, "Lower search bound");
    auto* o_tune_hi = tune_cmd->add_option("--alpha-hi", tune_hi, "Upper search bound");

    // cluster ------------------------------------------------------------
    Common clus_common;
    std::string clus_manifest, clus_out_manifest;
    int clus_k = 0;
    CLI::App* clus_cmd =
        app.add_subcommand("cluster", "Group images by background chroma (k-means)");
    add_common(clus_cmd, clus_common);
    clus_cmd->add_option("--manifest", clus_manifest, "Input manifest")->required();
    auto* o_clus_k = clus_cmd->add_option("--k", clus_k, "Group count; 0 = silhouette-chosen");
    clus_cmd->add_option("--out-manifest", clus_out_manifest,
                         "Write the annotated manifest here instead of in place");

    // split --------------------------------------------------------------
    Common split_common;
    std::string split_manifest, split_props, split_names, split_out_manifest;
    CLI::App* split_cmd =
        app.add_subcommand("split", "Stratified subset assignment over label sets");
    add_common(split_cmd, split_common);
    split_cmd->add_option("--manifest", split_manifest, "Input manifest")->required();
    auto* o_split_props =
        split_cmd->add_option("--proportions", split_props, "Comma list, must sum to 1");
    auto* o_split_names = split_cmd->add_option("--names", split_names, "Comma list of names");
    split_cmd->add_option("--out-manifest", split_out_manifest,
                          "Write the annotated manifest here instead of in place");

    // augment ------------------------------------------------------------
    Common aug_common;
    std::string aug_manifest, aug_dir, aug_split = "train";
    int aug_repeats = 0;
    AugmentConfig aug_flags;
    CLI::App* aug_cmd = app.add_subcommand("augment", "Write augmented copies of labeled records");
    add_common(aug_cmd, aug_common);
    aug_cmd->add_option("--manifest", aug_manifest, "Input manifest")->required();
    aug_cmd->add_option("--dir", aug_dir, "Output directory")->required();
    auto* o_aug_repeats = aug_cmd->add_option("--repeats", aug_repeats, "Copies per record");
    aug_cmd->add_option("--split", aug_split, "Only records in this split ('' = all)")
        ->capture_default_str();

    // train --------------------------------------------------------------
    Common train_common;
    std::string train_manifest, train_model_out, train_tune_split = "val";
    int train_iters = 0, train_batch = 0;
    double train_lr = 0.0, train_beta = 0.0;
    bool train_tune_beta = false;
    CLI::App* train_cmd = app.add_subcommand("train", "Fit the pixel classifier on the train split");
    add_common(train_cmd, train_common);
    train_cmd->add_option("--manifest", train_manifest, "Input manifest")->required();
    train_cmd->add_option("--model-out", train_model_out, "Model JSON destination")->required();
    auto* o_train_iters = train_cmd->add_option("--iters", train_iters, "SGD iterations");
    auto* o_train_batch = train_cmd->add_option("--batch", train_batch, "Batch size");
    auto* o_train_lr = train_cmd->add_option("--lr", train_lr, "Learning rate");
    auto* o_train_beta = train_cmd->add_option("--beta", train_beta, "Loss adjustment factor");
    train_cmd->add_flag("--tune-beta", train_tune_beta,
                        "Swarm-optimize beta against held-out mean IoU first");
    train_cmd->add_option("--tune-split", train_tune_split, "Held-out split for beta tuning")
        ->capture_default_str();

    // weaklearn ------------------------------------------------------------
    Common weak_common;
    std::string weak_manifest, weak_model, weak_model_out;
    int weak_group = 0, weak_iters = 0;
    double weak_lr_flag = 0.0;
    CLI::App* weak_cmd =
        app.add_subcommand("weaklearn", "Fine-tune a model copy on one group at a near-zero rate");
    add_common(weak_cmd, weak_common);
    weak_cmd->add_option("--manifest", weak_manifest, "Input manifest")->required();
    weak_cmd->add_option("--model", weak_model, "Base model JSON")->required();
    weak_cmd->add_option("--group", weak_group, "Group index to adapt to")->required();
    weak_cmd->add_option("--model-out", weak_model_out, "Adapted model destination")->required();
    auto* o_weak_lr = weak_cmd->add_option("--weak-lr", weak_lr_flag, "Fine-tuning rate");
    auto* o_weak_iters = weak_cmd->add_option("--iters", weak_iters, "SGD iterations");

    // predict ------------------------------------------------------------
    Common pred_common;
    std::string pred_manifest, pred_model, pred_dir, pred_overlays;
    CLI::App* pred_cmd = app.add_subcommand("predict", "Write predicted masks for a corpus");
    add_common(pred_cmd, pred_common);
    pred_cmd->add_option("--manifest", pred_manifest, "Input manifest")->required();
    pred_cmd->add_option("--model", pred_model, "Model JSON")->required();
    pred_cmd->add_option("--dir", pred_dir, "Output directory")->required();
    pred_cmd->add_option("--overlays", pred_overlays, "Also write color overlays here");

    // eval ---------------------------------------------------------------
    Common eval_common;
    std::string eval_manifest, eval_model, eval_split_name, eval_overlays;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Segmentation metrics against ground truth");
    add_common(eval_cmd, eval_common);
    eval_cmd->add_option("--manifest", eval_manifest, "Input manifest")->required();
    eval_cmd->add_option("--model", eval_model, "Model JSON")->required();
    eval_cmd->add_option("--split", eval_split_name, "Only records in this split ('' = all)");
    eval_cmd->add_option("--overlays", eval_overlays, "Also write color overlays here");

    // pipeline -------------------------------------------------------------
    Common pipe_common;
    std::string pipe_manifest, pipe_workdir, pipe_props, pipe_eval_split, pipe_overlays;
    double pipe_alpha = 0.0;
    int pipe_std_w = 0, pipe_std_h = 0, pipe_k = 0, pipe_iters = 0;
    CLI::App* pipe_cmd = app.add_subcommand(
        "pipeline", "Enhance, standardize, cluster, split, train, weak-learn, evaluate");
    add_common(pipe_cmd, pipe_common);
    pipe_cmd->add_option("--manifest", pipe_manifest, "Input manifest")->required();
    pipe_cmd->add_option("--workdir", pipe_workdir, "Directory for stage artifacts")->required();
    auto* o_pipe_alpha = pipe_cmd->add_option("--alpha", pipe_alpha, "Correction strength");
    auto* o_pipe_sw = pipe_cmd->add_option("--standard-width", pipe_std_w, "Standardized width");
    auto* o_pipe_sh = pipe_cmd->add_option("--standard-height", pipe_std_h, "Standardized height");
    auto* o_pipe_k = pipe_cmd->add_option("--k", pipe_k, "Group count; 0 = silhouette-chosen");
    auto* o_pipe_props =
        pipe_cmd->add_option("--proportions", pipe_props, "Split proportions, comma list");
    auto* o_pipe_eval = pipe_cmd->add_option("--eval-split", pipe_eval_split, "Split to score");
    auto* o_pipe_iters = pipe_cmd->add_option("--train-iters", pipe_iters, "SGD iterations");
    pipe_cmd->add_option("--overlays", pipe_overlays, "Also write color overlays here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (app.got_subcommand(synth_cmd)) {
            finish_common(synth_common);
            const ConfigFile& cfg = synth_common.cfg;
            SynthConfig s;
            s.n_images = pick_int(o_synth_n, synth_flags.n_images, cfg, "synth", "n_images", s.n_images);
            s.width = pick_int(o_synth_w, synth_flags.width, cfg, "synth", "width", s.width);
            s.height = pick_int(o_synth_h, synth_flags.height, cfg, "synth", "height", s.height);
            s.noise_sigma = pick_num(o_synth_noise, synth_flags.noise_sigma, cfg, "synth",
                                     "noise_sigma", s.noise_sigma);
            s.vignette_strength = pick_num(o_synth_vig, synth_flags.vignette_strength, cfg, "synth",
                                           "vignette_strength", s.vignette_strength);
            s.overexposure_fraction = pick_num(o_synth_over, synth_flags.overexposure_fraction, cfg,
                                               "synth", "overexposure_fraction", s.overexposure_fraction);
            s.overexposure_gain_lo = pick_num(o_synth_glo, synth_flags.overexposure_gain_lo, cfg,
                                              "synth", "overexposure_gain_lo", s.overexposure_gain_lo);
            s.overexposure_gain_hi = pick_num(o_synth_ghi, synth_flags.overexposure_gain_hi, cfg,
                                              "synth", "overexposure_gain_hi", s.overexposure_gain_hi);
            s.min_vertices = pick_int(nullptr, 0, cfg, "synth", "min_vertices", s.min_vertices);
            s.max_vertices = pick_int(nullptr, 0, cfg, "synth", "max_vertices", s.max_vertices);
            s.min_radius_frac = pick_num(nullptr, 0, cfg, "synth", "min_radius_frac", s.min_radius_frac);
            s.max_radius_frac = pick_num(nullptr, 0, cfg, "synth", "max_radius_frac", s.max_radius_frac);
            s.contrast_margin = pick_num(nullptr, 0, cfg, "synth", "contrast_margin", s.contrast_margin);
            s.seed = synth_common.seed;
            s.jobs = synth_common.jobs;
            return run_synth(s, synth_dir, synth_common);
        }
        if (app.got_subcommand(stats_cmd)) {
            finish_common(stats_common);
            return run_stats(stats_manifest, stats_common);
        }
        if (app.got_subcommand(enh_cmd)) {
            finish_common(enh_common);
            const ConfigFile& cfg = enh_common.cfg;
            const double alpha = pick_num(o_enh_alpha, enh_alpha, cfg, "enhance", "alpha", 0.561);
            const int sw = pick_int(o_enh_sw, enh_std_w, cfg, "enhance", "standard_width", 0);
            const int sh = pick_int(o_enh_sh, enh_std_h, cfg, "enhance", "standard_height", 0);
            return run_enhance(enh_manifest, enh_dir, alpha, sw, sh, enh_common);
        }
        if (app.got_subcommand(qual_cmd)) {
            finish_common(qual_common);
            if ((o_qual_img->count() > 0) == (o_qual_man->count() > 0))
                throw Error("quality needs exactly one of --image or --manifest");
            return run_quality(qual_image, qual_manifest, qual_common);
        }
        if (app.got_subcommand(tune_cmd)) {
            finish_common(tune_common);
            const ConfigFile& cfg = tune_common.cfg;
            const int agents = pick_int(o_tune_agents, tune_agents, cfg, "pso", "n_agents", 20);
            const int iters = pick_int(o_tune_iters, tune_iters, cfg, "pso", "n_iters", 30);
            const int runs = pick_int(o_tune_runs, tune_runs, cfg, "pso", "n_runs", 5);
            const double lo = pick_num(o_tune_lo, tune_lo, cfg, "pso", "alpha_lo", 1e-3);
            const double hi = pick_num(o_tune_hi, tune_hi, cfg, "pso", "alpha_hi", 10.0);
            return run_tune_alpha(tune_manifest, agents, iters, runs, lo, hi, tune_common);
        }
        if (app.got_subcommand(clus_cmd)) {
            finish_common(clus_common);
            const int k = pick_int(o_clus_k, clus_k, clus_common.cfg, "cluster", "k", 0);
            return run_cluster(clus_manifest, k, clus_out_manifest, clus_common);
        }
        if (app.got_subcommand(split_cmd)) {
            finish_common(split_common);
            const ConfigFile& cfg = split_common.cfg;
            const std::string props =
                pick_str(o_split_props, split_props, cfg, "split", "proportions", "0.75,0.25");
            const std::string names =
                pick_str(o_split_names, split_names, cfg, "split", "names", "");
            return run_split(split_manifest, props, names, split_out_manifest, split_common);
        }
        if (app.got_subcommand(aug_cmd)) {
            finish_common(aug_common);
            const ConfigFile& cfg = aug_common.cfg;
            AugmentConfig a;
            a.resize_w = pick_int(nullptr, 0, cfg, "augment", "resize_width", a.resize_w);
            a.resize_h = pick_int(nullptr, 0, cfg, "augment", "resize_height", a.resize_h);
            a.crop_w = pick_int(nullptr, 0, cfg, "augment", "crop_width", a.crop_w);
            a.crop_h = pick_int(nullptr, 0, cfg, "augment", "crop_height", a.crop_h);
            a.flip_prob = pick_num(nullptr, 0, cfg, "augment", "flip_prob", a.flip_prob);
            a.photometric_prob =
                pick_num(nullptr, 0, cfg, "augment", "photometric_prob", a.photometric_prob);
            a.brightness_delta =
                pick_num(nullptr, 0, cfg, "augment", "brightness_delta", a.brightness_delta);
            a.contrast_lo = pick_num(nullptr, 0, cfg, "augment", "contrast_lo", a.contrast_lo);
            a.contrast_hi = pick_num(nullptr, 0, cfg, "augment", "contrast_hi", a.contrast_hi);
            a.saturation_lo = pick_num(nullptr, 0, cfg, "augment", "saturation_lo", a.saturation_lo);
            a.saturation_hi = pick_num(nullptr, 0, cfg, "augment", "saturation_hi", a.saturation_hi);
            a.hue_delta = pick_num(nullptr, 0, cfg, "augment", "hue_delta", a.hue_delta);
            const int repeats = pick_int(o_aug_repeats, aug_repeats, cfg, "augment", "repeats", 1);
            return run_augment(aug_manifest, aug_dir, repeats, aug_split, a, aug_common);
        }
        if (app.got_subcommand(train_cmd)) {
            finish_common(train_common);
            TrainConfig t = train_config_from(train_common.cfg, train_common.jobs);
            if (o_train_iters->count() > 0) t.max_iters = train_iters;
            if (o_train_batch->count() > 0) t.batch_size = train_batch;
            if (o_train_lr->count() > 0) t.learning_rate = train_lr;
            if (o_train_beta->count() > 0) t.beta = train_beta;
            return run_train(train_manifest, train_model_out, t, train_tune_beta, train_tune_split,
                             train_common);
        }
        if (app.got_subcommand(weak_cmd)) {
            finish_common(weak_common);
            TrainConfig t = train_config_from(weak_common.cfg, weak_common.jobs);
            if (o_weak_lr->count() > 0) t.weak_lr = weak_lr_flag;
            if (o_weak_iters->count() > 0) t.max_iters = weak_iters;
            return run_weaklearn(weak_manifest, weak_model, weak_group, weak_model_out, t,
                                 weak_common);
        }
        if (app.got_subcommand(pred_cmd)) {
            finish_common(pred_common);
            return run_predict(pred_manifest, pred_model, pred_dir, pred_overlays, pred_common);
        }
        if (app.got_subcommand(eval_cmd)) {
            finish_common(eval_common);
            return run_eval(eval_manifest, eval_model, eval_split_name, eval_overlays, eval_common);
        }
        if (app.got_subcommand(pipe_cmd)) {
            finish_common(pipe_common);
            const ConfigFile& cfg = pipe_common.cfg;
            const double alpha = pick_num(o_pipe_alpha, pipe_alpha, cfg, "enhance", "alpha", 0.561);
            const int sw = pick_int(o_pipe_sw, pipe_std_w, cfg, "pipeline", "standard_width", 256);
            const int sh = pick_int(o_pipe_sh, pipe_std_h, cfg, "pipeline", "standard_height", 256);
            const int k = pick_int(o_pipe_k, pipe_k, cfg, "cluster", "k", 0);
            const std::string props =
                pick_str(o_pipe_props, pipe_props, cfg, "split", "proportions", "0.75,0.25");
            const std::string eval_split =
                pick_str(o_pipe_eval, pipe_eval_split, cfg, "pipeline", "eval_split", "val");
            TrainConfig t = train_config_from(cfg, pipe_common.jobs);
            if (o_pipe_iters->count() > 0) t.max_iters = pipe_iters;
            return run_pipeline(pipe_manifest, pipe_workdir, alpha, sw, sh, k, props, eval_split,
                                t, pipe_overlays, pipe_common);
        }
        throw Error("unknown subcommand");
    } catch (const std::exception& e) {
        std::cerr << "flakeseg: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
