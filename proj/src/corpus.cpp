#include "chartqa/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "chartqa/png_io.hpp"
#include "chartqa/renderer.hpp"

namespace chartqa {

namespace fs = std::filesystem;

int patch_size_for_resolution(int resolution) {
    if (resolution == 336) return 16;
    if (resolution == 384 || resolution == 448) return 32;
    throw ConfigError("unsupported resolution " + std::to_string(resolution) +
                      " (use 336, 384, or 448)");
}

void check_synth_config(const SynthConfig& config) {
    if (config.out_dir.empty()) throw ConfigError("synthesis needs an output directory");
    if (config.n_per_category < 1)
        throw ConfigError("n_per_category must be at least 1");
    patch_size_for_resolution(config.resolution);
}

namespace {

// Chart recipe biased toward one question category. Color questions need
// multiple bar series; textless value questions need unannotated bars.
GenConfig recipe_for(QACategory target) {
    GenConfig gc;
    switch (target) {
        case QACategory::color:
            gc.min_series = 2;
            gc.max_series = 3;
            gc.chart_types = {ChartType::vertical_bar, ChartType::horizontal_bar,
                              ChartType::grouped_bar};
            gc.annotate_probability = 1.0;
            break;
        case QACategory::textless:
            gc.min_series = 1;
            gc.max_series = 2;
            gc.chart_types = {ChartType::vertical_bar, ChartType::horizontal_bar,
                              ChartType::grouped_bar};
            gc.annotate_probability = 0.0;
            break;
        default:
            break;  // the default recipe serves structure and general
    }
    return gc;
}

}  // namespace

SynthResult synthesize_dataset(const SynthConfig& config) {
    check_synth_config(config);
    int patch = patch_size_for_resolution(config.resolution);

    fs::path root(config.out_dir);
    fs::create_directories(root / "images");
    fs::create_directories(root / "specs");

    const std::vector<QACategory> all_categories = {QACategory::color, QACategory::structure,
                                                    QACategory::textless, QACategory::general};
    std::map<QACategory, int> remaining;
    for (QACategory c : all_categories) remaining[c] = config.n_per_category;

    SynthResult result;
    result.manifest.name = "synthetic-" + std::to_string(config.seed);
    result.manifest.image_root = root.string();

    long long iteration = 0;
    const long long cap = 1000 + 200LL * config.n_per_category;
    while (true) {
        QACategory target = all_categories[0];
        int worst = -1;
        for (QACategory c : all_categories) {
            if (remaining[c] > worst) {
                worst = remaining[c];
                target = c;
            }
        }
        if (worst <= 0) break;
        if (++iteration > cap)
            throw DataError("category quotas not reachable after " + std::to_string(cap) +
                            " charts");

        uint64_t spec_seed = config.seed * 1000003ULL + static_cast<uint64_t>(iteration);
        ChartSpec spec = generate_spec(spec_seed, recipe_for(target));

        std::set<QACategory> wanted;
        for (QACategory c : all_categories)
            if (remaining[c] > 0) wanted.insert(c);
        std::vector<QARecord> records = make_qa_pairs(spec, wanted);

        bool used = false;
        for (QARecord& r : records) {
            if (remaining[r.category] <= 0) continue;
            --remaining[r.category];
            r.image_ref = "images/" + spec.chart_id + ".png";
            result.manifest.records.push_back(r);
            used = true;
        }
        if (!used) continue;

        ChartImage image = render(spec, config.resolution, patch);
        save_chart_png(image, (root / "images" / (spec.chart_id + ".png")).string());
        save_spec(spec, (root / "specs" / (spec.chart_id + ".json")).string());
        result.specs.push_back(std::move(spec));
    }

    result.manifest_path = (root / "manifest.jsonl").string();
    save_canonical(result.manifest, result.manifest_path);

    nlohmann::ordered_json echo{{"out_dir", config.out_dir},
                                {"n_per_category", config.n_per_category},
                                {"seed", config.seed},
                                {"resolution", config.resolution}};
    std::ofstream cfg(root / "synth_config.json", std::ios::trunc);
    if (!cfg) throw IoError("cannot write synth_config.json under \"" + config.out_dir + "\"");
    cfg << echo.dump(2) << "\n";

    return result;
}

SynthResult rerender_dataset(const DatasetManifest& manifest, const std::string& spec_root,
                             int resolution, const std::string& out_dir) {
    int patch = patch_size_for_resolution(resolution);
    if (manifest.records.empty()) throw DataError("manifest has no records to re-render");

    fs::path root(out_dir);
    fs::create_directories(root / "images");
    fs::create_directories(root / "specs");

    SynthResult result;
    result.manifest = manifest;
    result.manifest.image_root = root.string();

    std::set<std::string> done;
    for (QARecord& r : result.manifest.records) {
        std::string stem = fs::path(r.image_ref).stem().string();
        r.image_ref = "images/" + stem + ".png";
        if (!done.insert(stem).second) continue;
        fs::path spec_path = fs::path(spec_root) / (stem + ".json");
        std::error_code ec;
        if (!fs::exists(spec_path, ec))
            throw DataError("no spec \"" + spec_path.string() + "\" for image \"" + stem +
                            "\"");
        ChartSpec spec = load_spec(spec_path.string());
        ChartImage image = render(spec, resolution, patch);
        save_chart_png(image, (root / "images" / (stem + ".png")).string());
        save_spec(spec, (root / "specs" / (stem + ".json")).string());
        result.specs.push_back(std::move(spec));
    }

    result.manifest_path = (root / "manifest.jsonl").string();
    save_canonical(result.manifest, result.manifest_path);
    return result;
}

std::vector<ChartSpec> load_spec_dir(const std::string& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IoError("\"" + dir + "\" is not a directory");
    std::vector<std::string> paths;
    for (const fs::directory_entry& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".json") paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<ChartSpec> specs;
    specs.reserve(paths.size());
    for (const std::string& p : paths) specs.push_back(load_spec(p));
    if (specs.empty()) throw DataError("no spec files in \"" + dir + "\"");
    return specs;
}

std::vector<TrainExample> corpus_from_manifest(const DatasetManifest& manifest,
                                               const std::string& spec_root) {
    if (manifest.records.empty()) throw DataError("manifest has no records");
    std::map<std::string, ChartSpec> by_stem;
    std::vector<TrainExample> out;
    out.reserve(manifest.records.size());
    for (const QARecord& r : manifest.records) {
        std::string stem = fs::path(r.image_ref).stem().string();
        auto it = by_stem.find(stem);
        if (it == by_stem.end()) {
            fs::path spec_path = fs::path(spec_root) / (stem + ".json");
            std::error_code ec;
            if (!fs::exists(spec_path, ec))
                throw DataError("record \"" + r.image_ref + "\" has no spec in \"" +
                                spec_root + "\"");
            it = by_stem.emplace(stem, load_spec(spec_path.string())).first;
        }
        TrainExample ex;
        ex.spec = it->second;
        ex.prefix = r.question;
        ex.target = r.gold_answer;
        ex.table_text = linearize(it->second).text;
        out.push_back(std::move(ex));
    }
    return out;
}

}  // namespace chartqa
