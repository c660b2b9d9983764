#ifndef CHARTQA_CORPUS_HPP_
#define CHARTQA_CORPUS_HPP_

#include <string>
#include <vector>

#include "chartqa/dataset.hpp"
#include "chartqa/trainer.hpp"

namespace chartqa {

// On-disk dataset layout produced here and consumed by training and
// evaluation:
//   <out_dir>/images/<chart_id>.png
//   <out_dir>/specs/<chart_id>.json
//   <out_dir>/manifest.jsonl        (image_ref = "images/<chart_id>.png")
//   <out_dir>/synth_config.json
struct SynthConfig {
    std::string out_dir;
    int n_per_category = 8;
    uint64_t seed = 0;
    int resolution = 448;  // 336, 384, or 448
};

void check_synth_config(const SynthConfig& config);

struct SynthResult {
    DatasetManifest manifest;
    std::vector<ChartSpec> specs;  // every chart referenced by the manifest
    std::string manifest_path;
};

// Deterministic in (seed, n_per_category, resolution). The manifest holds
// exactly n_per_category records for each of the four question categories;
// chart recipes rotate so every category can be instantiated.
SynthResult synthesize_dataset(const SynthConfig& config);

// Renders every spec of an existing dataset at another resolution into
// <out_dir>, reusing the manifest records; for resolution-swap comparisons.
SynthResult rerender_dataset(const DatasetManifest& manifest, const std::string& spec_root,
                             int resolution, const std::string& out_dir);

// Loads every "*.json" spec in a directory, sorted by filename.
std::vector<ChartSpec> load_spec_dir(const std::string& dir);

// One training example per manifest record; the chart spec for each record is
// loaded from <spec_root>/<image stem>.json. Gold answers become targets.
std::vector<TrainExample> corpus_from_manifest(const DatasetManifest& manifest,
                                               const std::string& spec_root);

// Rendering patch width tied to resolution: 336 tiles by 16, the rest by 32.
int patch_size_for_resolution(int resolution);

}  // namespace chartqa

#endif  // CHARTQA_CORPUS_HPP_
