#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "chartqa/corpus.hpp"
#include "chartqa/png_io.hpp"

using namespace chartqa;

namespace {

namespace fs = std::filesystem;

struct TempRoot {
    fs::path path;
    explicit TempRoot(const std::string& tag) {
        path = fs::temp_directory_path() / (tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempRoot() { fs::remove_all(path); }
};

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST_CASE("patch width is tied to the resolution") {
    CHECK(patch_size_for_resolution(336) == 16);
    CHECK(patch_size_for_resolution(384) == 32);
    CHECK(patch_size_for_resolution(448) == 32);
    CHECK_THROWS_AS(patch_size_for_resolution(400), ConfigError);
    CHECK_THROWS_AS(patch_size_for_resolution(0), ConfigError);
}

TEST_CASE("synthesis fills every category quota exactly") {
    TempRoot tmp("corpus_balance");
    SynthConfig cfg;
    cfg.out_dir = (tmp.path / "ds").string();
    cfg.n_per_category = 3;
    cfg.seed = 11;
    SynthResult result = synthesize_dataset(cfg);

    std::map<QACategory, int> counts;
    for (const QARecord& r : result.manifest.records) ++counts[r.category];
    CHECK(counts[QACategory::color] == 3);
    CHECK(counts[QACategory::structure] == 3);
    CHECK(counts[QACategory::textless] == 3);
    CHECK(counts[QACategory::general] == 3);
    CHECK(result.manifest.records.size() == 12);

    // Every referenced file exists and every spec loads.
    for (const QARecord& r : result.manifest.records)
        CHECK(fs::exists(fs::path(result.manifest.image_root) / r.image_ref));
    for (const ChartSpec& s : result.specs) {
        ChartSpec reread = load_spec((fs::path(cfg.out_dir) / "specs" /
                                      (s.chart_id + ".json")).string());
        CHECK(reread.chart_id == s.chart_id);
    }
    CHECK(fs::exists(fs::path(cfg.out_dir) / "synth_config.json"));

    // The manifest reloads through the canonical loader.
    DatasetManifest loaded = load_external(result.manifest_path,
                                           DatasetFormat::canonical_jsonl, true);
    REQUIRE(loaded.records.size() == result.manifest.records.size());
    for (size_t i = 0; i < loaded.records.size(); ++i) {
        CHECK(loaded.records[i].question == result.manifest.records[i].question);
        CHECK(loaded.records[i].gold_answer == result.manifest.records[i].gold_answer);
        CHECK(loaded.records[i].category == result.manifest.records[i].category);
    }
}

TEST_CASE("synthesis is byte-deterministic in the seed") {
    TempRoot tmp("corpus_det");
    SynthConfig cfg;
    cfg.n_per_category = 2;
    cfg.seed = 21;

    cfg.out_dir = (tmp.path / "a").string();
    SynthResult a = synthesize_dataset(cfg);
    cfg.out_dir = (tmp.path / "b").string();
    SynthResult b = synthesize_dataset(cfg);
    CHECK(file_bytes(a.manifest_path) == file_bytes(b.manifest_path));
    REQUIRE(!a.specs.empty());
    std::string first = a.specs[0].chart_id + ".png";
    CHECK(file_bytes(tmp.path / "a" / "images" / first) ==
          file_bytes(tmp.path / "b" / "images" / first));

    cfg.out_dir = (tmp.path / "c").string();
    cfg.seed = 22;
    SynthResult c = synthesize_dataset(cfg);
    CHECK(file_bytes(a.manifest_path) != file_bytes(c.manifest_path));
}

TEST_CASE("degenerate synthesis configs are rejected") {
    SynthConfig cfg;
    cfg.out_dir = "";
    CHECK_THROWS_AS(check_synth_config(cfg), ConfigError);
    cfg.out_dir = "somewhere";
    cfg.n_per_category = 0;
    CHECK_THROWS_AS(check_synth_config(cfg), ConfigError);
    cfg.n_per_category = 1;
    cfg.resolution = 500;
    CHECK_THROWS_AS(check_synth_config(cfg), ConfigError);
}

TEST_CASE("spec directories load sorted and reject emptiness") {
    TempRoot tmp("corpus_dir");
    GenConfig gc;
    ChartSpec s1 = generate_spec(1, gc);
    ChartSpec s2 = generate_spec(2, gc);
    save_spec(s2, (tmp.path / "b.json").string());
    save_spec(s1, (tmp.path / "a.json").string());
    std::ofstream(tmp.path / "notes.txt") << "ignored";

    std::vector<ChartSpec> specs = load_spec_dir(tmp.path.string());
    REQUIRE(specs.size() == 2);
    CHECK(specs[0].chart_id == s1.chart_id);  // a.json sorts first
    CHECK(specs[1].chart_id == s2.chart_id);

    fs::path empty_dir = tmp.path / "empty";
    fs::create_directories(empty_dir);
    CHECK_THROWS_AS(load_spec_dir(empty_dir.string()), DataError);
    CHECK_THROWS_AS(load_spec_dir((tmp.path / "missing").string()), IoError);
}

TEST_CASE("manifest records become training examples with table text") {
    TempRoot tmp("corpus_manifest");
    SynthConfig cfg;
    cfg.out_dir = (tmp.path / "ds").string();
    cfg.n_per_category = 2;
    cfg.seed = 31;
    SynthResult made = synthesize_dataset(cfg);

    std::vector<TrainExample> examples =
        corpus_from_manifest(made.manifest, (fs::path(cfg.out_dir) / "specs").string());
    REQUIRE(examples.size() == made.manifest.records.size());
    for (size_t i = 0; i < examples.size(); ++i) {
        CHECK(examples[i].prefix == made.manifest.records[i].question);
        CHECK(examples[i].target == made.manifest.records[i].gold_answer);
        CHECK(examples[i].table_text == linearize(examples[i].spec).text);
    }

    DatasetManifest broken = made.manifest;
    broken.records[0].image_ref = "images/chart_does_not_exist.png";
    CHECK_THROWS_AS(
        corpus_from_manifest(broken, (fs::path(cfg.out_dir) / "specs").string()),
        DataError);
}

TEST_CASE("re-rendering swaps the resolution but keeps the records") {
    TempRoot tmp("corpus_rerender");
    SynthConfig cfg;
    cfg.out_dir = (tmp.path / "ds").string();
    cfg.n_per_category = 1;
    cfg.seed = 41;
    SynthResult made = synthesize_dataset(cfg);

    SynthResult redone = rerender_dataset(made.manifest,
                                          (fs::path(cfg.out_dir) / "specs").string(), 384,
                                          (tmp.path / "ds384").string());
    REQUIRE(redone.manifest.records.size() == made.manifest.records.size());
    for (size_t i = 0; i < redone.manifest.records.size(); ++i) {
        CHECK(redone.manifest.records[i].question == made.manifest.records[i].question);
        CHECK(redone.manifest.records[i].gold_answer ==
              made.manifest.records[i].gold_answer);
    }
    ChartImage img = load_chart_png(
        (fs::path(redone.manifest.image_root) / redone.manifest.records[0].image_ref)
            .string());
    CHECK(img.resolution == 384);

    CHECK_THROWS_AS(
        rerender_dataset(made.manifest, (tmp.path / "nowhere").string(), 384,
                         (tmp.path / "broken").string()),
        DataError);
}
