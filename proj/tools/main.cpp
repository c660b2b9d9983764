#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "chartqa/corpus.hpp"
#include "chartqa/evaluator.hpp"
#include "chartqa/png_io.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// Default parent for output paths when a flag is omitted.
std::string default_out_dir() {
    const char* env = std::getenv("CHARTQA_OUT_DIR");
    return env ? env : "";
}

std::string require_path(const std::string& flag_value, const std::string& fallback_name,
                         const std::string& what) {
    if (!flag_value.empty()) return flag_value;
    std::string base = default_out_dir();
    if (base.empty())
        throw chartqa::ConfigError("no " + what +
                                   " given and CHARTQA_OUT_DIR is not set");
    return (fs::path(base) / fallback_name).string();
}

// JSON config file: one document whose keys mirror the flag names. A value
// applies only when the flag was not given on the command line.
ordered_json load_config_file(const std::string& path) {
    if (path.empty()) return ordered_json::object();
    std::ifstream in(path);
    if (!in) throw chartqa::IoError("cannot read config file \"" + path + "\"");
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw chartqa::ConfigError("config file \"" + path + "\" is not valid JSON: " +
                                   e.what());
    }
}

template <typename T>
void apply_config(const ordered_json& cfg, const std::string& key, const CLI::Option* opt,
                  T& slot) {
    if (opt != nullptr && opt->count() > 0) return;  // flags win
    if (!cfg.contains(key)) return;
    try {
        slot = cfg.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw chartqa::ConfigError("config key \"" + key + "\" has the wrong type");
    }
}

void signal_to_interrupt(int) { chartqa::request_training_interrupt(); }

chartqa::DatasetManifest load_manifest(const std::string& path) {
    return chartqa::load_external(path, chartqa::DatasetFormat::canonical_jsonl,
                                  /*check_images=*/false);
}

std::string sibling_spec_root(const std::string& manifest_path) {
    return (fs::path(manifest_path).parent_path() / "specs").string();
}

struct TrainCli {
    int stage = 1;
    std::string data_dir;
    std::string init_path;
    std::string out_path;
    bool no_chart2text = false;
    std::string connector = "cross_attention";
    std::string query_source = "learned";
    int resolution = 448;
    bool resolution_given = false;
    double lr = 0.0;  // 0 = stage default
    int batch_size = 0;
    int epochs = 0;
    long long max_steps = 0;
    int merges = 48;
    uint64_t seed = 0;
    bool allow_skip_stage1 = false;
    std::string log_path;
    std::string config_path;
};

ordered_json resolved_train_json(const TrainCli& t, const chartqa::TrainConfig& cfg) {
    return ordered_json{{"command", "train"},
                        {"stage", t.stage},
                        {"data", t.data_dir},
                        {"init", t.init_path},
                        {"out", t.out_path},
                        {"use_chart_to_text", cfg.use_chart_to_text},
                        {"connector", t.connector},
                        {"query_source", t.query_source},
                        {"resolution", t.resolution},
                        {"learning_rate", cfg.learning_rate},
                        {"batch_size", cfg.batch_size},
                        {"epochs", cfg.epochs},
                        {"max_steps", cfg.max_steps},
                        {"merges", t.merges},
                        {"seed", cfg.seed},
                        {"allow_skip_stage1", cfg.allow_skip_stage1},
                        {"log", t.log_path}};
}

chartqa::Checkpoint fresh_checkpoint(const TrainCli& t,
                                     const std::vector<chartqa::TrainExample>& examples) {
    chartqa::VisionConfig vcfg;
    vcfg.patch_size = chartqa::patch_size_for_resolution(t.resolution);
    vcfg.max_resolution = 448;

    chartqa::ConnectorConfig ccfg;
    ccfg.mode = chartqa::connector_mode_from_string(t.connector);
    ccfg.query_source = chartqa::query_source_from_string(t.query_source);

    chartqa::LMConfig lcfg;

    std::vector<std::string> corpus_text;
    corpus_text.reserve(examples.size() * 3);
    for (const chartqa::TrainExample& ex : examples) {
        corpus_text.push_back(ex.prefix);
        corpus_text.push_back(ex.target);
        if (!ex.table_text.empty()) corpus_text.push_back(ex.table_text);
    }
    chartqa::Tokenizer tok = chartqa::Tokenizer::build(corpus_text, t.merges);
    return chartqa::make_checkpoint(vcfg, ccfg, lcfg, tok, t.resolution, t.seed);
}

int run_train(TrainCli& t) {
    chartqa::TrainStage stage =
        t.stage == 1 ? chartqa::TrainStage::alignment : chartqa::TrainStage::reasoning;
    chartqa::TrainConfig config = chartqa::default_train_config(stage);
    if (t.lr > 0.0) config.learning_rate = t.lr;
    if (t.batch_size > 0) config.batch_size = t.batch_size;
    if (t.epochs > 0) config.epochs = t.epochs;
    config.max_steps = t.max_steps;
    config.seed = t.seed;
    config.use_chart_to_text = !t.no_chart2text;
    config.allow_skip_stage1 = t.allow_skip_stage1;
    config.log_path = t.log_path;

    // The checkpoint fixes the image resolution before the corpus is built.
    std::optional<chartqa::Checkpoint> loaded;
    if (!t.init_path.empty()) {
        loaded = chartqa::load_checkpoint(t.init_path);
        if (t.resolution_given && t.resolution != loaded->image_resolution)
            throw chartqa::ConfigError("--resolution conflicts with the loaded checkpoint (" +
                                       std::to_string(loaded->image_resolution) + ")");
        t.resolution = loaded->image_resolution;
    }

    fs::path data_root(t.data_dir);
    std::string spec_root = (data_root / "specs").string();

    std::vector<chartqa::TrainExample> examples;
    if (t.stage == 1) {
        std::vector<chartqa::ChartSpec> specs = chartqa::load_spec_dir(spec_root);
        examples = chartqa::stage1_corpus(specs, t.resolution);
    } else {
        chartqa::DatasetManifest manifest =
            load_manifest((data_root / "manifest.jsonl").string());
        examples = chartqa::corpus_from_manifest(manifest, spec_root);
    }

    chartqa::Checkpoint init =
        loaded ? std::move(*loaded) : fresh_checkpoint(t, examples);

    std::signal(SIGINT, signal_to_interrupt);
    chartqa::clear_training_interrupt();

    chartqa::TrainRun run = t.stage == 1 ? chartqa::train_stage1(examples, config, init)
                                         : chartqa::train_stage2(examples, config, init);

    ordered_json resolved = resolved_train_json(t, config);
    if (!run.checkpoint.extra.contains("train_runs"))
        run.checkpoint.extra["train_runs"] = nlohmann::json::array();
    run.checkpoint.extra["train_runs"].push_back(nlohmann::json(resolved));

    chartqa::save_checkpoint(run.checkpoint, t.out_path);
    std::cerr << "stage " << t.stage << ": " << run.steps << " steps, final loss "
              << run.final_loss << (run.interrupted ? " (interrupted)" : "") << "\n";
    std::cerr << "checkpoint written to " << t.out_path << "\n";
    std::cerr << "resolved config: " << resolved.dump() << "\n";
    return run.interrupted ? 130 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chart question answering: synthesis, training, evaluation"};
    app.require_subcommand(1);

    // ---------------- synth ----------------
    auto* synth = app.add_subcommand("synth", "Generate a balanced synthetic dataset");
    chartqa::SynthConfig synth_cfg;
    std::string synth_config_path;
    auto* synth_out = synth->add_option("--out", synth_cfg.out_dir, "Output directory");
    auto* synth_n = synth->add_option("--n-per-category", synth_cfg.n_per_category,
                                      "Questions per category (default 8)");
    auto* synth_seed = synth->add_option("--seed", synth_cfg.seed, "Generation seed");
    auto* synth_res =
        synth->add_option("--resolution", synth_cfg.resolution, "Image resolution")
            ->check(CLI::IsMember({336, 384, 448}));
    synth->add_option("--config", synth_config_path, "JSON config file");

    // ---------------- train ----------------
    auto* train = app.add_subcommand("train", "Train stage 1 (alignment) or 2 (reasoning)");
    TrainCli tcli;
    auto* tr_stage = train->add_option("--stage", tcli.stage, "Training stage")
                         ->check(CLI::IsMember({1, 2}))
                         ->required();
    auto* tr_data = train->add_option("--data", tcli.data_dir, "Dataset directory");
    auto* tr_init = train->add_option("--init", tcli.init_path, "Initial checkpoint");
    auto* tr_out = train->add_option("--out", tcli.out_path, "Output checkpoint");
    auto* tr_noc2t = train->add_flag("--no-chart2text", tcli.no_chart2text,
                                     "Train without linearized tables");
    auto* tr_conn = train->add_option("--connector", tcli.connector, "Connector mode")
                        ->check(CLI::IsMember({"cross_attention", "mlp"}));
    auto* tr_qs = train->add_option("--query-source", tcli.query_source,
                                    "Cross-attention query source")
                      ->check(CLI::IsMember({"learned", "visual"}));
    auto* tr_res = train->add_option("--resolution", tcli.resolution, "Image resolution")
                       ->check(CLI::IsMember({336, 384, 448}));
    auto* tr_lr = train->add_option("--lr", tcli.lr, "Learning rate (default per stage)");
    auto* tr_bs = train->add_option("--batch-size", tcli.batch_size,
                                    "Batch size (default per stage)");
    auto* tr_ep = train->add_option("--epochs", tcli.epochs, "Epochs (default per stage)");
    auto* tr_ms = train->add_option("--max-steps", tcli.max_steps, "Stop after N steps");
    auto* tr_mg = train->add_option("--merges", tcli.merges,
                                    "Tokenizer merges for a fresh checkpoint");
    auto* tr_seed = train->add_option("--seed", tcli.seed, "Training seed");
    auto* tr_skip = train->add_flag("--allow-skip-stage1", tcli.allow_skip_stage1,
                                    "Let stage 2 start from an unaligned checkpoint");
    auto* tr_log = train->add_option("--log", tcli.log_path, "JSON-lines step log");
    train->add_option("--config", tcli.config_path, "JSON config file");

    // ---------------- eval ----------------
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
    std::string ev_ckpt, ev_data, ev_report, ev_engine = "oracle", ev_spec_root,
                          ev_config_path;
    bool ev_noc2t = false;
    double ev_tolerance = 0.05;
    int ev_max_len = 64;
    auto* ev_ckpt_o = eval->add_option("--ckpt", ev_ckpt, "Checkpoint path")->required();
    auto* ev_data_o = eval->add_option("--data", ev_data, "Manifest path")->required();
    auto* ev_report_o = eval->add_option("--report", ev_report, "Report output path");
    auto* ev_noc2t_o =
        eval->add_flag("--no-chart2text", ev_noc2t, "Evaluate without linearized tables");
    auto* ev_engine_o = eval->add_option("--engine", ev_engine, "Chart-to-text engine");
    auto* ev_tol_o = eval->add_option("--tolerance", ev_tolerance, "Numeric tolerance");
    auto* ev_ml_o = eval->add_option("--max-len", ev_max_len, "Answer length limit");
    auto* ev_sr_o = eval->add_option("--spec-root", ev_spec_root,
                                     "Directory of spec files for the oracle engine");
    eval->add_option("--config", ev_config_path, "JSON config file");

    // ---------------- predict ----------------
    auto* predict = app.add_subcommand("predict", "Answer one question about one image");
    std::string pr_ckpt, pr_image, pr_question, pr_engine = "oracle", pr_spec_root;
    bool pr_noc2t = false;
    predict->add_option("--ckpt", pr_ckpt, "Checkpoint path")->required();
    predict->add_option("--image", pr_image, "Chart image path")->required();
    predict->add_option("--question", pr_question, "Question text")->required();
    predict->add_flag("--no-chart2text", pr_noc2t, "Predict without a linearized table");
    predict->add_option("--engine", pr_engine, "Chart-to-text engine");
    predict->add_option("--spec-root", pr_spec_root, "Directory of spec files");

    // ---------------- chart2text ----------------
    auto* c2t = app.add_subcommand("chart2text", "Linearize a chart to its table text");
    std::string c2_spec, c2_image, c2_engine = "oracle", c2_spec_root;
    c2t->add_option("--spec", c2_spec, "Chart spec path");
    c2t->add_option("--image", c2_image, "Chart image path");
    c2t->add_option("--engine", c2_engine, "Engine for the image path");
    c2t->add_option("--spec-root", c2_spec_root, "Directory of spec files");

    // ---------------- ablate ----------------
    auto* ablate = app.add_subcommand("ablate", "Train and compare ablation variants");
    std::string ab_base, ab_data, ab_report;
    std::vector<std::string> ab_axes;
    ablate->add_option("--base", ab_base, "Base pipeline JSON config")->required();
    ablate
        ->add_option("--axes", ab_axes,
                     "Variant axes: no_chart2text, mlp_connector, vit384")
        ->delimiter(',');
    ablate->add_option("--data", ab_data, "Evaluation manifest")->required();
    auto* ab_report_o = ablate->add_option("--report", ab_report, "Report output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            ordered_json cfg = load_config_file(synth_config_path);
            apply_config(cfg, "out", synth_out, synth_cfg.out_dir);
            apply_config(cfg, "n_per_category", synth_n, synth_cfg.n_per_category);
            apply_config(cfg, "seed", synth_seed, synth_cfg.seed);
            apply_config(cfg, "resolution", synth_res, synth_cfg.resolution);
            synth_cfg.out_dir = require_path(synth_cfg.out_dir, "dataset", "--out");
            chartqa::SynthResult result = chartqa::synthesize_dataset(synth_cfg);
            std::cerr << result.manifest.records.size() << " records over "
                      << result.specs.size() << " charts -> " << result.manifest_path << "\n";
            return 0;
        }

        if (*train) {
            ordered_json cfg = load_config_file(tcli.config_path);
            apply_config(cfg, "stage", tr_stage, tcli.stage);
            apply_config(cfg, "data", tr_data, tcli.data_dir);
            apply_config(cfg, "init", tr_init, tcli.init_path);
            apply_config(cfg, "out", tr_out, tcli.out_path);
            bool cfg_noc2t = false;
            apply_config(cfg, "no_chart2text", tr_noc2t, cfg_noc2t);
            if (tr_noc2t->count() == 0 && cfg_noc2t) tcli.no_chart2text = true;
            apply_config(cfg, "connector", tr_conn, tcli.connector);
            apply_config(cfg, "query_source", tr_qs, tcli.query_source);
            apply_config(cfg, "resolution", tr_res, tcli.resolution);
            apply_config(cfg, "learning_rate", tr_lr, tcli.lr);
            apply_config(cfg, "batch_size", tr_bs, tcli.batch_size);
            apply_config(cfg, "epochs", tr_ep, tcli.epochs);
            apply_config(cfg, "max_steps", tr_ms, tcli.max_steps);
            apply_config(cfg, "merges", tr_mg, tcli.merges);
            apply_config(cfg, "seed", tr_seed, tcli.seed);
            bool cfg_skip = false;
            apply_config(cfg, "allow_skip_stage1", tr_skip, cfg_skip);
            if (tr_skip->count() == 0 && cfg_skip) tcli.allow_skip_stage1 = true;
            apply_config(cfg, "log", tr_log, tcli.log_path);
            tcli.resolution_given = tr_res->count() > 0 || cfg.contains("resolution");
            if (tcli.data_dir.empty())
                throw chartqa::ConfigError("train needs --data (or a config value)");
            tcli.out_path = require_path(tcli.out_path, "checkpoint.ckpt", "--out");
            return run_train(tcli);
        }

        if (*eval) {
            ordered_json cfg = load_config_file(ev_config_path);
            apply_config(cfg, "ckpt", ev_ckpt_o, ev_ckpt);
            apply_config(cfg, "data", ev_data_o, ev_data);
            apply_config(cfg, "report", ev_report_o, ev_report);
            bool cfg_noc2t = false;
            apply_config(cfg, "no_chart2text", ev_noc2t_o, cfg_noc2t);
            if (ev_noc2t_o->count() == 0 && cfg_noc2t) ev_noc2t = true;
            apply_config(cfg, "engine", ev_engine_o, ev_engine);
            apply_config(cfg, "tolerance", ev_tol_o, ev_tolerance);
            apply_config(cfg, "max_len", ev_ml_o, ev_max_len);
            apply_config(cfg, "spec_root", ev_sr_o, ev_spec_root);
            ev_report = require_path(ev_report, "report.json", "--report");

            chartqa::Checkpoint model = chartqa::load_checkpoint(ev_ckpt);
            chartqa::DatasetManifest manifest = load_manifest(ev_data);
            chartqa::EvalOptions options;
            options.use_chart_to_text = !ev_noc2t;
            options.engine = ev_engine;
            options.tolerance = ev_tolerance;
            options.max_len = ev_max_len;
            options.spec_root =
                ev_spec_root.empty() ? sibling_spec_root(ev_data) : ev_spec_root;
            options.extra_config = ordered_json{{"command", "eval"},
                                                {"ckpt", ev_ckpt},
                                                {"data", ev_data},
                                                {"report", ev_report}};
            chartqa::EvalReport report = chartqa::evaluate(model, manifest, options);
            chartqa::save_report(report, ev_report);
            std::cerr << chartqa::report_to_text(report);
            std::cerr << "report written to " << ev_report << "\n";
            return 0;
        }

        if (*predict) {
            chartqa::Checkpoint model = chartqa::load_checkpoint(pr_ckpt);
            chartqa::ChartImage image = chartqa::load_chart_png(pr_image);
            chartqa::EncodedChart chart;
            chart.features = model.vision.encode(image);
            if (!pr_noc2t) {
                std::string root = pr_spec_root.empty()
                                       ? fs::path(pr_image).parent_path().string()
                                       : pr_spec_root;
                chartqa::SpecResolver resolver =
                    [root](const std::string& chart_id) -> std::optional<chartqa::ChartSpec> {
                    for (const fs::path base : {fs::path(root), fs::path(root) / "..",
                                                fs::path(root) / ".." / "specs"}) {
                        fs::path candidate = base / (chart_id + ".json");
                        std::error_code ec;
                        if (fs::exists(candidate, ec))
                            return chartqa::load_spec(candidate.string());
                    }
                    return std::nullopt;
                };
                chart.table_text = chartqa::chart_to_text(image, pr_engine, resolver).text;
            }
            chartqa::Tokenizer tok = model.tokenizer();
            std::cout << chartqa::predict_answer(model, chart, pr_question, tok, !pr_noc2t)
                      << "\n";
            return 0;
        }

        if (*c2t) {
            if (c2_spec.empty() == c2_image.empty())
                throw chartqa::ConfigError("pass exactly one of --spec or --image");
            if (!c2_spec.empty()) {
                std::cout << chartqa::chart_to_text(chartqa::load_spec(c2_spec)).text << "\n";
                return 0;
            }
            chartqa::ChartImage image = chartqa::load_chart_png(c2_image);
            std::string root = c2_spec_root.empty()
                                   ? fs::path(c2_image).parent_path().string()
                                   : c2_spec_root;
            chartqa::SpecResolver resolver =
                [root](const std::string& chart_id) -> std::optional<chartqa::ChartSpec> {
                for (const fs::path base : {fs::path(root), fs::path(root) / "..",
                                            fs::path(root) / ".." / "specs"}) {
                    fs::path candidate = base / (chart_id + ".json");
                    std::error_code ec;
                    if (fs::exists(candidate, ec)) return chartqa::load_spec(candidate.string());
                }
                return std::nullopt;
            };
            std::cout << chartqa::chart_to_text(image, c2_engine, resolver).text << "\n";
            return 0;
        }

        if (*ablate) {
            ab_report = require_path(ab_report, "ablation.json", "--report");
            ordered_json base = load_config_file(ab_base);
            chartqa::DatasetManifest manifest = load_manifest(ab_data);
            std::string eval_spec_root = sibling_spec_root(ab_data);

            // Full Table-7-style procedure: each variant is its own two-stage
            // training run with one knob flipped, then one evaluation.
            auto run_variant = [&](const std::string& axis) -> chartqa::EvalReport {
                TrainCli v;
                v.data_dir = base.value("data_dir", std::string());
                if (v.data_dir.empty())
                    throw chartqa::ConfigError("base config needs data_dir");
                v.resolution = base.value("resolution", 448);
                v.connector = base.value("connector", std::string("cross_attention"));
                v.query_source = base.value("query_source", std::string("learned"));
                v.merges = base.value("merges", 48);
                v.seed = base.value("seed", static_cast<uint64_t>(0));
                bool use_c2t = base.value("use_chart_to_text", true);
                if (axis == "no_chart2text") use_c2t = false;
                if (axis == "mlp_connector") v.connector = "mlp";
                if (axis == "vit384") v.resolution = 384;

                auto stage_config = [&](int stage) {
                    chartqa::TrainStage ts = stage == 1 ? chartqa::TrainStage::alignment
                                                        : chartqa::TrainStage::reasoning;
                    chartqa::TrainConfig c = chartqa::default_train_config(ts);
                    std::string key = "stage" + std::to_string(stage);
                    if (base.contains(key)) {
                        const ordered_json& s = base.at(key);
                        c.learning_rate = s.value("learning_rate", c.learning_rate);
                        c.batch_size = s.value("batch_size", c.batch_size);
                        c.epochs = s.value("epochs", c.epochs);
                        c.max_steps = s.value("max_steps", c.max_steps);
                    }
                    c.seed = v.seed;
                    c.use_chart_to_text = use_c2t;
                    return c;
                };

                fs::path data_root(v.data_dir);
                std::string spec_root = (data_root / "specs").string();
                std::string train_data_dir = v.data_dir;
                fs::path work = fs::path(ab_report).parent_path() / ("ablate_" + axis);
                if (v.resolution != base.value("resolution", 448)) {
                    // Resolution swap re-renders both the training charts and
                    // the evaluation images at the variant resolution.
                    chartqa::DatasetManifest train_manifest = load_manifest(
                        (data_root / "manifest.jsonl").string());
                    chartqa::SynthResult redone = chartqa::rerender_dataset(
                        train_manifest, spec_root, v.resolution, (work / "train").string());
                    train_data_dir = (work / "train").string();
                }

                fs::path td(train_data_dir);
                std::vector<chartqa::ChartSpec> specs =
                    chartqa::load_spec_dir((td / "specs").string());
                std::vector<chartqa::TrainExample> s1 =
                    chartqa::stage1_corpus(specs, v.resolution);
                chartqa::Checkpoint init = fresh_checkpoint(v, s1);
                chartqa::TrainRun r1 = chartqa::train_stage1(s1, stage_config(1), init);

                chartqa::DatasetManifest train_manifest =
                    load_manifest((td / "manifest.jsonl").string());
                std::vector<chartqa::TrainExample> s2 =
                    chartqa::corpus_from_manifest(train_manifest, (td / "specs").string());
                chartqa::TrainRun r2 =
                    chartqa::train_stage2(s2, stage_config(2), r1.checkpoint);

                chartqa::EvalOptions options;
                options.use_chart_to_text = use_c2t;
                options.spec_root = eval_spec_root;
                options.extra_config = ordered_json{{"axis", axis}};
                chartqa::DatasetManifest eval_manifest = manifest;
                if (v.resolution != base.value("resolution", 448)) {
                    chartqa::SynthResult redone = chartqa::rerender_dataset(
                        manifest, eval_spec_root, v.resolution, (work / "eval").string());
                    eval_manifest = redone.manifest;
                    options.spec_root = (fs::path(work) / "eval" / "specs").string();
                }
                return chartqa::evaluate(r2.checkpoint, eval_manifest, options);
            };

            std::vector<std::pair<std::string, chartqa::EvalReport>> reports;
            reports.emplace_back("base", run_variant("base"));
            for (const std::string& axis : ab_axes) {
                if (axis != "no_chart2text" && axis != "mlp_connector" && axis != "vit384")
                    throw chartqa::ConfigError("unknown ablation axis \"" + axis + "\"");
                reports.emplace_back(axis, run_variant(axis));
            }
            chartqa::AblationTable table = chartqa::ablation_from_reports(reports);

            ordered_json out = nlohmann::json::parse(chartqa::ablation_to_json(table));
            out["config"] = ordered_json{{"base", ab_base}, {"data", ab_data},
                                         {"axes", ab_axes}};
            std::ofstream json_out(ab_report, std::ios::trunc);
            if (!json_out)
                throw chartqa::IoError("cannot write report \"" + ab_report + "\"");
            json_out << out.dump(2) << "\n";
            std::ofstream text_out(ab_report + ".txt", std::ios::trunc);
            text_out << chartqa::ablation_to_text(table);
            std::cerr << chartqa::ablation_to_text(table);
            std::cerr << "report written to " << ab_report << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
