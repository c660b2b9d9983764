#ifndef CHARTQA_EVALUATOR_HPP_
#define CHARTQA_EVALUATOR_HPP_

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartqa/chart2text.hpp"
#include "chartqa/dataset.hpp"
#include "chartqa/trainer.hpp"

namespace chartqa {

// Parses an answer as a number: optional sign, optional thousands-separator
// commas (groups of exactly three), optional decimal part, optional trailing
// percent sign (the value is not rescaled). Anything else is not a number.
std::optional<double> parse_answer_number(const std::string& raw);

// Trim, case-fold, collapse internal whitespace. No punctuation stripping.
std::string normalize_answer(const std::string& raw);

// Both sides numeric: correct iff |p - g| <= tolerance * |g|, boundary
// inclusive; a zero gold demands an exactly zero prediction. Otherwise exact
// equality of normalized strings, with a trailing percent sign stripped from
// both only when both carry it.
bool relaxed_match(const std::string& predicted, const std::string& gold,
                   double tolerance = 0.05);

struct EvalOptions {
    bool use_chart_to_text = true;
    std::string engine = "oracle";
    double tolerance = 0.05;
    int max_len = 64;
    // Where <chart_id>.json spec files live for the oracle engine; empty
    // falls back to the manifest's image root and its specs/ siblings.
    std::string spec_root;
    // Overrides spec_root lookup entirely when set.
    SpecResolver resolver;
    // Caller-supplied context folded into the report's config snapshot (and
    // therefore into its content hash).
    nlohmann::ordered_json extra_config;
};

struct EvalOutcome {
    std::string image_ref;
    std::string question;
    std::string gold;
    std::string predicted;
    bool correct = false;
    std::string error;  // nonempty when the example failed to run
};

struct CategoryStats {
    long long count = 0;
    long long correct = 0;
    double accuracy() const {
        return count == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(count);
    }
};

struct EvalReport {
    std::string dataset;
    long long total = 0;
    long long correct_count = 0;
    double overall_accuracy = 0.0;  // correct_count / total, exactly
    std::map<std::string, CategoryStats> per_category;
    std::vector<EvalOutcome> outcomes;  // manifest order
    nlohmann::ordered_json config_snapshot;
    std::string content_hash;  // over the serialized report, hash field excluded
};

// Runs the model over every record in manifest order. An unreadable image or
// a per-example data failure is recorded on that outcome and counted
// incorrect; the run continues. Misconfiguration (an unknown engine, an
// empty manifest) aborts instead.
EvalReport evaluate(Checkpoint& model, const DatasetManifest& manifest,
                    const EvalOptions& options);

std::string report_to_json(const EvalReport& report);
// Plain-text accuracy table: one column per category plus overall.
std::string report_to_text(const EvalReport& report);
// Writes report_to_json to `path` and report_to_text to `path` + ".txt".
void save_report(const EvalReport& report, const std::string& path);

// Ablation axes: "no_chart2text" reuses the base model with the table text
// withheld; "mlp_connector" and "vit384" evaluate alternative models that
// the provider returns for the axis name.
struct AblationRow {
    std::string name;
    long long total = 0;
    double overall = 0.0;
    std::map<std::string, double> per_category;
    std::map<std::string, long long> category_counts;
    double delta_overall = 0.0;  // vs the base row; zero for base itself
    std::map<std::string, double> delta_per_category;
};

struct AblationTable {
    std::vector<AblationRow> rows;  // base first, then axes in call order
    std::string content_hash;
};

using VariantModelProvider = std::function<Checkpoint&(const std::string& axis)>;

// One evaluation per row: base, then each axis. An unknown axis, or a model
// axis without a provider, is a configuration error before any work runs.
AblationTable ablation_suite(Checkpoint& base, const EvalOptions& base_options,
                             const std::vector<std::string>& axes,
                             const DatasetManifest& manifest,
                             const VariantModelProvider& models = nullptr);

// Assembles a table from finished evaluations; the first entry is the base
// row every delta is measured against.
AblationTable ablation_from_reports(
    const std::vector<std::pair<std::string, EvalReport>>& reports);

std::string ablation_to_json(const AblationTable& table);
// One row per variant with per-category accuracy and a delta row under each
// non-base variant.
std::string ablation_to_text(const AblationTable& table);

}  // namespace chartqa

#endif  // CHARTQA_EVALUATOR_HPP_
