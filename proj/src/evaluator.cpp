#include "chartqa/evaluator.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <unordered_map>

#include "chartqa/png_io.hpp"

namespace chartqa {

namespace fs = std::filesystem;

std::optional<double> parse_answer_number(const std::string& raw) {
    std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    if (s.back() == '%') {
        s.pop_back();
        s = trim(s);
        if (s.empty()) return std::nullopt;
    }

    size_t i = 0;
    if (s[i] == '+' || s[i] == '-') ++i;
    if (i >= s.size()) return std::nullopt;

    // Integer part: plain digits, or comma groups of exactly three after a
    // leading group of one to three.
    std::string digits;
    size_t int_begin = i;
    while (i < s.size() && (std::isdigit(static_cast<unsigned char>(s[i])) || s[i] == ','))
        ++i;
    std::string int_part = s.substr(int_begin, i - int_begin);
    if (int_part.find(',') != std::string::npos) {
        std::vector<std::string> groups = split(int_part, ',');
        if (groups.size() < 2) return std::nullopt;
        if (groups[0].empty() || groups[0].size() > 3) return std::nullopt;
        for (size_t g = 1; g < groups.size(); ++g)
            if (groups[g].size() != 3) return std::nullopt;
        for (const std::string& g : groups) {
            for (char c : g)
                if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
            digits += g;
        }
    } else {
        digits = int_part;
    }

    std::string frac;
    if (i < s.size() && s[i] == '.') {
        ++i;
        size_t frac_begin = i;
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
        frac = s.substr(frac_begin, i - frac_begin);
        if (frac.empty()) return std::nullopt;  // "12." is not a number here
    }
    if (i != s.size()) return std::nullopt;
    if (digits.empty() && frac.empty()) return std::nullopt;

    std::string cleaned;
    if (s[0] == '-') cleaned += '-';
    cleaned += digits.empty() ? "0" : digits;
    if (!frac.empty()) cleaned += "." + frac;

    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), value);
    if (ec != std::errc() || ptr != cleaned.data() + cleaned.size()) return std::nullopt;
    return value;
}

std::string normalize_answer(const std::string& raw) {
    return collapse_whitespace(lower(trim(raw)));
}

bool relaxed_match(const std::string& predicted, const std::string& gold, double tolerance) {
    std::optional<double> p = parse_answer_number(predicted);
    std::optional<double> g = parse_answer_number(gold);
    if (p && g) {
        if (*g == 0.0) return *p == 0.0;
        return std::abs(*p - *g) <= tolerance * std::abs(*g);
    }
    std::string a = normalize_answer(predicted);
    std::string b = normalize_answer(gold);
    if (!a.empty() && !b.empty() && a.back() == '%' && b.back() == '%') {
        a = trim(a.substr(0, a.size() - 1));
        b = trim(b.substr(0, b.size() - 1));
    }
    return a == b;
}

namespace {

SpecResolver default_resolver(const DatasetManifest& manifest, const std::string& spec_root) {
    std::vector<std::string> roots;
    if (!spec_root.empty()) roots.push_back(spec_root);
    if (!manifest.image_root.empty()) {
        roots.push_back(manifest.image_root);
        roots.push_back((fs::path(manifest.image_root) / "specs").string());
        roots.push_back((fs::path(manifest.image_root) / ".." / "specs").string());
    }
    return [roots](const std::string& chart_id) -> std::optional<ChartSpec> {
        for (const std::string& root : roots) {
            fs::path candidate = fs::path(root) / (chart_id + ".json");
            std::error_code ec;
            if (fs::exists(candidate, ec)) return load_spec(candidate.string());
        }
        return std::nullopt;
    };
}

nlohmann::ordered_json snapshot_options(const EvalOptions& options) {
    nlohmann::ordered_json j{
        {"use_chart_to_text", options.use_chart_to_text},
        {"engine", options.engine},
        {"tolerance", options.tolerance},
        {"max_len", options.max_len},
        // String-path normalization is a local decision, recorded here.
        {"normalization",
         {{"trim", true},
          {"case_fold", true},
          {"collapse_whitespace", true},
          {"strip_matching_percent", true},
          {"strip_punctuation", false}}}};
    if (!options.extra_config.is_null()) j["cli"] = options.extra_config;
    return j;
}

nlohmann::ordered_json report_body(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["dataset"] = report.dataset;
    j["total"] = report.total;
    j["correct"] = report.correct_count;
    j["overall_accuracy"] = report.overall_accuracy;
    nlohmann::ordered_json cats = nlohmann::ordered_json::object();
    for (const auto& [name, stats] : report.per_category)
        cats[name] = {{"count", stats.count},
                      {"correct", stats.correct},
                      {"accuracy", stats.accuracy()}};
    j["categories"] = cats;
    j["config"] = report.config_snapshot;
    nlohmann::ordered_json outs = nlohmann::ordered_json::array();
    for (const EvalOutcome& o : report.outcomes) {
        nlohmann::ordered_json row{{"image_ref", o.image_ref}, {"question", o.question},
                                   {"gold", o.gold},          {"predicted", o.predicted},
                                   {"correct", o.correct}};
        if (!o.error.empty()) row["error"] = o.error;
        outs.push_back(row);
    }
    j["outcomes"] = outs;
    return j;
}

}  // namespace

EvalReport evaluate(Checkpoint& model, const DatasetManifest& manifest,
                    const EvalOptions& options) {
    if (manifest.records.empty()) throw DataError("evaluation manifest has no records");
    if (!(options.tolerance >= 0.0)) throw ConfigError("tolerance must be non-negative");
    if (options.max_len < 1) throw ConfigError("max_len must be at least 1");
    if (options.use_chart_to_text && options.engine != "oracle" &&
        !external_engine_registered(options.engine))
        throw ConfigError("unknown chart-to-text engine \"" + options.engine + "\"");

    Tokenizer tok = model.tokenizer();
    SpecResolver resolver =
        options.resolver ? options.resolver : default_resolver(manifest, options.spec_root);

    EvalReport report;
    report.dataset = manifest.name;
    report.config_snapshot = snapshot_options(options);

    // Several questions usually target one chart; encode each image once.
    std::unordered_map<std::string, EncodedChart> cache;

    for (const QARecord& record : manifest.records) {
        EvalOutcome out;
        out.image_ref = record.image_ref;
        out.question = record.question;
        out.gold = record.gold_answer;
        try {
            auto it = cache.find(record.image_ref);
            if (it == cache.end()) {
                fs::path path = manifest.image_root.empty()
                                    ? fs::path(record.image_ref)
                                    : fs::path(manifest.image_root) / record.image_ref;
                ChartImage image = load_chart_png(path.string());
                EncodedChart chart;
                chart.features = model.vision.encode(image);
                if (options.use_chart_to_text)
                    chart.table_text = chart_to_text(image, options.engine, resolver).text;
                it = cache.emplace(record.image_ref, std::move(chart)).first;
            }
            out.predicted = predict_answer(model, it->second, record.question, tok,
                                           options.use_chart_to_text, options.max_len);
            out.correct = relaxed_match(out.predicted, record.gold_answer, options.tolerance);
        } catch (const IoError& e) {
            out.error = e.what();
        } catch (const InputError& e) {
            out.error = e.what();
        } catch (const DataError& e) {
            out.error = e.what();
        } catch (const ValidationError& e) {
            out.error = e.what();
        }
        if (!out.error.empty()) out.correct = false;

        CategoryStats& stats = report.per_category[to_string(record.category)];
        ++stats.count;
        ++report.total;
        if (out.correct) {
            ++stats.correct;
            ++report.correct_count;
        }
        report.outcomes.push_back(std::move(out));
    }

    report.overall_accuracy =
        static_cast<double>(report.correct_count) / static_cast<double>(report.total);
    report.content_hash = to_hex(fnv1a(report_body(report).dump()));
    return report;
}

std::string report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j = report_body(report);
    j["content_hash"] = report.content_hash;
    return j.dump(2) + "\n";
}

std::string report_to_text(const EvalReport& report) {
    std::string out;
    out += "dataset: " + report.dataset + "\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-12s %8s %8s %10s\n", "category", "count", "correct",
                  "accuracy");
    out += buf;
    for (const auto& [name, stats] : report.per_category) {
        std::snprintf(buf, sizeof(buf), "%-12s %8lld %8lld %10.4f\n", name.c_str(), stats.count,
                      stats.correct, stats.accuracy());
        out += buf;
    }
    std::snprintf(buf, sizeof(buf), "%-12s %8lld %8lld %10.4f\n", "overall", report.total,
                  report.correct_count, report.overall_accuracy);
    out += buf;
    out += "content_hash: " + report.content_hash + "\n";
    return out;
}

void save_report(const EvalReport& report, const std::string& path) {
    std::ofstream json_out(path, std::ios::trunc);
    if (!json_out) throw IoError("cannot write report \"" + path + "\"");
    json_out << report_to_json(report);
    std::string text_path = path + ".txt";
    std::ofstream text_out(text_path, std::ios::trunc);
    if (!text_out) throw IoError("cannot write report \"" + text_path + "\"");
    text_out << report_to_text(report);
}

namespace {

std::string pad(const std::string& s, size_t width) {
    return s.size() >= width ? s + " " : s + std::string(width - s.size(), ' ');
}

AblationRow row_from_report(const std::string& name, const EvalReport& report) {
    AblationRow row;
    row.name = name;
    row.total = report.total;
    row.overall = report.overall_accuracy;
    for (const auto& [cat, stats] : report.per_category) {
        row.per_category[cat] = stats.accuracy();
        row.category_counts[cat] = stats.count;
    }
    return row;
}

nlohmann::ordered_json ablation_body(const AblationTable& table) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const AblationRow& row : table.rows) {
        nlohmann::ordered_json r;
        r["name"] = row.name;
        r["total"] = row.total;
        r["overall"] = row.overall;
        r["per_category"] = row.per_category;
        r["category_counts"] = row.category_counts;
        r["delta_overall"] = row.delta_overall;
        r["delta_per_category"] = row.delta_per_category;
        rows.push_back(r);
    }
    return nlohmann::ordered_json{{"rows", rows}};
}

}  // namespace

AblationTable ablation_suite(Checkpoint& base, const EvalOptions& base_options,
                             const std::vector<std::string>& axes,
                             const DatasetManifest& manifest,
                             const VariantModelProvider& models) {
    // Validate every axis before any evaluation runs.
    for (const std::string& axis : axes) {
        if (axis == "no_chart2text") continue;
        if (axis == "mlp_connector" || axis == "vit384") {
            if (!models)
                throw ConfigError("axis \"" + axis +
                                  "\" needs a variant model provider");
            continue;
        }
        throw ConfigError("unknown ablation axis \"" + axis + "\"");
    }

    std::vector<std::pair<std::string, EvalReport>> reports;
    reports.emplace_back("base", evaluate(base, manifest, base_options));
    for (const std::string& axis : axes) {
        EvalOptions options = base_options;
        Checkpoint* model = &base;
        if (axis == "no_chart2text") {
            options.use_chart_to_text = false;
        } else {
            model = &models(axis);
        }
        reports.emplace_back(axis, evaluate(*model, manifest, options));
    }
    return ablation_from_reports(reports);
}

AblationTable ablation_from_reports(
    const std::vector<std::pair<std::string, EvalReport>>& reports) {
    if (reports.empty()) throw ConfigError("ablation table needs at least a base report");
    AblationTable table;
    AblationRow base_row = row_from_report(reports[0].first, reports[0].second);
    table.rows.push_back(base_row);
    for (size_t i = 1; i < reports.size(); ++i) {
        AblationRow row = row_from_report(reports[i].first, reports[i].second);
        row.delta_overall = row.overall - base_row.overall;
        for (const auto& [cat, acc] : row.per_category) {
            auto it = base_row.per_category.find(cat);
            double base_acc = it == base_row.per_category.end() ? 0.0 : it->second;
            row.delta_per_category[cat] = acc - base_acc;
        }
        table.rows.push_back(std::move(row));
    }
    table.content_hash = to_hex(fnv1a(ablation_body(table).dump()));
    return table;
}

std::string ablation_to_json(const AblationTable& table) {
    nlohmann::ordered_json j = ablation_body(table);
    j["content_hash"] = table.content_hash;
    return j.dump(2) + "\n";
}

std::string ablation_to_text(const AblationTable& table) {
    // Column set: union of categories across rows, in map order.
    std::map<std::string, bool> cats;
    for (const AblationRow& row : table.rows)
        for (const auto& [cat, acc] : row.per_category) cats[cat] = true;

    std::string out;
    char buf[64];
    out += pad("variant", 18);
    for (const auto& [cat, unused] : cats) out += pad(cat, 12);
    out += pad("overall", 12);
    out += "\n";
    for (size_t i = 0; i < table.rows.size(); ++i) {
        const AblationRow& row = table.rows[i];
        out += pad(row.name, 18);
        for (const auto& [cat, unused] : cats) {
            auto it = row.per_category.find(cat);
            if (it == row.per_category.end()) {
                out += pad("-", 12);
            } else {
                std::snprintf(buf, sizeof(buf), "%.4f", it->second);
                out += pad(buf, 12);
            }
        }
        std::snprintf(buf, sizeof(buf), "%.4f", row.overall);
        out += pad(buf, 12);
        out += "\n";
        if (i > 0) {
            out += pad("  delta", 18);
            for (const auto& [cat, unused] : cats) {
                auto it = row.delta_per_category.find(cat);
                if (it == row.delta_per_category.end()) {
                    out += pad("-", 12);
                } else {
                    std::snprintf(buf, sizeof(buf), "%+.4f", it->second);
                    out += pad(buf, 12);
                }
            }
            std::snprintf(buf, sizeof(buf), "%+.4f", row.delta_overall);
            out += pad(buf, 12);
            out += "\n";
        }
    }
    out += "content_hash: " + table.content_hash + "\n";
    return out;
}

}  // namespace chartqa
