#include "chartqa/qa.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

#include "chartqa/chart2text.hpp"
#include "chartqa/common.hpp"
#include "chartqa/renderer.hpp"

namespace chartqa {

namespace {

const char* kOrdinals[] = {"first", "second", "third",   "fourth",
                           "fifth", "sixth",  "seventh", "eighth"};

std::string ordinal(size_t k) { return kOrdinals[k]; }

bool is_bar_family(ChartType t) {
    return t == ChartType::vertical_bar || t == ChartType::horizontal_bar ||
           t == ChartType::grouped_bar;
}

std::string unit_singular(ChartType t) {
    if (is_bar_family(t)) return "bar";
    if (t == ChartType::line) return "point";
    return "slice";
}

std::string unit_plural(ChartType t) { return unit_singular(t) + "s"; }

std::string chart_type_phrase(ChartType t) {
    switch (t) {
        case ChartType::vertical_bar: return "vertical bar";
        case ChartType::horizontal_bar: return "horizontal bar";
        case ChartType::grouped_bar: return "grouped bar";
        case ChartType::line: return "line";
        case ChartType::pie: return "pie";
    }
    throw InputError("unknown chart type");
}

// Positional phrase for the k-th mark, matching how the renderer lays the
// chart out.
std::string position_phrase(ChartType t) {
    switch (t) {
        case ChartType::vertical_bar:
        case ChartType::grouped_bar: return "from the left";
        case ChartType::horizontal_bar: return "from the top";
        case ChartType::line: return "from the left";
        case ChartType::pie: return "clockwise from the top";
    }
    throw InputError("unknown chart type");
}

// Index of the unique extremum of v, or nullopt on a tie.
std::optional<size_t> unique_extremum(const std::vector<double>& v, bool largest) {
    size_t best = 0;
    for (size_t i = 1; i < v.size(); ++i) {
        bool better = largest ? v[i] > v[best] : v[i] < v[best];
        if (better) best = i;
    }
    for (size_t i = 0; i < v.size(); ++i) {
        if (i != best && v[i] == v[best]) return std::nullopt;
    }
    return best;
}

std::string value_question(const ChartSpec& spec, size_t si, size_t ci) {
    if (spec.series.size() == 1)
        return "What is the value of " + spec.x_labels[ci] + "?";
    return "What is the value of " + spec.series[si].name + " at " + spec.x_labels[ci] + "?";
}

std::optional<QARecord> make_color_record(const ChartSpec& spec, Rng& rng) {
    if (!is_bar_family(spec.chart_type) || spec.series.size() < 2) return std::nullopt;
    size_t n_series = spec.series.size();
    size_t n_cat = spec.x_labels.size();

    // Labels where one series is strictly largest; template 3 needs one.
    std::vector<size_t> unique_max_labels;
    for (size_t c = 0; c < n_cat; ++c) {
        std::vector<double> at_label;
        for (const auto& s : spec.series) at_label.push_back(s.values[c]);
        if (unique_extremum(at_label, true)) unique_max_labels.push_back(c);
    }

    int n_templates = unique_max_labels.empty() ? 2 : 3;
    int pick = static_cast<int>(rng.index(n_templates));

    QARecord rec;
    rec.image_ref = spec.chart_id;
    rec.category = QACategory::color;
    if (pick == 0) {
        size_t a = rng.index(n_series);
        size_t b = rng.index(n_series - 1);
        if (b >= a) ++b;
        double least = std::abs(spec.series[a].values[0] - spec.series[b].values[0]);
        for (size_t c = 1; c < n_cat; ++c)
            least = std::min(least,
                             std::abs(spec.series[a].values[c] - spec.series[b].values[c]));
        rec.question = "What is the least difference between the " + spec.series[a].color +
                       " bar and the " + spec.series[b].color + " bar?";
        rec.gold_answer = format_value(least);
    } else if (pick == 1) {
        size_t s = rng.index(n_series);
        size_t c = rng.index(n_cat);
        rec.question = "What is the value of the " + spec.series[s].color + " bar at " +
                       spec.x_labels[c] + "?";
        rec.gold_answer = format_value(spec.series[s].values[c]);
    } else {
        size_t c = unique_max_labels[rng.index(unique_max_labels.size())];
        std::vector<double> at_label;
        for (const auto& s : spec.series) at_label.push_back(s.values[c]);
        size_t s = *unique_extremum(at_label, true);
        rec.question = "Which bar color has the largest value at " + spec.x_labels[c] + "?";
        rec.gold_answer = spec.series[s].color;
    }
    return rec;
}

std::optional<QARecord> make_structure_record(const ChartSpec& spec, Rng& rng) {
    size_t n_series = spec.series.size();
    size_t n_cat = spec.x_labels.size();

    int n_templates = spec.title.empty() ? 2 : 3;
    int pick = static_cast<int>(rng.index(n_templates));

    QARecord rec;
    rec.image_ref = spec.chart_id;
    rec.category = QACategory::structure;
    if (pick == 0) {
        if (spec.chart_type == ChartType::grouped_bar) {
            size_t k = rng.index(n_series);
            rec.question = "What is the label of the " + ordinal(k) + " bar " +
                           position_phrase(spec.chart_type) + " in each group?";
            rec.gold_answer = spec.series[k].name;
        } else {
            size_t k = rng.index(n_cat);
            rec.question = "What is the label of the " + ordinal(k) + " " +
                           unit_singular(spec.chart_type) + " " +
                           position_phrase(spec.chart_type) + "?";
            rec.gold_answer = spec.x_labels[k];
        }
    } else if (pick == 1) {
        if (spec.chart_type == ChartType::grouped_bar && rng.index(2) == 1) {
            rec.question = "How many groups of bars are in the chart?";
            rec.gold_answer = std::to_string(n_cat);
        } else {
            rec.question =
                "How many " + unit_plural(spec.chart_type) + " are in the chart?";
            size_t count = spec.chart_type == ChartType::pie ? n_cat : n_series * n_cat;
            rec.gold_answer = std::to_string(count);
        }
    } else {
        rec.question = "What is the title of the chart?";
        rec.gold_answer = spec.title;
    }
    return rec;
}

// Shared by the textless and general families: the same value-reading
// templates, with the category recording whether the chart carried explicit
// numerals.
std::optional<QARecord> make_value_record(const ChartSpec& spec, Rng& rng, QACategory category) {
    size_t n_series = spec.series.size();
    size_t n_cat = spec.x_labels.size();

    std::vector<size_t> unique_max_series, unique_min_series;
    for (size_t s = 0; s < n_series; ++s) {
        if (unique_extremum(spec.series[s].values, true)) unique_max_series.push_back(s);
        if (unique_extremum(spec.series[s].values, false)) unique_min_series.push_back(s);
    }

    // Template ids: 0 value lookup, 1 argmax label, 2 argmin label, 3 sum.
    std::vector<int> available = {0};
    if (!unique_max_series.empty()) available.push_back(1);
    if (!unique_min_series.empty()) available.push_back(2);
    if (category == QACategory::general) available.push_back(3);
    int pick = available[rng.index(available.size())];

    QARecord rec;
    rec.image_ref = spec.chart_id;
    rec.category = category;
    if (pick == 0) {
        size_t s = rng.index(n_series);
        size_t c = rng.index(n_cat);
        rec.question = value_question(spec, s, c);
        rec.gold_answer = format_value(spec.series[s].values[c]);
    } else if (pick == 1 || pick == 2) {
        bool largest = pick == 1;
        const auto& pool = largest ? unique_max_series : unique_min_series;
        size_t s = pool[rng.index(pool.size())];
        std::string q = "Which " + unit_singular(spec.chart_type) + " has the " +
                        (largest ? std::string("largest") : std::string("smallest")) +
                        " value";
        if (n_series > 1) q += " in the " + spec.series[s].name + " series";
        rec.question = q + "?";
        rec.gold_answer = spec.x_labels[*unique_extremum(spec.series[s].values, largest)];
    } else {
        size_t s = rng.index(n_series);
        double sum = 0.0;
        for (double v : spec.series[s].values) sum += v;
        if (n_series == 1) {
            rec.question = "What is the sum of all values in the chart?";
        } else {
            rec.question = "What is the sum of all values in " + spec.series[s].name + "?";
        }
        rec.gold_answer = format_value(sum);
    }
    return rec;
}

}  // namespace

std::string to_string(QACategory c) {
    switch (c) {
        case QACategory::color: return "color";
        case QACategory::structure: return "structure";
        case QACategory::textless: return "textless";
        case QACategory::general: return "general";
    }
    throw InputError("unknown qa category");
}

QACategory qa_category_from_string(const std::string& s) {
    if (s == "color") return QACategory::color;
    if (s == "structure") return QACategory::structure;
    if (s == "textless") return QACategory::textless;
    if (s == "general") return QACategory::general;
    throw InputError("unknown qa category: \"" + s + "\"");
}

std::vector<QARecord> make_qa_pairs(const ChartSpec& spec,
                                    const std::set<QACategory>& categories,
                                    std::vector<std::string>* diagnostics) {
    validate(spec);
    auto skip = [&](QACategory c, const std::string& why) {
        if (diagnostics)
            diagnostics->push_back("skipped " + to_string(c) + " on " + spec.chart_id + ": " +
                                   why);
    };

    std::vector<QARecord> records;
    for (QACategory category : categories) {
        Rng rng(fnv1a(spec.chart_id + "|" + to_string(category)));
        std::optional<QARecord> rec;
        switch (category) {
            case QACategory::color:
                rec = make_color_record(spec, rng);
                if (!rec) skip(category, "needs a bar chart with at least two series");
                break;
            case QACategory::structure:
                rec = make_structure_record(spec, rng);
                break;
            case QACategory::textless:
                if (!spec.textless()) {
                    skip(category, "chart annotates its values");
                    break;
                }
                rec = make_value_record(spec, rng, QACategory::textless);
                break;
            case QACategory::general:
                if (spec.textless()) {
                    skip(category, "chart carries no explicit value text");
                    break;
                }
                rec = make_value_record(spec, rng, QACategory::general);
                break;
        }
        if (rec) records.push_back(std::move(*rec));
    }
    return records;
}

std::string to_string(Stage1Task t) {
    switch (t) {
        case Stage1Task::captioning: return "captioning";
        case Stage1Task::caption_with_grounding: return "caption_with_grounding";
        case Stage1Task::grounded_captioning: return "grounded_captioning";
        case Stage1Task::chart_to_text: return "chart_to_text";
    }
    throw InputError("unknown stage-1 task");
}

Stage1Task stage1_task_from_string(const std::string& s) {
    if (s == "captioning") return Stage1Task::captioning;
    if (s == "caption_with_grounding") return Stage1Task::caption_with_grounding;
    if (s == "grounded_captioning") return Stage1Task::grounded_captioning;
    if (s == "chart_to_text") return Stage1Task::chart_to_text;
    throw InputError("unknown stage-1 task: \"" + s + "\"");
}

namespace {

std::string describe_chart(const ChartSpec& spec) {
    std::string head = spec.title.empty()
                           ? ("An untitled " + chart_type_phrase(spec.chart_type) + " chart")
                           : ("A " + chart_type_phrase(spec.chart_type) + " chart titled " +
                              spec.title);
    return head + " with " + std::to_string(spec.x_labels.size()) + " categories.";
}

std::string describe_element(const ChartSpec& spec, size_t si, size_t ci) {
    if (spec.chart_type == ChartType::pie) return spec.x_labels[ci] + " slice";
    std::string unit = unit_singular(spec.chart_type);
    if (spec.series.size() == 1) return unit + " at " + spec.x_labels[ci];
    return spec.series[si].name + " " + unit + " at " + spec.x_labels[ci];
}

}  // namespace

std::vector<Stage1Example> make_stage1_examples(const ChartSpec& spec, int resolution) {
    validate(spec);
    ChartLayout layout = compute_layout(spec, resolution);
    Rng rng(fnv1a(spec.chart_id + "|stage1"));
    size_t n_series = spec.series.size();
    size_t n_cat = spec.x_labels.size();

    std::vector<Stage1Example> out;

    Stage1Example cap;
    cap.image_ref = spec.chart_id;
    cap.task = Stage1Task::captioning;
    cap.prefix = "Describe the chart.";
    cap.label = describe_chart(spec);
    out.push_back(cap);

    {
        size_t si = rng.index(n_series);
        size_t ci = rng.index(n_cat);
        BoxNorm box = layout.element_box(static_cast<int>(si), static_cast<int>(ci));
        Stage1Example ex;
        ex.image_ref = spec.chart_id;
        ex.task = Stage1Task::caption_with_grounding;
        ex.prefix = "Describe the chart and ground one element.";
        ex.label = describe_chart(spec) + " The " + describe_element(spec, si, ci) + " is at " +
                   box_to_string(box) + ".";
        out.push_back(ex);
    }

    {
        size_t si = rng.index(n_series);
        size_t ci = rng.index(n_cat);
        BoxNorm box = layout.element_box(static_cast<int>(si), static_cast<int>(ci));
        Stage1Example ex;
        ex.image_ref = spec.chart_id;
        ex.task = Stage1Task::grounded_captioning;
        ex.prefix = "What is at " + box_to_string(box) + "?";
        ex.label = "The " + describe_element(spec, si, ci) + ".";
        out.push_back(ex);
    }

    Stage1Example tab;
    tab.image_ref = spec.chart_id;
    tab.task = Stage1Task::chart_to_text;
    tab.prefix = "Convert the chart to a table.";
    tab.label = linearize(spec).text;
    out.push_back(tab);

    return out;
}

}  // namespace chartqa
