#include "chartqa/chart_spec.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace chartqa {

using ordered_json = nlohmann::ordered_json;

std::string to_string(ChartType t) {
    switch (t) {
        case ChartType::vertical_bar: return "vertical_bar";
        case ChartType::horizontal_bar: return "horizontal_bar";
        case ChartType::grouped_bar: return "grouped_bar";
        case ChartType::line: return "line";
        case ChartType::pie: return "pie";
    }
    return "unknown";
}

ChartType chart_type_from_string(const std::string& s) {
    if (s == "vertical_bar") return ChartType::vertical_bar;
    if (s == "horizontal_bar") return ChartType::horizontal_bar;
    if (s == "grouped_bar") return ChartType::grouped_bar;
    if (s == "line") return ChartType::line;
    if (s == "pie") return ChartType::pie;
    throw DataError("unknown chart_type: " + s);
}

std::string to_string(LegendPosition p) {
    switch (p) {
        case LegendPosition::top: return "top";
        case LegendPosition::right: return "right";
        case LegendPosition::none: return "none";
    }
    return "unknown";
}

LegendPosition legend_position_from_string(const std::string& s) {
    if (s == "top") return LegendPosition::top;
    if (s == "right") return LegendPosition::right;
    if (s == "none") return LegendPosition::none;
    throw DataError("unknown legend_position: " + s);
}

const std::array<NamedColor, 12>& palette() {
    static const std::array<NamedColor, 12> kPalette = {{
        {"light blue", {173, 216, 230}},
        {"dark blue", {0, 0, 139}},
        {"red", {220, 20, 60}},
        {"green", {34, 139, 34}},
        {"orange", {255, 140, 0}},
        {"purple", {128, 0, 128}},
        {"yellow", {240, 200, 0}},
        {"brown", {139, 69, 19}},
        {"pink", {255, 105, 180}},
        {"gray", {128, 128, 128}},
        {"teal", {0, 128, 128}},
        {"olive", {107, 142, 35}},
    }};
    return kPalette;
}

const NamedColor& palette_color(const std::string& name) {
    for (const auto& c : palette()) {
        if (c.name == name) return c;
    }
    throw ValidationError("color not in palette: " + name);
}

bool is_palette_color(const std::string& name) {
    for (const auto& c : palette()) {
        if (c.name == name) return true;
    }
    return false;
}

void validate(const ChartSpec& spec) {
    if (spec.chart_id.empty()) throw ValidationError("chart_id is empty");
    if (spec.x_labels.empty()) throw ValidationError(spec.chart_id + ": x_labels is empty");
    if (spec.series.empty()) throw ValidationError(spec.chart_id + ": series list is empty");
    if (spec.chart_type == ChartType::pie && spec.series.size() != 1) {
        throw ValidationError(spec.chart_id + ": pie charts take exactly one series");
    }
    std::set<std::string> colors;
    std::set<std::string> names;
    for (const auto& s : spec.series) {
        if (s.name.empty()) throw ValidationError(spec.chart_id + ": series name is empty");
        if (!names.insert(s.name).second) {
            throw ValidationError(spec.chart_id + ": duplicate series name " + s.name);
        }
        if (!is_palette_color(s.color)) {
            throw ValidationError(spec.chart_id + ": color not in palette: " + s.color);
        }
        if (!colors.insert(s.color).second) {
            throw ValidationError(spec.chart_id + ": duplicate series color " + s.color);
        }
        if (s.values.size() != spec.x_labels.size()) {
            throw ValidationError(spec.chart_id + ": series " + s.name + " has " +
                                  std::to_string(s.values.size()) + " values for " +
                                  std::to_string(spec.x_labels.size()) + " labels");
        }
        for (double v : s.values) {
            if (!std::isfinite(v)) {
                throw ValidationError(spec.chart_id + ": non-finite value in series " + s.name);
            }
            if (spec.chart_type == ChartType::pie && v <= 0.0) {
                throw ValidationError(spec.chart_id + ": pie values must be strictly positive");
            }
        }
    }
    std::set<std::string> labels(spec.x_labels.begin(), spec.x_labels.end());
    if (labels.size() != spec.x_labels.size()) {
        throw ValidationError(spec.chart_id + ": duplicate x label");
    }
}

void check_gen_config(const GenConfig& c) {
    if (c.min_series < 1 || c.max_series > 4 || c.min_series > c.max_series) {
        throw ConfigError("generator series bounds must satisfy 1 <= min <= max <= 4");
    }
    if (c.min_categories < 2 || c.max_categories > 8 || c.min_categories > c.max_categories) {
        throw ConfigError("generator category bounds must satisfy 2 <= min <= max <= 8");
    }
    if (c.chart_types.empty()) throw ConfigError("generator chart type list is empty");
    if (!(c.value_min <= c.value_max)) throw ConfigError("generator value range is empty");
    if (!(c.value_step > 0.0)) throw ConfigError("generator value step must be positive");
    if (c.annotate_probability < 0.0 || c.annotate_probability > 1.0) {
        throw ConfigError("annotate_probability must lie in [0, 1]");
    }
}

namespace {

const std::vector<std::vector<std::string>>& label_pools() {
    static const std::vector<std::vector<std::string>> pools = {
        {"Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug"},
        {"Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun", "Hol"},
        {"Alpha", "Bravo", "Delta", "Echo", "Kilo", "Lima", "Oscar", "Tango"},
        {"North", "South", "East", "West", "Inland", "Coast", "Delta", "Plains"},
        {"Oak", "Pine", "Elm", "Birch", "Cedar", "Maple", "Ash", "Fir"},
    };
    return pools;
}

const std::vector<std::vector<std::string>>& series_pools() {
    static const std::vector<std::vector<std::string>> pools = {
        {"Sales", "Profit", "Cost", "Revenue"},
        {"Apples", "Oranges", "Pears", "Plums"},
        {"Gold", "Silver", "Bronze", "Copper"},
        {"Spring", "Summer", "Autumn", "Winter"},
    };
    return pools;
}

const std::vector<std::string>& title_pool() {
    static const std::vector<std::string> pool = {
        "Quarterly Results",  "Annual Output",    "Market Share",   "Regional Totals",
        "Weekly Activity",    "Production Volume", "Survey Responses", "Energy Usage",
        "Store Visits",       "Export Levels",    "Budget Split",   "Daily Throughput",
    };
    return pool;
}

std::string config_signature(const GenConfig& c) {
    std::ostringstream os;
    os << c.min_series << '|' << c.max_series << '|' << c.min_categories << '|'
       << c.max_categories << '|' << c.value_min << '|' << c.value_max << '|' << c.value_step
       << '|' << c.annotate_probability;
    for (ChartType t : c.chart_types) os << '|' << to_string(t);
    return os.str();
}

double draw_value(Rng& rng, double lo, double hi, double step) {
    auto steps = static_cast<uint64_t>(std::floor((hi - lo) / step + 1e-9));
    return lo + static_cast<double>(rng.index(static_cast<size_t>(steps) + 1)) * step;
}

}  // namespace

ChartSpec generate_spec(uint64_t seed, const GenConfig& config) {
    check_gen_config(config);

    Fnv1a id_hash;
    id_hash.update(&seed, sizeof(seed));
    id_hash.update(config_signature(config));

    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    ChartSpec spec;
    spec.chart_id = "chart_" + id_hash.hex();
    spec.chart_type = config.chart_types[rng.index(config.chart_types.size())];

    bool pie = spec.chart_type == ChartType::pie;
    int n_series = pie ? 1
                       : config.min_series +
                             static_cast<int>(rng.index(
                                 static_cast<size_t>(config.max_series - config.min_series + 1)));
    if (spec.chart_type == ChartType::grouped_bar && n_series < 2) n_series = 2;
    int n_cats = config.min_categories +
                 static_cast<int>(rng.index(
                     static_cast<size_t>(config.max_categories - config.min_categories + 1)));

    const auto& labels = label_pools()[rng.index(label_pools().size())];
    spec.x_labels.assign(labels.begin(), labels.begin() + n_cats);

    const auto& names = series_pools()[rng.index(series_pools().size())];

    std::vector<size_t> color_order(palette().size());
    for (size_t i = 0; i < color_order.size(); ++i) color_order[i] = i;
    rng.shuffle(color_order);

    double lo = config.value_min;
    if (pie && lo < config.value_step) lo = config.value_step;

    for (int s = 0; s < n_series; ++s) {
        SeriesSpec ss;
        ss.name = names[static_cast<size_t>(s)];
        ss.color = palette()[color_order[static_cast<size_t>(s)]].name;
        for (int i = 0; i < n_cats; ++i) {
            ss.values.push_back(draw_value(rng, lo, config.value_max, config.value_step));
        }
        spec.series.push_back(std::move(ss));
    }

    double title_draw = rng.uniform();
    spec.title = title_draw < 0.1 ? "" : title_pool()[rng.index(title_pool().size())];

    spec.annotate_values = rng.uniform() < config.annotate_probability;

    if (pie) {
        spec.legend_position = LegendPosition::right;
    } else if (n_series > 1) {
        spec.legend_position = rng.uniform() < 0.5 ? LegendPosition::top : LegendPosition::right;
    } else {
        spec.legend_position = rng.uniform() < 0.3 ? LegendPosition::top : LegendPosition::none;
    }

    validate(spec);
    return spec;
}

std::string spec_to_json(const ChartSpec& spec) {
    ordered_json j;
    j["chart_id"] = spec.chart_id;
    j["chart_type"] = to_string(spec.chart_type);
    j["title"] = spec.title;
    j["x_labels"] = spec.x_labels;
    ordered_json series = ordered_json::array();
    for (const auto& s : spec.series) {
        ordered_json js;
        js["series_name"] = s.name;
        js["color"] = s.color;
        js["values"] = s.values;
        series.push_back(js);
    }
    j["series"] = series;
    j["annotate_values"] = spec.annotate_values;
    j["legend_position"] = to_string(spec.legend_position);
    return j.dump(2) + "\n";
}

ChartSpec spec_from_json(const std::string& json_text) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw DataError(std::string("chart spec JSON parse failure: ") + e.what());
    }
    ChartSpec spec;
    try {
        spec.chart_id = j.at("chart_id").get<std::string>();
        spec.chart_type = chart_type_from_string(j.at("chart_type").get<std::string>());
        spec.title = j.at("title").get<std::string>();
        spec.x_labels = j.at("x_labels").get<std::vector<std::string>>();
        for (const auto& js : j.at("series")) {
            SeriesSpec s;
            s.name = js.at("series_name").get<std::string>();
            s.color = js.at("color").get<std::string>();
            s.values = js.at("values").get<std::vector<double>>();
            spec.series.push_back(std::move(s));
        }
        spec.annotate_values = j.at("annotate_values").get<bool>();
        spec.legend_position = legend_position_from_string(j.at("legend_position").get<std::string>());
    } catch (const ordered_json::exception& e) {
        throw DataError(std::string("chart spec field error: ") + e.what());
    }
    validate(spec);
    return spec;
}

void save_spec(const ChartSpec& spec, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << spec_to_json(spec);
    if (!out) throw IoError("write failure: " + path);
}

ChartSpec load_spec(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return spec_from_json(buf.str());
}

}  // namespace chartqa
