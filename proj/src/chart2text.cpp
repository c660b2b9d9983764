#include "chartqa/chart2text.hpp"

#include <cstdlib>
#include <map>
#include <mutex>

#include "chartqa/common.hpp"

namespace chartqa {

namespace {

constexpr const char* kTitlePrefix = "TITLE | ";
constexpr const char* kHeaderCell = "category";
constexpr const char* kSeparator = " | ";

std::vector<std::string> split_cells(const std::string& row) {
    std::vector<std::string> cells;
    size_t pos = 0;
    while (true) {
        size_t next = row.find(kSeparator, pos);
        if (next == std::string::npos) {
            cells.push_back(row.substr(pos));
            return cells;
        }
        cells.push_back(row.substr(pos, next - pos));
        pos = next + 3;
    }
}

double parse_cell_number(const std::string& cell, size_t row_idx) {
    if (cell.empty())
        throw ValidationError("empty value cell in table row " + std::to_string(row_idx));
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size())
        throw ValidationError("value cell is not a plain number: \"" + cell + "\"");
    return v;
}

std::map<std::string, ExternalEngine>& engine_registry() {
    static std::map<std::string, ExternalEngine> registry;
    return registry;
}

std::mutex& registry_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

LinearizedTable linearize(const ChartSpec& spec) {
    validate(spec);
    std::vector<std::string> rows;
    if (!spec.title.empty()) rows.push_back(std::string(kTitlePrefix) + spec.title);

    std::string header = kHeaderCell;
    for (const auto& s : spec.series) header += kSeparator + s.name;
    rows.push_back(header);

    for (size_t c = 0; c < spec.x_labels.size(); ++c) {
        std::string row = spec.x_labels[c];
        if (spec.annotate_values) {
            for (const auto& s : spec.series) row += kSeparator + format_value(s.values[c]);
        }
        rows.push_back(row);
    }

    LinearizedTable table;
    table.has_values = spec.annotate_values;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (i) table.text += '\n';
        table.text += rows[i];
    }
    return table;
}

ParsedTable parse_linearized(const std::string& text) {
    if (text.empty()) throw ValidationError("linearized table is empty");
    std::vector<std::string> rows = split(text, '\n');
    size_t next = 0;

    ParsedTable out;
    if (starts_with(rows[next], kTitlePrefix)) {
        out.title = rows[next].substr(std::string(kTitlePrefix).size());
        ++next;
    }
    if (next >= rows.size()) throw ValidationError("linearized table has no header row");

    std::vector<std::string> header = split_cells(rows[next]);
    if (header.front() != kHeaderCell)
        throw ValidationError("header row must start with \"" + std::string(kHeaderCell) +
                              "\", got \"" + header.front() + "\"");
    if (header.size() < 2) throw ValidationError("header row names no series");
    out.series_names.assign(header.begin() + 1, header.end());
    ++next;

    if (next >= rows.size()) throw ValidationError("linearized table has no data rows");

    size_t n_series = out.series_names.size();
    // First data row decides whether this table carries values; every later
    // row must agree.
    out.has_values = split_cells(rows[next]).size() > 1;
    if (out.has_values) out.values.assign(n_series, {});

    for (size_t r = next; r < rows.size(); ++r) {
        std::vector<std::string> cells = split_cells(rows[r]);
        if (!out.has_values) {
            if (cells.size() != 1)
                throw ValidationError("value-free table has a multi-cell row: \"" + rows[r] +
                                      "\"");
            if (cells[0].empty()) throw ValidationError("empty label row in table");
            out.labels.push_back(cells[0]);
            continue;
        }
        if (cells.size() != 1 + n_series)
            throw ValidationError("data row has " + std::to_string(cells.size()) +
                                  " cells, expected " + std::to_string(1 + n_series) + ": \"" +
                                  rows[r] + "\"");
        if (cells[0].empty()) throw ValidationError("empty label cell in table");
        out.labels.push_back(cells[0]);
        for (size_t s = 0; s < n_series; ++s)
            out.values[s].push_back(parse_cell_number(cells[1 + s], r));
    }
    return out;
}

void register_external_engine(const std::string& name, ExternalEngine engine) {
    if (name == "oracle") throw ConfigError("engine name \"oracle\" is reserved");
    if (name.empty()) throw ConfigError("engine name must be nonempty");
    if (!engine) throw ConfigError("engine function must be callable");
    std::lock_guard<std::mutex> lock(registry_mutex());
    auto [it, inserted] = engine_registry().emplace(name, std::move(engine));
    if (!inserted) throw ConfigError("engine \"" + name + "\" is already registered");
}

bool external_engine_registered(const std::string& name) {
    std::lock_guard<std::mutex> lock(registry_mutex());
    return engine_registry().count(name) > 0;
}

LinearizedTable chart_to_text(const ChartImage& image, const std::string& engine,
                              const SpecResolver& resolver) {
    if (engine == "oracle") {
        if (!resolver) throw InputError("oracle engine needs a spec resolver for image input");
        std::optional<ChartSpec> spec = resolver(image.spec_ref);
        if (!spec)
            throw InputError("cannot resolve chart spec for image ref \"" + image.spec_ref +
                             "\"");
        return linearize(*spec);
    }
    ExternalEngine fn;
    {
        std::lock_guard<std::mutex> lock(registry_mutex());
        auto it = engine_registry().find(engine);
        if (it == engine_registry().end())
            throw ConfigError("no chart-to-text engine registered under \"" + engine + "\"");
        fn = it->second;
    }
    LinearizedTable table = fn(image);
    ParsedTable parsed = parse_linearized(table.text);  // grammar contract enforcement
    if (parsed.has_values != table.has_values)
        throw ValidationError("engine \"" + engine +
                              "\" mislabeled has_values for its own output");
    return table;
}

LinearizedTable chart_to_text(const ChartSpec& spec, const std::string& engine) {
    if (engine == "oracle") return linearize(spec);
    throw ConfigError("external engines consume images; render the chart spec first");
}

}  // namespace chartqa
