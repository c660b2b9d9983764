#ifndef CHARTQA_CHART2TEXT_HPP_
#define CHARTQA_CHART2TEXT_HPP_

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "chartqa/chart_spec.hpp"
#include "chartqa/renderer.hpp"

namespace chartqa {

// Linearized textual table. Row grammar, bit-exact:
//   TITLE | <title>                (omitted when the title is empty)
//   category | <s1> | <s2> ...     (header; first cell is the literal word)
//   <label> | <v1> | <v2> ...      (one row per category)
// When has_values is false the value cells are omitted entirely and data
// rows carry only the label. Rows join with '\n'; no trailing newline.
struct LinearizedTable {
    std::string text;
    bool has_values = false;
};

// Oracle linearization: reads the chart spec directly, so every numeric token
// in the output exists verbatim in the chart spec (after canonical formatting)
// and textless charts produce no value cells at all.
LinearizedTable linearize(const ChartSpec& spec);

// Structured view recovered from the row grammar.
struct ParsedTable {
    std::string title;
    std::vector<std::string> labels;
    std::vector<std::string> series_names;
    std::vector<std::vector<double>> values;  // [series][category]; empty when value-free
    bool has_values = false;
};

// Strict grammar parser; throws ValidationError on any malformed row. For
// value-bearing oracle output, parse_linearized(linearize(spec).text)
// recovers title, labels, series names, and values exactly.
ParsedTable parse_linearized(const std::string& text);

// Pluggable image-to-table engines (derenderer slot). Outputs are validated
// against the row grammar at call time.
using ExternalEngine = std::function<LinearizedTable(const ChartImage&)>;

// Maps a chart_id back to its spec; the oracle engine needs it when handed
// pixels instead of a spec.
using SpecResolver = std::function<std::optional<ChartSpec>(const std::string& chart_id)>;

// Throws ConfigError when the name is already taken (the name "oracle" is
// reserved for the built-in engine).
void register_external_engine(const std::string& name, ExternalEngine engine);
bool external_engine_registered(const std::string& name);

// engine == "oracle" resolves spec_ref and linearizes the chart spec; any other
// name dispatches to the registered external engine and validates its output.
LinearizedTable chart_to_text(const ChartImage& image, const std::string& engine,
                              const SpecResolver& resolver);
LinearizedTable chart_to_text(const ChartSpec& spec, const std::string& engine = "oracle");

}  // namespace chartqa

#endif  // CHARTQA_CHART2TEXT_HPP_
