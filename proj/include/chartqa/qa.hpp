#ifndef CHARTQA_QA_HPP_
#define CHARTQA_QA_HPP_

#include <set>
#include <string>
#include <vector>

#include "chartqa/chart_spec.hpp"

namespace chartqa {

enum class QACategory { color, structure, textless, general };

std::string to_string(QACategory c);
QACategory qa_category_from_string(const std::string& s);

struct QARecord {
    std::string image_ref;
    std::string question;
    std::string gold_answer;
    QACategory category = QACategory::general;
};

// Emits at most one record per requested category, choosing label / series /
// ordinal deterministically from the chart_id. A category that cannot be
// instantiated on this spec (color needs a multi-series bar chart, textless
// needs annotate_values = false, ...) is skipped and explained through
// `diagnostics`; records are never fabricated.
//
// Template families:
//   color      least-difference between two color-named bars; value of a
//              color-named bar at a label; which color is largest at a label
//   structure  label of the k-th mark; mark counts; chart title
//   textless   value read off an unannotated chart; which mark is largest
//              or smallest (answers are label strings copied from the axis)
//   general    value lookup and series sums on annotated charts
std::vector<QARecord> make_qa_pairs(const ChartSpec& spec,
                                    const std::set<QACategory>& categories,
                                    std::vector<std::string>* diagnostics = nullptr);

enum class Stage1Task { captioning, caption_with_grounding, grounded_captioning, chart_to_text };

std::string to_string(Stage1Task t);
Stage1Task stage1_task_from_string(const std::string& s);

struct Stage1Example {
    std::string image_ref;
    Stage1Task task = Stage1Task::captioning;
    std::string prefix;
    std::string label;
};

// One example per task family. Grounding boxes come from the renderer layout
// at the given resolution, formatted as <box>x1,y1,x2,y2</box> with
// normalized 2-decimal coordinates; the chart_to_text label is byte-identical
// to the table linearization.
std::vector<Stage1Example> make_stage1_examples(const ChartSpec& spec, int resolution);

}  // namespace chartqa

#endif  // CHARTQA_QA_HPP_
