#ifndef CHARTQA_DATASET_HPP_
#define CHARTQA_DATASET_HPP_

#include <map>
#include <string>
#include <vector>

#include "chartqa/qa.hpp"

namespace chartqa {

struct DatasetManifest {
    std::string name;
    std::vector<QARecord> records;  // never empty for a valid manifest
    std::string image_root;
};

enum class DatasetFormat { chartqa_json, plotqa_json, figureqa_json, canonical_jsonl };

std::string to_string(DatasetFormat f);
DatasetFormat dataset_format_from_string(const std::string& s);

// Field-name mapping for one external schema. Adapters are plain data so a
// new dataset layout is a config edit, not a code change.
struct AdapterConfig {
    // JSON pointer-ish container: empty means the document root is the record
    // array; otherwise the name of the array field holding the records.
    std::string container;
    std::string image_field;
    std::string question_field;
    std::string answer_field;
    // Appended when the image field is numeric (e.g. an image index).
    std::string image_suffix;
    // Literal answer rewrites applied after extraction ("0" -> "no").
    std::map<std::string, std::string> answer_map;
};

AdapterConfig adapter_config(DatasetFormat format);
// Replaces the adapter for one format; takes effect process-wide.
void set_adapter_config(DatasetFormat format, AdapterConfig config);
// Merges adapter overrides from a JSON file keyed by format name.
void load_adapter_overrides(const std::string& path);

// Loads records into canonical form. The image root is the manifest's
// directory; when check_images is set every image_ref must resolve to an
// existing file there. Categories default to "general" unless a sidecar file
// <path>.categories.json (an object mapping record index to category name)
// is present. Gold answers are never reformatted here.
DatasetManifest load_external(const std::string& path, DatasetFormat format,
                              bool check_images = true);

// JSON-lines, one record per line, stable field order
// {image_ref, question, gold_answer, category}; loading the result back is
// the identity on records.
void save_canonical(const DatasetManifest& manifest, const std::string& path);

}  // namespace chartqa

#endif  // CHARTQA_DATASET_HPP_
