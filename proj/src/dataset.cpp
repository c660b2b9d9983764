#include "chartqa/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "chartqa/common.hpp"

namespace chartqa {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::map<DatasetFormat, AdapterConfig>& adapter_registry() {
    static std::map<DatasetFormat, AdapterConfig> registry = {
        {DatasetFormat::chartqa_json, {"", "imgname", "query", "label", "", {}}},
        {DatasetFormat::plotqa_json,
         {"qa_pairs", "image_index", "question_string", "answer", ".png", {}}},
        {DatasetFormat::figureqa_json,
         {"qa_pairs", "image_index", "question_string", "answer", ".png",
          {{"0", "no"}, {"1", "yes"}}}},
    };
    return registry;
}

std::mutex& adapter_mutex() {
    static std::mutex m;
    return m;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// External values may be strings, integers, or reals; canonical records hold
// strings and the evaluator decides how to compare them.
std::string field_to_string(const ordered_json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_float()) return format_value(v.get<double>());
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    throw DataError("field has unsupported JSON type: " + v.dump());
}

const ordered_json& require_field(const ordered_json& record, const std::string& field,
                                  size_t index) {
    auto it = record.find(field);
    if (it == record.end())
        throw DataError("record " + std::to_string(index) + " missing field \"" + field + "\"");
    return *it;
}

std::map<size_t, QACategory> load_sidecar_categories(const std::string& manifest_path) {
    std::map<size_t, QACategory> out;
    std::string sidecar = manifest_path + ".categories.json";
    if (!fs::exists(sidecar)) return out;
    ordered_json doc = ordered_json::parse(read_file(sidecar));
    if (!doc.is_object())
        throw DataError("sidecar category file must be an object: " + sidecar);
    for (const auto& [key, value] : doc.items()) {
        size_t idx = 0;
        try {
            idx = std::stoull(key);
        } catch (const std::exception&) {
            throw DataError("sidecar category key is not a record index: \"" + key + "\"");
        }
        out[idx] = qa_category_from_string(value.get<std::string>());
    }
    return out;
}

std::vector<QARecord> load_canonical_records(const std::string& text) {
    std::vector<QARecord> records;
    std::istringstream in(text);
    std::string line;
    size_t index = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        ordered_json doc;
        try {
            doc = ordered_json::parse(line);
        } catch (const std::exception& e) {
            throw DataError("record " + std::to_string(index) + " is not valid JSON: " +
                            e.what());
        }
        QARecord rec;
        rec.image_ref = field_to_string(require_field(doc, "image_ref", index));
        rec.question = field_to_string(require_field(doc, "question", index));
        rec.gold_answer = field_to_string(require_field(doc, "gold_answer", index));
        rec.category =
            qa_category_from_string(field_to_string(require_field(doc, "category", index)));
        records.push_back(std::move(rec));
        ++index;
    }
    return records;
}

std::vector<QARecord> load_adapted_records(const std::string& text, DatasetFormat format) {
    AdapterConfig config = adapter_config(format);
    ordered_json doc = ordered_json::parse(text);
    const ordered_json* array = &doc;
    if (!config.container.empty()) {
        auto it = doc.find(config.container);
        if (it == doc.end())
            throw DataError("document missing container field \"" + config.container + "\"");
        array = &*it;
    }
    if (!array->is_array()) throw DataError("record container is not a JSON array");

    std::vector<QARecord> records;
    size_t index = 0;
    for (const auto& entry : *array) {
        QARecord rec;
        rec.image_ref = field_to_string(require_field(entry, config.image_field, index)) +
                        config.image_suffix;
        rec.question = field_to_string(require_field(entry, config.question_field, index));
        rec.gold_answer = field_to_string(require_field(entry, config.answer_field, index));
        auto mapped = config.answer_map.find(rec.gold_answer);
        if (mapped != config.answer_map.end()) rec.gold_answer = mapped->second;
        rec.category = QACategory::general;
        records.push_back(std::move(rec));
        ++index;
    }
    return records;
}

}  // namespace

std::string to_string(DatasetFormat f) {
    switch (f) {
        case DatasetFormat::chartqa_json: return "chartqa_json";
        case DatasetFormat::plotqa_json: return "plotqa_json";
        case DatasetFormat::figureqa_json: return "figureqa_json";
        case DatasetFormat::canonical_jsonl: return "canonical_jsonl";
    }
    throw InputError("unknown dataset format");
}

DatasetFormat dataset_format_from_string(const std::string& s) {
    if (s == "chartqa_json") return DatasetFormat::chartqa_json;
    if (s == "plotqa_json") return DatasetFormat::plotqa_json;
    if (s == "figureqa_json") return DatasetFormat::figureqa_json;
    if (s == "canonical_jsonl") return DatasetFormat::canonical_jsonl;
    throw InputError("unknown dataset format: \"" + s + "\"");
}

AdapterConfig adapter_config(DatasetFormat format) {
    if (format == DatasetFormat::canonical_jsonl)
        throw ConfigError("the canonical format needs no adapter");
    std::lock_guard<std::mutex> lock(adapter_mutex());
    return adapter_registry().at(format);
}

void set_adapter_config(DatasetFormat format, AdapterConfig config) {
    if (format == DatasetFormat::canonical_jsonl)
        throw ConfigError("the canonical format needs no adapter");
    if (config.image_field.empty() || config.question_field.empty() ||
        config.answer_field.empty())
        throw ConfigError("adapter config must name image, question, and answer fields");
    std::lock_guard<std::mutex> lock(adapter_mutex());
    adapter_registry()[format] = std::move(config);
}

void load_adapter_overrides(const std::string& path) {
    ordered_json doc = ordered_json::parse(read_file(path));
    if (!doc.is_object()) throw ConfigError("adapter override file must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        DatasetFormat format = dataset_format_from_string(key);
        AdapterConfig config;
        config.container = value.value("container", "");
        config.image_field = value.value("image_field", "");
        config.question_field = value.value("question_field", "");
        config.answer_field = value.value("answer_field", "");
        config.image_suffix = value.value("image_suffix", "");
        if (value.contains("answer_map")) {
            for (const auto& [from, to] : value["answer_map"].items())
                config.answer_map[from] = to.get<std::string>();
        }
        set_adapter_config(format, std::move(config));
    }
}

DatasetManifest load_external(const std::string& path, DatasetFormat format,
                              bool check_images) {
    std::string text = read_file(path);

    DatasetManifest manifest;
    manifest.name = fs::path(path).stem().string();
    manifest.image_root = fs::path(path).parent_path().string();
    if (manifest.image_root.empty()) manifest.image_root = ".";

    if (format == DatasetFormat::canonical_jsonl) {
        manifest.records = load_canonical_records(text);
    } else {
        manifest.records = load_adapted_records(text, format);
        auto sidecar = load_sidecar_categories(path);
        for (const auto& [idx, category] : sidecar) {
            if (idx >= manifest.records.size())
                throw DataError("sidecar category index " + std::to_string(idx) +
                                " is out of range");
            manifest.records[idx].category = category;
        }
    }

    if (manifest.records.empty()) throw DataError("manifest has no records: " + path);

    if (check_images) {
        for (size_t i = 0; i < manifest.records.size(); ++i) {
            fs::path img = fs::path(manifest.image_root) / manifest.records[i].image_ref;
            if (!fs::exists(img))
                throw ValidationError("record " + std::to_string(i) +
                                      " references missing image: " + img.string());
        }
    }
    return manifest;
}

void save_canonical(const DatasetManifest& manifest, const std::string& path) {
    if (manifest.records.empty())
        throw ValidationError("refusing to save a manifest with no records");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    for (const auto& rec : manifest.records) {
        ordered_json doc;
        doc["image_ref"] = rec.image_ref;
        doc["question"] = rec.question;
        doc["gold_answer"] = rec.gold_answer;
        doc["category"] = to_string(rec.category);
        out << doc.dump() << "\n";
    }
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace chartqa
