#include "chartqa/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace chartqa {

namespace {

using nlohmann::ordered_json;

constexpr char kMagic[8] = {'C', 'H', 'A', 'R', 'T', 'Q', 'A', '1'};
constexpr int kFormatVersion = 1;

void append_f32_le(std::string& out, float f) {
    uint32_t bits = std::bit_cast<uint32_t>(f);
    out.push_back(static_cast<char>(bits & 0xFF));
    out.push_back(static_cast<char>((bits >> 8) & 0xFF));
    out.push_back(static_cast<char>((bits >> 16) & 0xFF));
    out.push_back(static_cast<char>((bits >> 24) & 0xFF));
}

float read_f32_le(const unsigned char* p) {
    uint32_t bits = static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
                    (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
    return std::bit_cast<float>(bits);
}

// Row-major f32 bytes of one tensor.
std::string tensor_bytes(const Mat& value) {
    std::string out;
    out.reserve(static_cast<size_t>(value.size()) * 4);
    for (Eigen::Index i = 0; i < value.rows(); ++i)
        for (Eigen::Index j = 0; j < value.cols(); ++j)
            append_f32_le(out, static_cast<float>(value(i, j)));
    return out;
}

template <typename Model>
std::string digest_of(Model& model, const std::string& prefix) {
    Fnv1a hash;
    model.visit(prefix, [&](const std::string&, Param& p) {
        std::string bytes = tensor_bytes(p.value);
        hash.update(bytes.data(), bytes.size());
    });
    return hash.hex();
}

ordered_json vision_config_to_json(const VisionConfig& c) {
    return ordered_json{{"patch_size", c.patch_size},
                        {"d_v", c.d_v},
                        {"num_layers", c.num_layers},
                        {"num_heads", c.num_heads},
                        {"max_resolution", c.max_resolution}};
}

VisionConfig vision_config_from_json(const ordered_json& j) {
    VisionConfig c;
    c.patch_size = j.at("patch_size").get<int>();
    c.d_v = j.at("d_v").get<int>();
    c.num_layers = j.at("num_layers").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.max_resolution = j.at("max_resolution").get<int>();
    return c;
}

ordered_json connector_config_to_json(const ConnectorConfig& c) {
    return ordered_json{{"mode", to_string(c.mode)},
                        {"query_source", to_string(c.query_source)},
                        {"num_queries", c.num_queries},
                        {"d_v", c.d_v},
                        {"d_k", c.d_k},
                        {"d_l", c.d_l},
                        {"d_h", c.d_h},
                        {"num_heads", c.num_heads}};
}

ConnectorConfig connector_config_from_json(const ordered_json& j) {
    ConnectorConfig c;
    c.mode = connector_mode_from_string(j.at("mode").get<std::string>());
    c.query_source = query_source_from_string(j.at("query_source").get<std::string>());
    c.num_queries = j.at("num_queries").get<int>();
    c.d_v = j.at("d_v").get<int>();
    c.d_k = j.at("d_k").get<int>();
    c.d_l = j.at("d_l").get<int>();
    c.d_h = j.at("d_h").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    return c;
}

ordered_json lm_config_to_json(const LMConfig& c) {
    return ordered_json{{"d_l", c.d_l},
                        {"num_layers", c.num_layers},
                        {"num_heads", c.num_heads},
                        {"vocab_size", c.vocab_size},
                        {"max_seq_len", c.max_seq_len}};
}

LMConfig lm_config_from_json(const ordered_json& j) {
    LMConfig c;
    c.d_l = j.at("d_l").get<int>();
    c.num_layers = j.at("num_layers").get<int>();
    c.num_heads = j.at("num_heads").get<int>();
    c.vocab_size = j.at("vocab_size").get<int>();
    c.max_seq_len = j.at("max_seq_len").get<int>();
    return c;
}

ordered_json stage_record_to_json(const StageRecord& r) {
    return ordered_json{{"stage", r.stage},
                        {"epochs", r.epochs},
                        {"steps", r.steps},
                        {"final_loss", r.final_loss},
                        {"seed", r.seed},
                        {"timestamp", r.timestamp},
                        {"trainable", r.trainable}};
}

StageRecord stage_record_from_json(const ordered_json& j) {
    StageRecord r;
    r.stage = j.at("stage").get<std::string>();
    r.epochs = j.at("epochs").get<int>();
    r.steps = j.at("steps").get<long long>();
    r.final_loss = j.at("final_loss").get<double>();
    r.seed = j.at("seed").get<uint64_t>();
    r.timestamp = j.at("timestamp").get<std::string>();
    r.trainable = j.at("trainable").get<std::vector<std::string>>();
    return r;
}

struct TensorEntry {
    std::string name;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    size_t offset = 0;  // bytes into the payload
};

// Pinned enumeration order: vision, connector, decoder.
template <typename Fn>
void visit_all(Checkpoint& ckpt, Fn&& fn) {
    ckpt.vision.visit("vision", fn);
    ckpt.connector.visit("connector", fn);
    ckpt.lm.visit("lm", fn);
}

}  // namespace

bool Checkpoint::has_stage(const std::string& stage) const {
    for (const StageRecord& r : history)
        if (r.stage == stage) return true;
    return false;
}

Checkpoint make_checkpoint(const VisionConfig& vision_config,
                           const ConnectorConfig& connector_config, LMConfig lm_config,
                           const Tokenizer& tokenizer, int image_resolution, uint64_t seed) {
    if (connector_config.d_v != vision_config.d_v)
        throw ConfigError("connector input width " + std::to_string(connector_config.d_v) +
                          " does not match vision width " + std::to_string(vision_config.d_v));
    if (lm_config.d_l != connector_config.d_l)
        throw ConfigError("decoder width " + std::to_string(lm_config.d_l) +
                          " does not match connector output width " +
                          std::to_string(connector_config.d_l));
    lm_config.vocab_size = tokenizer.vocab_size();

    Checkpoint ckpt;
    Rng rng(seed);
    ckpt.vision.init(vision_config, rng);
    ckpt.connector.init(connector_config, rng);
    ckpt.lm.init(lm_config, rng);
    ckpt.vocabulary = tokenizer.vocabulary();
    ckpt.image_resolution = image_resolution;
    return ckpt;
}

std::string group_digest(VisionEncoder& vision) { return digest_of(vision, "vision"); }
std::string group_digest(Connector& connector) { return digest_of(connector, "connector"); }
std::string group_digest(LanguageModel& lm) { return digest_of(lm, "lm"); }

void save_checkpoint(Checkpoint& ckpt, const std::string& path) {
    std::string payload;
    ordered_json tensors = ordered_json::array();
    visit_all(ckpt, [&](const std::string& name, Param& p) {
        tensors.push_back(ordered_json{{"name", name},
                                       {"rows", p.value.rows()},
                                       {"cols", p.value.cols()},
                                       {"offset", payload.size()}});
        payload += tensor_bytes(p.value);
    });

    ordered_json header;
    header["format_version"] = kFormatVersion;
    header["config"] = ordered_json{
        {"vision", vision_config_to_json(ckpt.vision.config)},
        {"connector", connector_config_to_json(ckpt.connector.config)},
        {"lm", lm_config_to_json(ckpt.lm.config)},
        {"image_resolution", ckpt.image_resolution}};
    header["digests"] = ordered_json{{"vision", group_digest(ckpt.vision)},
                                     {"connector", group_digest(ckpt.connector)},
                                     {"lm", group_digest(ckpt.lm)}};
    header["vocabulary"] = ckpt.vocabulary;
    ordered_json hist = ordered_json::array();
    for (const StageRecord& r : ckpt.history) hist.push_back(stage_record_to_json(r));
    header["history"] = hist;
    header["extra"] = ckpt.extra;
    header["tensors"] = tensors;
    header["payload_bytes"] = payload.size();

    std::string header_text = header.dump();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open \"" + path + "\" for writing");
    out.write(kMagic, sizeof(kMagic));
    uint32_t hlen = static_cast<uint32_t>(header_text.size());
    char hlen_le[4] = {static_cast<char>(hlen & 0xFF), static_cast<char>((hlen >> 8) & 0xFF),
                       static_cast<char>((hlen >> 16) & 0xFF),
                       static_cast<char>((hlen >> 24) & 0xFF)};
    out.write(hlen_le, 4);
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("failed while writing \"" + path + "\"");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open \"" + path + "\" for reading");
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed while reading \"" + path + "\"");

    if (data.size() < sizeof(kMagic) + 4)
        throw CorruptionError("\"" + path + "\" is too short to be a checkpoint");
    if (std::memcmp(data.data(), kMagic, sizeof(kMagic)) != 0)
        throw CorruptionError("\"" + path + "\" does not carry the checkpoint magic");

    const auto* bytes = reinterpret_cast<const unsigned char*>(data.data());
    uint32_t hlen = static_cast<uint32_t>(bytes[8]) | (static_cast<uint32_t>(bytes[9]) << 8) |
                    (static_cast<uint32_t>(bytes[10]) << 16) |
                    (static_cast<uint32_t>(bytes[11]) << 24);
    size_t header_start = sizeof(kMagic) + 4;
    if (data.size() < header_start + hlen)
        throw CorruptionError("\"" + path + "\" is truncated inside the header");

    ordered_json header;
    try {
        header = ordered_json::parse(data.substr(header_start, hlen));
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError("checkpoint header is not valid JSON: " + std::string(e.what()));
    }

    Checkpoint ckpt;
    try {
        if (header.at("format_version").get<int>() != kFormatVersion)
            throw CorruptionError("unsupported checkpoint format version");
        VisionConfig vcfg = vision_config_from_json(header.at("config").at("vision"));
        ConnectorConfig ccfg = connector_config_from_json(header.at("config").at("connector"));
        LMConfig lcfg = lm_config_from_json(header.at("config").at("lm"));
        Rng rng(0);
        ckpt.vision.init(vcfg, rng);
        ckpt.connector.init(ccfg, rng);
        ckpt.lm.init(lcfg, rng);
        ckpt.image_resolution = header.at("config").at("image_resolution").get<int>();
        ckpt.vocabulary = header.at("vocabulary").get<std::vector<std::string>>();
        for (const auto& r : header.at("history")) ckpt.history.push_back(stage_record_from_json(r));
        ckpt.extra = header.at("extra");
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError("checkpoint header is missing fields: " + std::string(e.what()));
    }

    // Vocabulary must reconstruct and agree with the decoder shape.
    Tokenizer tok = Tokenizer::from_vocabulary(ckpt.vocabulary);
    if (tok.vocab_size() != ckpt.lm.config.vocab_size)
        throw CorruptionError("vocabulary has " + std::to_string(tok.vocab_size()) +
                              " entries but the decoder expects " +
                              std::to_string(ckpt.lm.config.vocab_size));

    std::vector<TensorEntry> directory;
    try {
        for (const auto& t : header.at("tensors")) {
            TensorEntry e;
            e.name = t.at("name").get<std::string>();
            e.rows = t.at("rows").get<Eigen::Index>();
            e.cols = t.at("cols").get<Eigen::Index>();
            e.offset = t.at("offset").get<size_t>();
            directory.push_back(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError("checkpoint tensor directory is malformed: " +
                              std::string(e.what()));
    }

    size_t payload_start = header_start + hlen;
    size_t payload_size = data.size() - payload_start;
    size_t expected_payload = header.value("payload_bytes", size_t{0});
    if (payload_size != expected_payload)
        throw CorruptionError("checkpoint payload holds " + std::to_string(payload_size) +
                              " bytes, header promises " + std::to_string(expected_payload));

    size_t cursor = 0;
    visit_all(ckpt, [&](const std::string& name, Param& p) {
        if (cursor >= directory.size())
            throw CorruptionError("tensor directory ends before parameter \"" + name + "\"");
        const TensorEntry& e = directory[cursor++];
        if (e.name != name)
            throw CorruptionError("tensor directory lists \"" + e.name + "\" where \"" + name +
                                  "\" was expected");
        if (e.rows != p.value.rows() || e.cols != p.value.cols())
            throw CorruptionError("tensor \"" + name + "\" has shape " + std::to_string(e.rows) +
                                  "x" + std::to_string(e.cols) + ", configuration expects " +
                                  std::to_string(p.value.rows()) + "x" +
                                  std::to_string(p.value.cols()));
        size_t need = static_cast<size_t>(e.rows) * static_cast<size_t>(e.cols) * 4;
        if (e.offset + need > payload_size)
            throw CorruptionError("tensor \"" + name + "\" extends past the end of the file");
        const unsigned char* src =
            reinterpret_cast<const unsigned char*>(data.data()) + payload_start + e.offset;
        for (Eigen::Index i = 0; i < e.rows; ++i)
            for (Eigen::Index j = 0; j < e.cols; ++j) {
                p.value(i, j) = static_cast<double>(read_f32_le(src));
                src += 4;
            }
    });
    if (cursor != directory.size())
        throw CorruptionError("tensor directory holds " + std::to_string(directory.size()) +
                              " entries, configuration expects " + std::to_string(cursor));

    std::string vision_digest = group_digest(ckpt.vision);
    std::string connector_digest = group_digest(ckpt.connector);
    std::string lm_digest = group_digest(ckpt.lm);
    try {
        if (header.at("digests").at("vision").get<std::string>() != vision_digest)
            throw CorruptionError("vision parameter digest mismatch: checkpoint is corrupt");
        if (header.at("digests").at("connector").get<std::string>() != connector_digest)
            throw CorruptionError("connector parameter digest mismatch: checkpoint is corrupt");
        if (header.at("digests").at("lm").get<std::string>() != lm_digest)
            throw CorruptionError("decoder parameter digest mismatch: checkpoint is corrupt");
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError("checkpoint digest block is malformed: " + std::string(e.what()));
    }
    return ckpt;
}

}  // namespace chartqa
