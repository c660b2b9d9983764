#ifndef CHARTQA_CHECKPOINT_HPP_
#define CHARTQA_CHECKPOINT_HPP_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "chartqa/connector.hpp"
#include "chartqa/lm.hpp"
#include "chartqa/tokenizer.hpp"
#include "chartqa/vision.hpp"

namespace chartqa {

// One completed training stage.
struct StageRecord {
    std::string stage;  // "alignment" or "reasoning"
    int epochs = 0;
    long long steps = 0;
    double final_loss = 0.0;
    uint64_t seed = 0;
    std::string timestamp;
    std::vector<std::string> trainable;  // parameter groups updated in that stage
};

// Full model state plus training metadata. The tokenizer travels as its vocabulary
// list; parameter tensors serialize as little-endian 32-bit floats, and each
// parameter group carries a content digest over exactly those bytes.
struct Checkpoint {
    VisionEncoder vision;
    Connector connector;
    LanguageModel lm;
    std::vector<std::string> vocabulary;
    int image_resolution = 448;
    std::vector<StageRecord> history;
    nlohmann::json extra;  // resolved run configuration, free-form

    Tokenizer tokenizer() const { return Tokenizer::from_vocabulary(vocabulary); }
    bool has_stage(const std::string& stage) const;
};

// Freshly initialized models with a shared seed.
Checkpoint make_checkpoint(const VisionConfig& vision_config,
                           const ConnectorConfig& connector_config, LMConfig lm_config,
                           const Tokenizer& tokenizer, int image_resolution, uint64_t seed);

// FNV-1a over the f32 serialization of a group's tensors in visit order.
std::string group_digest(VisionEncoder& vision);
std::string group_digest(Connector& connector);
std::string group_digest(LanguageModel& lm);

void save_checkpoint(Checkpoint& ckpt, const std::string& path);

// Verifies magic, directory and digests; throws CorruptionError on any
// mismatch or truncation, IoError when the file cannot be read.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace chartqa

#endif  // CHARTQA_CHECKPOINT_HPP_
