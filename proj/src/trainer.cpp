#include "chartqa/trainer.hpp"

#include <cmath>
#include <csignal>
#include <set>
#include <ctime>
#include <fstream>

#include <nlohmann/json.hpp>

#include "chartqa/renderer.hpp"

namespace chartqa {

namespace {

volatile std::sig_atomic_t g_interrupt = 0;

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct SequenceParts {
    std::vector<int> question;
    std::vector<int> table;
    std::vector<int> answer;
};

SequenceParts sequence_parts(const TrainExample& example, const Tokenizer& tok,
                             bool use_chart_to_text, bool with_answer) {
    SequenceParts parts;
    parts.question = tok.tokenize(example.prefix);
    if (use_chart_to_text) parts.table = tok.tokenize(example.table_text);
    if (with_answer) parts.answer = tok.tokenize(example.target);
    return parts;
}

}  // namespace

std::string to_string(TrainStage stage) {
    return stage == TrainStage::alignment ? "alignment" : "reasoning";
}

TrainStage train_stage_from_string(const std::string& s) {
    if (s == "alignment") return TrainStage::alignment;
    if (s == "reasoning") return TrainStage::reasoning;
    throw ConfigError("unknown training stage \"" + s + "\"");
}

TrainConfig default_train_config(TrainStage stage) {
    TrainConfig config;
    config.stage = stage;
    if (stage == TrainStage::alignment) {
        config.learning_rate = 1e-6;
        config.batch_size = 16;
        config.epochs = 6;
    } else {
        config.learning_rate = 1e-5;
        config.batch_size = 8;
        config.epochs = 8;
    }
    return config;
}

void check_train_config(const TrainConfig& config) {
    if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (config.batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (config.epochs < 1) throw ConfigError("epoch count must be at least 1");
    if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 || config.beta2 >= 1.0)
        throw ConfigError("optimizer betas must lie in [0, 1)");
    if (config.weight_decay < 0.0) throw ConfigError("weight decay must be non-negative");
    if (!(config.epsilon > 0.0)) throw ConfigError("optimizer epsilon must be positive");
    if (config.clip_norm < 0.0) throw ConfigError("gradient clip norm must be non-negative");
    if (config.max_steps < 0) throw ConfigError("step limit must be non-negative");
}

AdamW::AdamW(double lr, double beta1, double beta2, double weight_decay, double epsilon)
    : lr_(lr), beta1_(beta1), beta2_(beta2), weight_decay_(weight_decay), epsilon_(epsilon) {}

void AdamW::update(const std::string& name, Param& p) {
    if (t_ == 0) throw ConfigError("begin_step must run before the first update");
    Slot& s = state_[name];
    if (s.m.size() == 0) {
        s.m = Mat::Zero(p.value.rows(), p.value.cols());
        s.v = Mat::Zero(p.value.rows(), p.value.cols());
    } else if (s.m.rows() != p.value.rows() || s.m.cols() != p.value.cols()) {
        throw ConfigError("optimizer state shape for \"" + name +
                          "\" does not match the parameter");
    }
    s.m = beta1_ * s.m + (1.0 - beta1_) * p.grad;
    s.v = beta2_ * s.v + (1.0 - beta2_) * p.grad.cwiseProduct(p.grad);
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    // Decoupled decay: the regularization term bypasses the moment estimates.
    p.value.array() -= lr_ * ((s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + epsilon_) +
                              weight_decay_ * p.value.array());
}

LossResult compute_loss(const Mat& logits, const InterleavedSequence& seq, bool sum_reduction) {
    if (logits.rows() != seq.length())
        throw ConfigError("logits row count " + std::to_string(logits.rows()) +
                          " does not match sequence length " + std::to_string(seq.length()));

    LossResult result;
    result.dlogits = Mat::Zero(logits.rows(), logits.cols());
    double total = 0.0;
    for (Eigen::Index t = 0; t < seq.length(); ++t) {
        if (!seq.label_mask[static_cast<size_t>(t)]) continue;
        if (t == 0) throw DataError("the first sequence position cannot be supervised");
        int y = seq.token_ids[static_cast<size_t>(t)];
        if (y < 0 || y >= logits.cols())
            throw DataError("supervised position " + std::to_string(t) +
                            " does not hold a text token");
        Eigen::Index row = t - 1;
        double mx = logits.row(row).maxCoeff();
        Eigen::Array<double, 1, Eigen::Dynamic> shifted = logits.row(row).array() - mx;
        double lse = mx + std::log(shifted.exp().sum());
        total += lse - logits(row, y);
        result.dlogits.row(row) += (shifted - (lse - mx)).exp().matrix();
        result.dlogits(row, y) -= 1.0;
        ++result.supervised;
    }
    if (result.supervised == 0)
        throw DataError("example has no supervised positions (label mask is all false)");

    double scale = sum_reduction ? 1.0 : 1.0 / static_cast<double>(result.supervised);
    result.loss = total * scale;
    result.dlogits *= scale;
    return result;
}

std::vector<TrainExample> stage1_corpus(const std::vector<ChartSpec>& specs, int resolution) {
    std::vector<TrainExample> out;
    for (const ChartSpec& spec : specs) {
        for (const Stage1Example& ex : make_stage1_examples(spec, resolution)) {
            TrainExample t;
            t.spec = spec;
            t.prefix = ex.prefix;
            t.target = ex.label;
            out.push_back(std::move(t));
        }
    }
    return out;
}

std::vector<TrainExample> stage2_corpus(const std::vector<ChartSpec>& specs,
                                        const std::vector<QACategory>& categories) {
    std::vector<TrainExample> out;
    std::set<QACategory> wanted(categories.begin(), categories.end());
    for (const ChartSpec& spec : specs) {
        std::string table = linearize(spec).text;
        for (const QARecord& qa : make_qa_pairs(spec, wanted)) {
            TrainExample t;
            t.spec = spec;
            t.prefix = qa.question;
            t.target = qa.gold_answer;
            t.table_text = table;
            out.push_back(std::move(t));
        }
    }
    return out;
}

InterleavedSequence build_example_sequence(Checkpoint& ckpt, const VisualFeatures& features,
                                           const TrainExample& example, const Tokenizer& tok,
                                           bool use_chart_to_text) {
    SequenceParts parts = sequence_parts(example, tok, use_chart_to_text, /*with_answer=*/true);
    ConnectorCache cache;
    AlignedTokens aligned = ckpt.connector.forward(features, cache);
    return ckpt.lm.build_input_sequence(parts.question, aligned, parts.table, parts.answer,
                                        tok.specials());
}

void request_training_interrupt() { g_interrupt = 1; }
void clear_training_interrupt() { g_interrupt = 0; }
bool training_interrupt_requested() { return g_interrupt != 0; }

namespace {

// Shared loop for both stages; train_lm distinguishes Stage 2.
TrainRun run_training(const std::vector<TrainExample>& data, const TrainConfig& config,
                      Checkpoint ckpt, bool train_lm) {
    check_train_config(config);
    if (data.empty()) throw DataError("training corpus is empty");

    Tokenizer tok = ckpt.tokenizer();
    std::string vision_digest_before = group_digest(ckpt.vision);

    // The vision encoder is frozen in every stage, so each distinct chart
    // encodes once up front.
    std::unordered_map<std::string, VisualFeatures> encoded;
    for (const TrainExample& ex : data) {
        if (encoded.count(ex.spec.chart_id)) continue;
        ChartImage image =
            render(ex.spec, ckpt.image_resolution, ckpt.vision.config.patch_size);
        encoded.emplace(ex.spec.chart_id, ckpt.vision.encode(image));
    }

    std::ofstream log;
    if (!config.log_path.empty()) {
        log.open(config.log_path, std::ios::trunc);
        if (!log) throw IoError("cannot open training log \"" + config.log_path + "\"");
    }

    auto for_trainable = [&](const ParamVisitor& fn) {
        ckpt.connector.visit("connector", fn);
        if (train_lm) ckpt.lm.visit("lm", fn);
    };
    auto zero_all_grads = [&]() {
        ckpt.connector.visit("connector", [](const std::string&, Param& p) { p.zero_grad(); });
        ckpt.lm.visit("lm", [](const std::string&, Param& p) { p.zero_grad(); });
    };

    AdamW opt(config.learning_rate, config.beta1, config.beta2, config.weight_decay,
              config.epsilon);
    Rng rng(config.seed);
    std::vector<size_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainRun result;
    long long step = 0;
    bool stopped = false;

    struct ExampleState {
        InterleavedSequence seq;
        ConnectorCache conn_cache;
        LMCache lm_cache;
        LossResult loss;
        const VisualFeatures* features = nullptr;
    };

    for (int epoch = 0; epoch < config.epochs && !stopped; ++epoch) {
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
            if (training_interrupt_requested()) {
                result.interrupted = true;
                stopped = true;
                break;
            }
            if (config.max_steps > 0 && step >= config.max_steps) {
                stopped = true;
                break;
            }
            size_t end = std::min(order.size(), start + static_cast<size_t>(config.batch_size));

            std::vector<ExampleState> batch(end - start);
            double batch_total = 0.0;
            long long batch_supervised = 0;
            for (size_t b = 0; b < batch.size(); ++b) {
                const TrainExample& ex = data[order[start + b]];
                ExampleState& st = batch[b];
                st.features = &encoded.at(ex.spec.chart_id);
                SequenceParts parts =
                    sequence_parts(ex, tok, config.use_chart_to_text, /*with_answer=*/true);
                AlignedTokens aligned = ckpt.connector.forward(*st.features, st.conn_cache);
                st.seq = ckpt.lm.build_input_sequence(parts.question, aligned, parts.table,
                                                      parts.answer, tok.specials());
                Mat logits = ckpt.lm.forward(st.seq, st.lm_cache);
                st.loss = compute_loss(logits, st.seq, /*sum_reduction=*/true);
                batch_total += st.loss.loss;
                batch_supervised += st.loss.supervised;
            }
            double scale = config.sum_reduction
                               ? 1.0
                               : 1.0 / static_cast<double>(batch_supervised);
            double batch_loss = batch_total * scale;
            if (!std::isfinite(batch_loss))
                throw ValidationError("training diverged at step " + std::to_string(step + 1) +
                                      ": loss is not finite (stage " + to_string(config.stage) +
                                      ", lr " + std::to_string(config.learning_rate) + ")");

            zero_all_grads();
            for (ExampleState& st : batch) {
                Mat dlogits = st.loss.dlogits * scale;
                Mat demb = ckpt.lm.backward(dlogits, st.seq, st.lm_cache);
                Mat dvis = demb.block(st.seq.visual_offset, 0, st.seq.visual_count,
                                      ckpt.lm.config.d_l);
                ckpt.connector.backward(dvis, st.conn_cache);
            }

            if (config.clip_norm > 0.0) {
                double sq = 0.0;
                for_trainable([&](const std::string&, Param& p) { sq += p.grad.squaredNorm(); });
                double norm = std::sqrt(sq);
                if (norm > config.clip_norm) {
                    double factor = config.clip_norm / norm;
                    for_trainable([&](const std::string&, Param& p) { p.grad *= factor; });
                }
            }

            opt.begin_step();
            for_trainable([&](const std::string& name, Param& p) { opt.update(name, p); });

            // Beyond 1e100 the next forward pass overflows in products even
            // though the parameters themselves are still representable.
            bool healthy = true;
            for_trainable([&](const std::string&, Param& p) {
                if (!p.value.allFinite() || p.value.cwiseAbs().maxCoeff() > 1e100)
                    healthy = false;
            });
            if (!healthy)
                throw ValidationError("training diverged at step " + std::to_string(step + 1) +
                                      ": parameters are non-finite or unbounded (stage " +
                                      to_string(config.stage) + ", lr " +
                                      std::to_string(config.learning_rate) + ")");

            ++step;
            result.step_losses.push_back(batch_loss);
            result.final_loss = batch_loss;
            if (log.is_open()) {
                nlohmann::ordered_json line{{"step", step},
                                            {"stage", to_string(config.stage)},
                                            {"loss", batch_loss},
                                            {"lr", config.learning_rate},
                                            {"timestamp", utc_timestamp()}};
                log << line.dump() << "\n";
            }
        }
    }

    if (group_digest(ckpt.vision) != vision_digest_before)
        throw ValidationError("vision parameters moved during training; the freeze contract "
                              "is broken");

    StageRecord record;
    record.stage = to_string(config.stage);
    record.epochs = config.epochs;
    record.steps = step;
    record.final_loss = result.final_loss;
    record.seed = config.seed;
    record.timestamp = utc_timestamp();
    record.trainable = train_lm ? std::vector<std::string>{"connector", "lm"}
                                : std::vector<std::string>{"connector"};
    ckpt.history.push_back(record);

    result.steps = step;
    result.checkpoint = std::move(ckpt);
    return result;
}

}  // namespace

TrainRun train_stage1(const std::vector<TrainExample>& data, const TrainConfig& config,
                      Checkpoint init) {
    if (config.stage != TrainStage::alignment)
        throw ConfigError("stage-1 training requires an alignment-stage configuration");
    return run_training(data, config, std::move(init), /*train_lm=*/false);
}

TrainRun train_stage2(const std::vector<TrainExample>& data, const TrainConfig& config,
                      Checkpoint init) {
    if (config.stage != TrainStage::reasoning)
        throw ConfigError("stage-2 training requires a reasoning-stage configuration");
    if (!init.has_stage("alignment") && !config.allow_skip_stage1)
        throw ConfigError("checkpoint has no completed alignment stage; pass "
                          "allow_skip_stage1 to proceed anyway");
    return run_training(data, config, std::move(init), /*train_lm=*/true);
}

EncodedChart encode_chart(Checkpoint& ckpt, const ChartSpec& spec) {
    EncodedChart out;
    ChartImage image = render(spec, ckpt.image_resolution, ckpt.vision.config.patch_size);
    out.features = ckpt.vision.encode(image);
    out.table_text = linearize(spec).text;
    return out;
}

std::string predict_answer(Checkpoint& ckpt, const EncodedChart& chart,
                           const std::string& question, const Tokenizer& tok,
                           bool use_chart_to_text, int max_len) {
    std::vector<int> q_ids = tok.tokenize(question);
    std::vector<int> table_ids;
    if (use_chart_to_text) table_ids = tok.tokenize(chart.table_text);
    ConnectorCache cache;
    AlignedTokens aligned = ckpt.connector.forward(chart.features, cache);
    return ckpt.lm.generate(q_ids, aligned, table_ids, tok, max_len);
}

std::string predict_answer(Checkpoint& ckpt, const ChartSpec& spec, const std::string& question,
                           bool use_chart_to_text, int max_len) {
    EncodedChart chart = encode_chart(ckpt, spec);
    Tokenizer tok = ckpt.tokenizer();
    return predict_answer(ckpt, chart, question, tok, use_chart_to_text, max_len);
}

}  // namespace chartqa
