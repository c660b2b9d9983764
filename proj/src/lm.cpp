#include "chartqa/lm.hpp"

#include <cmath>

namespace chartqa {

void check_lm_config(const LMConfig& config) {
    if (config.d_l <= 0 || config.num_layers <= 0 || config.num_heads <= 0)
        throw ConfigError("decoder width, depth and head count must be positive");
    if (config.d_l % config.num_heads != 0)
        throw ConfigError("decoder width " + std::to_string(config.d_l) +
                          " is not divisible by " + std::to_string(config.num_heads) + " heads");
    if (config.vocab_size <= 0)
        throw ConfigError("vocabulary size must be positive; build the tokenizer first");
    if (config.max_seq_len <= 0) throw ConfigError("maximum sequence length must be positive");
}

void LanguageModel::init(const LMConfig& cfg, Rng& rng) {
    check_lm_config(cfg);
    config = cfg;
    normal_init(token_embedding, cfg.vocab_size, cfg.d_l, rng, 0.02);
    normal_init(position_embedding, cfg.max_seq_len, cfg.d_l, rng, 0.02);
    blocks.assign(static_cast<size_t>(cfg.num_layers), TransformerBlock{});
    for (auto& b : blocks) b.init(cfg.d_l, cfg.num_heads, /*causal_mask=*/true, rng);
    ln_f.init(cfg.d_l);
}

InterleavedSequence LanguageModel::build_input_sequence(
    const std::vector<int>& question_tokens, const AlignedTokens& visual,
    const std::vector<int>& table_tokens, const std::vector<int>& answer_tokens,
    const SpecialIds& sp) const {
    if (visual.tokens.cols() != config.d_l)
        throw ConfigError("aligned token width " + std::to_string(visual.tokens.cols()) +
                          " does not match decoder width " + std::to_string(config.d_l));

    Eigen::Index n_v = visual.tokens.rows();
    bool has_answer = !answer_tokens.empty();
    Eigen::Index total = 6 + n_v + static_cast<Eigen::Index>(table_tokens.size()) +
                         static_cast<Eigen::Index>(question_tokens.size()) +
                         static_cast<Eigen::Index>(answer_tokens.size()) + (has_answer ? 1 : 0);
    if (total > config.max_seq_len)
        throw ConfigError("sequence of length " + std::to_string(total) +
                          " exceeds the maximum of " + std::to_string(config.max_seq_len));

    InterleavedSequence seq;
    seq.embeddings.resize(total, config.d_l);
    seq.token_ids.reserve(static_cast<size_t>(total));
    seq.label_mask.assign(static_cast<size_t>(total), false);

    auto check_id = [&](int id) {
        if (id < 0 || id >= config.vocab_size)
            throw InputError("token id " + std::to_string(id) + " is outside the vocabulary");
    };
    auto push_token = [&](int id) {
        check_id(id);
        Eigen::Index t = static_cast<Eigen::Index>(seq.token_ids.size());
        seq.embeddings.row(t) =
            token_embedding.value.row(id) + position_embedding.value.row(t);
        seq.token_ids.push_back(id);
    };

    push_token(sp.img_start);
    seq.visual_offset = static_cast<Eigen::Index>(seq.token_ids.size());
    seq.visual_count = n_v;
    for (Eigen::Index i = 0; i < n_v; ++i) {
        Eigen::Index t = static_cast<Eigen::Index>(seq.token_ids.size());
        seq.embeddings.row(t) = visual.tokens.row(i) + position_embedding.value.row(t);
        seq.token_ids.push_back(-1);
    }
    push_token(sp.img_end);
    push_token(sp.tab_start);
    for (int id : table_tokens) push_token(id);
    push_token(sp.tab_end);
    push_token(sp.q_start);
    for (int id : question_tokens) push_token(id);
    push_token(sp.ans);
    if (has_answer) {
        for (int id : answer_tokens) {
            seq.label_mask[seq.token_ids.size()] = true;
            push_token(id);
        }
        seq.label_mask[seq.token_ids.size()] = true;
        push_token(sp.eos);
    }
    return seq;
}

Mat LanguageModel::forward(const InterleavedSequence& seq, LMCache& cache) const {
    if (seq.length() == 0) throw InputError("cannot run the decoder on an empty sequence");
    if (!seq.embeddings.allFinite())
        throw InputError("sequence embeddings contain non-finite values");
    if (seq.embeddings.cols() != config.d_l)
        throw ConfigError("sequence width " + std::to_string(seq.embeddings.cols()) +
                          " does not match decoder width " + std::to_string(config.d_l));

    Mat x = seq.embeddings;
    cache.blockc.assign(blocks.size(), BlockCache{});
    for (size_t l = 0; l < blocks.size(); ++l) x = blocks[l].forward(x, cache.blockc[l]);
    cache.h_final = ln_f.forward(x, cache.lnfc);
    return cache.h_final * token_embedding.value.transpose();
}

Mat LanguageModel::forward(const InterleavedSequence& seq) const {
    LMCache cache;
    return forward(seq, cache);
}

Mat LanguageModel::backward(const Mat& dlogits, const InterleavedSequence& seq,
                            const LMCache& cache) {
    // Output side of the tied embedding.
    token_embedding.grad.noalias() += dlogits.transpose() * cache.h_final;
    Mat dh = dlogits * token_embedding.value;

    Mat dx = ln_f.backward(dh, cache.lnfc);
    for (size_t l = blocks.size(); l > 0; --l)
        dx = blocks[l - 1].backward(dx, cache.blockc[l - 1]);

    // Input side: scatter into token rows; every position picks up its
    // position embedding gradient, visual rows included.
    for (Eigen::Index t = 0; t < seq.length(); ++t) {
        int id = seq.token_ids[static_cast<size_t>(t)];
        if (id >= 0) token_embedding.grad.row(id) += dx.row(t);
        position_embedding.grad.row(t) += dx.row(t);
    }
    return dx;
}

std::string LanguageModel::generate(const std::vector<int>& question_tokens,
                                    const AlignedTokens& visual,
                                    const std::vector<int>& table_tokens,
                                    const Tokenizer& tokenizer, int max_len) const {
    if (max_len < 1) throw ConfigError("generation length limit must be at least 1");
    if (tokenizer.vocab_size() != config.vocab_size)
        throw ConfigError("tokenizer vocabulary size " + std::to_string(tokenizer.vocab_size()) +
                          " does not match decoder vocabulary " +
                          std::to_string(config.vocab_size));
    SpecialIds sp = tokenizer.specials();
    InterleavedSequence seq =
        build_input_sequence(question_tokens, visual, table_tokens, {}, sp);

    std::vector<int> generated;
    for (int step = 0; step < max_len; ++step) {
        if (seq.length() >= config.max_seq_len) break;
        Mat logits = forward(seq);
        Eigen::Index last = seq.length() - 1;
        int best = 0;
        double best_score = logits(last, 0);
        for (int v = 1; v < config.vocab_size; ++v) {
            if (logits(last, v) > best_score) {
                best_score = logits(last, v);
                best = v;
            }
        }
        if (best == sp.eos) break;
        generated.push_back(best);

        Eigen::Index t = seq.length();
        seq.embeddings.conservativeResize(t + 1, config.d_l);
        seq.embeddings.row(t) =
            token_embedding.value.row(best) + position_embedding.value.row(t);
        seq.token_ids.push_back(best);
        seq.label_mask.push_back(false);
    }
    return tokenizer.detokenize(generated);
}

void LanguageModel::visit(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".token_embedding", token_embedding);
    fn(prefix + ".position_embedding", position_embedding);
    for (size_t l = 0; l < blocks.size(); ++l)
        blocks[l].visit(prefix + ".block" + std::to_string(l), fn);
    ln_f.visit(prefix + ".ln_f", fn);
}

}  // namespace chartqa
