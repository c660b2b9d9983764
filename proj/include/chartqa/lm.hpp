#ifndef CHARTQA_LM_HPP_
#define CHARTQA_LM_HPP_

#include <string>
#include <vector>

#include "chartqa/connector.hpp"
#include "chartqa/nn.hpp"
#include "chartqa/tokenizer.hpp"

namespace chartqa {

struct LMConfig {
    int d_l = 64;
    int num_layers = 2;
    int num_heads = 4;
    int vocab_size = 0;  // taken from the tokenizer
    int max_seq_len = 512;
};

void check_lm_config(const LMConfig& config);

// One interleaved training or inference sequence. Rows follow the pinned
// layout IMG_START, V' rows, IMG_END, TAB_START, T', TAB_END, Q_START, Q,
// ANS [, answer tokens, EOS]. V' rows carry a placeholder id of -1.
struct InterleavedSequence {
    Mat embeddings;                // [T x d_l]
    std::vector<int> token_ids;    // -1 on V' rows
    std::vector<bool> label_mask;  // true exactly on answer tokens and EOS
    Eigen::Index visual_offset = 0;  // first V' row
    Eigen::Index visual_count = 0;

    Eigen::Index length() const { return embeddings.rows(); }
};

struct LMCache {
    std::vector<BlockCache> blockc;
    LayerNormCache lnfc;
    Mat h_final;  // post-norm hidden states, needed for the tied output grad
};

// Small causal decoder with tied input/output embeddings: logits = H E^T.
// Every row, visual rows included, receives a learned absolute position
// embedding.
struct LanguageModel {
    LMConfig config;
    Param token_embedding;     // [vocab x d_l]
    Param position_embedding;  // [max_seq_len x d_l]
    std::vector<TransformerBlock> blocks;
    LayerNorm ln_f;

    void init(const LMConfig& cfg, Rng& rng);

    InterleavedSequence build_input_sequence(const std::vector<int>& question_tokens,
                                             const AlignedTokens& visual,
                                             const std::vector<int>& table_tokens,
                                             const std::vector<int>& answer_tokens,
                                             const SpecialIds& sp) const;

    // Returns logits [T x vocab_size].
    Mat forward(const InterleavedSequence& seq, LMCache& cache) const;
    Mat forward(const InterleavedSequence& seq) const;

    // Accumulates all parameter gradients (both sides of the tied embedding)
    // and returns d(embeddings) [T x d_l]; the V' rows of that matrix are
    // the gradient w.r.t. the aligned visual tokens.
    Mat backward(const Mat& dlogits, const InterleavedSequence& seq, const LMCache& cache);

    // Greedy decoding from the ANS slot; stops at EOS or after max_len
    // generated tokens. Deterministic; ties break toward the lowest id.
    std::string generate(const std::vector<int>& question_tokens, const AlignedTokens& visual,
                         const std::vector<int>& table_tokens, const Tokenizer& tokenizer,
                         int max_len) const;

    void visit(const std::string& prefix, const ParamVisitor& fn);
};

}  // namespace chartqa

#endif  // CHARTQA_LM_HPP_
