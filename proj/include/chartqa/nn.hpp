#ifndef CHARTQA_NN_HPP_
#define CHARTQA_NN_HPP_

#include <functional>
#include <string>
#include <vector>

#include "chartqa/common.hpp"

namespace chartqa {

// One trainable tensor and its gradient accumulator. All math runs in double;
// checkpoints serialize values as little-endian f32 blocks.
struct Param {
    Mat value;
    Mat grad;

    void resize(Eigen::Index rows, Eigen::Index cols) {
        value = Mat::Zero(rows, cols);
        grad = Mat::Zero(rows, cols);
    }
    void zero_grad() { grad.setZero(); }
};

// Enumeration callback over named parameters. Every model struct visits its
// parameters in a pinned order; serialization, digests, optimizer state, and
// finite-difference checks all rely on that order being stable.
using ParamVisitor = std::function<void(const std::string&, Param&)>;

void normal_init(Param& p, Eigen::Index rows, Eigen::Index cols, Rng& rng, double stddev);

// y = x w + b with x [T x in], w [in x out], b [1 x out] broadcast over rows.
struct LinearCache {
    Mat x;
};

struct Linear {
    Param w;
    Param b;

    void init(Eigen::Index in, Eigen::Index out, Rng& rng, double stddev = 0.02);
    Mat forward(const Mat& x, LinearCache& cache) const;
    // Accumulates into w.grad / b.grad and returns dx.
    Mat backward(const Mat& dy, const LinearCache& cache);
    void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct LayerNormCache {
    Mat xhat;
    Mat invstd;  // [T x 1]
};

// Row-wise layer normalization with learned scale and offset.
struct LayerNorm {
    Param gamma;
    Param beta;

    void init(Eigen::Index dim);
    Mat forward(const Mat& x, LayerNormCache& cache) const;
    Mat backward(const Mat& dy, const LayerNormCache& cache);
    void visit(const std::string& prefix, const ParamVisitor& fn);
};

// tanh-approximated GELU, applied elementwise.
Mat gelu(const Mat& x);
Mat gelu_backward(const Mat& dy, const Mat& x);

// Row-wise softmax; numerically stabilized by max subtraction.
Mat softmax_rows(const Mat& logits);
// dlogits given probabilities p = softmax_rows(logits) and dp.
Mat softmax_rows_backward(const Mat& p, const Mat& dp);

struct AttentionCache {
    LinearCache qc, kc, vc, oc;
    Mat q, k, v;
    std::vector<Mat> probs;  // per head, [T x T]
};

// Standard multi-head self-attention, optionally causal; per-head scaling
// by sqrt(d_head).
struct MultiHeadAttention {
    int num_heads = 1;
    bool causal = false;
    Linear wq, wk, wv, wo;

    void init(Eigen::Index dim, int heads, bool causal_mask, Rng& rng);
    Mat forward(const Mat& x, AttentionCache& cache) const;
    Mat backward(const Mat& dy, const AttentionCache& cache);
    void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct BlockCache {
    LayerNormCache ln1c, ln2c;
    AttentionCache attc;
    LinearCache fc1c, fc2c;
    Mat gelu_in;
};

// Pre-norm transformer block: x + attn(ln1(x)), then x + mlp(ln2(x)) with a
// 4x GELU feed-forward.
struct TransformerBlock {
    LayerNorm ln1, ln2;
    MultiHeadAttention attn;
    Linear fc1, fc2;

    void init(Eigen::Index dim, int heads, bool causal_mask, Rng& rng);
    Mat forward(const Mat& x, BlockCache& cache) const;
    Mat backward(const Mat& dy, const BlockCache& cache);
    void visit(const std::string& prefix, const ParamVisitor& fn);
};

}  // namespace chartqa

#endif  // CHARTQA_NN_HPP_
