#ifndef CHARTQA_CONNECTOR_HPP_
#define CHARTQA_CONNECTOR_HPP_

#include <string>
#include <vector>

#include "chartqa/nn.hpp"
#include "chartqa/vision.hpp"

namespace chartqa {

enum class ConnectorMode { cross_attention, mlp };
enum class QuerySource { learned, visual };

std::string to_string(ConnectorMode mode);
std::string to_string(QuerySource source);
ConnectorMode connector_mode_from_string(const std::string& s);
QuerySource query_source_from_string(const std::string& s);

struct ConnectorConfig {
    ConnectorMode mode = ConnectorMode::cross_attention;
    QuerySource query_source = QuerySource::learned;
    int num_queries = 16;  // M, output rows in learned mode
    int d_v = 64;
    int d_k = 64;
    int d_l = 64;
    int d_h = 128;      // hidden width of the mlp variant
    int num_heads = 1;  // single softmax by default
};

void check_connector_config(const ConnectorConfig& config);

// V' rows living in the language model embedding space.
struct AlignedTokens {
    Mat tokens;  // [M or N_p x d_l]
};

struct ConnectorCache {
    Mat v;                   // input tokens [N_p x d_v]
    Mat q, k, vv;            // projections [rows x d_k]
    std::vector<Mat> probs;  // per head, [rows x N_p]
    Mat context;             // [rows x d_k], before the output projection
    Mat h;                   // mlp pre-activation
    Mat hact;                // mlp activation
};

// Bridges vision features into the language embedding space. The attention
// path pools N_p tokens into M learned query slots (or projects queries from
// the tokens themselves); the mlp path maps tokens independently. All
// parameter tensors are allocated in every mode so checkpoints keep one
// stable shape per configuration.
struct Connector {
    ConnectorConfig config;
    Param learned_queries;      // [M x d_k]
    Param w_q, w_k, w_v;        // [d_v x d_k]
    Param w_o;                  // [d_k x d_l]
    Param mlp_w1, mlp_b1;       // [d_v x d_h], [1 x d_h]
    Param mlp_w2, mlp_b2;       // [d_h x d_l], [1 x d_l]

    void init(const ConnectorConfig& cfg, Rng& rng);

    // Cross-attention pooling: softmax(Q K^T / sqrt(d_k)) (V W_v) W_o.
    AlignedTokens align(const VisualFeatures& features, ConnectorCache& cache) const;
    AlignedTokens align(const VisualFeatures& features) const;
    Mat align_backward(const Mat& dtokens, ConnectorCache& cache);

    // Per-token two-layer MLP with a GELU between the layers.
    AlignedTokens align_mlp(const VisualFeatures& features, ConnectorCache& cache) const;
    AlignedTokens align_mlp(const VisualFeatures& features) const;
    Mat align_mlp_backward(const Mat& dtokens, ConnectorCache& cache);

    // Dispatch on config.mode; what the trainer calls.
    AlignedTokens forward(const VisualFeatures& features, ConnectorCache& cache) const;
    Mat backward(const Mat& dtokens, ConnectorCache& cache);

    // Output row count for an input of n_p tokens under the current mode.
    int output_rows(int n_p) const;

    void visit(const std::string& prefix, const ParamVisitor& fn);
};

}  // namespace chartqa

#endif  // CHARTQA_CONNECTOR_HPP_
