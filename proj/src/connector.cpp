#include "chartqa/connector.hpp"

#include <cmath>

namespace chartqa {

std::string to_string(ConnectorMode mode) {
    return mode == ConnectorMode::cross_attention ? "cross_attention" : "mlp";
}

std::string to_string(QuerySource source) {
    return source == QuerySource::learned ? "learned" : "visual";
}

ConnectorMode connector_mode_from_string(const std::string& s) {
    if (s == "cross_attention") return ConnectorMode::cross_attention;
    if (s == "mlp") return ConnectorMode::mlp;
    throw ConfigError("unknown connector mode \"" + s + "\"");
}

QuerySource query_source_from_string(const std::string& s) {
    if (s == "learned") return QuerySource::learned;
    if (s == "visual") return QuerySource::visual;
    throw ConfigError("unknown query source \"" + s + "\"");
}

void check_connector_config(const ConnectorConfig& config) {
    if (config.num_queries <= 0) throw ConfigError("query slot count must be positive");
    if (config.d_v <= 0 || config.d_k <= 0 || config.d_l <= 0 || config.d_h <= 0)
        throw ConfigError("connector widths must be positive");
    if (config.num_heads <= 0 || config.d_k % config.num_heads != 0)
        throw ConfigError("key width " + std::to_string(config.d_k) +
                          " is not divisible by " + std::to_string(config.num_heads) + " heads");
}

void Connector::init(const ConnectorConfig& cfg, Rng& rng) {
    check_connector_config(cfg);
    config = cfg;
    normal_init(learned_queries, cfg.num_queries, cfg.d_k, rng, 0.02);
    normal_init(w_q, cfg.d_v, cfg.d_k, rng, 0.02);
    normal_init(w_k, cfg.d_v, cfg.d_k, rng, 0.02);
    normal_init(w_v, cfg.d_v, cfg.d_k, rng, 0.02);
    normal_init(w_o, cfg.d_k, cfg.d_l, rng, 0.02);
    normal_init(mlp_w1, cfg.d_v, cfg.d_h, rng, 0.02);
    mlp_b1.resize(1, cfg.d_h);
    normal_init(mlp_w2, cfg.d_h, cfg.d_l, rng, 0.02);
    mlp_b2.resize(1, cfg.d_l);
}

namespace {

void check_input(const VisualFeatures& features, const ConnectorConfig& config) {
    if (features.tokens.rows() == 0) throw InputError("no visual tokens to align");
    if (features.tokens.cols() != config.d_v)
        throw ConfigError("visual feature width " + std::to_string(features.tokens.cols()) +
                          " does not match connector input width " + std::to_string(config.d_v));
}

}  // namespace

AlignedTokens Connector::align(const VisualFeatures& features, ConnectorCache& cache) const {
    if (config.mode != ConnectorMode::cross_attention)
        throw ConfigError("connector is configured for mlp mode; use align_mlp");
    check_input(features, config);

    cache.v = features.tokens;
    cache.q = config.query_source == QuerySource::learned ? learned_queries.value
                                                          : Mat(cache.v * w_q.value);
    cache.k = cache.v * w_k.value;
    cache.vv = cache.v * w_v.value;

    Eigen::Index rows = cache.q.rows();
    Eigen::Index dh = config.d_k / config.num_heads;
    // Scaling is pinned to the full key width, independent of head count.
    double scale = 1.0 / std::sqrt(static_cast<double>(config.d_k));

    cache.probs.assign(static_cast<size_t>(config.num_heads), Mat());
    cache.context.resize(rows, config.d_k);
    for (int h = 0; h < config.num_heads; ++h) {
        auto qh = cache.q.middleCols(h * dh, dh);
        auto kh = cache.k.middleCols(h * dh, dh);
        auto vh = cache.vv.middleCols(h * dh, dh);
        Mat scores = qh * kh.transpose() * scale;  // [rows x N_p]
        cache.probs[static_cast<size_t>(h)] = softmax_rows(scores);
        cache.context.middleCols(h * dh, dh) = cache.probs[static_cast<size_t>(h)] * vh;
    }

    AlignedTokens out;
    out.tokens = cache.context * w_o.value;
    return out;
}

AlignedTokens Connector::align(const VisualFeatures& features) const {
    ConnectorCache cache;
    return align(features, cache);
}

Mat Connector::align_backward(const Mat& dtokens, ConnectorCache& cache) {
    Eigen::Index dh = config.d_k / config.num_heads;
    double scale = 1.0 / std::sqrt(static_cast<double>(config.d_k));

    w_o.grad.noalias() += cache.context.transpose() * dtokens;
    Mat dcontext = dtokens * w_o.value.transpose();

    Mat dq(cache.q.rows(), config.d_k), dk(cache.k.rows(), config.d_k),
        dvv(cache.vv.rows(), config.d_k);
    for (int h = 0; h < config.num_heads; ++h) {
        auto qh = cache.q.middleCols(h * dh, dh);
        auto kh = cache.k.middleCols(h * dh, dh);
        auto vh = cache.vv.middleCols(h * dh, dh);
        auto dch = dcontext.middleCols(h * dh, dh);
        const Mat& p = cache.probs[static_cast<size_t>(h)];

        Mat dp = dch * vh.transpose();
        dvv.middleCols(h * dh, dh) = p.transpose() * dch;
        Mat ds = softmax_rows_backward(p, dp);
        dq.middleCols(h * dh, dh) = ds * kh * scale;
        dk.middleCols(h * dh, dh) = ds.transpose() * qh * scale;
    }

    Mat dv = Mat::Zero(cache.v.rows(), config.d_v);
    if (config.query_source == QuerySource::learned) {
        learned_queries.grad += dq;
    } else {
        w_q.grad.noalias() += cache.v.transpose() * dq;
        dv.noalias() += dq * w_q.value.transpose();
    }
    w_k.grad.noalias() += cache.v.transpose() * dk;
    dv.noalias() += dk * w_k.value.transpose();
    w_v.grad.noalias() += cache.v.transpose() * dvv;
    dv.noalias() += dvv * w_v.value.transpose();
    return dv;
}

AlignedTokens Connector::align_mlp(const VisualFeatures& features, ConnectorCache& cache) const {
    if (config.mode != ConnectorMode::mlp)
        throw ConfigError("connector is configured for cross-attention mode; use align");
    check_input(features, config);

    cache.v = features.tokens;
    cache.h = (cache.v * mlp_w1.value).rowwise() + mlp_b1.value.row(0);
    cache.hact = gelu(cache.h);
    AlignedTokens out;
    out.tokens = (cache.hact * mlp_w2.value).rowwise() + mlp_b2.value.row(0);
    return out;
}

AlignedTokens Connector::align_mlp(const VisualFeatures& features) const {
    ConnectorCache cache;
    return align_mlp(features, cache);
}

Mat Connector::align_mlp_backward(const Mat& dtokens, ConnectorCache& cache) {
    mlp_w2.grad.noalias() += cache.hact.transpose() * dtokens;
    mlp_b2.grad.row(0) += dtokens.colwise().sum();
    Mat dhact = dtokens * mlp_w2.value.transpose();
    Mat dhpre = gelu_backward(dhact, cache.h);
    mlp_w1.grad.noalias() += cache.v.transpose() * dhpre;
    mlp_b1.grad.row(0) += dhpre.colwise().sum();
    return dhpre * mlp_w1.value.transpose();
}

AlignedTokens Connector::forward(const VisualFeatures& features, ConnectorCache& cache) const {
    return config.mode == ConnectorMode::cross_attention ? align(features, cache)
                                                         : align_mlp(features, cache);
}

Mat Connector::backward(const Mat& dtokens, ConnectorCache& cache) {
    return config.mode == ConnectorMode::cross_attention ? align_backward(dtokens, cache)
                                                         : align_mlp_backward(dtokens, cache);
}

int Connector::output_rows(int n_p) const {
    if (config.mode == ConnectorMode::mlp) return n_p;
    return config.query_source == QuerySource::learned ? config.num_queries : n_p;
}

void Connector::visit(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".learned_queries", learned_queries);
    fn(prefix + ".w_q", w_q);
    fn(prefix + ".w_k", w_k);
    fn(prefix + ".w_v", w_v);
    fn(prefix + ".w_o", w_o);
    fn(prefix + ".mlp_w1", mlp_w1);
    fn(prefix + ".mlp_b1", mlp_b1);
    fn(prefix + ".mlp_w2", mlp_w2);
    fn(prefix + ".mlp_b2", mlp_b2);
}

}  // namespace chartqa
