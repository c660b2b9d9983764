#include "chartqa/nn.hpp"

#include <cmath>

namespace chartqa {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kMaskValue = -1e30;
// sqrt(2 / pi), the tanh-GELU constant.
const double kGeluScale = std::sqrt(2.0 / M_PI);

}  // namespace

void normal_init(Param& p, Eigen::Index rows, Eigen::Index cols, Rng& rng, double stddev) {
    p.resize(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) p.value(i, j) = rng.normal() * stddev;
}

void Linear::init(Eigen::Index in, Eigen::Index out, Rng& rng, double stddev) {
    normal_init(w, in, out, rng, stddev);
    b.resize(1, out);
}

Mat Linear::forward(const Mat& x, LinearCache& cache) const {
    if (x.cols() != w.value.rows())
        throw ConfigError("linear layer input width " + std::to_string(x.cols()) +
                          " does not match weight rows " + std::to_string(w.value.rows()));
    cache.x = x;
    return (x * w.value).rowwise() + b.value.row(0);
}

Mat Linear::backward(const Mat& dy, const LinearCache& cache) {
    w.grad.noalias() += cache.x.transpose() * dy;
    b.grad.row(0) += dy.colwise().sum();
    return dy * w.value.transpose();
}

void Linear::visit(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".w", w);
    fn(prefix + ".b", b);
}

void LayerNorm::init(Eigen::Index dim) {
    gamma.resize(1, dim);
    gamma.value.setOnes();
    beta.resize(1, dim);
}

Mat LayerNorm::forward(const Mat& x, LayerNormCache& cache) const {
    Eigen::Index t = x.rows(), d = x.cols();
    cache.xhat.resize(t, d);
    cache.invstd.resize(t, 1);
    for (Eigen::Index i = 0; i < t; ++i) {
        double mean = x.row(i).mean();
        double var = (x.row(i).array() - mean).square().mean();
        double invstd = 1.0 / std::sqrt(var + kLnEps);
        cache.invstd(i, 0) = invstd;
        cache.xhat.row(i) = ((x.row(i).array() - mean) * invstd).matrix();
    }
    Mat y = cache.xhat;
    y.array().rowwise() *= gamma.value.row(0).array();
    y.rowwise() += beta.value.row(0);
    return y;
}

Mat LayerNorm::backward(const Mat& dy, const LayerNormCache& cache) {
    Eigen::Index t = dy.rows(), d = dy.cols();
    gamma.grad.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
    beta.grad.row(0) += dy.colwise().sum();

    Mat dx(t, d);
    for (Eigen::Index i = 0; i < t; ++i) {
        Eigen::Array<double, 1, Eigen::Dynamic> dxhat =
            dy.row(i).array() * gamma.value.row(0).array();
        double m1 = dxhat.mean();
        double m2 = (dxhat * cache.xhat.row(i).array()).mean();
        dx.row(i) =
            ((dxhat - m1 - cache.xhat.row(i).array() * m2) * cache.invstd(i, 0)).matrix();
    }
    return dx;
}

void LayerNorm::visit(const std::string& prefix, const ParamVisitor& fn) {
    fn(prefix + ".gamma", gamma);
    fn(prefix + ".beta", beta);
}

Mat gelu(const Mat& x) {
    return x.unaryExpr([](double v) {
        double u = kGeluScale * (v + 0.044715 * v * v * v);
        return 0.5 * v * (1.0 + std::tanh(u));
    });
}

Mat gelu_backward(const Mat& dy, const Mat& x) {
    Mat dx = x.unaryExpr([](double v) {
        double u = kGeluScale * (v + 0.044715 * v * v * v);
        double t = std::tanh(u);
        double du = kGeluScale * (1.0 + 3.0 * 0.044715 * v * v);
        return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * du;
    });
    return dx.cwiseProduct(dy);
}

Mat softmax_rows(const Mat& logits) {
    Mat p(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        double mx = logits.row(i).maxCoeff();
        Eigen::Array<double, 1, Eigen::Dynamic> e = (logits.row(i).array() - mx).exp();
        p.row(i) = (e / e.sum()).matrix();
    }
    return p;
}

Mat softmax_rows_backward(const Mat& p, const Mat& dp) {
    Mat ds(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.rows(); ++i) {
        double dot = p.row(i).dot(dp.row(i));
        ds.row(i) = (p.row(i).array() * (dp.row(i).array() - dot)).matrix();
    }
    return ds;
}

void MultiHeadAttention::init(Eigen::Index dim, int heads, bool causal_mask, Rng& rng) {
    if (heads <= 0 || dim % heads != 0)
        throw ConfigError("model width " + std::to_string(dim) +
                          " is not divisible by head count " + std::to_string(heads));
    num_heads = heads;
    causal = causal_mask;
    wq.init(dim, dim, rng);
    wk.init(dim, dim, rng);
    wv.init(dim, dim, rng);
    wo.init(dim, dim, rng);
}

Mat MultiHeadAttention::forward(const Mat& x, AttentionCache& cache) const {
    Eigen::Index t = x.rows(), d = x.cols();
    Eigen::Index dh = d / num_heads;
    double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    cache.q = wq.forward(x, cache.qc);
    cache.k = wk.forward(x, cache.kc);
    cache.v = wv.forward(x, cache.vc);
    cache.probs.assign(num_heads, Mat());

    Mat concat(t, d);
    for (int h = 0; h < num_heads; ++h) {
        auto qh = cache.q.middleCols(h * dh, dh);
        auto kh = cache.k.middleCols(h * dh, dh);
        auto vh = cache.v.middleCols(h * dh, dh);
        Mat scores = qh * kh.transpose() * scale;
        if (causal) {
            for (Eigen::Index i = 0; i < t; ++i)
                for (Eigen::Index j = i + 1; j < t; ++j) scores(i, j) = kMaskValue;
        }
        cache.probs[h] = softmax_rows(scores);
        concat.middleCols(h * dh, dh) = cache.probs[h] * vh;
    }
    return wo.forward(concat, cache.oc);
}

Mat MultiHeadAttention::backward(const Mat& dy, const AttentionCache& cache) {
    Eigen::Index t = dy.rows();
    Eigen::Index d = cache.q.cols();
    Eigen::Index dh = d / num_heads;
    double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Mat dconcat = wo.backward(dy, cache.oc);
    Mat dq(t, d), dk(t, d), dv(t, d);
    for (int h = 0; h < num_heads; ++h) {
        auto kh = cache.k.middleCols(h * dh, dh);
        auto vh = cache.v.middleCols(h * dh, dh);
        auto qh = cache.q.middleCols(h * dh, dh);
        auto doh = dconcat.middleCols(h * dh, dh);
        const Mat& p = cache.probs[h];

        Mat dp = doh * vh.transpose();
        dv.middleCols(h * dh, dh) = p.transpose() * doh;
        // Masked entries have p = 0, so their ds vanishes without special
        // handling.
        Mat ds = softmax_rows_backward(p, dp);
        dq.middleCols(h * dh, dh) = ds * kh * scale;
        dk.middleCols(h * dh, dh) = ds.transpose() * qh * scale;
    }
    Mat dx = wq.backward(dq, cache.qc);
    dx += wk.backward(dk, cache.kc);
    dx += wv.backward(dv, cache.vc);
    return dx;
}

void MultiHeadAttention::visit(const std::string& prefix, const ParamVisitor& fn) {
    wq.visit(prefix + ".wq", fn);
    wk.visit(prefix + ".wk", fn);
    wv.visit(prefix + ".wv", fn);
    wo.visit(prefix + ".wo", fn);
}

void TransformerBlock::init(Eigen::Index dim, int heads, bool causal_mask, Rng& rng) {
    ln1.init(dim);
    ln2.init(dim);
    attn.init(dim, heads, causal_mask, rng);
    fc1.init(dim, 4 * dim, rng);
    fc2.init(4 * dim, dim, rng);
}

Mat TransformerBlock::forward(const Mat& x, BlockCache& cache) const {
    Mat h = x + attn.forward(ln1.forward(x, cache.ln1c), cache.attc);
    cache.gelu_in = fc1.forward(ln2.forward(h, cache.ln2c), cache.fc1c);
    return h + fc2.forward(gelu(cache.gelu_in), cache.fc2c);
}

Mat TransformerBlock::backward(const Mat& dy, const BlockCache& cache) {
    Mat dgelu_out = fc2.backward(dy, cache.fc2c);
    Mat dfc1_out = gelu_backward(dgelu_out, cache.gelu_in);
    Mat dh = dy + ln2.backward(fc1.backward(dfc1_out, cache.fc1c), cache.ln2c);
    Mat dx = dh + ln1.backward(attn.backward(dh, cache.attc), cache.ln1c);
    return dx;
}

void TransformerBlock::visit(const std::string& prefix, const ParamVisitor& fn) {
    ln1.visit(prefix + ".ln1", fn);
    attn.visit(prefix + ".attn", fn);
    ln2.visit(prefix + ".ln2", fn);
    fc1.visit(prefix + ".fc1", fn);
    fc2.visit(prefix + ".fc2", fn);
}

}  // namespace chartqa
