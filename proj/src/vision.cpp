#include "chartqa/vision.hpp"

#include <cmath>

namespace chartqa {

void check_vision_config(const VisionConfig& config) {
    if (config.patch_size <= 0)
        throw ConfigError("patch size must be positive");
    if (config.d_v <= 0 || config.num_layers <= 0 || config.num_heads <= 0)
        throw ConfigError("vision width, depth and head count must be positive");
    if (config.d_v % config.num_heads != 0)
        throw ConfigError("vision width " + std::to_string(config.d_v) +
                          " is not divisible by " + std::to_string(config.num_heads) + " heads");
    if (config.max_resolution < config.patch_size ||
        config.max_resolution % config.patch_size != 0)
        throw ConfigError("max resolution " + std::to_string(config.max_resolution) +
                          " is not a positive multiple of patch size " +
                          std::to_string(config.patch_size));
}

int VisionEncoder::max_tokens() const {
    int side = config.max_resolution / config.patch_size;
    return side * side;
}

void VisionEncoder::init(const VisionConfig& cfg, Rng& rng) {
    check_vision_config(cfg);
    config = cfg;
    int patch_dim = cfg.patch_size * cfg.patch_size * 3;
    patch_proj.init(patch_dim, cfg.d_v, rng);
    normal_init(pos, max_tokens(), cfg.d_v, rng, 0.02);
    blocks.assign(static_cast<size_t>(cfg.num_layers), TransformerBlock{});
    for (auto& b : blocks) b.init(cfg.d_v, cfg.num_heads, /*causal_mask=*/false, rng);
    ln_f.init(cfg.d_v);
}

Mat VisionEncoder::patchify(const ChartImage& image) const {
    int res = image.resolution;
    int p = config.patch_size;
    if (res <= 0 || res % p != 0)
        throw ConfigError("resolution " + std::to_string(res) +
                          " is not divisible by patch size " + std::to_string(p));
    int side = res / p;
    int n = side * side;
    if (n > max_tokens())
        throw ConfigError("resolution " + std::to_string(res) + " needs " + std::to_string(n) +
                          " patch positions but only " + std::to_string(max_tokens()) +
                          " are allocated");
    if (image.pixels.size() != static_cast<size_t>(res) * res * 3)
        throw InputError("pixel buffer size does not match resolution " + std::to_string(res));

    Mat patches(n, p * p * 3);
    for (int gy = 0; gy < side; ++gy) {
        for (int gx = 0; gx < side; ++gx) {
            Eigen::Index row = static_cast<Eigen::Index>(gy) * side + gx;
            Eigen::Index col = 0;
            for (int py = 0; py < p; ++py) {
                for (int px = 0; px < p; ++px) {
                    for (int c = 0; c < 3; ++c) {
                        double v = image.pixel(gx * p + px, gy * p + py, c);
                        if (!std::isfinite(v))
                            throw InputError("non-finite pixel at (" +
                                             std::to_string(gx * p + px) + ", " +
                                             std::to_string(gy * p + py) + ")");
                        patches(row, col++) = v;
                    }
                }
            }
        }
    }
    return patches;
}

VisualFeatures VisionEncoder::encode(const ChartImage& image, VisionCache& cache) const {
    cache.patches = patchify(image);
    Eigen::Index n = cache.patches.rows();

    Mat x = patch_proj.forward(cache.patches, cache.projc);
    x += pos.value.topRows(n);

    cache.blockc.assign(blocks.size(), BlockCache{});
    for (size_t l = 0; l < blocks.size(); ++l) x = blocks[l].forward(x, cache.blockc[l]);

    VisualFeatures out;
    out.tokens = ln_f.forward(x, cache.lnfc);
    out.source_resolution = image.resolution;
    return out;
}

VisualFeatures VisionEncoder::encode(const ChartImage& image) const {
    VisionCache cache;
    return encode(image, cache);
}

Mat VisionEncoder::backward(const Mat& dtokens, const VisionCache& cache) {
    Mat dx = ln_f.backward(dtokens, cache.lnfc);
    for (size_t l = blocks.size(); l > 0; --l)
        dx = blocks[l - 1].backward(dx, cache.blockc[l - 1]);
    pos.grad.topRows(dx.rows()) += dx;
    return patch_proj.backward(dx, cache.projc);
}

void VisionEncoder::visit(const std::string& prefix, const ParamVisitor& fn) {
    patch_proj.visit(prefix + ".patch_proj", fn);
    fn(prefix + ".pos", pos);
    for (size_t l = 0; l < blocks.size(); ++l)
        blocks[l].visit(prefix + ".block" + std::to_string(l), fn);
    ln_f.visit(prefix + ".ln_f", fn);
}

}  // namespace chartqa
