#ifndef CHARTQA_VISION_HPP_
#define CHARTQA_VISION_HPP_

#include <string>
#include <vector>

#include "chartqa/nn.hpp"
#include "chartqa/renderer.hpp"

namespace chartqa {

struct VisionConfig {
    int patch_size = 32;
    int d_v = 64;
    int num_layers = 2;
    int num_heads = 4;
    int max_resolution = 448;
};

// Throws ConfigError on an unusable configuration.
void check_vision_config(const VisionConfig& config);

// Patch-token features for one image.
struct VisualFeatures {
    Mat tokens;  // [N_p x d_v]
    int source_resolution = 0;
};

struct VisionCache {
    Mat patches;  // [N_p x patch_size^2 * 3]
    LinearCache projc;
    std::vector<BlockCache> blockc;
    LayerNormCache lnfc;
};

// Patch transformer over raster charts: linear patch projection, learned
// absolute position embeddings sliced per resolution, pre-norm non-causal
// blocks, final layer norm. No CLS token; every patch token is emitted.
struct VisionEncoder {
    VisionConfig config;
    Linear patch_proj;
    Param pos;  // [N_p_max x d_v]
    std::vector<TransformerBlock> blocks;
    LayerNorm ln_f;

    void init(const VisionConfig& cfg, Rng& rng);

    // Row-major patch grid; each row flattens one patch in (y, x, channel)
    // order. Rejects resolutions the config cannot tile or position.
    Mat patchify(const ChartImage& image) const;

    VisualFeatures encode(const ChartImage& image, VisionCache& cache) const;
    VisualFeatures encode(const ChartImage& image) const;

    // Accumulates parameter gradients and returns d(patches).
    Mat backward(const Mat& dtokens, const VisionCache& cache);

    void visit(const std::string& prefix, const ParamVisitor& fn);

    int max_tokens() const;
};

}  // namespace chartqa

#endif  // CHARTQA_VISION_HPP_
