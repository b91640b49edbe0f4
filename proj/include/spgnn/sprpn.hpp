#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spgnn/autograd.hpp"
#include "spgnn/box.hpp"
#include "spgnn/layers.hpp"
#include "spgnn/superpixel.hpp"

namespace spgnn {

// Two-layer graph convolution over the superpixel graph:
// H1 = GeLU(A_hat F W1), H2 = A_hat H1 W2.
struct SpGcn {
    Parameter w1;  // [in_dim, hidden]
    Parameter w2;  // [hidden, out_dim]

    SpGcn(const std::string& name, int in_dim, int hidden, int out_dim);
    void init(Rng& rng);
    // a_hat and feats enter the tape as constants; only W1/W2 train.
    Var forward(Graph& g, const Tensor& a_hat, const Tensor& feats);
    void collect(std::vector<Parameter*>& out);
};

// Four independent 3x3 pad-1 convolutions over the unpooled superpixel map,
// strides {4,8,16,32}, sized to mirror the image pyramid.
struct SuperpixelFpn {
    std::vector<Conv2d> convs;

    SuperpixelFpn(const std::string& name, int channels);
    void init(Rng& rng);
    std::vector<Var> forward(Graph& g, Var recovered);
    void collect(std::vector<Parameter*>& out);
};

enum class FuseMode { add, concat };

// Accepts "add" or "concat"; anything else throws.
FuseMode parse_fuse_mode(const std::string& s);
std::string fuse_mode_name(FuseMode mode);

// Merges the image pyramid with the superpixel pyramid level by level and
// smooths the result with a 3x3 convolution.
struct FuseNeck {
    FuseMode mode;
    std::vector<Conv2d> convs;  // add: C->C; concat: 2C->C

    FuseNeck(const std::string& name, int channels, int levels, FuseMode mode);
    void init(Rng& rng);
    std::vector<Var> forward(Graph& g, const std::vector<Var>& image_levels,
                             const std::vector<Var>& superpixel_levels);
    void collect(std::vector<Parameter*>& out);
};

struct Anchor {
    Box box;
    int level = 0;
};

struct AnchorConfig {
    std::vector<int> strides{4, 8, 16, 32};
    std::vector<double> base_sizes{32, 64, 128, 256};
    std::vector<double> ratios{0.5, 1.0, 2.0};
};

// One anchor per (ratio, cell) at each level, centers at (i+0.5)*stride,
// emitted in (level, ratio, y, x) order to match the head's channel layout.
std::vector<Anchor> generate_anchors(const std::vector<std::pair<int, int>>& level_hw,
                                     const AnchorConfig& cfg = {});

struct RpnOut {
    std::vector<Var> logits;  // per level [A,H,W]
    std::vector<Var> deltas;  // per level [4A,H,W], channel a*4+j
};

// Shared 3x3 conv + GeLU, then 1x1 heads for objectness and box deltas.
struct RpnHead {
    Conv2d shared;
    Conv2d cls;
    Conv2d reg;
    int num_ratios;

    RpnHead(const std::string& name, int channels, int num_ratios);
    void init(Rng& rng);
    RpnOut forward(Graph& g, const std::vector<Var>& pyramid);
    void collect(std::vector<Parameter*>& out);
};

struct Proposal {
    Box box;
    double score = 0.0;  // sigmoid objectness
};

struct ProposalConfig {
    int pre_nms_top = 1000;
    double nms_iou = 0.7;
    int post_nms_top = 300;
    double min_size = 2.0;
};

// Decode per-anchor deltas, clip to the image, drop boxes below min_size,
// keep the pre-NMS top scorers, suppress, and return the post-NMS top.
std::vector<Proposal> decode_and_select(const std::vector<Tensor>& logits,
                                        const std::vector<Tensor>& deltas,
                                        const std::vector<Anchor>& anchors, int img_w, int img_h,
                                        const ProposalConfig& cfg = {});

}  // namespace spgnn
