#pragma once

#include <string>
#include <vector>

#include "spgnn/graph_conv.hpp"
#include "spgnn/patch_graph.hpp"

namespace spgnn {

struct MsgcnConfig {
    int in_channels = 3;
    std::vector<int> depths{2, 2, 6, 2};
    std::vector<int> dims{80, 160, 400, 640};
    int k = 9;
    int heads = 4;

    void validate() const;
};

struct ShapeCHW {
    int c = 0, h = 0, w = 0;
    bool operator==(const ShapeCHW&) const = default;
};

/// Stage output shapes for an input of extent h x w (both divisible by
/// 32): stage i emits [dims[i], h/4/2^i, w/4/2^i]. Pure arithmetic — no
/// tensors are allocated.
std::vector<ShapeCHW> msgcn_stage_shapes(const MsgcnConfig& cfg, int h, int w);

/// Four-stage graph-convolution backbone over the patch grid: stem to
/// H/4, then per stage an optional stride-2 downsample conv and a run
/// of GcnBlocks whose k-NN graphs are rebuilt from each block's input
/// features.
struct Msgcn {
    MsgcnConfig cfg;
    Stem stem;
    std::vector<Conv2d> downsamples;          // between stages, 3 of them
    std::vector<std::vector<GcnBlock>> stages;

    explicit Msgcn(const MsgcnConfig& cfg);
    void init(Rng& rng);
    /// Returns the four stage outputs, finest first.
    std::vector<Var> forward(Graph& g, Var img);
    void collect(std::vector<Parameter*>& out);
};

/// Top-down feature pyramid over the stage outputs: 1x1 laterals to
/// fpn_dim, nearest-neighbor 2x upsample added into the next finer
/// lateral, then a 3x3 smoothing conv per level. Outputs finest first.
struct ImageFpn {
    std::vector<Conv2d> laterals;
    std::vector<Conv2d> smooths;
    int fpn_dim;

    ImageFpn(const std::string& name, const std::vector<int>& dims, int fpn_dim);
    void init(Rng& rng);
    std::vector<Var> forward(Graph& g, const std::vector<Var>& stage_maps);
    void collect(std::vector<Parameter*>& out);
};

}  // namespace spgnn
