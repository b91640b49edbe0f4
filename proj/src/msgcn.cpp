#include "spgnn/msgcn.hpp"

#include <stdexcept>

#include "spgnn/ops.hpp"

namespace spgnn {

void MsgcnConfig::validate() const {
    if (depths.size() != 4 || dims.size() != 4)
        throw std::invalid_argument("backbone needs exactly 4 stages");
    for (int d : depths)
        if (d < 1) throw std::invalid_argument("stage depth must be >= 1");
    for (int d : dims) {
        if (d < 1) throw std::invalid_argument("stage dim must be >= 1");
        if (d % heads != 0)
            throw std::invalid_argument("stage dims must be divisible by the head count");
    }
    if (k < 1) throw std::invalid_argument("K must be >= 1");
    if (heads < 1) throw std::invalid_argument("head count must be >= 1");
    if (in_channels < 1) throw std::invalid_argument("input channels must be >= 1");
}

std::vector<ShapeCHW> msgcn_stage_shapes(const MsgcnConfig& cfg, int h, int w) {
    cfg.validate();
    if (h % 32 != 0 || w % 32 != 0)
        throw std::invalid_argument("input extents must be divisible by 32");
    std::vector<ShapeCHW> out;
    int sh = h / 4, sw = w / 4;
    for (int i = 0; i < 4; ++i) {
        if (i > 0) {
            sh /= 2;
            sw /= 2;
        }
        out.push_back({cfg.dims[i], sh, sw});
    }
    return out;
}

Msgcn::Msgcn(const MsgcnConfig& cfg_) : cfg(cfg_), stem("stem", cfg_.in_channels, cfg_.dims[0]) {
    cfg.validate();
    for (int i = 1; i < 4; ++i)
        downsamples.emplace_back("down" + std::to_string(i), cfg.dims[i - 1], cfg.dims[i], 3, 2,
                                 1);
    for (int i = 0; i < 4; ++i) {
        std::vector<GcnBlock> blocks;
        for (int b = 0; b < cfg.depths[i]; ++b)
            blocks.emplace_back("stage" + std::to_string(i) + ".block" + std::to_string(b),
                                cfg.dims[i], cfg.heads);
        stages.push_back(std::move(blocks));
    }
}

void Msgcn::init(Rng& rng) {
    stem.init(rng);
    for (auto& d : downsamples) d.init(rng);
    for (auto& s : stages)
        for (auto& b : s) b.init(rng);
}

std::vector<Var> Msgcn::forward(Graph& g, Var img) {
    std::vector<Var> outs;
    Var map = stem.forward(g, img);
    for (int i = 0; i < 4; ++i) {
        if (i > 0) map = downsamples[static_cast<size_t>(i - 1)].forward(g, map);
        int hg = map.value().dim(1), wg = map.value().dim(2);
        Var nodes = ops::grid_to_nodes(map);
        for (GcnBlock& block : stages[static_cast<size_t>(i)]) {
            NeighborTable nt = knn_graph(nodes.value(), cfg.k);
            nodes = block.forward(g, nodes, nt);
        }
        map = ops::nodes_to_grid(nodes, hg, wg);
        outs.push_back(map);
    }
    return outs;
}

void Msgcn::collect(std::vector<Parameter*>& out) {
    stem.collect(out);
    for (auto& d : downsamples) d.collect(out);
    for (auto& s : stages)
        for (auto& b : s) b.collect(out);
}

ImageFpn::ImageFpn(const std::string& name, const std::vector<int>& dims, int fpn_dim_)
    : fpn_dim(fpn_dim_) {
    for (size_t i = 0; i < dims.size(); ++i) {
        laterals.emplace_back(name + ".lateral" + std::to_string(i), dims[i], fpn_dim, 1, 1, 0);
        smooths.emplace_back(name + ".smooth" + std::to_string(i), fpn_dim, fpn_dim, 3, 1, 1);
    }
}

void ImageFpn::init(Rng& rng) {
    for (auto& l : laterals) l.init(rng);
    for (auto& s : smooths) s.init(rng);
}

std::vector<Var> ImageFpn::forward(Graph& g, const std::vector<Var>& stage_maps) {
    if (stage_maps.size() != laterals.size())
        throw std::invalid_argument("pyramid level count mismatch");
    int n = static_cast<int>(stage_maps.size());
    std::vector<Var> lat(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        lat[static_cast<size_t>(i)] = laterals[static_cast<size_t>(i)].forward(
            g, stage_maps[static_cast<size_t>(i)]);
    // top-down: coarsest lateral flows upward into finer levels
    std::vector<Var> merged(static_cast<size_t>(n));
    merged[static_cast<size_t>(n - 1)] = lat[static_cast<size_t>(n - 1)];
    for (int i = n - 2; i >= 0; --i)
        merged[static_cast<size_t>(i)] = ops::add(
            lat[static_cast<size_t>(i)],
            ops::upsample2_nearest(merged[static_cast<size_t>(i + 1)]));
    std::vector<Var> outs(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        outs[static_cast<size_t>(i)] = smooths[static_cast<size_t>(i)].forward(
            g, merged[static_cast<size_t>(i)]);
    return outs;
}

void ImageFpn::collect(std::vector<Parameter*>& out) {
    for (auto& l : laterals) l.collect(out);
    for (auto& s : smooths) s.collect(out);
}

}  // namespace spgnn
