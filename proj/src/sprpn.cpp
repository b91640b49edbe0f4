#include "spgnn/sprpn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spgnn/ops.hpp"

namespace spgnn {

SpGcn::SpGcn(const std::string& name, int in_dim, int hidden, int out_dim)
    : w1(name + ".w1", {in_dim, hidden}), w2(name + ".w2", {hidden, out_dim}) {
    if (in_dim < 1 || hidden < 1 || out_dim < 1)
        throw std::invalid_argument("SpGcn: dimensions must be positive");
}

void SpGcn::init(Rng& rng) {
    kaiming_uniform(w1.value, static_cast<int>(w1.value.dim(0)), rng);
    kaiming_uniform(w2.value, static_cast<int>(w2.value.dim(0)), rng);
}

Var SpGcn::forward(Graph& g, const Tensor& a_hat, const Tensor& feats) {
    if (feats.rank() != 2 || feats.dim(1) != w1.value.dim(0))
        throw std::invalid_argument("SpGcn: features " + feats.shape_str() +
                                    " do not match W1 " + w1.value.shape_str());
    if (a_hat.rank() != 2 || a_hat.dim(0) != a_hat.dim(1) || a_hat.dim(0) != feats.dim(0))
        throw std::invalid_argument("SpGcn: adjacency " + a_hat.shape_str() +
                                    " does not match features " + feats.shape_str());
    Var a = g.constant(a_hat);
    Var h1 = ops::gelu(ops::matmul(ops::matmul(a, g.constant(feats)), g.param(w1)));
    return ops::matmul(ops::matmul(a, h1), g.param(w2));
}

void SpGcn::collect(std::vector<Parameter*>& out) {
    out.push_back(&w1);
    out.push_back(&w2);
}

SuperpixelFpn::SuperpixelFpn(const std::string& name, int channels) {
    const int strides[4] = {4, 8, 16, 32};
    for (int i = 0; i < 4; ++i)
        convs.emplace_back(name + ".s" + std::to_string(i + 2), channels, channels, 3, strides[i],
                           1);
}

void SuperpixelFpn::init(Rng& rng) {
    for (auto& c : convs) c.init(rng);
}

std::vector<Var> SuperpixelFpn::forward(Graph& g, Var recovered) {
    const Tensor& v = recovered.value();
    if (v.rank() != 3)
        throw std::invalid_argument("SuperpixelFpn: expected [C,H,W], got " + v.shape_str());
    if (v.dim(1) % 32 != 0 || v.dim(2) % 32 != 0)
        throw std::invalid_argument("SuperpixelFpn: H and W must be divisible by 32, got " +
                                    v.shape_str());
    std::vector<Var> out;
    for (auto& c : convs) out.push_back(c.forward(g, recovered));
    return out;
}

void SuperpixelFpn::collect(std::vector<Parameter*>& out) {
    for (auto& c : convs) c.collect(out);
}

FuseMode parse_fuse_mode(const std::string& s) {
    if (s == "add") return FuseMode::add;
    if (s == "concat") return FuseMode::concat;
    throw std::invalid_argument("fusion mode must be 'add' or 'concat', got '" + s + "'");
}

std::string fuse_mode_name(FuseMode mode) { return mode == FuseMode::add ? "add" : "concat"; }

FuseNeck::FuseNeck(const std::string& name, int channels, int levels, FuseMode mode_in)
    : mode(mode_in) {
    int in = mode == FuseMode::add ? channels : 2 * channels;
    for (int i = 0; i < levels; ++i)
        convs.emplace_back(name + ".p" + std::to_string(i + 2), in, channels, 3, 1, 1);
}

void FuseNeck::init(Rng& rng) {
    for (auto& c : convs) c.init(rng);
}

std::vector<Var> FuseNeck::forward(Graph& g, const std::vector<Var>& image_levels,
                                   const std::vector<Var>& superpixel_levels) {
    if (image_levels.size() != convs.size() || superpixel_levels.size() != convs.size())
        throw std::invalid_argument("FuseNeck: expected " + std::to_string(convs.size()) +
                                    " levels");
    std::vector<Var> out;
    for (size_t i = 0; i < convs.size(); ++i) {
        Var fused = mode == FuseMode::add
                        ? ops::add(image_levels[i], superpixel_levels[i])
                        : ops::concat_channels(image_levels[i], superpixel_levels[i]);
        out.push_back(convs[i].forward(g, fused));
    }
    return out;
}

void FuseNeck::collect(std::vector<Parameter*>& out) {
    for (auto& c : convs) c.collect(out);
}

std::vector<Anchor> generate_anchors(const std::vector<std::pair<int, int>>& level_hw,
                                     const AnchorConfig& cfg) {
    if (level_hw.size() != cfg.strides.size() || level_hw.size() != cfg.base_sizes.size())
        throw std::invalid_argument("generate_anchors: level count mismatch");
    std::vector<Anchor> out;
    for (size_t l = 0; l < level_hw.size(); ++l) {
        auto [h, w] = level_hw[l];
        double stride = cfg.strides[l];
        double base = cfg.base_sizes[l];
        for (double r : cfg.ratios) {
            double aw = base / std::sqrt(r);
            double ah = base * std::sqrt(r);
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    double cx = (x + 0.5) * stride;
                    double cy = (y + 0.5) * stride;
                    out.push_back({{cx - 0.5 * aw, cy - 0.5 * ah, cx + 0.5 * aw, cy + 0.5 * ah},
                                   static_cast<int>(l)});
                }
        }
    }
    return out;
}

RpnHead::RpnHead(const std::string& name, int channels, int num_ratios_in)
    : shared(name + ".shared", channels, channels, 3, 1, 1),
      cls(name + ".cls", channels, num_ratios_in, 1, 1, 0),
      reg(name + ".reg", channels, 4 * num_ratios_in, 1, 1, 0),
      num_ratios(num_ratios_in) {
    if (num_ratios_in < 1) throw std::invalid_argument("RpnHead: num_ratios must be positive");
}

void RpnHead::init(Rng& rng) {
    shared.init(rng);
    cls.init(rng);
    reg.init(rng);
    // Small prediction layers keep initial scores near 0.5 and initial
    // boxes near their anchors.
    scale_values(cls.w.value, 0.1);
    scale_values(reg.w.value, 0.1);
}

RpnOut RpnHead::forward(Graph& g, const std::vector<Var>& pyramid) {
    RpnOut out;
    for (const Var& p : pyramid) {
        Var t = ops::gelu(shared.forward(g, p));
        out.logits.push_back(cls.forward(g, t));
        out.deltas.push_back(reg.forward(g, t));
    }
    return out;
}

void RpnHead::collect(std::vector<Parameter*>& out) {
    shared.collect(out);
    cls.collect(out);
    reg.collect(out);
}

std::vector<Proposal> decode_and_select(const std::vector<Tensor>& logits,
                                        const std::vector<Tensor>& deltas,
                                        const std::vector<Anchor>& anchors, int img_w, int img_h,
                                        const ProposalConfig& cfg) {
    if (logits.size() != deltas.size())
        throw std::invalid_argument("decode_and_select: level count mismatch");
    std::vector<Proposal> cand;
    size_t idx = 0;
    for (size_t l = 0; l < logits.size(); ++l) {
        const Tensor& lg = logits[l];
        const Tensor& dt = deltas[l];
        if (lg.rank() != 3 || dt.rank() != 3 || dt.dim(0) != 4 * lg.dim(0) ||
            lg.dim(1) != dt.dim(1) || lg.dim(2) != dt.dim(2))
            throw std::invalid_argument("decode_and_select: logits " + lg.shape_str() +
                                        " and deltas " + dt.shape_str() + " disagree");
        int a_count = static_cast<int>(lg.dim(0));
        int h = static_cast<int>(lg.dim(1));
        int w = static_cast<int>(lg.dim(2));
        for (int a = 0; a < a_count; ++a)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x, ++idx) {
                    if (idx >= anchors.size())
                        throw std::invalid_argument("decode_and_select: anchor list too short");
                    const Anchor& an = anchors[idx];
                    if (an.level != static_cast<int>(l))
                        throw std::invalid_argument("decode_and_select: anchor level mismatch");
                    Box b = decode_box(an.box, dt.at(a * 4 + 0, y, x), dt.at(a * 4 + 1, y, x),
                                       dt.at(a * 4 + 2, y, x), dt.at(a * 4 + 3, y, x));
                    b = clip_box(b, img_w, img_h);
                    // the inverted compare also drops NaN boxes from
                    // diverged weights
                    if (!(b.w() >= cfg.min_size) || !(b.h() >= cfg.min_size)) continue;
                    double sc = ops::sigmoid(lg.at(a, y, x));
                    if (std::isnan(sc)) continue;  // diverged weights must not reach the sort
                    cand.push_back({b, sc});
                }
    }
    if (idx != anchors.size())
        throw std::invalid_argument("decode_and_select: anchor list too long");

    std::vector<int> order(cand.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return cand[static_cast<size_t>(a)].score > cand[static_cast<size_t>(b)].score;
    });
    if (static_cast<int>(order.size()) > cfg.pre_nms_top) order.resize(cfg.pre_nms_top);

    std::vector<Box> boxes;
    std::vector<double> scores;
    for (int i : order) {
        boxes.push_back(cand[static_cast<size_t>(i)].box);
        scores.push_back(cand[static_cast<size_t>(i)].score);
    }
    std::vector<int> kept = nms(boxes, scores, cfg.nms_iou);
    if (static_cast<int>(kept.size()) > cfg.post_nms_top) kept.resize(cfg.post_nms_top);

    std::vector<Proposal> out;
    for (int i : kept)
        out.push_back({boxes[static_cast<size_t>(i)], scores[static_cast<size_t>(i)]});
    return out;
}

}  // namespace spgnn
