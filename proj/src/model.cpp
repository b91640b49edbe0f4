#include "spgnn/model.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include "spgnn/ops.hpp"

namespace spgnn {

namespace {

MsgcnConfig backbone_config(const RunConfig& cfg) {
    MsgcnConfig mc;
    mc.in_channels = 3;
    mc.depths = cfg.depths;
    mc.dims = cfg.dims;
    mc.k = cfg.k;
    mc.heads = cfg.heads;
    return mc;
}

void check_image(const Tensor& img) {
    if (img.shape().size() != 3 || img.dim(0) != 3)
        throw std::invalid_argument("image must be [3,H,W], got " + img.shape_str());
}

ProposalConfig proposal_config(const RunConfig& cfg) {
    ProposalConfig pc;
    pc.pre_nms_top = cfg.pre_nms_top;
    pc.nms_iou = cfg.rpn_nms_iou;
    pc.post_nms_top = cfg.post_nms_top;
    return pc;
}

std::vector<std::pair<int, int>> level_sizes(const std::vector<Var>& pyramid) {
    std::vector<std::pair<int, int>> hw;
    for (const Var& p : pyramid) hw.emplace_back(p.value().dim(1), p.value().dim(2));
    return hw;
}

}  // namespace

SpgnnModel::SpgnnModel(const RunConfig& run_cfg)
    : cfg(run_cfg),
      backbone_cfg(backbone_config(run_cfg)),
      fpn_dim(scaled_fpn_dim(run_cfg)),
      backbone(backbone_cfg),
      fpn("fpn", run_cfg.dims, fpn_dim),
      gcn("gcn", 3, scaled_sp_hidden(run_cfg), fpn_dim),
      sp_fpn("spfpn", fpn_dim),
      neck("neck", fpn_dim, 4, run_cfg.fusion),
      rpn("rpn", fpn_dim, 3),
      head("head", fpn_dim * 7 * 7, scaled_head_width(run_cfg), run_cfg.num_classes) {
    cfg.validate();
}

void SpgnnModel::init(Rng& rng) {
    backbone.init(rng);
    fpn.init(rng);
    gcn.init(rng);
    sp_fpn.init(rng);
    neck.init(rng);
    rpn.init(rng);
    head.init(rng);
}

std::vector<Parameter*> SpgnnModel::params() {
    std::vector<Parameter*> out;
    backbone.collect(out);
    fpn.collect(out);
    if (cfg.sprpn) {
        gcn.collect(out);
        sp_fpn.collect(out);
        neck.collect(out);
    }
    rpn.collect(out);
    head.collect(out);
    return out;
}

std::vector<Var> SpgnnModel::forward_pyramid(Graph& g, const Tensor& img, SuperpixelMap* sp_out) {
    check_image(img);
    const int h = img.dim(1), w = img.dim(2);
    Var x = g.constant(img);
    std::vector<Var> stages = backbone.forward(g, x);
    std::vector<Var> f = fpn.forward(g, stages);
    if (!cfg.sprpn) return f;

    SuperpixelMap sp = slic_segment(img, cfg.m_target, cfg.compactness, cfg.slic_iters);
    SuperpixelGraph sg = build_superpixel_graph(img, sp);
    Tensor a_hat = normalize_adjacency(sg.adjacency);
    Var nodes = gcn.forward(g, a_hat, sg.features);
    Var recovered = ops::unpool(nodes, sp.labels, h, w);
    std::vector<Var> s = sp_fpn.forward(g, recovered);
    std::vector<Var> fused = neck.forward(g, f, s);
    if (sp_out) *sp_out = std::move(sp);
    return fused;
}

std::vector<ShapeCHW> model_pyramid_shapes(const RunConfig& cfg, int h, int w) {
    std::vector<ShapeCHW> stages = msgcn_stage_shapes(backbone_config(cfg), h, w);
    const int fd = scaled_fpn_dim(cfg);
    std::vector<ShapeCHW> out;
    for (const ShapeCHW& s : stages) out.push_back({fd, s.h, s.w});
    return out;
}

ShapeCHW recovered_map_shape(const RunConfig& cfg, int h, int w) {
    msgcn_stage_shapes(backbone_config(cfg), h, w);  // validates divisibility
    return {scaled_fpn_dim(cfg), h, w};
}

std::vector<Anchor> anchors_for_image(int h, int w) {
    if (h % 32 != 0 || w % 32 != 0)
        throw std::invalid_argument("image extents must be divisible by 32");
    std::vector<std::pair<int, int>> hw;
    for (int s : {4, 8, 16, 32}) hw.emplace_back(h / s, w / s);
    return generate_anchors(hw);
}

LossTerms image_loss(Graph& g, SpgnnModel& m, const Tensor& img,
                     const std::vector<GroundTruthBox>& gts, Rng& rng) {
    check_image(img);
    const int h = img.dim(1), w = img.dim(2);
    for (const auto& gtb : gts)
        if (gtb.category < 1 || gtb.category > m.cfg.num_classes)
            throw std::invalid_argument("ground-truth category out of range: " +
                                        std::to_string(gtb.category));

    std::vector<Var> pyramid = m.forward_pyramid(g, img);
    RpnOut ro = m.rpn.forward(g, pyramid);
    std::vector<Anchor> anchors = generate_anchors(level_sizes(pyramid));

    std::vector<Box> anchor_boxes;
    anchor_boxes.reserve(anchors.size());
    for (const Anchor& a : anchors) anchor_boxes.push_back(a.box);
    std::vector<Box> gt_boxes;
    for (const auto& gtb : gts) gt_boxes.push_back(gtb.box);

    AssignResult ra = assign_targets(anchor_boxes, gt_boxes, 0.7, 0.3, true);
    std::vector<int> sampled = sample_balanced(ra.labels, 256, 128, rng);
    if (sampled.empty()) throw std::runtime_error("no anchors sampled");
    std::vector<int> sampled_labels;
    std::vector<int> pos_anchor_idx;
    for (int idx : sampled) {
        sampled_labels.push_back(ra.labels[static_cast<size_t>(idx)] == 1 ? 1 : 0);
        if (ra.labels[static_cast<size_t>(idx)] == 1) pos_anchor_idx.push_back(idx);
    }
    Tensor rpn_targets({std::max(1, static_cast<int>(pos_anchor_idx.size())), 4});
    for (size_t i = 0; i < pos_anchor_idx.size(); ++i)
        for (int c = 0; c < 4; ++c)
            rpn_targets.at(static_cast<int>(i), c) = ra.deltas.at(pos_anchor_idx[i], c);

    Var logit_rows = rpn_logits_to_rows(ro.logits);
    Var delta_rows = rpn_deltas_to_rows(ro.deltas, 3);

    // proposals come from current predictions; ground truth is appended so
    // the second stage always sees positives
    std::vector<Tensor> lvals, dvals;
    for (const Var& v : ro.logits) lvals.push_back(v.value());
    for (const Var& v : ro.deltas) dvals.push_back(v.value());
    std::vector<Proposal> props =
        decode_and_select(lvals, dvals, anchors, w, h, proposal_config(m.cfg));
    std::vector<Box> rois;
    for (const Proposal& p : props) rois.push_back(p.box);
    for (const Box& b : gt_boxes) rois.push_back(b);
    if (rois.empty()) throw std::runtime_error("image yielded no proposals and has no ground truth");

    AssignResult rr = assign_targets(rois, gt_boxes, 0.5, 0.5, false);
    std::vector<int> roi_sampled = sample_balanced(rr.labels, 128, 64, rng);
    if (roi_sampled.empty()) throw std::runtime_error("no rois sampled");

    std::vector<Var> rows;
    std::vector<int> roi_labels;
    for (int idx : roi_sampled) {
        Var feat = roi_align(g, pyramid, rois[static_cast<size_t>(idx)]);
        rows.push_back(ops::reshape(feat, {1, m.fpn_dim * 7 * 7}));
        bool pos = rr.labels[static_cast<size_t>(idx)] == 1;
        roi_labels.push_back(pos ? gts[static_cast<size_t>(rr.gt_of[static_cast<size_t>(idx)])]
                                       .category
                                 : 0);
    }
    Var roi_feats = ops::concat_rows(rows);
    auto [head_logits, head_deltas] = m.head.forward(g, roi_feats);

    std::vector<int> pos_rows;
    for (size_t i = 0; i < roi_labels.size(); ++i)
        if (roi_labels[i] > 0) pos_rows.push_back(static_cast<int>(i));
    Tensor roi_targets({std::max(1, static_cast<int>(pos_rows.size())), 4});
    for (size_t i = 0; i < pos_rows.size(); ++i) {
        int orig = roi_sampled[static_cast<size_t>(pos_rows[i])];
        for (int c = 0; c < 4; ++c)
            roi_targets.at(static_cast<int>(i), c) = rr.deltas.at(orig, c);
    }

    return detection_loss(g, logit_rows, delta_rows, sampled, sampled_labels, rpn_targets,
                          head_logits, head_deltas, roi_labels, roi_targets);
}

std::vector<Detection> run_detect(SpgnnModel& m, const Tensor& img, double score_thresh) {
    check_image(img);
    const int h = img.dim(1), w = img.dim(2);
    Graph g;
    std::vector<Var> pyramid = m.forward_pyramid(g, img);
    RpnOut ro = m.rpn.forward(g, pyramid);
    std::vector<Anchor> anchors = generate_anchors(level_sizes(pyramid));
    std::vector<Tensor> lvals, dvals;
    for (const Var& v : ro.logits) lvals.push_back(v.value());
    for (const Var& v : ro.deltas) dvals.push_back(v.value());
    std::vector<Proposal> props =
        decode_and_select(lvals, dvals, anchors, w, h, proposal_config(m.cfg));
    if (props.empty()) return {};

    std::vector<Var> rows;
    std::vector<Box> pboxes;
    for (const Proposal& p : props) {
        Var feat = roi_align(g, pyramid, p.box);
        rows.push_back(ops::reshape(feat, {1, m.fpn_dim * 7 * 7}));
        pboxes.push_back(p.box);
    }
    Var roi_feats = ops::concat_rows(rows);
    auto [head_logits, head_deltas] = m.head.forward(g, roi_feats);
    return detections_from_head(head_logits.value(), head_deltas.value(), pboxes, w, h,
                                score_thresh, 0.5, 100);
}

}  // namespace spgnn
