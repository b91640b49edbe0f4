#include "spgnn/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "spgnn/ops.hpp"

namespace spgnn {

namespace {

struct AlignTap {
    int cell;   // output plane offset
    int off;    // input plane offset
    double w;
};

}  // namespace

int roi_level(const Box& box, int num_levels) {
    if (!(box.w() > 0.0) || !(box.h() > 0.0))
        throw std::invalid_argument("roi_level: degenerate box");
    double k = std::floor(4.0 + std::log2(std::sqrt(box.w() * box.h()) / 224.0));
    k = std::clamp(k, 2.0, 5.0);
    int idx = static_cast<int>(k) - 2;
    return std::min(idx, num_levels - 1);
}

Var roi_align_level(Graph& g, Var level, const Box& box, int stride, int out_size, int samples) {
    const Tensor& v = level.value();
    if (v.rank() != 3)
        throw std::invalid_argument("roi_align: level must be [C,H,W], got " + v.shape_str());
    if (!(box.w() > 0.0) || !(box.h() > 0.0))
        throw std::invalid_argument("roi_align: degenerate box");
    if (out_size < 1 || samples < 1 || stride < 1)
        throw std::invalid_argument("roi_align: bad bin configuration");
    const int c = v.dim(0), h = v.dim(1), w = v.dim(2);

    const double x1 = box.x1 / stride, y1 = box.y1 / stride;
    const double bw = box.w() / stride / out_size, bh = box.h() / stride / out_size;
    const double inv = 1.0 / (samples * samples);

    std::vector<AlignTap> taps;
    taps.reserve(static_cast<size_t>(out_size) * out_size * samples * samples * 4);
    for (int by = 0; by < out_size; ++by)
        for (int bx = 0; bx < out_size; ++bx) {
            int cell = by * out_size + bx;
            for (int sy = 0; sy < samples; ++sy)
                for (int sx = 0; sx < samples; ++sx) {
                    double x = x1 + (bx + (sx + 0.5) / samples) * bw;
                    double y = y1 + (by + (sy + 0.5) / samples) * bh;
                    double fx = x - std::floor(x), fy = y - std::floor(y);
                    int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, w - 1);
                    int x1i = std::clamp(static_cast<int>(std::floor(x)) + 1, 0, w - 1);
                    int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, h - 1);
                    int y1i = std::clamp(static_cast<int>(std::floor(y)) + 1, 0, h - 1);
                    taps.push_back({cell, y0 * w + x0, (1 - fy) * (1 - fx) * inv});
                    taps.push_back({cell, y0 * w + x1i, (1 - fy) * fx * inv});
                    taps.push_back({cell, y1i * w + x0, fy * (1 - fx) * inv});
                    taps.push_back({cell, y1i * w + x1i, fy * fx * inv});
                }
        }

    Tensor out({c, out_size, out_size});
    const int in_plane = h * w, out_plane = out_size * out_size;
    for (int ch = 0; ch < c; ++ch) {
        const double* src = v.data() + static_cast<std::int64_t>(ch) * in_plane;
        double* dst = out.data() + static_cast<std::int64_t>(ch) * out_plane;
        for (const AlignTap& t : taps) dst[t.cell] += t.w * src[t.off];
    }
    return g.node(std::move(out), {level}, [&g, level, taps, c, in_plane, out_plane](const Tensor& gy) {
        Tensor gx = Tensor::zeros_like(level.value());
        for (int ch = 0; ch < c; ++ch) {
            const double* gsrc = gy.data() + static_cast<std::int64_t>(ch) * out_plane;
            double* gdst = gx.data() + static_cast<std::int64_t>(ch) * in_plane;
            for (const AlignTap& t : taps) gdst[t.off] += t.w * gsrc[t.cell];
        }
        g.accumulate(level, gx);
    });
}

Var roi_align(Graph& g, const std::vector<Var>& levels, const Box& box,
              const std::vector<int>& strides, int out_size) {
    if (levels.empty() || levels.size() != strides.size())
        throw std::invalid_argument("roi_align: level/stride count mismatch");
    int l = roi_level(box, static_cast<int>(levels.size()));
    return roi_align_level(g, levels[static_cast<size_t>(l)], box, strides[static_cast<size_t>(l)],
                           out_size);
}

RoiHead::RoiHead(const std::string& name, int in_dim, int width, int num_classes_in)
    : fc1(name + ".fc1", in_dim, width),
      fc2(name + ".fc2", width, width),
      cls(name + ".cls", width, num_classes_in + 1),
      reg(name + ".reg", width, 4 * num_classes_in),
      num_classes(num_classes_in) {
    if (num_classes_in < 1) throw std::invalid_argument("RoiHead: need at least one class");
}

void RoiHead::init(Rng& rng) {
    fc1.init(rng);
    fc2.init(rng);
    cls.init(rng);
    reg.init(rng);
    // Near-uniform class posterior and near-anchor boxes at the start.
    scale_values(cls.w.value, 0.1);
    scale_values(reg.w.value, 0.1);
}

std::pair<Var, Var> RoiHead::forward(Graph& g, Var x) {
    Var t = ops::gelu(fc1.forward(g, x));
    t = ops::gelu(fc2.forward(g, t));
    return {cls.forward(g, t), reg.forward(g, t)};
}

void RoiHead::collect(std::vector<Parameter*>& out) {
    fc1.collect(out);
    fc2.collect(out);
    cls.collect(out);
    reg.collect(out);
}

AssignResult assign_targets(const std::vector<Box>& boxes, const std::vector<Box>& gt,
                            double pos_iou, double neg_iou, bool force_best_per_gt) {
    if (!(pos_iou > 0.0 && pos_iou < 1.0) || !(neg_iou > 0.0 && neg_iou < 1.0) ||
        pos_iou < neg_iou)
        throw std::invalid_argument("assign_targets: need 0 < neg <= pos < 1");
    const int n = static_cast<int>(boxes.size());
    const int m = static_cast<int>(gt.size());
    AssignResult r;
    r.labels.assign(static_cast<size_t>(n), 0);
    r.gt_of.assign(static_cast<size_t>(n), -1);
    r.max_iou.assign(static_cast<size_t>(n), 0.0);
    r.deltas = Tensor({std::max(n, 1), 4});

    std::vector<double> table(static_cast<size_t>(n) * std::max(m, 1), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            double v = iou(boxes[static_cast<size_t>(i)], gt[static_cast<size_t>(j)]);
            table[static_cast<size_t>(i) * m + j] = v;
            if (v > r.max_iou[static_cast<size_t>(i)]) {
                r.max_iou[static_cast<size_t>(i)] = v;
                r.gt_of[static_cast<size_t>(i)] = j;
            }
        }
    for (int i = 0; i < n; ++i) {
        double best = r.max_iou[static_cast<size_t>(i)];
        if (best >= pos_iou)
            r.labels[static_cast<size_t>(i)] = 1;
        else if (best >= neg_iou)
            r.labels[static_cast<size_t>(i)] = -1;
    }
    if (force_best_per_gt)
        for (int j = 0; j < m; ++j) {
            int best_i = -1;
            double best = 0.0;
            for (int i = 0; i < n; ++i)
                if (table[static_cast<size_t>(i) * m + j] > best) {
                    best = table[static_cast<size_t>(i) * m + j];
                    best_i = i;
                }
            if (best_i >= 0) {
                r.labels[static_cast<size_t>(best_i)] = 1;
                r.gt_of[static_cast<size_t>(best_i)] = j;
            }
        }
    for (int i = 0; i < n; ++i)
        if (r.labels[static_cast<size_t>(i)] == 1) {
            double d[4];
            encode_box(boxes[static_cast<size_t>(i)],
                       gt[static_cast<size_t>(r.gt_of[static_cast<size_t>(i)])], d);
            for (int k = 0; k < 4; ++k) r.deltas.at(i, k) = d[k];
        }
    return r;
}

std::vector<int> sample_balanced(const std::vector<int>& labels, int total, int max_pos,
                                 Rng& rng) {
    if (total < 1 || max_pos < 0 || max_pos > total)
        throw std::invalid_argument("sample_balanced: bad quota");
    std::vector<int> pos, neg;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1) pos.push_back(static_cast<int>(i));
        if (labels[i] == 0) neg.push_back(static_cast<int>(i));
    }
    rng.shuffle(pos);
    rng.shuffle(neg);
    int n_pos = std::min(static_cast<int>(pos.size()), max_pos);
    int n_neg = std::min(static_cast<int>(neg.size()), total - n_pos);
    std::vector<int> out(pos.begin(), pos.begin() + n_pos);
    out.insert(out.end(), neg.begin(), neg.begin() + n_neg);
    return out;
}

Var rpn_logits_to_rows(const std::vector<Var>& logits) {
    std::vector<Var> parts;
    for (const Var& l : logits) {
        const Tensor& v = l.value();
        parts.push_back(ops::reshape(l, {static_cast<int>(v.numel()), 1}));
    }
    return ops::concat_rows(parts);
}

Var rpn_deltas_to_rows(const std::vector<Var>& deltas, int num_ratios) {
    std::vector<Var> parts;
    for (const Var& d : deltas) parts.push_back(ops::anchor_deltas_to_rows(d, num_ratios));
    return ops::concat_rows(parts);
}

Var select_class_deltas(Var deltas, const std::vector<int>& roi_idx,
                        const std::vector<int>& classes) {
    if (roi_idx.empty() || roi_idx.size() != classes.size())
        throw std::invalid_argument("select_class_deltas: index/class mismatch");
    const int m = static_cast<int>(deltas.value().dim(1)) / 4;
    std::vector<Var> rows;
    for (size_t i = 0; i < roi_idx.size(); ++i) {
        if (classes[i] < 1 || classes[i] > m)
            throw std::invalid_argument("select_class_deltas: class out of range");
        Var row = ops::gather_axis0(deltas, {roi_idx[i]});
        Var per_class = ops::reshape(row, {m, 4});
        rows.push_back(ops::gather_axis0(per_class, {classes[i] - 1}));
    }
    return ops::concat_rows(rows);
}

LossTerms detection_loss(Graph& g, Var rpn_logit_rows, Var rpn_delta_rows,
                         const std::vector<int>& rpn_sampled,
                         const std::vector<int>& rpn_sampled_labels,
                         const Tensor& rpn_reg_targets, Var head_logits, Var head_deltas,
                         const std::vector<int>& roi_labels, const Tensor& roi_reg_targets) {
    if (rpn_sampled.size() != rpn_sampled_labels.size())
        throw std::invalid_argument("detection_loss: sampled index/label mismatch");
    if (rpn_sampled.empty()) throw std::invalid_argument("detection_loss: empty anchor sample");
    if (static_cast<size_t>(head_logits.value().dim(0)) != roi_labels.size())
        throw std::invalid_argument("detection_loss: roi label count mismatch");

    LossTerms out;
    Tensor cls_targets({static_cast<int>(rpn_sampled.size()), 1});
    for (size_t i = 0; i < rpn_sampled_labels.size(); ++i) {
        int lab = rpn_sampled_labels[i];
        if (lab != 0 && lab != 1)
            throw std::invalid_argument("detection_loss: sampled labels must be 0/1");
        cls_targets[static_cast<std::int64_t>(i)] = lab;
    }
    out.rpn_cls =
        ops::sigmoid_bce_mean(ops::gather_axis0(rpn_logit_rows, rpn_sampled), cls_targets);

    std::vector<int> pos_anchor;
    for (size_t i = 0; i < rpn_sampled.size(); ++i)
        if (rpn_sampled_labels[i] == 1) pos_anchor.push_back(rpn_sampled[i]);
    if (pos_anchor.empty()) {
        out.rpn_reg = g.constant(Tensor::scalar(0.0));
    } else {
        if (rpn_reg_targets.dim(0) != static_cast<int>(pos_anchor.size()))
            throw std::invalid_argument("detection_loss: rpn regression target count mismatch");
        out.rpn_reg =
            ops::smooth_l1(ops::gather_axis0(rpn_delta_rows, pos_anchor), rpn_reg_targets, 1.0);
    }

    out.head_cls = ops::softmax_cross_entropy(head_logits, roi_labels);

    std::vector<int> pos_roi;
    std::vector<int> pos_cls;
    for (size_t i = 0; i < roi_labels.size(); ++i)
        if (roi_labels[i] > 0) {
            pos_roi.push_back(static_cast<int>(i));
            pos_cls.push_back(roi_labels[i]);
        }
    if (pos_roi.empty()) {
        out.head_reg = g.constant(Tensor::scalar(0.0));
    } else {
        if (roi_reg_targets.dim(0) != static_cast<int>(pos_roi.size()))
            throw std::invalid_argument("detection_loss: roi regression target count mismatch");
        out.head_reg = ops::smooth_l1(select_class_deltas(head_deltas, pos_roi, pos_cls),
                                      roi_reg_targets, 1.0);
    }

    out.total = ops::add(ops::add(out.rpn_cls, out.rpn_reg), ops::add(out.head_cls, out.head_reg));
    return out;
}

std::vector<Detection> detections_from_head(const Tensor& cls_logits, const Tensor& deltas,
                                            const std::vector<Box>& proposals, int img_w,
                                            int img_h, double score_thresh, double nms_iou,
                                            int max_dets) {
    if (cls_logits.rank() != 2 || deltas.rank() != 2 ||
        cls_logits.dim(0) != static_cast<int>(proposals.size()) ||
        deltas.dim(0) != cls_logits.dim(0))
        throw std::invalid_argument("detections_from_head: row count mismatch");
    const int m = cls_logits.dim(1) - 1;
    if (m < 1 || deltas.dim(1) != 4 * m)
        throw std::invalid_argument("detections_from_head: class arity mismatch");

    Tensor probs = ops::softmax_rows(cls_logits);
    std::vector<std::vector<Box>> class_boxes(static_cast<size_t>(m));
    std::vector<std::vector<double>> class_scores(static_cast<size_t>(m));
    for (int r = 0; r < cls_logits.dim(0); ++r) {
        int best = 1;
        for (int c = 2; c <= m; ++c)
            if (probs.at(r, c) > probs.at(r, best)) best = c;
        double score = probs.at(r, best);
        if (!(score >= score_thresh)) continue;  // also rejects NaN
        Box b = decode_box(proposals[static_cast<size_t>(r)], deltas.at(r, 4 * (best - 1)),
                           deltas.at(r, 4 * (best - 1) + 1), deltas.at(r, 4 * (best - 1) + 2),
                           deltas.at(r, 4 * (best - 1) + 3));
        b = clip_box(b, img_w, img_h);
        if (!(b.w() > 1e-6) || !(b.h() > 1e-6)) continue;
        class_boxes[static_cast<size_t>(best - 1)].push_back(b);
        class_scores[static_cast<size_t>(best - 1)].push_back(score);
    }

    std::vector<Detection> dets;
    for (int c = 1; c <= m; ++c) {
        const auto& boxes = class_boxes[static_cast<size_t>(c - 1)];
        if (boxes.empty()) continue;
        for (int i : nms(boxes, class_scores[static_cast<size_t>(c - 1)], nms_iou))
            dets.push_back({c, boxes[static_cast<size_t>(i)],
                            class_scores[static_cast<size_t>(c - 1)][static_cast<size_t>(i)]});
    }
    std::stable_sort(dets.begin(), dets.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    if (static_cast<int>(dets.size()) > max_dets) dets.resize(static_cast<size_t>(max_dets));
    return dets;
}

}  // namespace spgnn
