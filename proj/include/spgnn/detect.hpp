#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spgnn/autograd.hpp"
#include "spgnn/box.hpp"
#include "spgnn/layers.hpp"
#include "spgnn/rng.hpp"

namespace spgnn {

// Pyramid level index (0..num_levels-1) for a box: floor(4 + log2(sqrt(wh)/224))
// clamped to [2, 5], shifted so the finest level is 0.
int roi_level(const Box& box, int num_levels = 4);

// Samples one pyramid level over a 7x7 (out_size) bin grid, 2x2 bilinear
// samples per bin averaged, border-clamped. Differentiable w.r.t. the level.
Var roi_align_level(Graph& g, Var level, const Box& box, int stride, int out_size = 7,
                    int samples = 2);

// Full RoIAlign: picks the level by box scale, returns [C, out_size, out_size].
Var roi_align(Graph& g, const std::vector<Var>& levels, const Box& box,
              const std::vector<int>& strides = {4, 8, 16, 32}, int out_size = 7);

// Two hidden GeLU layers on flattened RoI features, then parallel class and
// per-class box-delta outputs; class 0 is background.
struct RoiHead {
    Linear fc1, fc2, cls, reg;
    int num_classes;  // foreground classes

    RoiHead(const std::string& name, int in_dim, int width, int num_classes);
    void init(Rng& rng);
    // x: [R, in_dim] -> (logits [R, num_classes+1], deltas [R, 4*num_classes])
    std::pair<Var, Var> forward(Graph& g, Var x);
    void collect(std::vector<Parameter*>& out);
};

struct AssignResult {
    std::vector<int> labels;      // 1 positive, 0 negative, -1 ignore
    std::vector<int> gt_of;       // matched ground-truth index, -1 if none
    std::vector<double> max_iou;  // best IoU per box
    Tensor deltas;                // [N,4], valid where labels == 1
};

// Threshold assignment: positive at IoU >= pos_iou, negative below neg_iou,
// ignore in between. With force_best_per_gt, each ground truth claims its
// best-IoU box as positive even below the threshold.
AssignResult assign_targets(const std::vector<Box>& boxes, const std::vector<Box>& gt,
                            double pos_iou, double neg_iou, bool force_best_per_gt);

// Draws up to total indices, at most max_pos of them positive (1:1 target),
// filling the remainder with negatives; ignores are never drawn.
std::vector<int> sample_balanced(const std::vector<int>& labels, int total, int max_pos,
                                 Rng& rng);

// Per-level [A,H,W] objectness maps flattened to [N,1] rows in
// (level, ratio, y, x) order.
Var rpn_logits_to_rows(const std::vector<Var>& logits);
// Per-level [4A,H,W] delta maps flattened to [N,4] rows in the same order.
Var rpn_deltas_to_rows(const std::vector<Var>& deltas, int num_ratios);

// Rows [len(roi_idx), 4]: for each listed RoI the 4 delta columns of its
// class (classes are 1-based foreground labels).
Var select_class_deltas(Var deltas, const std::vector<int>& roi_idx,
                        const std::vector<int>& classes);

struct LossTerms {
    Var rpn_cls;
    Var rpn_reg;
    Var head_cls;
    Var head_reg;
    Var total;
};

// Four-term detection objective: binary CE over sampled anchors, smooth-L1
// over positive anchors, softmax CE over RoIs, smooth-L1 over positive RoIs.
// Each term is a mean; empty positive sets contribute exactly zero.
LossTerms detection_loss(Graph& g, Var rpn_logit_rows, Var rpn_delta_rows,
                         const std::vector<int>& rpn_sampled,
                         const std::vector<int>& rpn_sampled_labels,
                         const Tensor& rpn_reg_targets, Var head_logits, Var head_deltas,
                         const std::vector<int>& roi_labels, const Tensor& roi_reg_targets);

struct Detection {
    int cls = 1;  // foreground class, 1-based
    Box box;
    double score = 0.0;
};

// Decodes per-class boxes for the argmax foreground class, thresholds by
// score, runs per-class NMS, and keeps the top max_dets by score.
std::vector<Detection> detections_from_head(const Tensor& cls_logits, const Tensor& deltas,
                                            const std::vector<Box>& proposals, int img_w,
                                            int img_h, double score_thresh = 0.05,
                                            double nms_iou = 0.5, int max_dets = 100);

}  // namespace spgnn
