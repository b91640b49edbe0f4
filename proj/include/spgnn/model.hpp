#pragma once

#include <utility>
#include <vector>

#include "spgnn/config.hpp"
#include "spgnn/detect.hpp"
#include "spgnn/eval.hpp"
#include "spgnn/msgcn.hpp"
#include "spgnn/sprpn.hpp"

namespace spgnn {

// The full detector: patch-graph backbone with an image feature pyramid,
// an optional superpixel-graph branch fused level by level, a region
// proposal head, and a two-stage box head.
struct SpgnnModel {
    RunConfig cfg;
    MsgcnConfig backbone_cfg;
    int fpn_dim;
    Msgcn backbone;
    ImageFpn fpn;
    SpGcn gcn;
    SuperpixelFpn sp_fpn;
    FuseNeck neck;
    RpnHead rpn;
    RoiHead head;

    explicit SpgnnModel(const RunConfig& cfg);
    void init(Rng& rng);
    // Deterministic order; superpixel-branch parameters are present only
    // when the branch is enabled.
    std::vector<Parameter*> params();

    // Fused pyramid P2..P5 (finest first); with the branch disabled this is
    // the image pyramid alone. `sp_out`, when given, receives the
    // segmentation used by the branch.
    std::vector<Var> forward_pyramid(Graph& g, const Tensor& img, SuperpixelMap* sp_out = nullptr);
};

// Shape arithmetic without tensor allocation.
std::vector<ShapeCHW> model_pyramid_shapes(const RunConfig& cfg, int h, int w);
ShapeCHW recovered_map_shape(const RunConfig& cfg, int h, int w);
std::vector<Anchor> anchors_for_image(int h, int w);

// Builds the four-term training objective for one image on the tape.
LossTerms image_loss(Graph& g, SpgnnModel& m, const Tensor& img,
                     const std::vector<GroundTruthBox>& gts, Rng& rng);

// Full inference on one [3,H,W] image (extents divisible by 32).
std::vector<Detection> run_detect(SpgnnModel& m, const Tensor& img, double score_thresh = 0.05);

}  // namespace spgnn
