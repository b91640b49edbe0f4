#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spgnn/sprpn.hpp"

namespace spgnn {

struct RunConfig {
    // model
    std::vector<int> depths{2, 2, 6, 2};
    std::vector<int> dims{80, 160, 400, 640};
    int k = 9;
    int heads = 4;
    double width_scale = 1.0;
    // superpixel branch
    bool sprpn = true;
    FuseMode fusion = FuseMode::concat;
    int m_target = 196;
    double compactness = 10.0;
    int slic_iters = 10;
    // region proposals
    double rpn_nms_iou = 0.7;
    int pre_nms_top = 1000;
    int post_nms_top = 300;
    // optimizer
    double lr = 0.0;  // 0: derived as 0.02 * batch / 16
    double momentum = 0.9;
    double weight_decay = 1e-4;
    int batch = 2;
    // schedule
    int epochs = 12;
    int steps = 0;            // optimizer-step cap; 0 = epochs only
    int warmup = 0;           // steps of linear learning-rate ramp
    double early_ap50 = 0.0;  // stop once train AP50 reaches this; 0 = off
    int eval_every = 25;      // steps between early-stop evaluations
    // misc
    std::uint64_t seed = 7;
    int num_classes = 5;
    std::string data_dir = "data";
    std::string out_dir = "runs/out";

    double effective_lr() const { return lr > 0.0 ? lr : 0.02 * batch / 16.0; }
    void validate() const;  // throws std::invalid_argument
};

// Widths derived from width_scale (full scale: 256 / 64 / 1024).
int scaled_fpn_dim(const RunConfig& cfg);
int scaled_sp_hidden(const RunConfig& cfg);
int scaled_head_width(const RunConfig& cfg);

// Strict JSON parsing: missing keys keep their defaults, unknown keys are
// rejected with the full key path, and the SPGNN_SEED environment variable
// overrides the seed. `origin` labels error messages (usually the path).
RunConfig config_from_json_text(const std::string& text, const std::string& origin);
RunConfig config_load(const std::string& path);

// Fully resolved echo of a config, loadable by config_load.
std::string config_to_json_text(const RunConfig& cfg);

}  // namespace spgnn
