#pragma once

#include <array>
#include <string>
#include <vector>

#include "spgnn/model.hpp"

namespace spgnn {

struct LossRow {
    int step = 0;
    double rpn_cls = 0, rpn_reg = 0, head_cls = 0, head_reg = 0, total = 0;
};

struct TrainStats {
    std::vector<LossRow> trace;
    bool aborted = false;        // non-finite loss
    bool early_stopped = false;  // AP50 target reached
    double final_ap50 = -1.0;    // last evaluated train-set AP50, -1 if never
    std::string last_checkpoint;
    std::string trace_path;
};

// In-memory dataset: images decoded once, annotations grouped per image.
struct TrainData {
    GroundTruth gt;
    std::vector<Tensor> images;                        // aligned with gt.images
    std::vector<std::vector<GroundTruthBox>> per_image;  // aligned with gt.images
};

TrainData load_train_data(const std::string& data_dir);

// Full training run: SGD with momentum over shuffled epochs, per-step CSV
// trace, a checkpoint after init and after every epoch plus a final one,
// abort on non-finite loss keeping the last good checkpoint, and optional
// early stop once train-set AP50 reaches cfg.early_ap50. Bit-deterministic
// for a fixed (config, dataset) pair.
TrainStats train_run(const RunConfig& cfg, SpgnnModel& model, const TrainData& data);

// Train-set AP50 of the current weights.
double train_set_ap50(SpgnnModel& model, const TrainData& data);

}  // namespace spgnn
