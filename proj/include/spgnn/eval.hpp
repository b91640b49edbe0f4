#pragma once

#include <string>
#include <utility>
#include <vector>

#include "spgnn/box.hpp"

namespace spgnn {

struct ImageInfo {
    int id = 0;
    int width = 0;
    int height = 0;
    std::string file_name;  // optional, relative to the dataset directory
};

struct GroundTruthBox {
    int image_id = 0;
    int category = 1;
    Box box;
};

struct DetectionBox {
    int image_id = 0;
    int category = 1;
    Box box;
    double score = 0.0;
};

struct GroundTruth {
    std::vector<ImageInfo> images;
    std::vector<GroundTruthBox> boxes;
    std::vector<std::pair<int, std::string>> categories;  // id, name
};

struct PrCurve {
    std::vector<double> precision;
    std::vector<double> recall;
};

// Greedy matching at one IoU threshold for one class. Detections may span
// images and only match ground truth from their own image; they are processed
// in descending score order (ties keep insertion order) and each takes the
// unmatched ground-truth box of highest IoU >= iou_thresh.
PrCurve pr_curve(std::vector<DetectionBox> dets, const std::vector<GroundTruthBox>& gts,
                 double iou_thresh);

// 101-point interpolated area under the precision/recall curve: the precision
// envelope max{p_i : r_i >= r} sampled at r in {0.00, 0.01, ..., 1.00}.
double average_precision(const std::vector<double>& precision, const std::vector<double>& recall);

// IoU thresholds 0.50:0.05:0.95 used for the averaged metrics.
std::vector<double> iou_grid();

struct EvalReport {
    std::vector<int> class_ids;           // classes present in the ground truth
    std::vector<std::vector<double>> ap;  // [class][threshold on iou_grid()]
    double map = 0.0;                     // mean over classes and the grid
    double ap50 = 0.0;
    double ap75 = 0.0;
    double ap_m = 0.0;  // boxes with area in [32^2, 96^2]
    double ap_l = 0.0;  // boxes with area > 96^2
    double mar = 0.0;   // mean final recall over classes and the grid
};

// Full report; at most 100 detections per image (top scores) are kept.
EvalReport evaluate(const std::vector<DetectionBox>& dets, const GroundTruth& gt);

GroundTruth load_ground_truth(const std::string& path);
std::vector<DetectionBox> load_detections(const std::string& path);
void save_ground_truth(const GroundTruth& gt, const std::string& path);
void save_detections(const std::vector<DetectionBox>& dets, const std::string& path);
void save_report(const EvalReport& report, const std::string& path);

}  // namespace spgnn
