#pragma once

#include <string>
#include <vector>

#include "spgnn/model.hpp"

namespace spgnn {

struct DetectMeta {
    int orig_w = 0, orig_h = 0;
    int padded_w = 0, padded_h = 0;
    bool padded() const { return padded_w != orig_w || padded_h != orig_h; }
};

// Inference on an arbitrary-size [3,H,W] image: reflection-pads the right
// and bottom edges up to the next multiple of 32 when needed, runs the
// detector, clips boxes back to the original extent, and drops boxes the
// clip leaves empty. `meta`, when given, records both extents.
std::vector<Detection> detect_image(SpgnnModel& m, const Tensor& img, double score_thresh = 0.05,
                                    DetectMeta* meta = nullptr);

// Copy of the image with class-colored box outlines and a "name score"
// label per detection, rendered in a small built-in bitmap font.
Tensor render_overlay(const Tensor& img, const std::vector<Detection>& dets,
                      const std::vector<std::string>& class_names);

}  // namespace spgnn
