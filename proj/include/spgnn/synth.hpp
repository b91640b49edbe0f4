#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spgnn/eval.hpp"
#include "spgnn/rng.hpp"
#include "spgnn/tensor.hpp"

namespace spgnn {

struct SyntheticSpec {
    std::uint64_t seed = 7;
    int size = 224;  // square, divisible by 32
    int count = 8;
};

// Category ids 1..5 in this order.
extern const std::vector<std::string> kDefectClassNames;

struct RenderedDefect {
    int category = 1;
    Box box;                 // tight corner-form bound of the changed pixels
    std::vector<char> mask;  // size*size row-major, nonzero where pixels changed
};

struct RenderedImage {
    Tensor image;  // [3,S,S] in [0,1]
    std::vector<RenderedDefect> defects;
};

// Renders dataset image `index`: a light blade polygon over a dark textured
// background with 1 or 2 defects (alternating by index, classes cycling so
// small datasets cover all five). Consumes rng sequentially.
RenderedImage render_synthetic_image(const SyntheticSpec& spec, int index, Rng& rng);

// Writes img_XXXX.ppm plus gt.json into out_dir and returns the written
// ground truth. Byte-deterministic for a fixed spec.
GroundTruth synth_generate(const SyntheticSpec& spec, const std::string& out_dir);

}  // namespace spgnn
