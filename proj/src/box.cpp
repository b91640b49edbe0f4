#include "spgnn/box.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace spgnn {

double iou(const Box& a, const Box& b) {
    if (!(a.w() > 0.0) || !(a.h() > 0.0) || !(b.w() > 0.0) || !(b.h() > 0.0))
        throw std::invalid_argument("iou: box with non-positive extent");
    double ix = std::max(0.0, std::min(a.x2, b.x2) - std::max(a.x1, b.x1));
    double iy = std::max(0.0, std::min(a.y2, b.y2) - std::max(a.y1, b.y1));
    double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

std::vector<int> nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                     double iou_thresh) {
    if (boxes.size() != scores.size())
        throw std::invalid_argument("nms: box/score count mismatch");
    std::vector<int> order(boxes.size());
    std::iota(order.begin(), order.end(), 0);
    // NaN scores sort last; a raw > comparator over NaN breaks strict weak
    // ordering.
    auto key = [&](int i) {
        double s = scores[static_cast<size_t>(i)];
        return std::isnan(s) ? -std::numeric_limits<double>::infinity() : s;
    };
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return key(a) > key(b); });
    std::vector<int> kept;
    for (int i : order) {
        bool keep = true;
        for (int j : kept)
            if (iou(boxes[static_cast<size_t>(i)], boxes[static_cast<size_t>(j)]) > iou_thresh) {
                keep = false;
                break;
            }
        if (keep) kept.push_back(i);
    }
    return kept;
}

Box decode_box(const Box& ref, double dx, double dy, double dw, double dh) {
    double cx = ref.cx() + dx * ref.w();
    double cy = ref.cy() + dy * ref.h();
    double w = ref.w() * std::exp(std::min(dw, 4.0));
    double h = ref.h() * std::exp(std::min(dh, 4.0));
    return {cx - 0.5 * w, cy - 0.5 * h, cx + 0.5 * w, cy + 0.5 * h};
}

void encode_box(const Box& ref, const Box& target, double out[4]) {
    if (!(ref.w() > 0.0) || !(ref.h() > 0.0) || !(target.w() > 0.0) || !(target.h() > 0.0))
        throw std::invalid_argument("encode_box: box with non-positive extent");
    out[0] = (target.cx() - ref.cx()) / ref.w();
    out[1] = (target.cy() - ref.cy()) / ref.h();
    out[2] = std::log(target.w() / ref.w());
    out[3] = std::log(target.h() / ref.h());
}

Box clip_box(const Box& b, double img_w, double img_h) {
    return {std::clamp(b.x1, 0.0, img_w), std::clamp(b.y1, 0.0, img_h),
            std::clamp(b.x2, 0.0, img_w), std::clamp(b.y2, 0.0, img_h)};
}

}  // namespace spgnn
