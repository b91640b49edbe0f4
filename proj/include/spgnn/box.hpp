#pragma once

#include <vector>

namespace spgnn {

// Axis-aligned box in corner form, real-valued pixel coordinates.
struct Box {
    double x1 = 0.0;
    double y1 = 0.0;
    double x2 = 0.0;
    double y2 = 0.0;

    double w() const { return x2 - x1; }
    double h() const { return y2 - y1; }
    double area() const { return w() * h(); }
    double cx() const { return 0.5 * (x1 + x2); }
    double cy() const { return 0.5 * (y1 + y2); }
};

// Intersection over union. Throws std::invalid_argument on boxes with
// non-positive extent.
double iou(const Box& a, const Box& b);

// Greedy non-maximum suppression: boxes sorted by descending score (ties
// keep input order), a box survives if its IoU with every earlier survivor
// is <= iou_thresh. Returns surviving indices in visit order.
std::vector<int> nms(const std::vector<Box>& boxes, const std::vector<double>& scores,
                     double iou_thresh);

// (dx,dy) shift the reference center in units of the reference extent;
// (dw,dh) scale it log-space, clamped at 4 to keep exp() bounded.
Box decode_box(const Box& ref, double dx, double dy, double dw, double dh);

// Inverse of decode_box for well-formed boxes; writes (dx,dy,dw,dh).
void encode_box(const Box& ref, const Box& target, double out[4]);

Box clip_box(const Box& b, double img_w, double img_h);

}  // namespace spgnn
