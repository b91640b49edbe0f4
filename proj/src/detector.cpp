#include "spgnn/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "spgnn/image.hpp"

namespace spgnn {
namespace {

constexpr int kGlyphW = 5, kGlyphH = 7;

// 5x7 glyph rows, bit 4 = leftmost column. Lowercase, digits, dot, space.
const unsigned char* glyph(char c) {
    static const unsigned char kLower[26][7] = {
        {0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F},  // a
        {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x1E},  // b
        {0x00, 0x00, 0x0E, 0x10, 0x10, 0x11, 0x0E},  // c
        {0x01, 0x01, 0x0D, 0x13, 0x11, 0x11, 0x0F},  // d
        {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E},  // e
        {0x06, 0x09, 0x08, 0x1C, 0x08, 0x08, 0x08},  // f
        {0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E},  // g
        {0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11},  // h
        {0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E},  // i
        {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0C},  // j
        {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12},  // k
        {0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E},  // l
        {0x00, 0x00, 0x1A, 0x15, 0x15, 0x11, 0x11},  // m
        {0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11},  // n
        {0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E},  // o
        {0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10},  // p
        {0x00, 0x00, 0x0D, 0x13, 0x0F, 0x01, 0x01},  // q
        {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10},  // r
        {0x00, 0x00, 0x0E, 0x10, 0x0E, 0x01, 0x1E},  // s
        {0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06},  // t
        {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0D},  // u
        {0x00, 0x00, 0x11, 0x11, 0x11, 0x0A, 0x04},  // v
        {0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0A},  // w
        {0x00, 0x00, 0x11, 0x0A, 0x04, 0x0A, 0x11},  // x
        {0x00, 0x00, 0x11, 0x11, 0x0F, 0x01, 0x0E},  // y
        {0x00, 0x00, 0x1F, 0x02, 0x04, 0x08, 0x1F},  // z
    };
    static const unsigned char kDigit[10][7] = {
        {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}, {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E},
        {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}, {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E},
        {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}, {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E},
        {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}, {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},
        {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}, {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C},
    };
    static const unsigned char kDot[7] = {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C};
    static const unsigned char kBlank[7] = {0, 0, 0, 0, 0, 0, 0};
    if (c >= 'a' && c <= 'z') return kLower[c - 'a'];
    if (c >= '0' && c <= '9') return kDigit[c - '0'];
    if (c == '.') return kDot;
    return kBlank;
}

void put_px(Tensor& img, int x, int y, const double rgb[3]) {
    const int h = img.dim(1), w = img.dim(2);
    if (x < 0 || y < 0 || x >= w || y >= h) return;
    for (int c = 0; c < 3; ++c) img.data()[(static_cast<size_t>(c) * h + y) * w + x] = rgb[c];
}

void draw_rect(Tensor& img, const Box& b, const double rgb[3]) {
    const int x0 = static_cast<int>(std::lround(b.x1)), y0 = static_cast<int>(std::lround(b.y1));
    const int x1 = static_cast<int>(std::lround(b.x2)) - 1;
    const int y1 = static_cast<int>(std::lround(b.y2)) - 1;
    for (int x = x0; x <= x1; ++x) {
        put_px(img, x, y0, rgb);
        put_px(img, x, y1, rgb);
    }
    for (int y = y0; y <= y1; ++y) {
        put_px(img, x0, y, rgb);
        put_px(img, x1, y, rgb);
    }
}

void draw_text(Tensor& img, int x, int y, const std::string& text, const double rgb[3]) {
    static const double kBg[3] = {0.05, 0.05, 0.05};
    const int wpx = static_cast<int>(text.size()) * (kGlyphW + 1) + 1;
    for (int dy = -1; dy <= kGlyphH; ++dy)
        for (int dx = 0; dx < wpx; ++dx) put_px(img, x + dx, y + dy, kBg);
    int cx = x + 1;
    for (char c : text) {
        const unsigned char* rows = glyph(c);
        for (int ry = 0; ry < kGlyphH; ++ry)
            for (int rx = 0; rx < kGlyphW; ++rx)
                if (rows[ry] >> (kGlyphW - 1 - rx) & 1) put_px(img, cx + rx, y + ry, rgb);
        cx += kGlyphW + 1;
    }
}

const double* class_color(int cls) {
    static const double kColors[6][3] = {
        {1.00, 1.00, 0.20},  // fallback
        {1.00, 0.25, 0.25},  // crack
        {0.25, 1.00, 0.30},  // nick
        {0.35, 0.55, 1.00},  // broken
        {1.00, 0.65, 0.10},  // burned
        {1.00, 0.35, 1.00},  // overheated
    };
    return kColors[cls >= 1 && cls <= 5 ? cls : 0];
}

}  // namespace

std::vector<Detection> detect_image(SpgnnModel& m, const Tensor& img, double score_thresh,
                                    DetectMeta* meta) {
    if (img.rank() != 3 || img.dim(0) != 3) throw std::invalid_argument("detect_image: want [3,H,W]");
    DetectMeta info;
    info.orig_h = img.dim(1);
    info.orig_w = img.dim(2);
    const Tensor* run = &img;
    Tensor padded;
    if (info.orig_h % 32 != 0 || info.orig_w % 32 != 0) {
        padded = pad_reflect_to_multiple(img, 32);
        run = &padded;
    }
    info.padded_h = run->dim(1);
    info.padded_w = run->dim(2);
    std::vector<Detection> dets = run_detect(m, *run, score_thresh);
    std::vector<Detection> kept;
    for (Detection d : dets) {
        d.box.x1 = std::clamp(d.box.x1, 0.0, static_cast<double>(info.orig_w));
        d.box.x2 = std::clamp(d.box.x2, 0.0, static_cast<double>(info.orig_w));
        d.box.y1 = std::clamp(d.box.y1, 0.0, static_cast<double>(info.orig_h));
        d.box.y2 = std::clamp(d.box.y2, 0.0, static_cast<double>(info.orig_h));
        if (d.box.x2 > d.box.x1 && d.box.y2 > d.box.y1) kept.push_back(d);
    }
    if (meta != nullptr) *meta = info;
    return kept;
}

Tensor render_overlay(const Tensor& img, const std::vector<Detection>& dets,
                      const std::vector<std::string>& class_names) {
    if (img.rank() != 3 || img.dim(0) != 3)
        throw std::invalid_argument("render_overlay: want [3,H,W]");
    Tensor out = img;
    for (const Detection& d : dets) {
        const double* rgb = class_color(d.cls);
        draw_rect(out, d.box, rgb);
        std::string name = d.cls >= 1 && d.cls <= static_cast<int>(class_names.size())
                               ? class_names[d.cls - 1]
                               : "c" + std::to_string(d.cls);
        char score[16];
        std::snprintf(score, sizeof(score), "%.2f", d.score);
        const int tx = static_cast<int>(std::lround(d.box.x1));
        int ty = static_cast<int>(std::lround(d.box.y1)) - kGlyphH - 2;
        if (ty < 0) ty = static_cast<int>(std::lround(d.box.y1)) + 2;
        draw_text(out, tx, ty + 1, name + " " + score, rgb);
    }
    return out;
}

}  // namespace spgnn
