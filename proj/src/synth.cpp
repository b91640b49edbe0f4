#include "spgnn/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "spgnn/image.hpp"

namespace spgnn {

const std::vector<std::string> kDefectClassNames{"crack", "nick", "broken", "burned",
                                                 "overheated"};

namespace {

constexpr double kTau = 6.283185307179586;

struct Poly {
    std::vector<double> xs, ys;
};

bool inside(const Poly& p, double px, double py) {
    bool in = false;
    size_t n = p.xs.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        if ((p.ys[i] > py) != (p.ys[j] > py) &&
            px < (p.xs[j] - p.xs[i]) * (py - p.ys[i]) / (p.ys[j] - p.ys[i]) + p.xs[i])
            in = !in;
    }
    return in;
}

std::vector<char> fill_poly(const Poly& p, int s) {
    std::vector<char> m(static_cast<size_t>(s) * static_cast<size_t>(s), 0);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x)
            if (inside(p, x + 0.5, y + 0.5)) m[static_cast<size_t>(y) * s + x] = 1;
    return m;
}

void draw_disc(std::vector<char>& m, int s, double cx, double cy, double r) {
    int x0 = std::max(0, static_cast<int>(std::floor(cx - r)));
    int x1 = std::min(s - 1, static_cast<int>(std::ceil(cx + r)));
    int y0 = std::max(0, static_cast<int>(std::floor(cy - r)));
    int y1 = std::min(s - 1, static_cast<int>(std::ceil(cy + r)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
            if (dx * dx + dy * dy <= r * r) m[static_cast<size_t>(y) * s + x] = 1;
        }
}

void draw_segment(std::vector<char>& m, int s, double x0, double y0, double x1, double y1,
                  double thick) {
    double len = std::hypot(x1 - x0, y1 - y0);
    int steps = std::max(1, static_cast<int>(std::ceil(len * 2)));
    for (int i = 0; i <= steps; ++i) {
        double t = static_cast<double>(i) / steps;
        draw_disc(m, s, x0 + t * (x1 - x0), y0 + t * (y1 - y0), thick);
    }
}

// A point comfortably inside the blade; falls back to the first interior
// pixel found by scanning.
void interior_point(const std::vector<char>& blade, int s, Rng& rng, double& ox, double& oy) {
    const int margin = 6;
    auto at = [&](int x, int y) {
        x = std::clamp(x, 0, s - 1);
        y = std::clamp(y, 0, s - 1);
        return blade[static_cast<size_t>(y) * s + x] != 0;
    };
    for (int attempt = 0; attempt < 100; ++attempt) {
        int x = static_cast<int>(rng.uniform_int(s));
        int y = static_cast<int>(rng.uniform_int(s));
        if (at(x, y) && at(x - margin, y) && at(x + margin, y) && at(x, y - margin) &&
            at(x, y + margin)) {
            ox = x + 0.5;
            oy = y + 0.5;
            return;
        }
    }
    for (int y = margin; y < s - margin; ++y)
        for (int x = margin; x < s - margin; ++x)
            if (at(x, y)) {
                ox = x + 0.5;
                oy = y + 0.5;
                return;
            }
    ox = s / 2.0;
    oy = s / 2.0;
}

// Changed-pixel mask for one defect; the caller paints it afterwards.
std::vector<char> defect_mask(int category, const Poly& blade_poly,
                              const std::vector<char>& blade, int s, Rng& rng) {
    std::vector<char> m(blade.size(), 0);
    double ax = 0, ay = 0;
    switch (category) {
        case 1: {  // crack: thin dark polyline
            interior_point(blade, s, rng, ax, ay);
            double theta = rng.uniform(0, kTau);
            int steps = 14 + static_cast<int>(rng.uniform_int(13));
            double x = ax, y = ay;
            for (int i = 0; i < steps; ++i) {
                theta += 0.4 * rng.normal();
                double len = rng.uniform(2.5, 5.0);
                double nx = x + len * std::cos(theta), ny = y + len * std::sin(theta);
                draw_segment(m, s, x, y, nx, ny, 1.1);
                x = nx;
                y = ny;
            }
            break;
        }
        case 2: {  // nick: notch bitten out of an edge
            size_t n = blade_poly.xs.size();
            size_t e = rng.uniform_int(static_cast<int>(n));
            size_t e2 = (e + 1) % n;
            double t = rng.uniform(0.25, 0.75);
            ax = blade_poly.xs[e] + t * (blade_poly.xs[e2] - blade_poly.xs[e]);
            ay = blade_poly.ys[e] + t * (blade_poly.ys[e2] - blade_poly.ys[e]);
            draw_disc(m, s, ax, ay, rng.uniform(4.0, 9.0));
            break;
        }
        case 3: {  // broken: chunk missing at a corner
            size_t n = blade_poly.xs.size();
            size_t v = rng.uniform_int(static_cast<int>(n));
            draw_disc(m, s, blade_poly.xs[v], blade_poly.ys[v], rng.uniform(7.0, 14.0));
            break;
        }
        case 4: {  // burned: dark irregular patch
            interior_point(blade, s, rng, ax, ay);
            int blobs = 3 + static_cast<int>(rng.uniform_int(4));
            for (int b = 0; b < blobs; ++b)
                draw_disc(m, s, ax + rng.uniform(-8, 8), ay + rng.uniform(-8, 8),
                          rng.uniform(3.0, 8.0));
            break;
        }
        default: {  // overheated: tinted region
            interior_point(blade, s, rng, ax, ay);
            int blobs = 2 + static_cast<int>(rng.uniform_int(3));
            for (int b = 0; b < blobs; ++b)
                draw_disc(m, s, ax + rng.uniform(-10, 10), ay + rng.uniform(-10, 10),
                          rng.uniform(6.0, 14.0));
            break;
        }
    }
    for (size_t i = 0; i < m.size(); ++i)
        if (!blade[i]) m[i] = 0;  // defects live on the blade
    return m;
}

void paint_defect(Tensor& img, const std::vector<char>& mask, int category, int s, Rng& rng) {
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            if (!mask[static_cast<size_t>(y) * s + x]) continue;
            double n = 0.01 * rng.normal();
            switch (category) {
                case 1:  // crack: near-black fissure
                    img.at(0, y, x) = std::clamp(0.08 + n, 0.0, 1.0);
                    img.at(1, y, x) = std::clamp(0.07 + n, 0.0, 1.0);
                    img.at(2, y, x) = std::clamp(0.07 + n, 0.0, 1.0);
                    break;
                case 2:  // nick / broken: material gone, background shows
                case 3:
                    img.at(0, y, x) = std::clamp(0.11 + n, 0.0, 1.0);
                    img.at(1, y, x) = std::clamp(0.11 + n, 0.0, 1.0);
                    img.at(2, y, x) = std::clamp(0.12 + n, 0.0, 1.0);
                    break;
                case 4:  // burned: dark brown scorch
                    img.at(0, y, x) = std::clamp(0.13 + n, 0.0, 1.0);
                    img.at(1, y, x) = std::clamp(0.09 + n, 0.0, 1.0);
                    img.at(2, y, x) = std::clamp(0.06 + n, 0.0, 1.0);
                    break;
                default:  // overheated: bluish tint over the metal
                    img.at(0, y, x) = std::clamp(img.at(0, y, x) * 0.72, 0.0, 1.0);
                    img.at(1, y, x) = std::clamp(img.at(1, y, x) * 0.85, 0.0, 1.0);
                    img.at(2, y, x) = std::clamp(img.at(2, y, x) * 1.1 + 0.08 + n, 0.0, 1.0);
                    break;
            }
        }
}

Box mask_bbox(const std::vector<char>& m, int s) {
    int min_x = s, min_y = s, max_x = -1, max_y = -1;
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x)
            if (m[static_cast<size_t>(y) * s + x]) {
                min_x = std::min(min_x, x);
                min_y = std::min(min_y, y);
                max_x = std::max(max_x, x);
                max_y = std::max(max_y, y);
            }
    if (max_x < 0) return Box{0, 0, 0, 0};
    return Box{static_cast<double>(min_x), static_cast<double>(min_y),
               static_cast<double>(max_x + 1), static_cast<double>(max_y + 1)};
}

std::string image_file_name(int id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%04d.ppm", id);
    return buf;
}

}  // namespace

RenderedImage render_synthetic_image(const SyntheticSpec& spec, int index, Rng& rng) {
    if (spec.size < 64 || spec.size % 32 != 0)
        throw std::invalid_argument("synthetic image size must be >= 64 and divisible by 32");
    const int s = spec.size;
    RenderedImage out;
    out.image = Tensor({3, s, s});
    Tensor& img = out.image;

    // dark textured background
    double ph1 = rng.uniform(0, kTau), ph2 = rng.uniform(0, kTau);
    double f1 = rng.uniform(0.05, 0.12), f2 = rng.uniform(0.04, 0.10);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            double v = 0.12 + 0.02 * std::sin(f1 * y + ph1) + 0.015 * std::sin(f2 * x + ph2) +
                       0.012 * rng.normal();
            img.at(0, y, x) = std::clamp(v * 0.95, 0.0, 1.0);
            img.at(1, y, x) = std::clamp(v, 0.0, 1.0);
            img.at(2, y, x) = std::clamp(v * 1.05, 0.0, 1.0);
        }

    // light blade polygon with brushed texture
    Poly blade_poly;
    double cx = s * rng.uniform(0.45, 0.55), cy = s * rng.uniform(0.45, 0.55);
    double base_r = s * rng.uniform(0.36, 0.44);
    const int nv = 6;
    for (int i = 0; i < nv; ++i) {
        double ang = kTau * i / nv + rng.uniform(-0.12, 0.12);
        double r = base_r * rng.uniform(0.82, 1.12);
        blade_poly.xs.push_back(std::clamp(cx + r * std::cos(ang), 2.0, s - 3.0));
        blade_poly.ys.push_back(std::clamp(cy + r * std::sin(ang), 2.0, s - 3.0));
    }
    std::vector<char> blade = fill_poly(blade_poly, s);
    double bph = rng.uniform(0, kTau), bf = rng.uniform(0.5, 0.9);
    for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
            if (!blade[static_cast<size_t>(y) * s + x]) continue;
            double v = 0.72 + 0.05 * std::sin(bf * x + 0.3 * std::sin(0.05 * y) + bph) +
                       0.012 * rng.normal();
            img.at(0, y, x) = std::clamp(v, 0.0, 1.0);
            img.at(1, y, x) = std::clamp(v * 0.99, 0.0, 1.0);
            img.at(2, y, x) = std::clamp(v * 0.96, 0.0, 1.0);
        }

    // defects: 1 or 2 per image, classes cycling across the dataset
    const int ndef = 1 + index % 2;
    const int start = index + index / 2;  // defects rendered before this image
    for (int d = 0; d < ndef; ++d) {
        int category = (start + d) % 5 + 1;
        for (int attempt = 0; attempt < 30; ++attempt) {
            std::vector<char> mask = defect_mask(category, blade_poly, blade, s, rng);
            Box bb = mask_bbox(mask, s);
            if (bb.w() < 3 || bb.h() < 3) continue;
            paint_defect(img, mask, category, s, rng);
            out.defects.push_back({category, bb, std::move(mask)});
            break;
        }
    }
    if (out.defects.empty())
        throw std::runtime_error("failed to render any defect (seed/size pathology)");
    return out;
}

GroundTruth synth_generate(const SyntheticSpec& spec, const std::string& out_dir) {
    if (spec.count < 1) throw std::invalid_argument("synthetic image count must be >= 1");
    std::filesystem::create_directories(out_dir);
    Rng rng(spec.seed);
    GroundTruth gt;
    for (size_t c = 0; c < kDefectClassNames.size(); ++c)
        gt.categories.emplace_back(static_cast<int>(c) + 1, kDefectClassNames[c]);
    for (int i = 0; i < spec.count; ++i) {
        RenderedImage ri = render_synthetic_image(spec, i, rng);
        const int id = i + 1;
        const std::string name = image_file_name(id);
        save_ppm(out_dir + "/" + name, ri.image);
        gt.images.push_back({id, spec.size, spec.size, name});
        for (const auto& def : ri.defects) gt.boxes.push_back({id, def.category, def.box});
    }
    save_ground_truth(gt, out_dir + "/gt.json");
    return gt;
}

}  // namespace spgnn
