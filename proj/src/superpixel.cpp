#include "spgnn/superpixel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>

namespace spgnn {

namespace {

struct Component {
    int label = 0;
    int size = 0;
    int seed = 0;  // first pixel, row-major
};

// 4-connected components of a label map; comp_of[p] gets the component id,
// discovered in row-major order.
std::vector<Component> find_components(const std::vector<int>& labels, int h, int w,
                                       std::vector<int>& comp_of) {
    comp_of.assign(labels.size(), -1);
    std::vector<Component> comps;
    std::vector<int> stack;
    for (int p0 = 0; p0 < h * w; ++p0) {
        if (comp_of[static_cast<size_t>(p0)] >= 0) continue;
        int id = static_cast<int>(comps.size());
        Component c;
        c.label = labels[static_cast<size_t>(p0)];
        c.seed = p0;
        stack.assign(1, p0);
        comp_of[static_cast<size_t>(p0)] = id;
        while (!stack.empty()) {
            int p = stack.back();
            stack.pop_back();
            ++c.size;
            int y = p / w, x = p % w;
            const int ny[4] = {y - 1, y + 1, y, y};
            const int nx[4] = {x, x, x - 1, x + 1};
            for (int t = 0; t < 4; ++t) {
                if (ny[t] < 0 || ny[t] >= h || nx[t] < 0 || nx[t] >= w) continue;
                int q = ny[t] * w + nx[t];
                if (comp_of[static_cast<size_t>(q)] >= 0) continue;
                if (labels[static_cast<size_t>(q)] != c.label) continue;
                comp_of[static_cast<size_t>(q)] = id;
                stack.push_back(q);
            }
        }
        comps.push_back(c);
    }
    return comps;
}

// Largest component id per label; earlier discovery wins ties.
std::vector<int> keeper_components(const std::vector<Component>& comps, int label_count) {
    std::vector<int> keeper(static_cast<size_t>(label_count), -1);
    for (size_t i = 0; i < comps.size(); ++i) {
        int lab = comps[i].label;
        int cur = keeper[static_cast<size_t>(lab)];
        if (cur < 0 || comps[i].size > comps[static_cast<size_t>(cur)].size)
            keeper[static_cast<size_t>(lab)] = static_cast<int>(i);
    }
    return keeper;
}

void require_image(const Tensor& img) {
    if (img.rank() != 3 || img.dim(0) != 3)
        throw std::invalid_argument("superpixel: image must have shape [3,H,W], got " +
                                    img.shape_str());
}

}  // namespace

void validate_superpixel_map(const SuperpixelMap& map) {
    if (map.h <= 0 || map.w <= 0 || map.count <= 0)
        throw std::runtime_error("superpixel map: empty extent");
    if (static_cast<int>(map.labels.size()) != map.h * map.w)
        throw std::runtime_error("superpixel map: label buffer size mismatch");
    if (static_cast<int>(map.sizes.size()) != map.count)
        throw std::runtime_error("superpixel map: size table mismatch");
    std::vector<int> seen(static_cast<size_t>(map.count), 0);
    for (int lab : map.labels) {
        if (lab < 0 || lab >= map.count)
            throw std::runtime_error("superpixel map: label out of range");
        ++seen[static_cast<size_t>(lab)];
    }
    for (int i = 0; i < map.count; ++i) {
        if (seen[static_cast<size_t>(i)] == 0)
            throw std::runtime_error("superpixel map: empty label " + std::to_string(i));
        if (seen[static_cast<size_t>(i)] != map.sizes[static_cast<size_t>(i)])
            throw std::runtime_error("superpixel map: wrong size for label " + std::to_string(i));
    }
    std::vector<int> comp_of;
    auto comps = find_components(map.labels, map.h, map.w, comp_of);
    std::vector<int> comps_per_label(static_cast<size_t>(map.count), 0);
    for (const auto& c : comps) ++comps_per_label[static_cast<size_t>(c.label)];
    for (int i = 0; i < map.count; ++i)
        if (comps_per_label[static_cast<size_t>(i)] != 1)
            throw std::runtime_error("superpixel map: label " + std::to_string(i) +
                                     " is not 4-connected");
}

SuperpixelMap slic_segment(const Tensor& img, int m_target, double compactness, int iters) {
    require_image(img);
    const int h = static_cast<int>(img.dim(1));
    const int w = static_cast<int>(img.dim(2));
    if (m_target < 2 || m_target > h * w / 16)
        throw std::invalid_argument("slic: m_target must be in [2, H*W/16], got " +
                                    std::to_string(m_target));
    if (!(compactness > 0.0)) throw std::invalid_argument("slic: compactness must be positive");
    if (iters < 1) throw std::invalid_argument("slic: iters must be >= 1");

    const double s = std::sqrt(static_cast<double>(h) * w / m_target);
    int ny = std::max(1, static_cast<int>(std::lround(h / s)));
    ny = std::min(ny, h);
    int nx = std::max(1, static_cast<int>(std::lround(static_cast<double>(m_target) / ny)));
    nx = std::min(nx, w);
    const int k = ny * nx;

    // 0..255 color planes copied out once; contiguous rows keep the hot
    // assignment loop cache-friendly.
    std::vector<double> rgb(static_cast<size_t>(3) * h * w);
    {
        const double* src = img.data();
        for (size_t i = 0; i < rgb.size(); ++i) rgb[i] = 255.0 * src[i];
    }
    const size_t plane = static_cast<size_t>(h) * w;
    auto color = [&](int c, int y, int x) {
        return rgb[static_cast<size_t>(c) * plane + static_cast<size_t>(y) * w + x];
    };
    auto gradient = [&](int y, int x) {
        int xl = std::max(0, x - 1), xr = std::min(w - 1, x + 1);
        int yu = std::max(0, y - 1), yd = std::min(h - 1, y + 1);
        double g = 0.0;
        for (int c = 0; c < 3; ++c) {
            double dx = color(c, y, xr) - color(c, y, xl);
            double dy = color(c, yd, x) - color(c, yu, x);
            g += dx * dx + dy * dy;
        }
        return g;
    };

    // Grid seeds at cell centers, each moved to the lowest-gradient pixel of
    // its 3x3 window (center wins ties so flat images keep the exact grid).
    std::vector<std::array<double, 5>> centers(static_cast<size_t>(k));  // r,g,b,x,y
    for (int iy = 0; iy < ny; ++iy)
        for (int ix = 0; ix < nx; ++ix) {
            int py = std::min(h - 1, static_cast<int>((iy + 0.5) * h / ny));
            int px = std::min(w - 1, static_cast<int>((ix + 0.5) * w / nx));
            int by = py, bx = px;
            double bg = gradient(py, px);
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int y = py + dy, x = px + dx;
                    if (y < 0 || y >= h || x < 0 || x >= w) continue;
                    double g = gradient(y, x);
                    if (g < bg) {
                        bg = g;
                        by = y;
                        bx = x;
                    }
                }
            centers[static_cast<size_t>(iy) * nx + ix] = {color(0, by, bx), color(1, by, bx),
                                                          color(2, by, bx),
                                                          static_cast<double>(bx),
                                                          static_cast<double>(by)};
        }

    // Initial assignment by grid cell so every pixel starts labeled.
    std::vector<int> labels(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int iy = std::min(ny - 1, y * ny / h);
            int ix = std::min(nx - 1, x * nx / w);
            labels[static_cast<size_t>(y) * w + x] = iy * nx + ix;
        }

    const double spatial_w = (compactness / s) * (compactness / s);
    std::vector<double> dist(static_cast<size_t>(h) * w);
    std::vector<double> acc(static_cast<size_t>(k) * 6);
    for (int it = 0; it < iters; ++it) {
        std::fill(dist.begin(), dist.end(), std::numeric_limits<double>::infinity());
        const double* pr = rgb.data();
        const double* pg = rgb.data() + plane;
        const double* pb = rgb.data() + 2 * plane;
        for (int c = 0; c < k; ++c) {
            const auto& ct = centers[static_cast<size_t>(c)];
            int x0 = std::max(0, static_cast<int>(std::floor(ct[3] - s)));
            int x1 = std::min(w - 1, static_cast<int>(std::ceil(ct[3] + s)));
            int y0 = std::max(0, static_cast<int>(std::floor(ct[4] - s)));
            int y1 = std::min(h - 1, static_cast<int>(std::ceil(ct[4] + s)));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    size_t p = static_cast<size_t>(y) * w + x;
                    double dr = pr[p] - ct[0];
                    double dg = pg[p] - ct[1];
                    double db = pb[p] - ct[2];
                    double dx = x - ct[3];
                    double dy = y - ct[4];
                    double d2 = dr * dr + dg * dg + db * db + spatial_w * (dx * dx + dy * dy);
                    if (d2 < dist[p]) {
                        dist[p] = d2;
                        labels[p] = c;
                    }
                }
        }
        std::fill(acc.begin(), acc.end(), 0.0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double* a = acc.data() + static_cast<size_t>(labels[static_cast<size_t>(y) * w + x]) * 6;
                a[0] += color(0, y, x);
                a[1] += color(1, y, x);
                a[2] += color(2, y, x);
                a[3] += x;
                a[4] += y;
                a[5] += 1.0;
            }
        for (int c = 0; c < k; ++c) {
            const double* a = acc.data() + static_cast<size_t>(c) * 6;
            if (a[5] > 0.0)  // empty clusters keep their previous center
                centers[static_cast<size_t>(c)] = {a[0] / a[5], a[1] / a[5], a[2] / a[5],
                                                   a[3] / a[5], a[4] / a[5]};
        }
    }

    // Connectivity pass. Repeatedly merge the smallest orphan (a non-largest
    // component of its label below s^2/4 pixels) into its largest adjacent
    // label; each merge removes a component, so this terminates. The orphan
    // order is smallest size first, then earliest first pixel; the target is
    // the label with the most pixels overall, then the smaller id. Components
    // are tracked incrementally (union-find over merge records, spliced pixel
    // lists, lazily validated min-heap) rather than recomputed per merge,
    // which changes nothing about which merges happen or their order.
    const int threshold = std::max(1, static_cast<int>(s * s / 4.0));
    std::vector<int> comp_of;
    {
        auto comps = find_components(labels, h, w, comp_of);
        int label_count = 0;
        for (const auto& c : comps) label_count = std::max(label_count, c.label + 1);

        const int n0 = static_cast<int>(comps.size());
        std::vector<int> parent(static_cast<size_t>(n0)), rec_label(static_cast<size_t>(n0)),
            rec_size(static_cast<size_t>(n0)), rec_seed(static_cast<size_t>(n0));
        std::vector<int> head(static_cast<size_t>(n0), -1), tail(static_cast<size_t>(n0), -1);
        std::vector<int> next(static_cast<size_t>(h) * w, -1);
        for (int i = 0; i < n0; ++i) {
            parent[static_cast<size_t>(i)] = i;
            rec_label[static_cast<size_t>(i)] = comps[static_cast<size_t>(i)].label;
            rec_size[static_cast<size_t>(i)] = comps[static_cast<size_t>(i)].size;
            rec_seed[static_cast<size_t>(i)] = comps[static_cast<size_t>(i)].seed;
        }
        for (int p = 0; p < h * w; ++p) {  // ascending, so each list starts at its seed
            int i = comp_of[static_cast<size_t>(p)];
            if (head[static_cast<size_t>(i)] < 0)
                head[static_cast<size_t>(i)] = p;
            else
                next[static_cast<size_t>(tail[static_cast<size_t>(i)])] = p;
            tail[static_cast<size_t>(i)] = p;
        }
        auto find = [&](int i) {
            while (parent[static_cast<size_t>(i)] != i) {
                parent[static_cast<size_t>(i)] = parent[static_cast<size_t>(parent[static_cast<size_t>(i)])];
                i = parent[static_cast<size_t>(i)];
            }
            return i;
        };

        std::vector<int> label_sizes(static_cast<size_t>(label_count), 0);
        std::vector<std::vector<int>> label_recs(static_cast<size_t>(label_count));
        for (int i = 0; i < n0; ++i) {
            label_sizes[static_cast<size_t>(rec_label[static_cast<size_t>(i)])] +=
                rec_size[static_cast<size_t>(i)];
            label_recs[static_cast<size_t>(rec_label[static_cast<size_t>(i)])].push_back(i);
        }
        // Largest live component per label; ties go to the earlier first pixel.
        std::vector<int> keeper(static_cast<size_t>(label_count), -1);
        auto recompute_keeper = [&](int lab) {
            int best = -1;
            for (int i : label_recs[static_cast<size_t>(lab)])
                if (best < 0 || rec_size[static_cast<size_t>(i)] > rec_size[static_cast<size_t>(best)] ||
                    (rec_size[static_cast<size_t>(i)] == rec_size[static_cast<size_t>(best)] &&
                     rec_seed[static_cast<size_t>(i)] < rec_seed[static_cast<size_t>(best)]))
                    best = i;
            keeper[static_cast<size_t>(lab)] = best;
        };
        for (int lab = 0; lab < label_count; ++lab) recompute_keeper(lab);

        using Key = std::tuple<int, int, int>;  // (size, first pixel, record id)
        std::priority_queue<Key, std::vector<Key>, std::greater<Key>> heap;
        auto offer = [&](int i) {
            if (rec_size[static_cast<size_t>(i)] < threshold &&
                keeper[static_cast<size_t>(rec_label[static_cast<size_t>(i)])] != i)
                heap.emplace(rec_size[static_cast<size_t>(i)], rec_seed[static_cast<size_t>(i)], i);
        };
        for (int i = 0; i < n0; ++i) offer(i);

        auto erase_rec = [&](int lab, int i) {
            auto& v = label_recs[static_cast<size_t>(lab)];
            v.erase(std::find(v.begin(), v.end(), i));
        };

        std::vector<int> touching;
        while (!heap.empty()) {
            const int orphan = std::get<2>(heap.top());
            heap.pop();
            // A record's size and first pixel never change, so the popped key
            // is current; only liveness and keeper status need rechecking.
            if (find(orphan) != orphan) continue;
            const int lab0 = rec_label[static_cast<size_t>(orphan)];
            if (keeper[static_cast<size_t>(lab0)] == orphan) continue;

            int target = -1;
            for (int p = head[static_cast<size_t>(orphan)]; p >= 0; p = next[static_cast<size_t>(p)]) {
                int y = p / w, x = p % w;
                const int nys[4] = {y - 1, y + 1, y, y};
                const int nxs[4] = {x, x, x - 1, x + 1};
                for (int t = 0; t < 4; ++t) {
                    if (nys[t] < 0 || nys[t] >= h || nxs[t] < 0 || nxs[t] >= w) continue;
                    int lab = labels[static_cast<size_t>(nys[t]) * w + nxs[t]];
                    if (lab == lab0) continue;
                    if (target < 0 ||
                        label_sizes[static_cast<size_t>(lab)] > label_sizes[static_cast<size_t>(target)] ||
                        (label_sizes[static_cast<size_t>(lab)] == label_sizes[static_cast<size_t>(target)] &&
                         lab < target))
                        target = lab;
                }
            }
            if (target < 0) break;  // single-component image; nothing to merge into

            // Target-label components touching the orphan fuse with it.
            touching.clear();
            for (int p = head[static_cast<size_t>(orphan)]; p >= 0; p = next[static_cast<size_t>(p)]) {
                int y = p / w, x = p % w;
                const int nys[4] = {y - 1, y + 1, y, y};
                const int nxs[4] = {x, x, x - 1, x + 1};
                for (int t = 0; t < 4; ++t) {
                    if (nys[t] < 0 || nys[t] >= h || nxs[t] < 0 || nxs[t] >= w) continue;
                    int q = nys[t] * w + nxs[t];
                    if (labels[static_cast<size_t>(q)] != target) continue;
                    int r = find(comp_of[static_cast<size_t>(q)]);
                    if (std::find(touching.begin(), touching.end(), r) == touching.end())
                        touching.push_back(r);
                }
            }

            for (int p = head[static_cast<size_t>(orphan)]; p >= 0; p = next[static_cast<size_t>(p)])
                labels[static_cast<size_t>(p)] = target;
            label_sizes[static_cast<size_t>(lab0)] -= rec_size[static_cast<size_t>(orphan)];
            label_sizes[static_cast<size_t>(target)] += rec_size[static_cast<size_t>(orphan)];

            const int merged = static_cast<int>(parent.size());
            int msize = rec_size[static_cast<size_t>(orphan)];
            int mseed = rec_seed[static_cast<size_t>(orphan)];
            int mhead = head[static_cast<size_t>(orphan)], mtail = tail[static_cast<size_t>(orphan)];
            for (int r : touching) {
                msize += rec_size[static_cast<size_t>(r)];
                mseed = std::min(mseed, rec_seed[static_cast<size_t>(r)]);
                next[static_cast<size_t>(mtail)] = head[static_cast<size_t>(r)];
                mtail = tail[static_cast<size_t>(r)];
                parent[static_cast<size_t>(r)] = merged;
                erase_rec(target, r);
            }
            parent[static_cast<size_t>(orphan)] = merged;
            parent.push_back(merged);
            rec_label.push_back(target);
            rec_size.push_back(msize);
            rec_seed.push_back(mseed);
            head.push_back(mhead);
            tail.push_back(mtail);
            erase_rec(lab0, orphan);
            label_recs[static_cast<size_t>(target)].push_back(merged);

            const int old_keeper = keeper[static_cast<size_t>(target)];
            recompute_keeper(target);
            if (old_keeper >= 0 && old_keeper != keeper[static_cast<size_t>(target)] &&
                find(old_keeper) == old_keeper)
                offer(old_keeper);
            offer(merged);
        }
    }

    // Remaining non-largest components are large enough to stand alone.
    auto comps = find_components(labels, h, w, comp_of);
    int label_count = 0;
    for (const auto& c : comps) label_count = std::max(label_count, c.label + 1);
    auto keeper = keeper_components(comps, label_count);
    std::vector<int> comp_label(comps.size());
    int next_label = label_count;
    for (size_t i = 0; i < comps.size(); ++i)
        comp_label[i] = keeper[static_cast<size_t>(comps[i].label)] == static_cast<int>(i)
                            ? comps[i].label
                            : next_label++;

    // Compact label ids to [0,M) preserving order of first appearance by id.
    std::vector<int> remap(static_cast<size_t>(next_label), -1);
    std::vector<int> used(static_cast<size_t>(next_label), 0);
    for (size_t i = 0; i < comps.size(); ++i) used[static_cast<size_t>(comp_label[i])] = 1;
    int m = 0;
    for (int lab = 0; lab < next_label; ++lab)
        if (used[static_cast<size_t>(lab)]) remap[static_cast<size_t>(lab)] = m++;

    SuperpixelMap map;
    map.h = h;
    map.w = w;
    map.count = m;
    map.labels.resize(static_cast<size_t>(h) * w);
    map.sizes.assign(static_cast<size_t>(m), 0);
    for (int p = 0; p < h * w; ++p) {
        int lab = remap[static_cast<size_t>(comp_label[static_cast<size_t>(comp_of[static_cast<size_t>(p)])])];
        map.labels[static_cast<size_t>(p)] = lab;
        ++map.sizes[static_cast<size_t>(lab)];
    }
    validate_superpixel_map(map);
    return map;
}

Tensor superpixel_features(const Tensor& img, const SuperpixelMap& map) {
    require_image(img);
    if (static_cast<int>(img.dim(1)) != map.h || static_cast<int>(img.dim(2)) != map.w)
        throw std::invalid_argument("superpixel_features: image " + img.shape_str() +
                                    " does not match map " + std::to_string(map.h) + "x" +
                                    std::to_string(map.w));
    Tensor out({map.count, 3});
    for (int y = 0; y < map.h; ++y)
        for (int x = 0; x < map.w; ++x) {
            int lab = map.label_at(y, x);
            for (int c = 0; c < 3; ++c) out.at(lab, c) += img.at(c, y, x);
        }
    for (int i = 0; i < map.count; ++i)
        for (int c = 0; c < 3; ++c) out.at(i, c) /= map.sizes[static_cast<size_t>(i)];
    return out;
}

Tensor superpixel_centroids(const SuperpixelMap& map) {
    Tensor out({map.count, 2});
    for (int y = 0; y < map.h; ++y)
        for (int x = 0; x < map.w; ++x) {
            int lab = map.label_at(y, x);
            out.at(lab, 0) += x;
            out.at(lab, 1) += y;
        }
    const double dx = std::max(1, map.w - 1);
    const double dy = std::max(1, map.h - 1);
    for (int i = 0; i < map.count; ++i) {
        out.at(i, 0) /= map.sizes[static_cast<size_t>(i)] * dx;
        out.at(i, 1) /= map.sizes[static_cast<size_t>(i)] * dy;
    }
    return out;
}

Tensor superpixel_adjacency(const Tensor& centroids) {
    if (centroids.rank() != 2 || centroids.dim(1) != 2)
        throw std::invalid_argument("superpixel_adjacency: centroids must be [M,2], got " +
                                    centroids.shape_str());
    const int m = static_cast<int>(centroids.dim(0));
    Tensor a({m, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            double dx = centroids.at(i, 0) - centroids.at(j, 0);
            double dy = centroids.at(i, 1) - centroids.at(j, 1);
            a.at(i, j) = std::exp(-(dx * dx + dy * dy) / kSuperpixelSigma2);
        }
    return a;
}

Tensor normalize_adjacency(const Tensor& a) {
    if (a.rank() != 2 || a.dim(0) != a.dim(1))
        throw std::invalid_argument("normalize_adjacency: matrix must be square, got " +
                                    a.shape_str());
    const int m = static_cast<int>(a.dim(0));
    std::vector<double> inv_sqrt(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) {
        double row = 0.0;
        for (int j = 0; j < m; ++j) row += a.at(i, j);
        if (!(row > 0.0))
            throw std::invalid_argument("normalize_adjacency: row " + std::to_string(i) +
                                        " has non-positive sum");
        inv_sqrt[static_cast<size_t>(i)] = 1.0 / std::sqrt(row);
    }
    Tensor out({m, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            out.at(i, j) =
                a.at(i, j) * (inv_sqrt[static_cast<size_t>(i)] * inv_sqrt[static_cast<size_t>(j)]);
    return out;
}

SuperpixelGraph build_superpixel_graph(const Tensor& img, const SuperpixelMap& map) {
    SuperpixelGraph g;
    g.features = superpixel_features(img, map);
    g.centroids = superpixel_centroids(map);
    g.adjacency = superpixel_adjacency(g.centroids);
    g.sigma2 = kSuperpixelSigma2;
    return g;
}

}  // namespace spgnn
