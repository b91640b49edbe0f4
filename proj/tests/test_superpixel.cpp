#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spgnn/rng.hpp"
#include "spgnn/superpixel.hpp"

using namespace spgnn;

namespace {

Tensor textured_image(Rng& rng, int h, int w) {
    Tensor img({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double base = 0.5 + 0.3 * std::sin(0.35 * x) * std::cos(0.21 * y);
            img.at(0, y, x) = std::clamp(base + 0.08 * rng.normal(), 0.0, 1.0);
            img.at(1, y, x) = std::clamp(0.9 - base + 0.08 * rng.normal(), 0.0, 1.0);
            img.at(2, y, x) = std::clamp(0.4 + 0.05 * rng.normal(), 0.0, 1.0);
        }
    return img;
}

Tensor two_tone(int h, int w, int split_col) {
    Tensor img({3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            bool right = x >= split_col;
            img.at(0, y, x) = right ? 0.8 : 0.1;
            img.at(1, y, x) = right ? 0.7 : 0.2;
            img.at(2, y, x) = right ? 0.6 : 0.3;
        }
    return img;
}

double within_variance(const Tensor& img, const std::vector<int>& labels, int count) {
    int h = static_cast<int>(img.dim(1)), w = static_cast<int>(img.dim(2));
    std::vector<double> sum(static_cast<size_t>(count) * 3, 0.0);
    std::vector<int> n(static_cast<size_t>(count), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int lab = labels[static_cast<size_t>(y) * w + x];
            ++n[static_cast<size_t>(lab)];
            for (int c = 0; c < 3; ++c) sum[static_cast<size_t>(lab) * 3 + c] += img.at(c, y, x);
        }
    double total = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int lab = labels[static_cast<size_t>(y) * w + x];
            for (int c = 0; c < 3; ++c) {
                double d = img.at(c, y, x) - sum[static_cast<size_t>(lab) * 3 + c] / n[static_cast<size_t>(lab)];
                total += d * d;
            }
        }
    return total / (h * w);
}

}  // namespace

TEST_CASE("slic on a uniform image recovers rectangular grid cells") {
    Tensor img({3, 64, 64});
    img.fill(0.37);
    SuperpixelMap map = slic_segment(img, 16);
    CHECK(map.count == 16);
    std::vector<int> minx(16, 1 << 30), maxx(16, -1), miny(16, 1 << 30), maxy(16, -1);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x) {
            int lab = map.label_at(y, x);
            minx[lab] = std::min(minx[lab], x);
            maxx[lab] = std::max(maxx[lab], x);
            miny[lab] = std::min(miny[lab], y);
            maxy[lab] = std::max(maxy[lab], y);
        }
    for (int i = 0; i < 16; ++i) {
        // every label fills its bounding box exactly: a rectangle
        CHECK((maxx[i] - minx[i] + 1) * (maxy[i] - miny[i] + 1) == map.sizes[i]);
    }
}

TEST_CASE("slic follows a two-tone boundary exactly") {
    const int h = 32, w = 64, split = 27;
    Tensor img = two_tone(h, w, split);
    SuperpixelMap map = slic_segment(img, 2);
    REQUIRE(map.count == 2);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) CHECK(map.label_at(y, x) == (x >= split ? 1 : 0));
}

TEST_CASE("slic groups colors at least as well as a rigid grid") {
    const int h = 32, w = 64, split = 27;
    Tensor img = two_tone(h, w, split);
    SuperpixelMap map = slic_segment(img, 2);
    std::vector<int> grid(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) grid[static_cast<size_t>(y) * w + x] = x >= w / 2 ? 1 : 0;
    double v_slic = within_variance(img, map.labels, map.count);
    double v_grid = within_variance(img, grid, 2);
    CHECK(v_slic <= 1e-20);  // rounding of the per-label mean, not real spread
    CHECK(v_slic < v_grid);
}

TEST_CASE("slic output is always a valid connected partition") {
    Rng rng(81);
    for (int trial = 0; trial < 6; ++trial) {
        int h = 36 + rng.uniform_int(24);
        int w = 36 + rng.uniform_int(24);
        int m = 2 + rng.uniform_int(28);
        Tensor img = textured_image(rng, h, w);
        SuperpixelMap map = slic_segment(img, m);
        CHECK_NOTHROW(validate_superpixel_map(map));
        CHECK(map.count >= 1);
        int total = 0;
        for (int s : map.sizes) {
            CHECK(s >= 1);
            total += s;
        }
        CHECK(total == h * w);
    }
}

TEST_CASE("slic input validation") {
    Tensor img({3, 32, 32});
    img.fill(0.5);
    CHECK_THROWS_AS(slic_segment(img, 1), std::invalid_argument);
    CHECK_THROWS_AS(slic_segment(img, 32 * 32 / 16 + 1), std::invalid_argument);
    CHECK_THROWS_AS(slic_segment(img, 16, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(slic_segment(img, 16, 10.0, 0), std::invalid_argument);
    Tensor gray({1, 32, 32});
    CHECK_THROWS_AS(slic_segment(gray, 16), std::invalid_argument);
}

TEST_CASE("superpixel features equal an independent accumulation oracle") {
    Rng rng(82);
    Tensor img = textured_image(rng, 40, 44);
    SuperpixelMap map = slic_segment(img, 12);
    Tensor feats = superpixel_features(img, map);
    REQUIRE(feats.dim(0) == map.count);
    REQUIRE(feats.dim(1) == 3);

    std::vector<double> sum(static_cast<size_t>(map.count) * 3, 0.0);
    for (int y = 0; y < map.h; ++y)
        for (int x = 0; x < map.w; ++x)
            for (int c = 0; c < 3; ++c)
                sum[static_cast<size_t>(map.label_at(y, x)) * 3 + c] += img.at(c, y, x);
    for (int i = 0; i < map.count; ++i)
        for (int c = 0; c < 3; ++c)
            CHECK(feats.at(i, c) == sum[static_cast<size_t>(i) * 3 + c] / map.sizes[static_cast<size_t>(i)]);

    // weighted mean of means reproduces the global image mean
    for (int c = 0; c < 3; ++c) {
        double weighted = 0.0, global = 0.0;
        for (int i = 0; i < map.count; ++i)
            weighted += feats.at(i, c) * map.sizes[static_cast<size_t>(i)];
        for (int y = 0; y < map.h; ++y)
            for (int x = 0; x < map.w; ++x) global += img.at(c, y, x);
        CHECK(weighted / (map.h * map.w) ==
              doctest::Approx(global / (map.h * map.w)).epsilon(1e-12));
    }

    // means stay inside the image's value range
    double lo = 1e300, hi = -1e300;
    for (std::int64_t i = 0; i < img.numel(); ++i) {
        lo = std::min(lo, img[i]);
        hi = std::max(hi, img[i]);
    }
    for (std::int64_t i = 0; i < feats.numel(); ++i) {
        CHECK(feats[i] >= lo);
        CHECK(feats[i] <= hi);
    }
}

TEST_CASE("superpixel feature hand fixtures") {
    Tensor img({3, 1, 2});
    img.at(0, 0, 1) = 0.2;
    img.at(1, 0, 1) = 0.4;
    img.at(2, 0, 1) = 0.6;
    SuperpixelMap map;
    map.h = 1;
    map.w = 2;
    map.count = 1;
    map.labels = {0, 0};
    map.sizes = {2};
    Tensor feats = superpixel_features(img, map);
    CHECK(feats.at(0, 0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(feats.at(0, 1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(feats.at(0, 2) == doctest::Approx(0.3).epsilon(1e-15));

    Tensor flat({3, 4, 4});
    flat.fill(0.25);
    SuperpixelMap quad;
    quad.h = 4;
    quad.w = 4;
    quad.count = 4;
    quad.labels.resize(16);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) quad.labels[static_cast<size_t>(y) * 4 + x] = (y / 2) * 2 + x / 2;
    quad.sizes = {4, 4, 4, 4};
    Tensor f2 = superpixel_features(flat, quad);
    for (std::int64_t i = 0; i < f2.numel(); ++i) CHECK(f2[i] == 0.25);

    Tensor small({3, 2, 2});
    CHECK_THROWS_AS(superpixel_features(small, map), std::invalid_argument);
}

TEST_CASE("superpixel centroid fixtures") {
    SuperpixelMap whole;
    whole.h = 5;
    whole.w = 9;
    whole.count = 1;
    whole.labels.assign(45, 0);
    whole.sizes = {45};
    Tensor c = superpixel_centroids(whole);
    CHECK(c.at(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(c.at(0, 1) == doctest::Approx(0.5).epsilon(1e-15));

    SuperpixelMap two;
    two.h = 2;
    two.w = 2;
    two.count = 2;
    two.labels = {0, 0, 1, 1};  // top row label 0, bottom row label 1
    two.sizes = {2, 2};
    Tensor d = superpixel_centroids(two);
    CHECK(d.at(0, 0) == 0.5);
    CHECK(d.at(0, 1) == 0.0);
    CHECK(d.at(1, 0) == 0.5);
    CHECK(d.at(1, 1) == 1.0);

    SuperpixelMap corner;
    corner.h = 3;
    corner.w = 3;
    corner.count = 2;
    corner.labels = {0, 1, 1, 1, 1, 1, 1, 1, 1};
    corner.sizes = {1, 8};
    Tensor e = superpixel_centroids(corner);
    CHECK(e.at(0, 0) == 0.0);
    CHECK(e.at(0, 1) == 0.0);
}

TEST_CASE("superpixel adjacency matches the gaussian closed form") {
    Tensor coincident({2, 2}, {0.3, 0.4, 0.3, 0.4});
    Tensor a = superpixel_adjacency(coincident);
    for (std::int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == 1.0);

    double r = std::sqrt(kSuperpixelSigma2);
    Tensor pair({2, 2}, {0.0, 0.0, r, 0.0});
    Tensor b = superpixel_adjacency(pair);
    CHECK(b.at(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(b.at(0, 1) == doctest::Approx(0.367879).epsilon(1e-5));

    Rng rng(83);
    Tensor cs({7, 2});
    for (std::int64_t i = 0; i < cs.numel(); ++i) cs[i] = rng.uniform();
    Tensor g = superpixel_adjacency(cs);
    for (int i = 0; i < 7; ++i) {
        CHECK(g.at(i, i) == 1.0);
        for (int j = 0; j < 7; ++j) {
            CHECK(g.at(i, j) == g.at(j, i));
            CHECK(g.at(i, j) > 0.0);
            CHECK(g.at(i, j) <= 1.0);
            double dx = cs.at(i, 0) - cs.at(j, 0);
            double dy = cs.at(i, 1) - cs.at(j, 1);
            CHECK(g.at(i, j) ==
                  doctest::Approx(std::exp(-(dx * dx + dy * dy) / (0.1 * M_PI))).epsilon(1e-12));
        }
    }
}

TEST_CASE("adjacency normalization properties") {
    Tensor eye({3, 3});
    for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
    Tensor n = normalize_adjacency(eye);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(n.at(i, j) == (i == j ? 1.0 : 0.0));

    Rng rng(84);
    Tensor cs({6, 2});
    for (std::int64_t i = 0; i < cs.numel(); ++i) cs[i] = rng.uniform();
    Tensor a = superpixel_adjacency(cs);
    Tensor hat = normalize_adjacency(a);

    std::vector<double> deg(6, 0.0);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) deg[static_cast<size_t>(i)] += a.at(i, j);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) {
            CHECK(hat.at(i, j) == hat.at(j, i));
            CHECK(hat.at(i, j) >= 0.0);
            CHECK(hat.at(i, j) <= 1.0);
            CHECK(hat.at(i, j) ==
                  doctest::Approx(a.at(i, j) /
                                  std::sqrt(deg[static_cast<size_t>(i)] * deg[static_cast<size_t>(j)]))
                      .epsilon(1e-12));
        }

    // spectral norm of the symmetric normalization is at most 1
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> x(6), y(6, 0.0);
        double nx = 0.0;
        for (auto& v : x) v = rng.normal();
        for (double v : x) nx += v * v;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j) y[static_cast<size_t>(i)] += hat.at(i, j) * x[static_cast<size_t>(j)];
        double nyv = 0.0;
        for (double v : y) nyv += v * v;
        CHECK(nyv <= nx * (1.0 + 1e-12));
    }

    Tensor zero({2, 2});
    CHECK_THROWS_AS(normalize_adjacency(zero), std::invalid_argument);
    Tensor rect({2, 3});
    CHECK_THROWS_AS(normalize_adjacency(rect), std::invalid_argument);
}

TEST_CASE("superpixel graph bundle") {
    Rng rng(85);
    Tensor img = textured_image(rng, 36, 36);
    SuperpixelMap map = slic_segment(img, 9);
    SuperpixelGraph g = build_superpixel_graph(img, map);
    CHECK(g.features.dim(0) == map.count);
    CHECK(g.features.dim(1) == 3);
    CHECK(g.centroids.dim(0) == map.count);
    CHECK(g.centroids.dim(1) == 2);
    CHECK(g.adjacency.dim(0) == map.count);
    CHECK(g.adjacency.dim(1) == map.count);
    CHECK(g.sigma2 == doctest::Approx(0.1 * M_PI).epsilon(1e-15));
    for (std::int64_t i = 0; i < g.centroids.numel(); ++i) {
        CHECK(g.centroids[i] >= 0.0);
        CHECK(g.centroids[i] <= 1.0);
    }
    CHECK_NOTHROW(normalize_adjacency(g.adjacency));
}
