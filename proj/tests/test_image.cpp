#include <doctest.h>

#include <cstdio>
#include <stdexcept>

#include "spgnn/image.hpp"
#include "spgnn/rng.hpp"

using namespace spgnn;

TEST_CASE("ppm round trip preserves quantized values") {
    Rng rng(31);
    Tensor img({3, 32, 40});
    for (std::int64_t i = 0; i < img.numel(); ++i) img[i] = rng.uniform();
    const char* path = "tmp_roundtrip.ppm";
    save_ppm(path, img);
    Tensor back = load_ppm(path);
    CHECK(back.shape() == img.shape());
    for (std::int64_t i = 0; i < img.numel(); ++i) {
        // quantization to 8 bits: half-step error at most
        CHECK(std::abs(back[i] - img[i]) <= 0.5 / 255.0 + 1e-12);
    }
    // second round trip is exact (already quantized)
    save_ppm("tmp_roundtrip2.ppm", back);
    Tensor back2 = load_ppm("tmp_roundtrip2.ppm");
    for (std::int64_t i = 0; i < img.numel(); ++i) CHECK(back2[i] == back[i]);
    std::remove(path);
    std::remove("tmp_roundtrip2.ppm");
}

TEST_CASE("ppm loader clamps and validates") {
    CHECK_THROWS_AS(load_ppm("does_not_exist.ppm"), std::runtime_error);
    // too small
    Tensor small({3, 8, 8});
    save_ppm("tmp_small.ppm", small);
    CHECK_THROWS_AS(load_ppm("tmp_small.ppm"), std::runtime_error);
    std::remove("tmp_small.ppm");
    // out-of-range values are clamped on save
    Tensor wild({3, 32, 32});
    wild.fill(2.0);
    wild[0] = -1.0;
    save_ppm("tmp_wild.ppm", wild);
    Tensor back = load_ppm("tmp_wild.ppm");
    CHECK(back[0] == 0.0);
    CHECK(back[1] == 1.0);
    std::remove("tmp_wild.ppm");
}

TEST_CASE("pgm16 round trip") {
    std::vector<int> vals{0, 1, 255, 256, 65535, 42};
    save_pgm16("tmp_labels.pgm", vals, 3, 2);
    int w = 0, h = 0;
    auto back = load_pgm16("tmp_labels.pgm", w, h);
    CHECK(w == 3);
    CHECK(h == 2);
    CHECK(back == vals);
    std::remove("tmp_labels.pgm");
}

TEST_CASE("reflection padding reaches the next multiple and mirrors edges") {
    Tensor img({1, 33, 40});
    for (int y = 0; y < 33; ++y)
        for (int x = 0; x < 40; ++x) img.at(0, y, x) = y * 100.0 + x;
    Tensor padded = pad_reflect_to_multiple(img, 32);
    CHECK(padded.dim(1) == 64);
    CHECK(padded.dim(2) == 64);
    // original region untouched
    CHECK(padded.at(0, 5, 7) == img.at(0, 5, 7));
    // first padded row mirrors row h-2
    CHECK(padded.at(0, 33, 0) == img.at(0, 31, 0));
    // first padded column mirrors column w-2
    CHECK(padded.at(0, 0, 40) == img.at(0, 0, 38));
    // already-aligned input is returned unchanged
    Tensor ok({1, 32, 64});
    Tensor same = pad_reflect_to_multiple(ok, 32);
    CHECK(same.shape() == ok.shape());
}
