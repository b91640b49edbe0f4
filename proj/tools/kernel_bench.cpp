// Benchmarks the OpenMP kernel family against the serial reference and
// verifies that both produce bit-identical outputs while timing them.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "spgnn/kernels.hpp"
#include "spgnn/rng.hpp"

using namespace spgnn;
using clock_type = std::chrono::steady_clock;

namespace {

double time_ms(const std::function<void()>& fn, int reps) {
    fn();  // warm up
    auto t0 = clock_type::now();
    for (int i = 0; i < reps; ++i) fn();
    auto t1 = clock_type::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count() / reps;
}

std::vector<double> random_vec(Rng& rng, std::int64_t n) {
    std::vector<double> v(static_cast<size_t>(n));
    for (auto& x : v) x = rng.normal();
    return v;
}

void report(const std::string& name, double serial_ms, double parallel_ms, bool identical) {
    std::printf("%-28s serial %9.3f ms   parallel %9.3f ms   speedup %5.2fx   %s\n",
                name.c_str(), serial_ms, parallel_ms, serial_ms / parallel_ms,
                identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
    int reps = 5;
    if (argc > 1) reps = std::max(1, std::atoi(argv[1]));
    Rng rng(2024);

    {
        int m = 512, k = 256, n = 512;
        auto a = random_vec(rng, static_cast<std::int64_t>(m) * k);
        auto b = random_vec(rng, static_cast<std::int64_t>(k) * n);
        std::vector<double> c1(static_cast<size_t>(m) * n), c2(c1);
        double ts = time_ms([&] { spgnn::kernels::serial::matmul_nn(a.data(), b.data(), c1.data(), m, k, n); }, reps);
        double tp = time_ms([&] { spgnn::kernels::matmul_nn(a.data(), b.data(), c2.data(), m, k, n); }, reps);
        report("matmul 512x256x512", ts, tp, c1 == c2);
    }
    {
        int ci = 16, h = 112, w = 112, co = 32, kk = 3, stride = 2, pad = 1;
        int oh = kernels::conv2d_out_extent(h, kk, stride, pad);
        int ow = kernels::conv2d_out_extent(w, kk, stride, pad);
        auto x = random_vec(rng, static_cast<std::int64_t>(ci) * h * w);
        auto wt = random_vec(rng, static_cast<std::int64_t>(co) * ci * kk * kk);
        auto bias = random_vec(rng, co);
        std::vector<double> y1(static_cast<size_t>(co) * oh * ow), y2(y1);
        double ts = time_ms([&] {
            kernels::serial::conv2d_forward(x.data(), wt.data(), bias.data(), y1.data(), ci, h, w, co, kk, kk, stride, pad);
        }, reps);
        double tp = time_ms([&] {
            kernels::conv2d_forward(x.data(), wt.data(), bias.data(), y2.data(), ci, h, w, co, kk, kk, stride, pad);
        }, reps);
        report("conv2d 16x112x112 -> 32", ts, tp, y1 == y2);

        auto gy = random_vec(rng, static_cast<std::int64_t>(co) * oh * ow);
        std::vector<double> gx1(x.size(), 0.0), gx2(x.size(), 0.0);
        double tsb = time_ms([&] {
            std::fill(gx1.begin(), gx1.end(), 0.0);
            kernels::serial::conv2d_backward_input(gy.data(), wt.data(), gx1.data(), ci, h, w, co, kk, kk, stride, pad);
        }, reps);
        double tpb = time_ms([&] {
            std::fill(gx2.begin(), gx2.end(), 0.0);
            kernels::conv2d_backward_input(gy.data(), wt.data(), gx2.data(), ci, h, w, co, kk, kk, stride, pad);
        }, reps);
        report("conv2d backward input", tsb, tpb, gx1 == gx2);

        std::vector<double> gw1(wt.size(), 0.0), gw2(wt.size(), 0.0);
        double tsw = time_ms([&] {
            std::fill(gw1.begin(), gw1.end(), 0.0);
            kernels::serial::conv2d_backward_weight(gy.data(), x.data(), gw1.data(), ci, h, w, co, kk, kk, stride, pad);
        }, reps);
        double tpw = time_ms([&] {
            std::fill(gw2.begin(), gw2.end(), 0.0);
            kernels::conv2d_backward_weight(gy.data(), x.data(), gw2.data(), ci, h, w, co, kk, kk, stride, pad);
        }, reps);
        report("conv2d backward weight", tsw, tpw, gw1 == gw2);
    }
    {
        int n = 3136, d = 10, k = 9;
        auto feats = random_vec(rng, static_cast<std::int64_t>(n) * d);
        std::vector<int> nb1(static_cast<size_t>(n) * k), nb2(nb1);
        double ts = time_ms([&] { kernels::serial::knn_select(feats.data(), n, d, k, nb1.data()); }, reps);
        double tp = time_ms([&] { kernels::knn_select(feats.data(), n, d, k, nb2.data()); }, reps);
        report("knn 3136 nodes d=10 k=9", ts, tp, nb1 == nb2);
    }
    {
        std::int64_t n = 1 << 20;
        auto x = random_vec(rng, n);
        std::vector<double> y1(static_cast<size_t>(n)), y2(y1);
        double ts = time_ms([&] { kernels::serial::gelu_forward(x.data(), y1.data(), n); }, reps);
        double tp = time_ms([&] { kernels::gelu_forward(x.data(), y2.data(), n); }, reps);
        report("gelu 1M elements", ts, tp, y1 == y2);
    }
    return 0;
}
