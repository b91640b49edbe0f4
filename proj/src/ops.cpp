#include "spgnn/ops.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include "spgnn/kernels.hpp"

namespace spgnn::ops {

namespace {

Graph& graph_of(Var v) {
    if (!v.defined()) throw std::logic_error("undefined Var");
    return *v.graph;
}

void check(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

Tensor with_shape(const Tensor& t, std::vector<int> shape) {
    Tensor out(std::move(shape));
    check(out.numel() == t.numel(), "reshape changes element count");
    std::copy(t.data(), t.data() + t.numel(), out.data());
    return out;
}

}  // namespace

Var add(Var a, Var b) {
    Graph& g = graph_of(a);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    check(av.same_shape(bv), "add: shape mismatch");
    Tensor out = av;
    out.add_scaled(bv, 1.0);
    return g.node(std::move(out), {a, b}, [a, b](const Tensor& gy) {
        a.graph->accumulate(a, gy);
        a.graph->accumulate(b, gy);
    });
}

Var sub(Var a, Var b) {
    Graph& g = graph_of(a);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    check(av.same_shape(bv), "sub: shape mismatch");
    Tensor out = av;
    out.add_scaled(bv, -1.0);
    return g.node(std::move(out), {a, b}, [a, b](const Tensor& gy) {
        a.graph->accumulate(a, gy);
        a.graph->accumulate(b, gy, -1.0);
    });
}

Var mul(Var a, Var b) {
    Graph& g = graph_of(a);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    check(av.same_shape(bv), "mul: shape mismatch");
    Tensor out = Tensor::zeros_like(av);
    for (std::int64_t i = 0; i < av.numel(); ++i) out[i] = av[i] * bv[i];
    return g.node(std::move(out), {a, b}, [a, b](const Tensor& gy) {
        Graph& gr = *a.graph;
        if (gr.needs_grad(a)) {
            Tensor ga = Tensor::zeros_like(gy);
            const Tensor& bv = b.value();
            for (std::int64_t i = 0; i < gy.numel(); ++i) ga[i] = gy[i] * bv[i];
            gr.accumulate(a, ga);
        }
        if (gr.needs_grad(b)) {
            Tensor gb = Tensor::zeros_like(gy);
            const Tensor& av = a.value();
            for (std::int64_t i = 0; i < gy.numel(); ++i) gb[i] = gy[i] * av[i];
            gr.accumulate(b, gb);
        }
    });
}

Var scale(Var a, double s) {
    Graph& g = graph_of(a);
    Tensor out = a.value();
    for (std::int64_t i = 0; i < out.numel(); ++i) out[i] *= s;
    return g.node(std::move(out), {a},
                  [a, s](const Tensor& gy) { a.graph->accumulate(a, gy, s); });
}

Var sum(Var a) {
    Graph& g = graph_of(a);
    const Tensor& av = a.value();
    double acc = 0.0;
    for (std::int64_t i = 0; i < av.numel(); ++i) acc += av[i];
    return g.node(Tensor::scalar(acc), {a}, [a](const Tensor& gy) {
        Tensor ga = Tensor::zeros_like(a.value());
        ga.fill(gy[0]);
        a.graph->accumulate(a, ga);
    });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().numel())); }

Var gelu(Var a) {
    Graph& g = graph_of(a);
    const Tensor& av = a.value();
    Tensor out = Tensor::zeros_like(av);
    kernels::gelu_forward(av.data(), out.data(), av.numel());
    return g.node(std::move(out), {a}, [a](const Tensor& gy) {
        const Tensor& av = a.value();
        Tensor ga = Tensor::zeros_like(av);
        kernels::gelu_backward(av.data(), gy.data(), ga.data(), av.numel());
        a.graph->accumulate(a, ga);
    });
}

Var matmul(Var a, Var b) {
    Graph& g = graph_of(a);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    check(av.rank() == 2 && bv.rank() == 2, "matmul: operands must be rank 2");
    check(av.dim(1) == bv.dim(0), "matmul: inner dimensions differ");
    int m = av.dim(0), k = av.dim(1), n = bv.dim(1);
    Tensor out({m, n});
    kernels::matmul_nn(av.data(), bv.data(), out.data(), m, k, n);
    return g.node(std::move(out), {a, b}, [a, b, m, k, n](const Tensor& gy) {
        Graph& gr = *a.graph;
        if (gr.needs_grad(a)) {
            Tensor ga({m, k});
            kernels::matmul_nt(gy.data(), b.value().data(), ga.data(), m, n, k);
            gr.accumulate(a, ga);
        }
        if (gr.needs_grad(b)) {
            Tensor gb({k, n});
            kernels::matmul_tn(a.value().data(), gy.data(), gb.data(), k, m, n);
            gr.accumulate(b, gb);
        }
    });
}

Var linear(Var x, Var w, Var bias) {
    Graph& g = graph_of(x);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    check(xv.rank() == 2 && wv.rank() == 2, "linear: operands must be rank 2");
    check(xv.dim(1) == wv.dim(0), "linear: inner dimensions differ");
    int n = xv.dim(0), din = xv.dim(1), dout = wv.dim(1);
    Tensor out({n, dout});
    kernels::matmul_nn(xv.data(), wv.data(), out.data(), n, din, dout);
    if (bias.defined()) {
        const Tensor& bv = bias.value();
        check(bv.numel() == dout, "linear: bias length mismatch");
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < dout; ++j) out.at(i, j) += bv[j];
    }
    std::vector<Var> inputs{x, w};
    if (bias.defined()) inputs.push_back(bias);
    return g.node(std::move(out), inputs, [x, w, bias, n, din, dout](const Tensor& gy) {
        Graph& gr = *x.graph;
        if (gr.needs_grad(x)) {
            Tensor gx({n, din});
            kernels::matmul_nt(gy.data(), w.value().data(), gx.data(), n, dout, din);
            gr.accumulate(x, gx);
        }
        if (gr.needs_grad(w)) {
            Tensor gw({din, dout});
            kernels::matmul_tn(x.value().data(), gy.data(), gw.data(), din, n, dout);
            gr.accumulate(w, gw);
        }
        if (bias.defined() && gr.needs_grad(bias)) {
            Tensor gb = Tensor::zeros_like(bias.value());
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < dout; ++j) gb[j] += gy.at(i, j);
            gr.accumulate(bias, gb);
        }
    });
}

namespace {

// Packs a column block [N, ofs:ofs+cols) into a dense [N, cols] tensor.
Tensor take_cols(const Tensor& x, int ofs, int cols) {
    int n = x.dim(0), d = x.dim(1);
    Tensor out({n, cols});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < cols; ++j) out.at(i, j) = x[static_cast<std::int64_t>(i) * d + ofs + j];
    return out;
}

void put_cols(Tensor& dst, const Tensor& src, int ofs, bool accumulate) {
    int n = dst.dim(0), d = dst.dim(1), cols = src.dim(1);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < cols; ++j) {
            double* p = &dst[static_cast<std::int64_t>(i) * d + ofs + j];
            *p = accumulate ? *p + src.at(i, j) : src.at(i, j);
        }
}

}  // namespace

Var multi_head_matmul(Var x, Var w) {
    Graph& g = graph_of(x);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    check(xv.rank() == 2 && wv.rank() == 3, "multi_head_matmul: x [N,D], w [h,di,do]");
    int heads = wv.dim(0), di = wv.dim(1), dout = wv.dim(2);
    check(xv.dim(1) == heads * di, "multi_head_matmul: D != heads*di");
    int n = xv.dim(0);
    Tensor out({n, heads * dout});
    for (int m = 0; m < heads; ++m) {
        Tensor xm = take_cols(xv, m * di, di);
        Tensor ym({n, dout});
        kernels::matmul_nn(xm.data(), wv.data() + static_cast<std::int64_t>(m) * di * dout,
                           ym.data(), n, di, dout);
        put_cols(out, ym, m * dout, false);
    }
    return g.node(std::move(out), {x, w}, [x, w, heads, di, dout, n](const Tensor& gy) {
        Graph& gr = *x.graph;
        const Tensor& xv = x.value();
        const Tensor& wv = w.value();
        Tensor gx = gr.needs_grad(x) ? Tensor::zeros_like(xv) : Tensor();
        Tensor gw = gr.needs_grad(w) ? Tensor::zeros_like(wv) : Tensor();
        for (int m = 0; m < heads; ++m) {
            Tensor gym = take_cols(gy, m * dout, dout);
            if (!gx.empty()) {
                Tensor gxm({n, di});
                kernels::matmul_nt(gym.data(),
                                   wv.data() + static_cast<std::int64_t>(m) * di * dout,
                                   gxm.data(), n, dout, di);
                put_cols(gx, gxm, m * di, true);
            }
            if (!gw.empty()) {
                Tensor xm = take_cols(xv, m * di, di);
                kernels::matmul_tn(xm.data(), gym.data(),
                                   gw.data() + static_cast<std::int64_t>(m) * di * dout, di, n,
                                   dout, true);
            }
        }
        if (!gx.empty()) gr.accumulate(x, gx);
        if (!gw.empty()) gr.accumulate(w, gw);
    });
}

Var conv2d(Var x, Var w, Var bias, int stride, int pad) {
    Graph& g = graph_of(x);
    const Tensor& xv = x.value();
    const Tensor& wv = w.value();
    check(xv.rank() == 3 && wv.rank() == 4, "conv2d: x must be [C,H,W], w [Co,C,kh,kw]");
    check(wv.dim(1) == xv.dim(0), "conv2d: channel count mismatch");
    check(stride >= 1 && pad >= 0, "conv2d: bad stride or pad");
    int ci = xv.dim(0), h = xv.dim(1), wd = xv.dim(2);
    int co = wv.dim(0), kh = wv.dim(2), kw = wv.dim(3);
    int oh = kernels::conv2d_out_extent(h, kh, stride, pad);
    int ow = kernels::conv2d_out_extent(wd, kw, stride, pad);
    check(oh >= 1 && ow >= 1, "conv2d: non-positive output extent");
    const double* bptr = nullptr;
    if (bias.defined()) {
        check(bias.value().numel() == co, "conv2d: bias length mismatch");
        bptr = bias.value().data();
    }
    Tensor out({co, oh, ow});
    kernels::conv2d_forward(xv.data(), wv.data(), bptr, out.data(), ci, h, wd, co, kh, kw,
                            stride, pad);
    std::vector<Var> inputs{x, w};
    if (bias.defined()) inputs.push_back(bias);
    return g.node(std::move(out), inputs,
                  [x, w, bias, ci, h, wd, co, kh, kw, stride, pad, oh, ow](const Tensor& gy) {
                      Graph& gr = *x.graph;
                      if (gr.needs_grad(x)) {
                          Tensor gx = Tensor::zeros_like(x.value());
                          kernels::conv2d_backward_input(gy.data(), w.value().data(), gx.data(),
                                                         ci, h, wd, co, kh, kw, stride, pad);
                          gr.accumulate(x, gx);
                      }
                      if (gr.needs_grad(w)) {
                          Tensor gw = Tensor::zeros_like(w.value());
                          kernels::conv2d_backward_weight(gy.data(), x.value().data(), gw.data(),
                                                          ci, h, wd, co, kh, kw, stride, pad);
                          gr.accumulate(w, gw);
                      }
                      if (bias.defined() && gr.needs_grad(bias)) {
                          Tensor gb = Tensor::zeros_like(bias.value());
                          kernels::conv2d_backward_bias(gy.data(), gb.data(), co, oh, ow);
                          gr.accumulate(bias, gb);
                      }
                  });
}

Var reshape(Var a, std::vector<int> shape) {
    Graph& g = graph_of(a);
    Tensor out = with_shape(a.value(), std::move(shape));
    return g.node(std::move(out), {a}, [a](const Tensor& gy) {
        a.graph->accumulate(a, with_shape(gy, a.value().shape()));
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    check(!parts.empty(), "concat_rows: empty input");
    Graph& g = graph_of(parts[0]);
    const Tensor& first = parts[0].value();
    check(first.rank() >= 2, "concat_rows: parts must have rank >= 2");
    int total_rows = 0;
    for (const Var& p : parts) {
        const Tensor& t = p.value();
        check(t.rank() == first.rank(), "concat_rows: rank mismatch");
        for (int d = 1; d < first.rank(); ++d)
            check(t.dim(d) == first.dim(d), "concat_rows: trailing dims differ");
        total_rows += t.dim(0);
    }
    std::vector<int> shape = first.shape();
    shape[0] = total_rows;
    Tensor out(shape);
    std::int64_t off = 0;
    for (const Var& p : parts) {
        const Tensor& t = p.value();
        std::copy(t.data(), t.data() + t.numel(), out.data() + off);
        off += t.numel();
    }
    std::vector<Var> inputs = parts;
    return g.node(std::move(out), inputs, [inputs](const Tensor& gy) {
        Graph& gr = *inputs[0].graph;
        std::int64_t off = 0;
        for (const Var& p : inputs) {
            const Tensor& t = p.value();
            if (gr.needs_grad(p)) {
                Tensor gp = Tensor::zeros_like(t);
                std::copy(gy.data() + off, gy.data() + off + t.numel(), gp.data());
                gr.accumulate(p, gp);
            }
            off += t.numel();
        }
    });
}

Var concat_channels(Var a, Var b) {
    Graph& g = graph_of(a);
    const Tensor& av = a.value();
    const Tensor& bv = b.value();
    check(av.rank() == 3 && bv.rank() == 3, "concat_channels: rank must be 3");
    check(av.dim(1) == bv.dim(1) && av.dim(2) == bv.dim(2),
          "concat_channels: spatial dims differ");
    Tensor out({av.dim(0) + bv.dim(0), av.dim(1), av.dim(2)});
    std::copy(av.data(), av.data() + av.numel(), out.data());
    std::copy(bv.data(), bv.data() + bv.numel(), out.data() + av.numel());
    return g.node(std::move(out), {a, b}, [a, b](const Tensor& gy) {
        Graph& gr = *a.graph;
        const Tensor& av = a.value();
        if (gr.needs_grad(a)) {
            Tensor ga = Tensor::zeros_like(av);
            std::copy(gy.data(), gy.data() + av.numel(), ga.data());
            gr.accumulate(a, ga);
        }
        if (gr.needs_grad(b)) {
            Tensor gb = Tensor::zeros_like(b.value());
            std::copy(gy.data() + av.numel(), gy.data() + gy.numel(), gb.data());
            gr.accumulate(b, gb);
        }
    });
}

Var gather_axis0(Var a, std::vector<int> idx) {
    Graph& g = graph_of(a);
    const Tensor& av = a.value();
    check(av.rank() >= 1, "gather_axis0: rank must be >= 1");
    check(!idx.empty(), "gather_axis0: empty index list");
    int n0 = av.dim(0);
    std::int64_t slice = av.numel() / n0;
    for (int i : idx) check(i >= 0 && i < n0, "gather_axis0: index out of range");
    std::vector<int> shape = av.shape();
    shape[0] = static_cast<int>(idx.size());
    Tensor out(shape);
    for (size_t r = 0; r < idx.size(); ++r)
        std::copy(av.data() + idx[r] * slice, av.data() + (idx[r] + 1) * slice,
                  out.data() + static_cast<std::int64_t>(r) * slice);
    return g.node(std::move(out), {a}, [a, idx = std::move(idx), slice](const Tensor& gy) {
        Tensor ga = Tensor::zeros_like(a.value());
        for (size_t r = 0; r < idx.size(); ++r) {
            const double* src = gy.data() + static_cast<std::int64_t>(r) * slice;
            double* dst = ga.data() + idx[r] * slice;
            for (std::int64_t t = 0; t < slice; ++t) dst[t] += src[t];
        }
        a.graph->accumulate(a, ga);
    });
}

Var upsample2_nearest(Var a) {
    Graph& g = graph_of(a);
    const Tensor& av = a.value();
    check(av.rank() == 3, "upsample2_nearest: rank must be 3");
    int c = av.dim(0), h = av.dim(1), w = av.dim(2);
    Tensor out({c, 2 * h, 2 * w});
    for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < 2 * h; ++y)
            for (int x = 0; x < 2 * w; ++x) out.at(ch, y, x) = av.at(ch, y / 2, x / 2);
    return g.node(std::move(out), {a}, [a, c, h, w](const Tensor& gy) {
        Tensor ga = Tensor::zeros_like(a.value());
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < 2 * h; ++y)
                for (int x = 0; x < 2 * w; ++x) ga.at(ch, y / 2, x / 2) += gy.at(ch, y, x);
        a.graph->accumulate(a, ga);
    });
}

Var grid_to_nodes(Var map) {
    Graph& g = graph_of(map);
    const Tensor& mv = map.value();
    check(mv.rank() == 3, "grid_to_nodes: rank must be 3");
    int c = mv.dim(0);
    int n = mv.dim(1) * mv.dim(2);
    Tensor out({n, c});
    for (int ch = 0; ch < c; ++ch)
        for (int p = 0; p < n; ++p) out.at(p, ch) = mv[static_cast<std::int64_t>(ch) * n + p];
    return g.node(std::move(out), {map}, [map, c, n](const Tensor& gy) {
        Tensor gm = Tensor::zeros_like(map.value());
        for (int ch = 0; ch < c; ++ch)
            for (int p = 0; p < n; ++p)
                gm[static_cast<std::int64_t>(ch) * n + p] += gy.at(p, ch);
        map.graph->accumulate(map, gm);
    });
}

Var nodes_to_grid(Var nodes, int h, int w) {
    Graph& g = graph_of(nodes);
    const Tensor& nv = nodes.value();
    check(nv.rank() == 2, "nodes_to_grid: rank must be 2");
    check(nv.dim(0) == h * w, "nodes_to_grid: node count != h*w");
    int n = nv.dim(0), c = nv.dim(1);
    Tensor out({c, h, w});
    for (int ch = 0; ch < c; ++ch)
        for (int p = 0; p < n; ++p) out[static_cast<std::int64_t>(ch) * n + p] = nv.at(p, ch);
    return g.node(std::move(out), {nodes}, [nodes, c, n](const Tensor& gy) {
        Tensor gn = Tensor::zeros_like(nodes.value());
        for (int ch = 0; ch < c; ++ch)
            for (int p = 0; p < n; ++p)
                gn.at(p, ch) += gy[static_cast<std::int64_t>(ch) * n + p];
        nodes.graph->accumulate(nodes, gn);
    });
}

Var anchor_deltas_to_rows(Var deltas, int num_anchors) {
    Graph& g = graph_of(deltas);
    const Tensor& dv = deltas.value();
    check(dv.rank() == 3, "anchor_deltas_to_rows: rank must be 3");
    check(dv.dim(0) == 4 * num_anchors, "anchor_deltas_to_rows: channel count != 4A");
    int hw = dv.dim(1) * dv.dim(2);
    Tensor out({num_anchors * hw, 4});
    for (int a = 0; a < num_anchors; ++a)
        for (int j = 0; j < 4; ++j)
            for (int p = 0; p < hw; ++p)
                out.at(a * hw + p, j) = dv[(static_cast<std::int64_t>(a) * 4 + j) * hw + p];
    return g.node(std::move(out), {deltas}, [deltas, num_anchors, hw](const Tensor& gy) {
        Tensor gd = Tensor::zeros_like(deltas.value());
        for (int a = 0; a < num_anchors; ++a)
            for (int j = 0; j < 4; ++j)
                for (int p = 0; p < hw; ++p)
                    gd[(static_cast<std::int64_t>(a) * 4 + j) * hw + p] += gy.at(a * hw + p, j);
        deltas.graph->accumulate(deltas, gd);
    });
}

Var max_relative(Var x, const std::vector<int>& neighbors, int k) {
    Graph& g = graph_of(x);
    const Tensor& xv = x.value();
    check(xv.rank() == 2, "max_relative: x must be [N,D]");
    int n = xv.dim(0), d = xv.dim(1);
    check(k >= 1 && neighbors.size() == static_cast<size_t>(n) * k,
          "max_relative: neighbor table size != N*K");
    Tensor out({n, d});
    std::vector<int> argmin(static_cast<size_t>(n) * d);
    kernels::max_relative_forward(xv.data(), neighbors.data(), n, d, k, out.data(),
                                  argmin.data());
    return g.node(std::move(out), {x}, [x, n, d, argmin = std::move(argmin)](const Tensor& gy) {
        Tensor gx = Tensor::zeros_like(x.value());
        for (int i = 0; i < n; ++i)
            for (int c = 0; c < d; ++c) {
                double v = gy.at(i, c);
                gx.at(i, c) += v;
                gx.at(argmin[static_cast<size_t>(i) * d + c], c) -= v;
            }
        x.graph->accumulate(x, gx);
    });
}

Var unpool(Var nodes, const std::vector<int>& labels, int h, int w) {
    Graph& g = graph_of(nodes);
    const Tensor& nv = nodes.value();
    check(nv.rank() == 2, "unpool: nodes must be [M,D]");
    check(labels.size() == static_cast<size_t>(h) * w, "unpool: label count != H*W");
    int m = nv.dim(0), d = nv.dim(1);
    for (int l : labels) check(l >= 0 && l < m, "unpool: label out of range");
    Tensor out({d, h, w});
    kernels::unpool_forward(nv.data(), labels.data(), out.data(), m, d, h, w);
    return g.node(std::move(out), {nodes},
                  [nodes, labels, m, d, h, w](const Tensor& gy) {
                      Tensor gn = Tensor::zeros_like(nodes.value());
                      kernels::unpool_backward(gy.data(), labels.data(), gn.data(), m, d, h, w);
                      nodes.graph->accumulate(nodes, gn);
                  });
}

Var softmax_cross_entropy(Var logits, const std::vector<int>& targets) {
    Graph& g = graph_of(logits);
    const Tensor& lv = logits.value();
    check(lv.rank() == 2, "softmax_cross_entropy: logits must be [n,c]");
    int n = lv.dim(0), c = lv.dim(1);
    check(targets.size() == static_cast<size_t>(n), "softmax_cross_entropy: target count");
    for (int t : targets) check(t >= 0 && t < c, "softmax_cross_entropy: target out of range");
    Tensor sm({n, c});
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        double mx = lv.at(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, lv.at(i, j));
        double denom = 0.0;
        for (int j = 0; j < c; ++j) denom += std::exp(lv.at(i, j) - mx);
        double log_denom = std::log(denom);
        for (int j = 0; j < c; ++j) sm.at(i, j) = std::exp(lv.at(i, j) - mx) / denom;
        loss += log_denom - (lv.at(i, targets[i]) - mx);
    }
    loss /= n;
    return g.node(Tensor::scalar(loss), {logits},
                  [logits, targets, sm = std::move(sm), n, c](const Tensor& gy) {
                      Tensor gl = Tensor::zeros_like(logits.value());
                      double s = gy[0] / n;
                      for (int i = 0; i < n; ++i)
                          for (int j = 0; j < c; ++j)
                              gl.at(i, j) = s * (sm.at(i, j) - (j == targets[i] ? 1.0 : 0.0));
                      logits.graph->accumulate(logits, gl);
                  });
}

Var sigmoid_bce_mean(Var logits, const Tensor& targets) {
    Graph& g = graph_of(logits);
    const Tensor& lv = logits.value();
    check(lv.numel() == targets.numel(), "sigmoid_bce_mean: size mismatch");
    std::int64_t n = lv.numel();
    double loss = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        double x = lv[i], t = targets[i];
        loss += std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x)));
    }
    loss /= static_cast<double>(n);
    return g.node(Tensor::scalar(loss), {logits}, [logits, targets, n](const Tensor& gy) {
        const Tensor& lv = logits.value();
        Tensor gl = Tensor::zeros_like(lv);
        double s = gy[0] / static_cast<double>(n);
        for (std::int64_t i = 0; i < n; ++i) gl[i] = s * (sigmoid(lv[i]) - targets[i]);
        logits.graph->accumulate(logits, gl);
    });
}

Var smooth_l1(Var pred, const Tensor& target, double beta) {
    Graph& g = graph_of(pred);
    const Tensor& pv = pred.value();
    check(pv.same_shape(target), "smooth_l1: shape mismatch");
    check(beta > 0.0, "smooth_l1: beta must be positive");
    std::int64_t n = pv.numel();
    double loss = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        double d = std::abs(pv[i] - target[i]);
        loss += d < beta ? 0.5 * d * d / beta : d - 0.5 * beta;
    }
    loss /= static_cast<double>(n);
    return g.node(Tensor::scalar(loss), {pred}, [pred, target, beta, n](const Tensor& gy) {
        const Tensor& pv = pred.value();
        Tensor gp = Tensor::zeros_like(pv);
        double s = gy[0] / static_cast<double>(n);
        for (std::int64_t i = 0; i < n; ++i) {
            double d = pv[i] - target[i];
            gp[i] = s * (std::abs(d) < beta ? d / beta : (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0)));
        }
        pred.graph->accumulate(pred, gp);
    });
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor softmax_rows(const Tensor& logits) {
    Tensor out = Tensor::zeros_like(logits);
    int n = logits.dim(0), c = logits.dim(1);
    for (int i = 0; i < n; ++i) {
        double mx = logits.at(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, logits.at(i, j));
        double denom = 0.0;
        for (int j = 0; j < c; ++j) denom += std::exp(logits.at(i, j) - mx);
        for (int j = 0; j < c; ++j) out.at(i, j) = std::exp(logits.at(i, j) - mx) / denom;
    }
    return out;
}

}  // namespace spgnn::ops
