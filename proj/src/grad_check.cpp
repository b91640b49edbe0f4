#include "spgnn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace spgnn {

namespace {

double evaluate(const std::function<Var(Graph&)>& build) {
    Graph g;
    double v = build(g).value().item();
    if (!std::isfinite(v)) throw std::runtime_error("grad_check: non-finite function value");
    return v;
}

}  // namespace

double grad_check(const std::function<Var(Graph&)>& build,
                  const std::vector<Parameter*>& params, double eps) {
    if (!(eps > 0.0 && eps <= 1e-2)) throw std::invalid_argument("grad_check: eps out of range");
    zero_grads(params);
    {
        Graph g;
        Var loss = build(g);
        if (!std::isfinite(loss.value().item()))
            throw std::runtime_error("grad_check: non-finite function value");
        g.backward(loss);
    }
    double max_err = 0.0;
    for (Parameter* p : params) {
        for (std::int64_t i = 0; i < p->numel(); ++i) {
            double saved = p->value[i];
            p->value[i] = saved + eps;
            double fp = evaluate(build);
            p->value[i] = saved - eps;
            double fm = evaluate(build);
            p->value[i] = saved;
            double numeric = (fp - fm) / (2.0 * eps);
            double analytic = p->grad[i];
            double err = std::abs(analytic - numeric) /
                         std::max({1.0, std::abs(analytic), std::abs(numeric)});
            max_err = std::max(max_err, err);
        }
    }
    return max_err;
}

}  // namespace spgnn
