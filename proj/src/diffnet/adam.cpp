#include "facemimic/diffnet/adam.hpp"

#include "facemimic/errors.hpp"

#include "denormals.hpp"

#include <cmath>

namespace facemimic::diffnet {

void adam_step(LayerGraph& graph, const std::vector<Tensor>& grads, const AdamConfig& config) {
    const DenormalsFlushed ftz;
    auto& params = graph.params();
    if (grads.size() != params.size()) {
        throw DimensionError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                             std::to_string(params.size()) + " parameters");
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
        if (grads[p].size() != params[p].size()) {
            throw DimensionError("adam_step: gradient " + std::to_string(p) + " has wrong size");
        }
    }
    AdamState& s = graph.adam();
    if (s.m.size() != params.size()) {
        s.m.clear();
        s.v.clear();
        for (const auto& t : params) {
            s.m.emplace_back(t.n(), t.shape());
            s.v.emplace_back(t.n(), t.shape());
        }
    }
    ++s.step;
    const double b1 = config.beta1, b2 = config.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& w = params[p];
        Tensor& m = s.m[p];
        Tensor& v = s.v[p];
        const Tensor& g = grads[p];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double gi = g[i];
            m[i] = static_cast<float>(b1 * m[i] + (1.0 - b1) * gi);
            v[i] = static_cast<float>(b2 * v[i] + (1.0 - b2) * gi * gi);
            const double mi = m[i], vi = v[i];
            w[i] = static_cast<float>(w[i] - config.lr * (mi / c1) / (std::sqrt(vi / c2) + config.epsilon));
        }
        w.check_finite("adam update");
    }
}

}  // namespace facemimic::diffnet
