#include "facemimic/diffnet/losses.hpp"

#include "facemimic/errors.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace facemimic::diffnet {

LossResult mse_loss(const Tensor& pred, const Tensor& target) {
    if (pred.n() != target.n() || pred.shape() != target.shape()) {
        throw DimensionError("mse_loss: prediction " + to_string(pred.shape()) + " vs target " +
                             to_string(target.shape()));
    }
    LossResult r;
    r.grad = Tensor(pred.n(), pred.shape());
    if (pred.size() == 0) return r;
    const double scale = 2.0 / static_cast<double>(pred.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = static_cast<double>(pred[i]) - target[i];
        sum += d * d;
        r.grad[i] = static_cast<float>(scale * d);
    }
    r.value = sum / static_cast<double>(pred.size());
    return r;
}

void softmax(std::span<const float> logits, std::span<double> probs) {
    const float peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) {
        probs[k] = std::exp(static_cast<double>(logits[k]) - peak);
        total += probs[k];
    }
    for (double& p : probs) p /= total;
}

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> targets, int heads, int classes) {
    const int n = logits.n();
    if (heads <= 0 || classes <= 0 || logits.shape().size() != heads * classes) {
        throw DimensionError("softmax_cross_entropy: logits " + to_string(logits.shape()) + " do not hold " +
                             std::to_string(heads) + " heads of " + std::to_string(classes));
    }
    if (targets.size() != static_cast<std::size_t>(n) * heads) {
        throw DimensionError("softmax_cross_entropy: expected " + std::to_string(n * heads) + " targets");
    }
    LossResult r;
    r.grad = Tensor(n, logits.shape());
    std::vector<double> probs(static_cast<std::size_t>(classes));
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int h = 0; h < heads; ++h) {
            const std::size_t base = (static_cast<std::size_t>(i) * heads + h) * classes;
            const int t = targets[static_cast<std::size_t>(i) * heads + h];
            if (t < 0 || t >= classes) throw RangeError("target class " + std::to_string(t) + " out of range");
            softmax(std::span<const float>(logits.data() + base, static_cast<std::size_t>(classes)), probs);
            sum -= std::log(std::max(probs[static_cast<std::size_t>(t)], 1e-300));
            for (int k = 0; k < classes; ++k) {
                const double g = probs[static_cast<std::size_t>(k)] - (k == t ? 1.0 : 0.0);
                r.grad[base + static_cast<std::size_t>(k)] = static_cast<float>(g / n);
            }
        }
    }
    r.value = n > 0 ? sum / n : 0.0;
    return r;
}

}  // namespace facemimic::diffnet
