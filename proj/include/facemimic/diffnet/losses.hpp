#pragma once

#include <span>

#include "facemimic/diffnet/tensor.hpp"

namespace facemimic::diffnet {

struct LossResult {
    double value = 0.0;
    Tensor grad;  // d value / d prediction
};

/// Mean squared error over every element.
LossResult mse_loss(const Tensor& pred, const Tensor& target);

/// Logits (n, heads*classes) grouped head-major; targets (n*heads) class indices.
/// Value is the per-sample sum over heads of -log p_true, averaged over the batch.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> targets, int heads, int classes);

/// Numerically stable softmax of one head.
void softmax(std::span<const float> logits, std::span<double> probs);

}  // namespace facemimic::diffnet
