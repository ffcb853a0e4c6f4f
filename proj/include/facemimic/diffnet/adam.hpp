#pragma once

#include <vector>

#include "facemimic/diffnet/graph.hpp"

namespace facemimic::diffnet {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// One bias-corrected Adam update of every parameter; increments the step count.
void adam_step(LayerGraph& graph, const std::vector<Tensor>& grads, const AdamConfig& config = {});

}  // namespace facemimic::diffnet
