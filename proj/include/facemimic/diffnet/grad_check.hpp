#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "facemimic/diffnet/graph.hpp"
#include "facemimic/diffnet/losses.hpp"

namespace facemimic::diffnet {

enum class CheckLoss { Mse, CrossEntropy };

struct GradCheckOptions {
    double epsilon = 1e-3;
    double tolerance = 1e-3;
    /// Kink-free entries compared per parameter tensor (all entries if the tensor is smaller).
    int samples_per_tensor = 16;
    /// Denominator floor of the relative error, as a fraction of the largest analytic gradient.
    double relative_floor = 0.0;
    std::uint64_t seed = 0;
    /// Mse uses a seeded random target in [0,1]; CrossEntropy uses seeded random classes.
    CheckLoss loss = CheckLoss::Mse;
    int heads = 1;
    int classes = 1;
    /// Also compare the gradient with respect to the graph input.
    bool check_input = false;
    /// Applied to the analytic gradients before comparison (negative-control fixture).
    std::function<void(Gradients&)> tamper;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    double max_absolute_error = 0.0;
    int checked = 0;
    /// Draws rejected because the +/- epsilon evaluations put some ReLU on different sides of its kink.
    int skipped_kinks = 0;
    bool passed = false;
    std::string worst;
};

/// Float32 analytic gradients against central finite differences of the same graph
/// evaluated in double precision. Relative error is |a - n| / max(|a|, |n|, floor).
/// Draws that straddle a ReLU kink are replaced by further draws (at most 4x the quota per
/// tensor); fails if fewer than half of the requested comparisons could be made.
GradCheckReport grad_check(LayerGraph& graph, const Tensor& input, const GradCheckOptions& options = {});

}  // namespace facemimic::diffnet
