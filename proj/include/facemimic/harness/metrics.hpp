#pragma once

#include <span>

#include "facemimic/simface.hpp"

namespace facemimic {

/// Euclidean norm of a - b over the motor values. Throws DimensionError on length mismatch.
double command_distance(const MotorCommand& a, const MotorCommand& b);

/// Fraction of motors with the same class index.
double command_accuracy(const MotorCommand& a, const MotorCommand& b);

struct MeanStderr {
    double mean = 0.0;
    double stderr_ = 0.0;  // sample standard deviation / sqrt(n); 0 for n < 2
    int n = 0;
};

/// Throws ArgumentError on an empty sample.
MeanStderr mean_stderr(std::span<const double> values);

}  // namespace facemimic
