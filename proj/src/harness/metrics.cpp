#include "facemimic/harness/metrics.hpp"

#include "facemimic/errors.hpp"

#include <cmath>
#include <string>

namespace facemimic {

namespace {

void require_same_length(const MotorCommand& a, const MotorCommand& b) {
    if (a.size() != b.size()) {
        throw DimensionError("command lengths differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    }
}

}  // namespace

double command_distance(const MotorCommand& a, const MotorCommand& b) {
    require_same_length(a, b);
    double sum = 0.0;
    for (int n = 0; n < a.size(); ++n) {
        const double d = a[n] - b[n];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double command_accuracy(const MotorCommand& a, const MotorCommand& b) {
    require_same_length(a, b);
    if (a.size() == 0) throw ArgumentError("command_accuracy of empty commands");
    const auto ca = a.classes();
    const auto cb = b.classes();
    int same = 0;
    for (std::size_t n = 0; n < ca.size(); ++n) same += ca[n] == cb[n];
    return static_cast<double>(same) / static_cast<double>(ca.size());
}

MeanStderr mean_stderr(std::span<const double> values) {
    if (values.empty()) throw ArgumentError("mean_stderr of an empty sample");
    MeanStderr r;
    r.n = static_cast<int>(values.size());
    for (double v : values) r.mean += v;
    r.mean /= r.n;
    if (r.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - r.mean) * (v - r.mean);
        r.stderr_ = std::sqrt(ss / (r.n - 1)) / std::sqrt(static_cast<double>(r.n));
    }
    return r;
}

}  // namespace facemimic
