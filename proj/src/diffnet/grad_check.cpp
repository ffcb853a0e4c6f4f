#include "facemimic/diffnet/grad_check.hpp"

#include "facemimic/util/hashing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace facemimic::diffnet {

namespace {

double mse_value(const TensorD& out, const std::vector<float>& target) {
    double sum = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double d = out[i] - target[i];
        sum += d * d;
    }
    return sum / static_cast<double>(out.size());
}

double ce_value(const TensorD& out, const std::vector<int>& targets, int heads, int classes) {
    double sum = 0.0;
    for (int i = 0; i < out.n(); ++i) {
        for (int h = 0; h < heads; ++h) {
            const double* z = out.sample(i) + static_cast<std::size_t>(h) * classes;
            const double peak = *std::max_element(z, z + classes);
            double total = 0.0;
            for (int k = 0; k < classes; ++k) total += std::exp(z[k] - peak);
            const int t = targets[static_cast<std::size_t>(i) * heads + h];
            sum += std::log(total) - (z[t] - peak);
        }
    }
    return sum / out.n();
}

std::vector<std::size_t> pick_entries(std::size_t size, int count, Rng& rng) {
    std::vector<std::size_t> picks(size);
    std::iota(picks.begin(), picks.end(), std::size_t{0});
    if (static_cast<int>(size) > count) {
        for (int k = 0; k < count; ++k) {
            const std::size_t j = static_cast<std::size_t>(k) + uniform_index(rng, size - static_cast<std::size_t>(k));
            std::swap(picks[static_cast<std::size_t>(k)], picks[j]);
        }
        picks.resize(static_cast<std::size_t>(count));
    }
    return picks;
}

}  // namespace

GradCheckReport grad_check(LayerGraph& graph, const Tensor& input, const GradCheckOptions& options) {
    Rng rng(derive_seed(options.seed, 0x7A26E7));
    std::vector<float> target;
    std::vector<int> targets;
    if (options.loss == CheckLoss::Mse) {
        target.resize(static_cast<std::size_t>(input.n()) * graph.output_shape().size());
        for (float& v : target) v = static_cast<float>(uniform01(rng));
    } else {
        targets.resize(static_cast<std::size_t>(input.n()) * options.heads);
        for (int& t : targets) t = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(options.classes)));
    }

    const Tensor& out = graph.forward(input);
    LossResult loss;
    if (options.loss == CheckLoss::Mse) {
        Tensor t(out.n(), out.shape());
        std::copy(target.begin(), target.end(), t.data());
        loss = mse_loss(out, t);
    } else {
        loss = softmax_cross_entropy(out, targets, options.heads, options.classes);
    }
    Gradients grads = graph.backward(loss.grad, options.check_input);
    if (options.tamper) options.tamper(grads);

    auto value = [&](const TensorD& x, const std::vector<TensorD>& params, std::vector<bool>& active) {
        const TensorD y = graph.infer_double(x, params, &active);
        return options.loss == CheckLoss::Mse ? mse_value(y, target)
                                              : ce_value(y, targets, options.heads, options.classes);
    };

    double scale = 0.0;
    for (const auto& g : grads.params) {
        for (float v : g.values()) scale = std::max(scale, static_cast<double>(std::fabs(v)));
    }
    const double floor = std::max(options.relative_floor * scale, 1e-30);

    GradCheckReport report;
    auto compare = [&](double analytic, double numeric, const std::string& label) {
        const double abs_err = std::fabs(analytic - numeric);
        const double rel = abs_err / std::max({std::fabs(analytic), std::fabs(numeric), floor});
        report.max_absolute_error = std::max(report.max_absolute_error, abs_err);
        if (report.checked == 0 || rel > report.max_relative_error) {
            report.max_relative_error = rel;
            std::ostringstream os;
            os << label << ": analytic " << analytic << " numeric " << numeric;
            report.worst = os.str();
        }
        ++report.checked;
    };

    TensorD xd = input.cast<double>();
    std::vector<TensorD> pd;
    for (const auto& p : graph.params()) pd.push_back(p.cast<double>());
    const double eps = options.epsilon;
    std::vector<bool> active_plus, active_minus;

    // Entries whose +/- epsilon evaluations straddle a kink are replaced by further draws,
    // up to kAttempts times the quota.
    constexpr int kAttempts = 4;
    int wanted = 0;
    auto quota = [&](std::size_t size) {
        const int q = static_cast<int>(std::min<std::size_t>(size, static_cast<std::size_t>(options.samples_per_tensor)));
        wanted += q;
        return q;
    };

    Rng pick_rng(derive_seed(options.seed, 0xC4EC));
    for (std::size_t p = 0; p < pd.size(); ++p) {
        const int q = quota(pd[p].size());
        int done = 0;
        for (std::size_t i : pick_entries(pd[p].size(), kAttempts * options.samples_per_tensor, pick_rng)) {
            if (done == q) break;
            const double original = pd[p][i];
            pd[p][i] = original + eps;
            const double lp = value(xd, pd, active_plus);
            pd[p][i] = original - eps;
            const double lm = value(xd, pd, active_minus);
            pd[p][i] = original;
            if (active_plus != active_minus) {
                ++report.skipped_kinks;
                continue;
            }
            compare(grads.params[p][i], (lp - lm) / (2.0 * eps), "param " + std::to_string(p) + "[" + std::to_string(i) + "]");
            ++done;
        }
    }
    if (options.check_input) {
        const int q = quota(xd.size());
        int done = 0;
        for (std::size_t i : pick_entries(xd.size(), kAttempts * options.samples_per_tensor, pick_rng)) {
            if (done == q) break;
            const double original = xd[i];
            xd[i] = original + eps;
            const double lp = value(xd, pd, active_plus);
            xd[i] = original - eps;
            const double lm = value(xd, pd, active_minus);
            xd[i] = original;
            if (active_plus != active_minus) {
                ++report.skipped_kinks;
                continue;
            }
            compare(grads.input[i], (lp - lm) / (2.0 * eps), "input[" + std::to_string(i) + "]");
            ++done;
        }
    }
    graph.clear_cache();
    report.passed = report.checked > 0 && 2 * report.checked >= wanted && report.max_relative_error < options.tolerance;
    return report;
}

}  // namespace facemimic::diffnet
