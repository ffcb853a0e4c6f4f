#include "facemimic/mimicry.hpp"

#include "facemimic/diffnet/adam.hpp"
#include "facemimic/diffnet/checkpoint.hpp"
#include "facemimic/diffnet/losses.hpp"
#include "facemimic/errors.hpp"
#include "facemimic/util/csv.hpp"
#include "facemimic/util/hashing.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace facemimic {

using diffnet::LayerGraph;
using diffnet::Shape;
using diffnet::Tensor;
using json = nlohmann::json;
namespace fs = std::filesystem;

TrainConfig generative_defaults(std::uint64_t seed) { return TrainConfig{30, 32, 1e-3, seed}; }
TrainConfig inverse_defaults(std::uint64_t seed) { return TrainConfig{40, 32, 5e-5, seed}; }

std::string TrainLog::to_csv() const {
    std::string out = "epoch,train_loss,val_metric,seconds\n";
    for (const auto& e : epochs) {
        out += std::to_string(e.epoch) + "," + (std::isnan(e.train_loss) ? std::string("") : format_number(e.train_loss)) +
               "," + format_number(e.val_metric) + "," + format_number(e.seconds) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Architectures

LayerGraph generative_architecture(ImageDims dims) {
    LayerGraph g(Shape{5, dims.height, dims.width});
    const int x = 0;
    const int e1 = g.relu(g.conv2d(x, 16, 3, 2));
    const int e2 = g.relu(g.conv2d(e1, 32, 3, 2));
    const int e3 = g.relu(g.conv2d(e2, 64, 3, 2));
    const int d3 = g.relu(g.conv2d(e3, 32, 3));
    const int d2 = g.relu(g.conv2d(g.concat(g.upsample2x(d3), e2), 16, 3));
    const int d1 = g.relu(g.conv2d(g.concat(g.upsample2x(d2), e1), 8, 3));
    g.sigmoid(g.conv2d(g.concat(g.upsample2x(d1), x), 3, 3));
    if (g.output_shape() != Shape{3, dims.height, dims.width}) {
        throw DimensionError("generative architecture needs image dims divisible by 8");
    }
    return g;
}

LayerGraph inverse_architecture(ImageDims dims, int in_channels, int motors) {
    if (motors < 1) throw ArgumentError("inverse model needs at least one motor");
    LayerGraph g(Shape{in_channels, dims.height, dims.width});
    int x = 0;
    x = g.relu(g.conv2d(x, 8, 3, 2));
    x = g.relu(g.conv2d(x, 16, 3));
    x = g.relu(g.conv2d(x, 16, 3, 2));
    x = g.relu(g.conv2d(x, 32, 3));
    x = g.relu(g.conv2d(x, 32, 3, 2));
    x = g.relu(g.conv2d(x, 32, 3));
    x = g.relu(g.dense(x, 128));
    g.dense(x, kMotorLevels * motors);
    return g;
}

// ---------------------------------------------------------------------------
// Encoding helpers

std::vector<int> discretize(std::span<const double> values) {
    std::vector<int> out;
    out.reserve(values.size());
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) throw RangeError("motor value " + std::to_string(v) + " outside [0,1]");
        out.push_back(static_cast<int>(std::floor(v / kMotorStep + 0.5)));
    }
    return out;
}

namespace {

void require_dims(const Tensor& batch, int channels, ImageDims dims, const char* what) {
    if (batch.c() != channels || batch.h() != dims.height || batch.w() != dims.width) {
        throw DimensionError(std::string(what) + ": batch shape " + diffnet::to_string(batch.shape()) +
                             " does not fit " + std::to_string(dims.width) + "x" + std::to_string(dims.height));
    }
}

}  // namespace

void fill_generative_input(Tensor& batch, int index, const LandmarkMask& mask, const SelfImage& static_image) {
    require_dims(batch, 5, mask.dims, "generator input");
    if (static_image.dims() != mask.dims) throw DimensionError("static image dims do not match mask");
    float* dst = batch.sample(index);
    const std::size_t plane = static_cast<std::size_t>(mask.dims.pixels());
    std::copy(mask.occupancy.begin(), mask.occupancy.end(), dst);
    std::copy(mask.confidence.begin(), mask.confidence.end(), dst + plane);
    const auto v = static_image.values();
    std::copy(v.begin(), v.end(), dst + 2 * plane);
}

void fill_image_input(Tensor& batch, int index, const SelfImage& image) {
    require_dims(batch, 3, image.dims(), "image input");
    const auto v = image.values();
    std::copy(v.begin(), v.end(), batch.sample(index));
}

void fill_mask_input(Tensor& batch, int index, const LandmarkMask& mask) {
    require_dims(batch, 2, mask.dims, "mask input");
    float* dst = batch.sample(index);
    std::copy(mask.occupancy.begin(), mask.occupancy.end(), dst);
    std::copy(mask.confidence.begin(), mask.confidence.end(), dst + mask.occupancy.size());
}

namespace {

SelfImage image_from_sample(const Tensor& out, int index, ImageDims dims) {
    SelfImage img(dims);
    const float* src = out.sample(index);
    auto v = img.values();
    std::copy(src, src + v.size(), v.begin());
    return img;
}

double sample_image_distance(const Tensor& out, int index, const SelfImage& truth) {
    const float* a = out.sample(index);
    const auto b = truth.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        sum += d * d;
    }
    return sum / static_cast<double>(b.size());
}

// ---------------------------------------------------------------------------
// Shared training loop

struct Validation {
    double loss = 0.0;
    double metric = 0.0;
};

struct LoopSpec {
    int train_count = 0;
    // Fills `input` with the given training indices and returns the loss on `output`.
    std::function<void(Tensor& input, std::span<const int> idx)> fill;
    std::function<diffnet::LossResult(const Tensor& output, std::span<const int> idx)> loss;
    std::function<Validation(const LayerGraph&)> validate;
    bool higher_is_better = false;
    int max_iterations = -1;  // stop after this many updates, no best-epoch selection
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Validation validate_epoch(const LoopSpec& spec, const LayerGraph& graph, int epoch) {
    Validation v;
    try {
        v = spec.validate(graph);
    } catch (const NumericError& e) {
        throw TrainingError("validation diverged at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(v.loss) || !std::isfinite(v.metric)) {
        throw TrainingError("validation diverged at epoch " + std::to_string(epoch) + " (loss " +
                            std::to_string(v.loss) + ", metric " + std::to_string(v.metric) + ")");
    }
    return v;
}

TrainLog run_training(LayerGraph& graph, const TrainConfig& config, const LoopSpec& spec) {
    if (spec.train_count <= 0) throw ArgumentError("training split is empty");
    if (config.batch <= 0 || config.epochs < 0 || !(config.lr > 0.0)) {
        throw ConfigError("training needs batch > 0, epochs >= 0 and lr > 0");
    }
    TrainLog log;
    double t0 = now_seconds();
    const Validation v0 = validate_epoch(spec, graph, 0);
    log.epochs.push_back(EpochLog{0, std::numeric_limits<double>::quiet_NaN(), v0.loss, v0.metric, now_seconds() - t0});

    LayerGraph best = graph;
    double best_metric = v0.metric;
    std::vector<int> order(static_cast<std::size_t>(spec.train_count));
    std::iota(order.begin(), order.end(), 0);
    const diffnet::AdamConfig adam{config.lr};
    const Shape in_shape = graph.input_shape();
    const int epochs = spec.max_iterations >= 0 ? std::numeric_limits<int>::max() : config.epochs;
    long long iterations = 0;

    for (int epoch = 1; epoch <= epochs; ++epoch) {
        t0 = now_seconds();
        Rng rng(derive_seed(config.seed, 0xE90C00ULL + static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
        double loss_sum = 0.0;
        int seen = 0;
        bool stop = false;
        for (int start = 0; start < spec.train_count; start += config.batch) {
            const int count = std::min(config.batch, spec.train_count - start);
            const std::span<const int> idx(order.data() + start, static_cast<std::size_t>(count));
            Tensor input(count, in_shape);
            spec.fill(input, idx);
            try {
                const Tensor& out = graph.forward(input);
                diffnet::LossResult loss = spec.loss(out, idx);
                if (!std::isfinite(loss.value)) throw NumericError("loss is not finite");
                diffnet::Gradients grads = graph.backward(loss.grad);
                diffnet::adam_step(graph, grads.params, adam);
                loss_sum += loss.value * count;
                seen += count;
            } catch (const NumericError& e) {
                throw TrainingError("diverged at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(start / config.batch) + ": " + e.what());
            }
            ++iterations;
            if (spec.max_iterations >= 0 && iterations >= spec.max_iterations) {
                stop = true;
                break;
            }
        }
        graph.clear_cache();
        const Validation v = validate_epoch(spec, graph, epoch);
        log.epochs.push_back(EpochLog{epoch, seen ? loss_sum / seen : 0.0, v.loss, v.metric, now_seconds() - t0});
        const bool better = spec.higher_is_better ? v.metric > best_metric : v.metric < best_metric;
        if (spec.max_iterations < 0 && better) {
            best = graph;
            best_metric = v.metric;
            log.best_epoch = epoch;
        }
        if (stop) break;
    }

    if (spec.max_iterations >= 0) {
        log.best_epoch = log.epochs.back().epoch;
        return log;
    }
    if (log.best_epoch == 0) {
        throw TrainingError("no epoch improved the validation metric over initialization (" +
                            std::to_string(v0.metric) + ")");
    }
    const EpochLog& b = log.epochs[static_cast<std::size_t>(log.best_epoch)];
    if (!(b.val_loss < v0.loss)) {
        throw TrainingError("validation loss at best epoch " + std::to_string(log.best_epoch) + " (" +
                            std::to_string(b.val_loss) + ") is not below initialization (" + std::to_string(v0.loss) +
                            ")");
    }
    graph = std::move(best);
    return log;
}

void require_splits(const BabbleDataset& ds) {
    if (ds.split.train <= 0) throw ArgumentError("dataset has an empty train split");
    if (ds.split.val <= 0) throw ArgumentError("dataset has an empty validation split");
}

constexpr int kEvalBatch = 32;

}  // namespace

// ---------------------------------------------------------------------------
// Generative model

GenerativeModel train_generative(const BabbleDataset& ds, const FaceRig& rig, const TrainConfig& config) {
    require_splits(ds);
    if (ds.rig_id != rig.id()) throw IntegrityError("dataset rig " + ds.rig_id + " does not match rig " + rig.id());
    GenerativeModel gm;
    gm.dims = ds.dims;
    gm.config = config;
    gm.graph = generative_architecture(ds.dims);
    gm.graph.initialize(derive_seed(config.seed, 0x6E4));
    const SelfImage& static_image = static_self_image(rig);
    const auto train = ds.train();
    const auto val = ds.val();

    LoopSpec spec;
    spec.train_count = static_cast<int>(train.size());
    spec.fill = [&](Tensor& input, std::span<const int> idx) {
        for (std::size_t b = 0; b < idx.size(); ++b) {
            const BabbleRecord& r = train[static_cast<std::size_t>(idx[b])];
            fill_generative_input(input, static_cast<int>(b), encode_mask(r.landmarks, ds.dims), static_image);
        }
    };
    spec.loss = [&](const Tensor& out, std::span<const int> idx) {
        Tensor target(out.n(), out.shape());
        for (std::size_t b = 0; b < idx.size(); ++b) {
            fill_image_input(target, static_cast<int>(b), train[static_cast<std::size_t>(idx[b])].image);
        }
        return diffnet::mse_loss(out, target);
    };
    spec.validate = [&](const LayerGraph& graph) {
        double sum = 0.0;
        for (std::size_t start = 0; start < val.size(); start += kEvalBatch) {
            const int count = static_cast<int>(std::min<std::size_t>(kEvalBatch, val.size() - start));
            Tensor input(count, graph.input_shape());
            for (int b = 0; b < count; ++b) {
                fill_generative_input(input, b, encode_mask(val[start + b].landmarks, ds.dims), static_image);
            }
            const Tensor out = graph.infer(input);
            for (int b = 0; b < count; ++b) sum += sample_image_distance(out, b, val[start + b].image);
        }
        const double mean = sum / static_cast<double>(val.size());
        return Validation{mean, mean};
    };
    gm.log = run_training(gm.graph, config, spec);
    return gm;
}

SelfImage generate(const GenerativeModel& gm, const LandmarkMask& mask, const SelfImage& static_image) {
    if (mask.dims != gm.dims || static_image.dims() != gm.dims) throw DimensionError("generate: dims do not match model");
    Tensor input(1, gm.graph.input_shape());
    fill_generative_input(input, 0, mask, static_image);
    return image_from_sample(gm.graph.infer(input), 0, gm.dims);
}

std::vector<SelfImage> generate_batch(const GenerativeModel& gm, std::span<const LandmarkSet> landmarks,
                                      const SelfImage& static_image) {
    std::vector<SelfImage> out;
    out.reserve(landmarks.size());
    for (std::size_t start = 0; start < landmarks.size(); start += kEvalBatch) {
        const int count = static_cast<int>(std::min<std::size_t>(kEvalBatch, landmarks.size() - start));
        Tensor input(count, gm.graph.input_shape());
        for (int b = 0; b < count; ++b) {
            fill_generative_input(input, b, encode_mask(landmarks[start + b], gm.dims), static_image);
        }
        const Tensor y = gm.graph.infer(input);
        for (int b = 0; b < count; ++b) out.push_back(image_from_sample(y, b, gm.dims));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Inverse models

CommandInference decode_logits(std::span<const float> logits, int motors) {
    if (logits.size() != static_cast<std::size_t>(motors) * kMotorLevels) {
        throw DimensionError("expected " + std::to_string(motors * kMotorLevels) + " logits, got " +
                             std::to_string(logits.size()));
    }
    CommandInference r;
    r.probabilities.resize(static_cast<std::size_t>(motors));
    std::vector<int> classes(static_cast<std::size_t>(motors));
    for (int n = 0; n < motors; ++n) {
        const auto head = logits.subspan(static_cast<std::size_t>(n) * kMotorLevels, kMotorLevels);
        diffnet::softmax(head, r.probabilities[static_cast<std::size_t>(n)]);
        int best = 0;
        for (int k = 1; k < kMotorLevels; ++k) {
            if (head[static_cast<std::size_t>(k)] > head[static_cast<std::size_t>(best)]) best = k;
        }
        classes[static_cast<std::size_t>(n)] = best;
    }
    r.command = MotorCommand::from_classes(classes);
    return r;
}

InverseModel make_inverse(ImageDims dims, int motors, int in_channels, const TrainConfig& config) {
    InverseModel im;
    im.dims = dims;
    im.motors = motors;
    im.in_channels = in_channels;
    im.config = config;
    im.graph = inverse_architecture(dims, in_channels, motors);
    im.graph.initialize(derive_seed(config.seed, in_channels == 3 ? 0x1A3 : 0x1A2));
    return im;
}

namespace {

// Inputs for the inverse-style models: the camera image, or the landmark mask.
struct InverseData {
    std::function<void(Tensor&, int, const BabbleRecord&)> fill;
};

InverseData inverse_data(const InverseModel& model) {
    if (model.in_channels == 3) {
        return {[](Tensor& t, int b, const BabbleRecord& r) { fill_image_input(t, b, r.image); }};
    }
    const ImageDims dims = model.dims;
    return {[dims](Tensor& t, int b, const BabbleRecord& r) { fill_mask_input(t, b, encode_mask(r.landmarks, dims)); }};
}

std::vector<int> flat_classes(std::span<const BabbleRecord> records, std::span<const int> idx, int motors) {
    std::vector<int> out;
    out.reserve(idx.size() * static_cast<std::size_t>(motors));
    for (int i : idx) {
        const auto c = records[static_cast<std::size_t>(i)].command.classes();
        if (static_cast<int>(c.size()) != motors) throw DimensionError("record command has wrong motor count");
        out.insert(out.end(), c.begin(), c.end());
    }
    return out;
}

InverseModel fit_inverse(const BabbleDataset& ds, InverseModel model, int max_iterations) {
    require_splits(ds);
    if (ds.motor_count != model.motors) throw DimensionError("dataset motor count does not match model");
    const auto train = ds.train();
    const auto val = ds.val();
    const InverseData data = inverse_data(model);
    const int motors = model.motors;

    LoopSpec spec;
    spec.train_count = static_cast<int>(train.size());
    spec.max_iterations = max_iterations;
    spec.higher_is_better = true;
    spec.fill = [&](Tensor& input, std::span<const int> idx) {
        for (std::size_t b = 0; b < idx.size(); ++b) data.fill(input, static_cast<int>(b), train[static_cast<std::size_t>(idx[b])]);
    };
    spec.loss = [&](const Tensor& out, std::span<const int> idx) {
        return diffnet::softmax_cross_entropy(out, flat_classes(train, idx, motors), motors, kMotorLevels);
    };
    spec.validate = [&](const LayerGraph& graph) {
        double loss_sum = 0.0;
        long long correct = 0;
        for (std::size_t start = 0; start < val.size(); start += kEvalBatch) {
            const int count = static_cast<int>(std::min<std::size_t>(kEvalBatch, val.size() - start));
            Tensor input(count, graph.input_shape());
            std::vector<int> idx(static_cast<std::size_t>(count));
            for (int b = 0; b < count; ++b) {
                idx[static_cast<std::size_t>(b)] = static_cast<int>(start) + b;
                data.fill(input, b, val[start + b]);
            }
            const Tensor out = graph.infer(input);
            const auto targets = flat_classes(val, idx, motors);
            loss_sum += diffnet::softmax_cross_entropy(out, targets, motors, kMotorLevels).value * count;
            for (int b = 0; b < count; ++b) {
                const auto r = decode_logits(std::span<const float>(out.sample(b), out.shape().size()), motors);
                const auto c = r.command.classes();
                for (int n = 0; n < motors; ++n) {
                    correct += c[static_cast<std::size_t>(n)] == targets[static_cast<std::size_t>(b * motors + n)];
                }
            }
        }
        return Validation{loss_sum / static_cast<double>(val.size()),
                          static_cast<double>(correct) / (static_cast<double>(val.size()) * motors)};
    };
    model.log = run_training(model.graph, model.config, spec);
    return model;
}

}  // namespace

InverseModel train_inverse(const BabbleDataset& ds, const TrainConfig& config) {
    return fit_inverse(ds, make_inverse(ds.dims, ds.motor_count, 3, config), -1);
}

InverseModel train_mask_inverse(const BabbleDataset& ds, const TrainConfig& config) {
    return fit_inverse(ds, make_inverse(ds.dims, ds.motor_count, 2, config), -1);
}

InverseModel train_inverse_iterations(const BabbleDataset& ds, InverseModel model, int iterations) {
    if (iterations < 0) throw ArgumentError("iterations must be >= 0");
    if (iterations == 0) return model;
    return fit_inverse(ds, std::move(model), iterations);
}

CommandInference infer_commands(const InverseModel& im, const SelfImage& image) {
    if (im.in_channels != 3) throw ArgumentError("infer_commands needs an image model");
    if (image.dims() != im.dims) throw DimensionError("infer_commands: image dims do not match model");
    Tensor input(1, im.graph.input_shape());
    fill_image_input(input, 0, image);
    const Tensor out = im.graph.infer(input);
    return decode_logits(out.values(), im.motors);
}

std::vector<CommandInference> infer_commands_batch(const InverseModel& im, std::span<const SelfImage> images) {
    if (im.in_channels != 3) throw ArgumentError("infer_commands needs an image model");
    std::vector<CommandInference> out;
    out.reserve(images.size());
    for (std::size_t start = 0; start < images.size(); start += kEvalBatch) {
        const int count = static_cast<int>(std::min<std::size_t>(kEvalBatch, images.size() - start));
        Tensor input(count, im.graph.input_shape());
        for (int b = 0; b < count; ++b) fill_image_input(input, b, images[start + b]);
        const Tensor y = im.graph.infer(input);
        for (int b = 0; b < count; ++b) {
            out.push_back(decode_logits(std::span<const float>(y.sample(b), y.shape().size()), im.motors));
        }
    }
    return out;
}

CommandInference infer_from_mask(const InverseModel& model, const LandmarkMask& mask) {
    if (model.in_channels != 2) throw ArgumentError("infer_from_mask needs a mask model");
    if (mask.dims != model.dims) throw DimensionError("infer_from_mask: mask dims do not match model");
    Tensor input(1, model.graph.input_shape());
    fill_mask_input(input, 0, mask);
    const Tensor out = model.graph.infer(input);
    return decode_logits(out.values(), model.motors);
}

// ---------------------------------------------------------------------------
// Pipeline

PipelineResult pipeline_infer(const GenerativeModel& gm, const InverseModel& im, const LandmarkSet& human,
                              const LandmarkRanges& human_ranges, const LandmarkRanges& robot_ranges,
                              const SelfImage& static_image) {
    const auto t0 = std::chrono::steady_clock::now();
    PipelineResult r;
    r.normalized = normalize(human, human_ranges, robot_ranges, &r.normalize_stats);
    r.generated = generate(gm, encode_mask(r.normalized, gm.dims), static_image);
    r.command = infer_commands(im, r.generated).command;
    r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

json config_json(const TrainConfig& c) {
    return {{"epochs", c.epochs}, {"batch", c.batch}, {"lr", c.lr}, {"seed", c.seed}};
}

TrainConfig config_from_json(const json& j) {
    return TrainConfig{j.at("epochs").get<int>(), j.at("batch").get<int>(), j.at("lr").get<double>(),
                       j.at("seed").get<std::uint64_t>()};
}

json log_json(const TrainLog& log) {
    json epochs = json::array();
    for (const auto& e : log.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", std::isnan(e.train_loss) ? json(nullptr) : json(e.train_loss)},
                          {"val_loss", e.val_loss},
                          {"val_metric", e.val_metric}});
    }
    return {{"best_epoch", log.best_epoch}, {"epochs", epochs}};
}

TrainLog log_from_json(const json& j) {
    TrainLog log;
    log.best_epoch = j.at("best_epoch").get<int>();
    for (const auto& e : j.at("epochs")) {
        EpochLog el;
        el.epoch = e.at("epoch").get<int>();
        el.train_loss = e.at("train_loss").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                     : e.at("train_loss").get<double>();
        el.val_loss = e.at("val_loss").get<double>();
        el.val_metric = e.at("val_metric").get<double>();
        log.epochs.push_back(el);
    }
    return log;
}

// Wall-clock seconds stay out of the checkpoint so reruns hash identically.
std::string generative_metadata(const GenerativeModel& gm) {
    json m = {{"kind", "generative"},
              {"dims", {{"width", gm.dims.width}, {"height", gm.dims.height}}},
              {"config", config_json(gm.config)},
              {"log", log_json(gm.log)}};
    return m.dump();
}

std::string inverse_metadata(const InverseModel& im) {
    json m = {{"kind", im.in_channels == 3 ? "inverse" : "mask_inverse"},
              {"dims", {{"width", im.dims.width}, {"height", im.dims.height}}},
              {"in_channels", im.in_channels},
              {"motors", im.motors},
              {"config", config_json(im.config)},
              {"log", log_json(im.log)}};
    return m.dump();
}

json read_metadata(const fs::path& dir, LayerGraph& graph) {
    std::string text;
    graph = diffnet::load_checkpoint(dir, &text);
    return json::parse(text);
}

}  // namespace

void save_generative(const GenerativeModel& gm, const fs::path& dir) {
    diffnet::save_checkpoint(gm.graph, dir, generative_metadata(gm));
    write_text_file(dir / "train_log.csv", gm.log.to_csv());
}

GenerativeModel load_generative(const fs::path& dir) {
    GenerativeModel gm;
    try {
        const json m = read_metadata(dir, gm.graph);
        if (m.at("kind") != "generative") throw IntegrityError(dir.string() + " is not a generative model checkpoint");
        gm.dims = {m.at("dims").at("width").get<int>(), m.at("dims").at("height").get<int>()};
        gm.config = config_from_json(m.at("config"));
        gm.log = log_from_json(m.at("log"));
    } catch (const json::exception& e) {
        throw IntegrityError("malformed generative checkpoint metadata: " + std::string(e.what()));
    }
    if (gm.graph.input_shape() != Shape{5, gm.dims.height, gm.dims.width}) {
        throw IntegrityError("generative checkpoint input shape does not match its dims");
    }
    return gm;
}

void save_inverse(const InverseModel& im, const fs::path& dir) {
    diffnet::save_checkpoint(im.graph, dir, inverse_metadata(im));
    write_text_file(dir / "train_log.csv", im.log.to_csv());
}

InverseModel load_inverse(const fs::path& dir) {
    InverseModel im;
    try {
        const json m = read_metadata(dir, im.graph);
        const std::string kind = m.at("kind").get<std::string>();
        if (kind != "inverse" && kind != "mask_inverse") {
            throw IntegrityError(dir.string() + " is not an inverse model checkpoint");
        }
        im.dims = {m.at("dims").at("width").get<int>(), m.at("dims").at("height").get<int>()};
        im.in_channels = m.at("in_channels").get<int>();
        im.motors = m.at("motors").get<int>();
        im.config = config_from_json(m.at("config"));
        im.log = log_from_json(m.at("log"));
    } catch (const json::exception& e) {
        throw IntegrityError("malformed inverse checkpoint metadata: " + std::string(e.what()));
    }
    if (im.graph.input_shape() != Shape{im.in_channels, im.dims.height, im.dims.width} ||
        im.graph.output_shape().size() != im.motors * kMotorLevels) {
        throw IntegrityError("inverse checkpoint shapes do not match its metadata");
    }
    return im;
}

std::string model_hash(const GenerativeModel& gm) { return diffnet::checkpoint_hash(gm.graph, generative_metadata(gm)); }
std::string model_hash(const InverseModel& im) { return diffnet::checkpoint_hash(im.graph, inverse_metadata(im)); }

}  // namespace facemimic
