#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "facemimic/babble.hpp"
#include "facemimic/diffnet/graph.hpp"
#include "facemimic/landmarks.hpp"
#include "facemimic/simface.hpp"

namespace facemimic {

struct TrainConfig {
    int epochs = 30;
    int batch = 32;
    double lr = 1e-3;
    std::uint64_t seed = 1;
    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// Desk-scale defaults: 30 epochs / batch 32 / lr 1e-3.
TrainConfig generative_defaults(std::uint64_t seed = 1);
/// Desk-scale defaults: 40 epochs / batch 32 / lr 5e-5.
TrainConfig inverse_defaults(std::uint64_t seed = 1);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;  // NaN for epoch 0 (initialization)
    double val_loss = 0.0;
    double val_metric = 0.0;
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpochLog> epochs;  // epochs[0] is the initialization
    int best_epoch = 0;
    /// `epoch,train_loss,val_metric,seconds`
    std::string to_csv() const;
};

/// Image generator: (mask, static self-image) -> self-image.
struct GenerativeModel {
    diffnet::LayerGraph graph;
    ImageDims dims;
    TrainConfig config;
    TrainLog log;
};

/// Classifier over N motors x 5 levels. in_channels is 3 for images, 2 for landmark masks.
struct InverseModel {
    diffnet::LayerGraph graph;
    ImageDims dims;
    int in_channels = 3;
    int motors = kDefaultMotorCount;
    TrainConfig config;
    TrainLog log;
};

/// Three stride-2 encoder stages (16/32/64), three upsample-refine decoder stages with
/// encoder skips, full-resolution input skip and a sigmoid head. Input 5 channels.
diffnet::LayerGraph generative_architecture(ImageDims dims);

/// Six 3x3 convolutions (stride 2 on the 1st, 3rd and 5th), FC 128, FC 5*motors.
diffnet::LayerGraph inverse_architecture(ImageDims dims, int in_channels, int motors);

/// Class index = round-half-up(value / 0.25). Throws RangeError outside [0,1].
std::vector<int> discretize(std::span<const double> values);

/// Writes sample `index` of a (n, 5, h, w) generator input: occupancy, confidence, then I_s.
void fill_generative_input(diffnet::Tensor& batch, int index, const LandmarkMask& mask, const SelfImage& static_image);
/// Writes sample `index` of an (n, 3, h, w) image batch.
void fill_image_input(diffnet::Tensor& batch, int index, const SelfImage& image);
/// Writes sample `index` of an (n, 2, h, w) mask batch.
void fill_mask_input(diffnet::Tensor& batch, int index, const LandmarkMask& mask);

SelfImage generate(const GenerativeModel& gm, const LandmarkMask& mask, const SelfImage& static_image);
std::vector<SelfImage> generate_batch(const GenerativeModel& gm, std::span<const LandmarkSet> landmarks,
                                      const SelfImage& static_image);

struct CommandInference {
    MotorCommand command;
    std::vector<std::array<double, kMotorLevels>> probabilities;
};

/// Per-head softmax and argmax; exact ties go to the lower class index.
CommandInference decode_logits(std::span<const float> logits, int motors);
CommandInference infer_commands(const InverseModel& im, const SelfImage& image);
std::vector<CommandInference> infer_commands_batch(const InverseModel& im, std::span<const SelfImage> images);

/// Trains on the dataset's train split; selects the epoch with the lowest validation image distance.
GenerativeModel train_generative(const BabbleDataset& ds, const FaceRig& rig, const TrainConfig& config);

/// Trains on images; selects the epoch with the highest validation command accuracy.
InverseModel train_inverse(const BabbleDataset& ds, const TrainConfig& config);

/// Same training loop, starting from `model` and stopping after exactly `iterations` batch updates.
/// No best-epoch selection: the returned graph is the one after the last update.
InverseModel train_inverse_iterations(const BabbleDataset& ds, InverseModel model, int iterations);

/// Untrained inverse model.
InverseModel make_inverse(ImageDims dims, int motors, int in_channels, const TrainConfig& config);

/// Trains an inverse-style network on landmark masks instead of images.
InverseModel train_mask_inverse(const BabbleDataset& ds, const TrainConfig& config);
CommandInference infer_from_mask(const InverseModel& model, const LandmarkMask& mask);

struct PipelineResult {
    MotorCommand command;
    LandmarkSet normalized;
    SelfImage generated;
    NormalizeStats normalize_stats;
    double latency_ms = 0.0;
};

/// normalize -> encode_mask -> generate -> infer_commands.
PipelineResult pipeline_infer(const GenerativeModel& gm, const InverseModel& im, const LandmarkSet& human,
                              const LandmarkRanges& human_ranges, const LandmarkRanges& robot_ranges,
                              const SelfImage& static_image);

void save_generative(const GenerativeModel& gm, const std::filesystem::path& dir);
GenerativeModel load_generative(const std::filesystem::path& dir);
void save_inverse(const InverseModel& im, const std::filesystem::path& dir);
InverseModel load_inverse(const std::filesystem::path& dir);

std::string model_hash(const GenerativeModel& gm);
std::string model_hash(const InverseModel& im);

}  // namespace facemimic
