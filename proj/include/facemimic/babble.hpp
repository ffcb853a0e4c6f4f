#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facemimic/image.hpp"
#include "facemimic/landmarks.hpp"
#include "facemimic/simface.hpp"

namespace facemimic {

/// One babbling step: the command sent, the camera frame, and the landmarks
/// detected on that frame.
struct BabbleRecord {
    int step = 0;
    MotorCommand command;
    SelfImage image;
    LandmarkSet landmarks;
    friend bool operator==(const BabbleRecord&, const BabbleRecord&) = default;
};

struct SplitCounts {
    int train = 0;
    int val = 0;
    int test = 0;
    int total() const { return train + val + test; }
    friend bool operator==(const SplitCounts&, const SplitCounts&) = default;
};

/// 7/8 train, 1/16 validation, 1/16 test (4000 -> 3500/250/250, 16000 -> 14000/1000/1000).
SplitCounts default_split(int steps);

struct BabbleDataset {
    std::string rig_id;
    std::uint64_t master_seed = 0;
    ImageDims dims;
    int motor_count = 0;
    std::vector<BabbleRecord> records;
    SplitCounts split;

    std::span<const BabbleRecord> train() const;
    std::span<const BabbleRecord> val() const;
    std::span<const BabbleRecord> test() const;

    friend bool operator==(const BabbleDataset&, const BabbleDataset&) = default;
};

/// Command drawn at babbling step `step`; depends only on (master_seed, step).
MotorCommand babble_command(int motors, std::uint64_t master_seed, int step);

/// Random motor babbling. Any worker count gives the same records.
BabbleDataset collect(const FaceRig& rig, int steps, std::uint64_t master_seed, int workers = 1);

/// Contiguous split in collection order. Throws ArgumentError if counts do not add up.
BabbleDataset split(BabbleDataset ds, int n_train, int n_val, int n_test);

/// SHA-256 over the dataset's raw content (metadata, commands, landmarks, pixel bytes).
std::string dataset_hash(const BabbleDataset& ds);

/// Writes manifest.json, commands.csv, landmarks/lm_%06d.csv and images/img_%06d.png.
void save_dataset(const BabbleDataset& ds, const std::filesystem::path& dir);

/// Verifies every file checksum. If `expected_rig_id` is given, refuses a dataset from another rig.
BabbleDataset load_dataset(const std::filesystem::path& dir,
                           const std::optional<std::string>& expected_rig_id = std::nullopt);

}  // namespace facemimic
