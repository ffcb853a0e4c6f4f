#pragma once

#include <cstdint>
#include <string>

#include "facemimic/babble.hpp"
#include "facemimic/mimicry.hpp"

namespace facemimic {

enum class BaselineKind { RS, RI, RI100, NNOnGenerated, NNOnLandmarks, LandmarkToMotor, RandomCommand };

std::string to_string(BaselineKind kind);
/// Throws ArgumentError on an unknown tag.
BaselineKind baseline_from_string(const std::string& tag);

/// Uniform draw from the training split's images.
const SelfImage& rs_image(const BabbleDataset& ds, std::uint64_t seed);

/// Untrained inverse model (same initialization as train_inverse with this seed).
InverseModel make_ri(ImageDims dims, int motors, std::uint64_t seed);
/// RI followed by exactly 100 Adam batch updates.
InverseModel make_ri100(const BabbleDataset& ds, std::uint64_t seed);
inline constexpr int kRi100Iterations = 100;

/// Command of the training record with the smallest landmark_distance; ties go to the lowest step.
MotorCommand nn_retrieve(const LandmarkSet& query, const BabbleDataset& ds);

/// Mask-input network with the inverse model's head structure.
InverseModel train_landmark_to_motor(const BabbleDataset& ds, const TrainConfig& config);
MotorCommand infer_landmark_to_motor(const InverseModel& model, const LandmarkMask& mask);

/// I.i.d. uniform draw from the 5-level grid per motor.
MotorCommand random_command(int motors, std::uint64_t seed);

}  // namespace facemimic
