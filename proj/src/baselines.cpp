#include "facemimic/baselines.hpp"

#include "facemimic/errors.hpp"
#include "facemimic/util/hashing.hpp"

#include <array>
#include <limits>

namespace facemimic {

namespace {

constexpr std::array<std::pair<BaselineKind, const char*>, 7> kTags{{
    {BaselineKind::RS, "RS"},
    {BaselineKind::RI, "RI"},
    {BaselineKind::RI100, "RI100"},
    {BaselineKind::NNOnGenerated, "NN_on_generated"},
    {BaselineKind::NNOnLandmarks, "NN_on_landmarks"},
    {BaselineKind::LandmarkToMotor, "LandmarkToMotor"},
    {BaselineKind::RandomCommand, "RandomCommand"},
}};

}  // namespace

std::string to_string(BaselineKind kind) {
    for (const auto& [k, tag] : kTags) {
        if (k == kind) return tag;
    }
    throw ArgumentError("unknown baseline kind");
}

BaselineKind baseline_from_string(const std::string& tag) {
    for (const auto& [k, t] : kTags) {
        if (tag == t) return k;
    }
    throw ArgumentError("unknown baseline tag '" + tag + "'");
}

const SelfImage& rs_image(const BabbleDataset& ds, std::uint64_t seed) {
    const auto train = ds.train();
    if (train.empty()) throw ArgumentError("rs_image: training split is empty");
    Rng rng(derive_seed(seed, 0x25));
    return train[uniform_index(rng, train.size())].image;
}

InverseModel make_ri(ImageDims dims, int motors, std::uint64_t seed) {
    return make_inverse(dims, motors, 3, inverse_defaults(seed));
}

InverseModel make_ri100(const BabbleDataset& ds, std::uint64_t seed) {
    return train_inverse_iterations(ds, make_ri(ds.dims, ds.motor_count, seed), kRi100Iterations);
}

MotorCommand nn_retrieve(const LandmarkSet& query, const BabbleDataset& ds) {
    const auto train = ds.train();
    if (train.empty()) throw ArgumentError("nn_retrieve: training split is empty");
    const BabbleRecord* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& r : train) {
        const double d = landmark_distance(query, r.landmarks);
        if (d < best_d || (d == best_d && r.step < best->step)) {
            best_d = d;
            best = &r;
        }
    }
    return best->command;
}

InverseModel train_landmark_to_motor(const BabbleDataset& ds, const TrainConfig& config) {
    return train_mask_inverse(ds, config);
}

MotorCommand infer_landmark_to_motor(const InverseModel& model, const LandmarkMask& mask) {
    return infer_from_mask(model, mask).command;
}

MotorCommand random_command(int motors, std::uint64_t seed) {
    if (motors < 1) throw ArgumentError("random_command needs at least one motor");
    Rng rng(derive_seed(seed, 0xC0DE));
    std::vector<int> classes(static_cast<std::size_t>(motors));
    for (auto& c : classes) c = static_cast<int>(uniform_index(rng, kMotorLevels));
    return MotorCommand::from_classes(classes);
}

}  // namespace facemimic
