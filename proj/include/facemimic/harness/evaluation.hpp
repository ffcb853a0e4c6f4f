#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "facemimic/babble.hpp"
#include "facemimic/mimicry.hpp"
#include "facemimic/simface.hpp"

namespace facemimic {

/// One method/metric row, aggregated over seeds.
struct ReportRow {
    std::string method;
    std::string metric;
    double mean = 0.0;
    double stderr_ = 0.0;
    int n_seeds = 0;
    std::vector<double> per_seed;
};

struct EvalReport {
    std::string experiment;
    std::vector<std::uint64_t> seeds;
    std::string dataset_hash;
    std::string config_json;  // canonical JSON snapshot of everything the rows depend on
    std::string note;
    std::vector<ReportRow> rows;

    /// Throws ArgumentError if absent.
    const ReportRow& row(const std::string& method, const std::string& metric) const;
    const ReportRow* find(const std::string& method, const std::string& metric) const;
};

/// Value of one method/metric for one seed.
struct Score {
    std::string method;
    std::string metric;
    double value = 0.0;
};

/// Groups per-seed scores into rows (mean and standard error over seeds). Every seed
/// must report the same method/metric set, in any order.
std::vector<ReportRow> aggregate(const std::vector<std::vector<Score>>& per_seed);

/// Trained artifacts for one seed.
struct SeedModels {
    std::uint64_t seed = 0;
    const GenerativeModel* gm = nullptr;
    const InverseModel* im = nullptr;
    const InverseModel* ri = nullptr;
    const InverseModel* ri100 = nullptr;
    const InverseModel* l2m = nullptr;
};

/// GM and RS on the test split: image_distance, landmark_distance, and the fraction of
/// cases whose regenerated landmarks are closer to the target than to a random record's.
std::vector<Score> eval_generative_seed(const GenerativeModel& gm, const BabbleDataset& ds, const FaceRig& rig,
                                        std::uint64_t seed);
EvalReport eval_generative(std::span<const SeedModels> models, const BabbleDataset& ds, const FaceRig& rig);

/// IM, RI and RI-100 on test-split images: command_accuracy and command_distance.
std::vector<Score> eval_inverse_seed(const InverseModel& im, const InverseModel& ri, const InverseModel& ri100,
                                     const BabbleDataset& ds);
EvalReport eval_inverse(std::span<const SeedModels> models, const BabbleDataset& ds);

/// Two-stage pipeline and its baselines on test-split landmarks, with the robot's own
/// ranges on both sides. Also reports IM alone on the ground-truth images.
std::vector<Score> eval_pipeline_seed(const SeedModels& m, const BabbleDataset& ds, const FaceRig& rig);
EvalReport eval_pipeline(std::span<const SeedModels> models, const BabbleDataset& ds, const FaceRig& rig);

struct ExecutionConfig {
    int subjects = 8;
    int frames_per_subject = 40;
    int range_frames = 500;
    double max_distortion = 0.5;
    std::uint64_t subject_seed = 2024;
};

/// Distortion of subject i: 0 for the first, evenly spaced up to max_distortion after that.
double subject_distortion(const ExecutionConfig& cfg, int subject);
std::vector<FaceRig> make_subjects(const FaceRig& robot, const ExecutionConfig& cfg);

/// Robot-side ranges: extremes of the training split's detected landmarks.
LandmarkRanges robot_ranges(const BabbleDataset& ds);

/// Per subject: frames sampled on the subject rig, detected, normalized with the subject's
/// own babble ranges, run through the pipeline and executed on the robot. Landmark distance
/// to the normalized target, for the pipeline and for random commands. The robot round trip
/// (robot's own frames, robot ranges on both sides) uses the first subject's commands.
std::vector<Score> eval_execution_seed(const GenerativeModel& gm, const InverseModel& im, const FaceRig& robot,
                                       const LandmarkRanges& ranges, std::span<const FaceRig> subjects,
                                       const ExecutionConfig& cfg, std::uint64_t seed);
EvalReport eval_execution(std::span<const SeedModels> models, const BabbleDataset& ds, const FaceRig& robot,
                          const ExecutionConfig& cfg);

/// Row labels used by the reports.
std::string subject_label(int subject);

}  // namespace facemimic
