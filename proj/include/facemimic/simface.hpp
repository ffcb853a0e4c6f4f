#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facemimic/image.hpp"
#include "facemimic/landmarks.hpp"

namespace facemimic {

inline constexpr int kMotorLevels = 5;
inline constexpr double kMotorStep = 0.25;
inline constexpr int kDefaultMotorCount = 10;

/// N motor angles, each on the grid {0, 0.25, 0.5, 0.75, 1}.
class MotorCommand {
public:
    MotorCommand() = default;
    /// Throws RangeError if any value is off the 5-level grid.
    explicit MotorCommand(std::vector<double> values);

    static MotorCommand zeros(int motors);
    static MotorCommand ones(int motors);
    /// Class index i maps to angle i * 0.25.
    static MotorCommand from_classes(std::span<const int> classes);

    int size() const { return static_cast<int>(values_.size()); }
    double operator[](int n) const { return values_[static_cast<std::size_t>(n)]; }
    std::span<const double> values() const { return values_; }
    std::vector<int> classes() const;

    friend bool operator==(const MotorCommand&, const MotorCommand&) = default;

private:
    std::vector<double> values_;
};

struct RigOrigin {
    std::string kind = "master";  // "master" or "subject"
    std::uint64_t seed = 0;
    double distortion = 0.0;
    friend bool operator==(const RigOrigin&, const RigOrigin&) = default;
};

using LandmarkLayout = std::array<Point2, kLandmarkCount>;

/// Everything that defines a rig. FaceRig validates it and derives the rest.
struct FaceRigSpec {
    ImageDims dims;
    double blob_sigma = 0.5;
    LandmarkLayout neutral{};
    std::vector<LandmarkLayout> displacement_fields;  // one per motor, px per unit angle
    std::vector<std::vector<int>> edge_topology;      // landmark-index polylines
    std::array<int, kLandmarkCount> blob_channel{};   // colour channel of each landmark's blob
    RigOrigin origin;
};

/// Immutable simulated face. Safe to share across threads.
class FaceRig {
public:
    explicit FaceRig(FaceRigSpec spec);

    const FaceRigSpec& spec() const { return spec_; }
    const std::string& id() const { return id_; }
    ImageDims dims() const { return spec_.dims; }
    int motor_count() const { return static_cast<int>(spec_.displacement_fields.size()); }
    double blob_sigma() const { return spec_.blob_sigma; }
    const Point2& neutral(int k) const { return spec_.neutral[static_cast<std::size_t>(k)]; }
    const Point2& displacement(int motor, int k) const {
        return spec_.displacement_fields[static_cast<std::size_t>(motor)][static_cast<std::size_t>(k)];
    }
    int blob_channel(int k) const { return spec_.blob_channel[static_cast<std::size_t>(k)]; }

    /// Largest displacement magnitude landmark k can reach over all commands in [0,1]^N.
    double max_displacement(int k) const { return max_displacement_[static_cast<std::size_t>(k)]; }
    double max_total_displacement() const;

    /// The all-zero-command render, computed once at construction.
    const SelfImage& static_image() const { return *static_image_; }

    /// Canonical JSON without the id; the id is the SHA-256 of this text.
    std::string canonical_json() const;
    /// Canonical JSON plus a "rig_id" field.
    std::string to_json() const;
    /// Throws IntegrityError if an embedded rig_id does not match the content.
    static FaceRig from_json(std::string_view text);

private:
    FaceRigSpec spec_;
    std::array<double, kLandmarkCount> max_displacement_{};
    std::string id_;
    std::shared_ptr<const SelfImage> static_image_;
};

/// Rendering constants shared by the renderer and the detector.
struct RenderStyle {
    static constexpr float kBlobAmplitude = 0.75f;
    static constexpr float kEdgeAmplitude = 0.06f;
    /// Detection threshold as a fraction of the blob amplitude.
    static constexpr float kDetectThreshold = 0.1f;
};

/// The default 53-landmark, 10-motor face. Coordinates are designed at 96x64 and
/// scaled to other dims (below 96x64 neighbouring windows start to collide); motors beyond the first `motors` fields are dropped.
FaceRig master_rig(ImageDims dims = {96, 64}, int motors = kDefaultMotorCount);

/// Name of landmark k in the default layout (e.g. "mouth_outer_3").
std::string_view landmark_name(int k);

LandmarkSet forward_landmarks(const FaceRig& rig, const MotorCommand& cmd);

/// Deterministic 8-bit-quantized image: skull texture, edges, then blobs.
SelfImage render(const FaceRig& rig, const MotorCommand& cmd);

/// The skull texture alone (no edges, no blobs).
SelfImage render_background(ImageDims dims);

/// Renders arbitrary landmark positions (used for the all-background detector check too).
SelfImage render_landmarks(const FaceRig& rig, const LandmarkSet& landmarks, bool draw_edges = true,
                           bool draw_blobs = true);

const SelfImage& static_self_image(const FaceRig& rig);

/// Windowed centroid detector. Landmarks whose peak response is below the
/// threshold come back at their neutral position with confidence 0.
LandmarkSet detect_landmarks(const FaceRig& rig, const SelfImage& image);

/// Pairs (window owner k, intruder j) where j's blob can enter k's same-channel
/// detection window. Empty for a rig on which the detector is unambiguous.
std::vector<std::pair<int, int>> detection_window_conflicts(const FaceRig& rig);

/// Pseudo-human face: affine-distorted neutral layout and rescaled motor fields.
FaceRig make_subject(const FaceRig& master, std::uint64_t seed, double distortion);

}  // namespace facemimic
