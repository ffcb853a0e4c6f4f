#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "facemimic/image.hpp"

namespace facemimic {

inline constexpr int kLandmarkCount = 53;

struct Point2 {
    double x = 0.0;
    double y = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

struct Landmark {
    double x = 0.0;
    double y = 0.0;
    double confidence = 0.0;
    friend bool operator==(const Landmark&, const Landmark&) = default;
};

/// Exactly 53 landmarks in pixel coordinates, each with a detector confidence.
class LandmarkSet {
public:
    LandmarkSet() = default;
    explicit LandmarkSet(const std::array<Landmark, kLandmarkCount>& points);

    Landmark& operator[](int k) { return points_[static_cast<std::size_t>(k)]; }
    const Landmark& operator[](int k) const { return points_[static_cast<std::size_t>(k)]; }

    std::span<const Landmark, kLandmarkCount> points() const { return points_; }

    /// Throws ArgumentError on non-finite coordinates or confidences outside [0,1].
    void validate() const;

    friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;

private:
    std::array<Landmark, kLandmarkCount> points_{};
};

struct RangeBox {
    Point2 min;
    Point2 max;

    bool degenerate() const { return !(max.x > min.x) || !(max.y > min.y); }
    friend bool operator==(const RangeBox&, const RangeBox&) = default;
};

using LandmarkRanges = std::array<RangeBox, kLandmarkCount>;

/// Per landmark, per axis extremes over the frames. Needs at least two frames.
LandmarkRanges compute_ranges(std::span<const LandmarkSet> frames);

/// Indices of landmarks whose box is degenerate on either axis.
std::vector<int> degenerate_landmarks(const LandmarkRanges& ranges);

struct NormalizeStats {
    int clamped_coordinates = 0;
};

/// Per-landmark affine map from the human coordinate range onto the robot range.
/// Coordinates outside the human range are clamped into it first.
LandmarkSet normalize(const LandmarkSet& src, const LandmarkRanges& human,
                      const LandmarkRanges& robot, NormalizeStats* stats = nullptr);

/// Two-channel rasterization: occupancy (0/1) and detector confidence.
struct LandmarkMask {
    ImageDims dims;
    std::vector<float> occupancy;
    std::vector<float> confidence;
    int clamped = 0;  // landmarks whose pixel had to be clamped into the frame

    float occupancy_at(int y, int x) const { return occupancy[static_cast<std::size_t>(y) * dims.width + x]; }
    float confidence_at(int y, int x) const { return confidence[static_cast<std::size_t>(y) * dims.width + x]; }
    int occupied_pixels() const;
};

LandmarkMask encode_mask(const LandmarkSet& landmarks, ImageDims dims);

/// Mean Euclidean landmark displacement in pixels (sum over 53, divided by 53).
double landmark_distance(const LandmarkSet& a, const LandmarkSet& b);

/// Mean squared difference over all w*h*3 values.
double image_distance(const SelfImage& a, const SelfImage& b);

// CSV: header `index,x,y,confidence`, 53 rows.
std::string landmarks_to_csv(const LandmarkSet& landmarks);
LandmarkSet landmarks_from_csv(std::string_view text);
void write_landmarks_csv(const std::filesystem::path& path, const LandmarkSet& landmarks);
LandmarkSet read_landmarks_csv(const std::filesystem::path& path);

// CSV: header `index,hmin_x,hmin_y,hmax_x,hmax_y`, 53 rows.
std::string ranges_to_csv(const LandmarkRanges& ranges);
LandmarkRanges ranges_from_csv(std::string_view text);
void write_ranges_csv(const std::filesystem::path& path, const LandmarkRanges& ranges);
LandmarkRanges read_ranges_csv(const std::filesystem::path& path);

}  // namespace facemimic
