#include "facemimic/landmarks.hpp"

#include "facemimic/errors.hpp"
#include "facemimic/util/csv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace facemimic {

LandmarkSet::LandmarkSet(const std::array<Landmark, kLandmarkCount>& points) : points_(points) {}

void LandmarkSet::validate() const {
    for (int k = 0; k < kLandmarkCount; ++k) {
        const Landmark& p = points_[static_cast<std::size_t>(k)];
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw ArgumentError("landmark " + std::to_string(k) + " has a non-finite coordinate");
        }
        if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) {
            throw ArgumentError("landmark " + std::to_string(k) + " confidence outside [0,1]");
        }
    }
}

LandmarkRanges compute_ranges(std::span<const LandmarkSet> frames) {
    if (frames.size() < 2) {
        throw ArgumentError("compute_ranges needs at least two frames, got " + std::to_string(frames.size()));
    }
    LandmarkRanges ranges;
    constexpr double inf = std::numeric_limits<double>::infinity();
    for (auto& box : ranges) box = RangeBox{{inf, inf}, {-inf, -inf}};
    for (const LandmarkSet& frame : frames) {
        for (int k = 0; k < kLandmarkCount; ++k) {
            RangeBox& box = ranges[static_cast<std::size_t>(k)];
            box.min.x = std::min(box.min.x, frame[k].x);
            box.min.y = std::min(box.min.y, frame[k].y);
            box.max.x = std::max(box.max.x, frame[k].x);
            box.max.y = std::max(box.max.y, frame[k].y);
        }
    }
    return ranges;
}

std::vector<int> degenerate_landmarks(const LandmarkRanges& ranges) {
    std::vector<int> out;
    for (int k = 0; k < kLandmarkCount; ++k) {
        if (ranges[static_cast<std::size_t>(k)].degenerate()) out.push_back(k);
    }
    return out;
}

namespace {

double map_axis(double v, double hmin, double hmax, double rmin, double rmax, int& clamped) {
    if (v < hmin || v > hmax) {
        ++clamped;
        v = std::clamp(v, hmin, hmax);
    }
    // lerp is exact at both endpoints, which the plain formula is not.
    const double t = (v - hmin) / (hmax - hmin);
    return std::lerp(rmin, rmax, t);
}

}  // namespace

LandmarkSet normalize(const LandmarkSet& src, const LandmarkRanges& human, const LandmarkRanges& robot,
                      NormalizeStats* stats) {
    LandmarkSet out;
    int clamped = 0;
    for (int k = 0; k < kLandmarkCount; ++k) {
        const RangeBox& h = human[static_cast<std::size_t>(k)];
        const RangeBox& r = robot[static_cast<std::size_t>(k)];
        if (h.degenerate()) {
            throw RangeError("degenerate human range for landmark " + std::to_string(k));
        }
        out[k].x = map_axis(src[k].x, h.min.x, h.max.x, r.min.x, r.max.x, clamped);
        out[k].y = map_axis(src[k].y, h.min.y, h.max.y, r.min.y, r.max.y, clamped);
        out[k].confidence = src[k].confidence;
    }
    if (stats != nullptr) stats->clamped_coordinates = clamped;
    return out;
}

int LandmarkMask::occupied_pixels() const {
    return static_cast<int>(std::count_if(occupancy.begin(), occupancy.end(), [](float v) { return v > 0.0f; }));
}

LandmarkMask encode_mask(const LandmarkSet& landmarks, ImageDims dims) {
    LandmarkMask mask;
    mask.dims = dims;
    mask.occupancy.assign(static_cast<std::size_t>(dims.pixels()), 0.0f);
    mask.confidence.assign(static_cast<std::size_t>(dims.pixels()), 0.0f);
    for (int k = 0; k < kLandmarkCount; ++k) {
        const Landmark& p = landmarks[k];
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw ArgumentError("encode_mask: landmark " + std::to_string(k) + " is not finite");
        }
        if (!(p.confidence > 0.0)) continue;
        const double cx = std::clamp(p.x, 0.0, static_cast<double>(dims.width - 1));
        const double cy = std::clamp(p.y, 0.0, static_cast<double>(dims.height - 1));
        if (cx != p.x || cy != p.y) ++mask.clamped;
        const int px = static_cast<int>(std::floor(cx + 0.5));
        const int py = static_cast<int>(std::floor(cy + 0.5));
        const std::size_t i = static_cast<std::size_t>(py) * dims.width + px;
        mask.occupancy[i] = 1.0f;
        mask.confidence[i] = std::max(mask.confidence[i], static_cast<float>(p.confidence));
    }
    return mask;
}

double landmark_distance(const LandmarkSet& a, const LandmarkSet& b) {
    double sum = 0.0;
    for (int k = 0; k < kLandmarkCount; ++k) {
        sum += std::hypot(a[k].x - b[k].x, a[k].y - b[k].y);
    }
    return sum / kLandmarkCount;
}

double image_distance(const SelfImage& a, const SelfImage& b) {
    if (a.dims() != b.dims()) throw DimensionError("image_distance: dimension mismatch");
    const auto va = a.values();
    const auto vb = b.values();
    double sum = 0.0;
    for (std::size_t i = 0; i < va.size(); ++i) {
        const double d = static_cast<double>(va[i]) - static_cast<double>(vb[i]);
        sum += d * d;
    }
    return sum / static_cast<double>(va.size());
}

std::string landmarks_to_csv(const LandmarkSet& landmarks) {
    std::string out = "index,x,y,confidence\n";
    for (int k = 0; k < kLandmarkCount; ++k) {
        out += std::to_string(k) + ',' + format_number(landmarks[k].x) + ',' + format_number(landmarks[k].y) + ',' +
               format_number(landmarks[k].confidence) + '\n';
    }
    return out;
}

namespace {

std::vector<std::vector<std::string_view>> parse_table(std::string_view text, std::string_view header,
                                                       std::size_t columns) {
    const auto lines = split_lines(text);
    if (lines.empty() || lines.front() != header) {
        throw ArgumentError("expected CSV header '" + std::string(header) + "'");
    }
    if (lines.size() != kLandmarkCount + 1) {
        throw ArgumentError("expected " + std::to_string(kLandmarkCount) + " rows, got " +
                            std::to_string(lines.size() - 1));
    }
    std::vector<std::vector<std::string_view>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto fields = split_fields(lines[i]);
        if (fields.size() != columns) throw ArgumentError("malformed CSV row " + std::to_string(i));
        if (parse_integer(fields[0]) != static_cast<long long>(i - 1)) {
            throw ArgumentError("CSV rows out of order at row " + std::to_string(i));
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace

LandmarkSet landmarks_from_csv(std::string_view text) {
    const auto rows = parse_table(text, "index,x,y,confidence", 4);
    LandmarkSet out;
    for (int k = 0; k < kLandmarkCount; ++k) {
        const auto& f = rows[static_cast<std::size_t>(k)];
        out[k] = Landmark{parse_number(f[1]), parse_number(f[2]), parse_number(f[3])};
    }
    out.validate();
    return out;
}

void write_landmarks_csv(const std::filesystem::path& path, const LandmarkSet& landmarks) {
    write_text_file(path, landmarks_to_csv(landmarks));
}

LandmarkSet read_landmarks_csv(const std::filesystem::path& path) {
    return landmarks_from_csv(read_text_file(path));
}

std::string ranges_to_csv(const LandmarkRanges& ranges) {
    std::string out = "index,hmin_x,hmin_y,hmax_x,hmax_y\n";
    for (int k = 0; k < kLandmarkCount; ++k) {
        const RangeBox& r = ranges[static_cast<std::size_t>(k)];
        out += std::to_string(k) + ',' + format_number(r.min.x) + ',' + format_number(r.min.y) + ',' +
               format_number(r.max.x) + ',' + format_number(r.max.y) + '\n';
    }
    return out;
}

LandmarkRanges ranges_from_csv(std::string_view text) {
    const auto rows = parse_table(text, "index,hmin_x,hmin_y,hmax_x,hmax_y", 5);
    LandmarkRanges out;
    for (int k = 0; k < kLandmarkCount; ++k) {
        const auto& f = rows[static_cast<std::size_t>(k)];
        out[static_cast<std::size_t>(k)] =
            RangeBox{{parse_number(f[1]), parse_number(f[2])}, {parse_number(f[3]), parse_number(f[4])}};
    }
    return out;
}

void write_ranges_csv(const std::filesystem::path& path, const LandmarkRanges& ranges) {
    write_text_file(path, ranges_to_csv(ranges));
}

LandmarkRanges read_ranges_csv(const std::filesystem::path& path) {
    return ranges_from_csv(read_text_file(path));
}

}  // namespace facemimic
