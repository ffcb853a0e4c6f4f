#include "facemimic/simface.hpp"

#include "facemimic/errors.hpp"
#include "facemimic/util/hashing.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace facemimic {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// MotorCommand

namespace {

int grid_class(double v) {
    for (int i = 0; i < kMotorLevels; ++i) {
        if (v == i * kMotorStep) return i;
    }
    return -1;
}

}  // namespace

MotorCommand::MotorCommand(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DimensionError("motor command needs at least one motor");
    for (std::size_t n = 0; n < values_.size(); ++n) {
        if (grid_class(values_[n]) < 0) {
            throw RangeError("motor " + std::to_string(n) + " value " + std::to_string(values_[n]) +
                             " is not on the 0.25 grid");
        }
    }
}

MotorCommand MotorCommand::zeros(int motors) {
    return MotorCommand(std::vector<double>(static_cast<std::size_t>(motors), 0.0));
}

MotorCommand MotorCommand::ones(int motors) {
    return MotorCommand(std::vector<double>(static_cast<std::size_t>(motors), 1.0));
}

MotorCommand MotorCommand::from_classes(std::span<const int> classes) {
    std::vector<double> values;
    values.reserve(classes.size());
    for (int c : classes) {
        if (c < 0 || c >= kMotorLevels) throw RangeError("motor class " + std::to_string(c) + " outside 0..4");
        values.push_back(c * kMotorStep);
    }
    return MotorCommand(std::move(values));
}

std::vector<int> MotorCommand::classes() const {
    std::vector<int> out;
    out.reserve(values_.size());
    for (double v : values_) out.push_back(grid_class(v));
    return out;
}

// ---------------------------------------------------------------------------
// Rig construction

namespace {

double reachable_max_norm(const FaceRigSpec& spec, int k) {
    // Maximum over the vertices of the command box.
    std::vector<Point2> active;
    for (const auto& field : spec.displacement_fields) {
        const Point2& d = field[static_cast<std::size_t>(k)];
        if (d.x != 0.0 || d.y != 0.0) active.push_back(d);
    }
    if (active.size() > 20) {
        double bound = 0.0;
        for (const auto& d : active) bound += std::hypot(d.x, d.y);
        return bound;
    }
    double best = 0.0;
    const std::uint32_t subsets = 1u << active.size();
    for (std::uint32_t mask = 1; mask < subsets; ++mask) {
        Point2 sum;
        for (std::size_t i = 0; i < active.size(); ++i) {
            if (mask & (1u << i)) {
                sum.x += active[i].x;
                sum.y += active[i].y;
            }
        }
        best = std::max(best, std::hypot(sum.x, sum.y));
    }
    return best;
}

void validate_spec(const FaceRigSpec& spec, const std::array<double, kLandmarkCount>& max_disp) {
    if (spec.dims.width <= 0 || spec.dims.height <= 0) throw DimensionError("rig image dims must be positive");
    if (spec.displacement_fields.empty()) throw ArgumentError("rig needs at least one displacement field");
    if (!(spec.blob_sigma > 0.0) || !std::isfinite(spec.blob_sigma)) throw ArgumentError("blob_sigma must be positive");
    for (const auto& field : spec.displacement_fields) {
        for (const auto& d : field) {
            if (!std::isfinite(d.x) || !std::isfinite(d.y)) throw ArgumentError("displacement field is not finite");
        }
    }
    for (int c : spec.blob_channel) {
        if (c < 0 || c >= SelfImage::kChannels) throw ArgumentError("blob channel outside 0..2");
    }
    for (const auto& line : spec.edge_topology) {
        if (line.size() < 2) throw ArgumentError("edge polyline needs two or more landmarks");
        for (int k : line) {
            if (k < 0 || k >= kLandmarkCount) throw ArgumentError("edge references landmark out of range");
        }
    }
    const double margin = *std::max_element(max_disp.begin(), max_disp.end());
    const double xmax = spec.dims.width - 1 - margin;
    const double ymax = spec.dims.height - 1 - margin;
    for (int k = 0; k < kLandmarkCount; ++k) {
        const Point2& p = spec.neutral[static_cast<std::size_t>(k)];
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || p.x < margin || p.x > xmax || p.y < margin || p.y > ymax) {
            throw RangeError("neutral landmark " + std::to_string(k) + " violates the displacement margin");
        }
    }
}

json point_json(const Point2& p) { return json::array({p.x, p.y}); }

json layout_json(const LandmarkLayout& layout) {
    json arr = json::array();
    for (const auto& p : layout) arr.push_back(point_json(p));
    return arr;
}

LandmarkLayout layout_from_json(const json& arr) {
    if (!arr.is_array() || arr.size() != kLandmarkCount) throw ArgumentError("rig layout must have 53 points");
    LandmarkLayout out{};
    for (std::size_t k = 0; k < kLandmarkCount; ++k) {
        out[k] = Point2{arr[k].at(0).get<double>(), arr[k].at(1).get<double>()};
    }
    return out;
}

json spec_json(const FaceRigSpec& spec) {
    json fields = json::array();
    for (const auto& f : spec.displacement_fields) fields.push_back(layout_json(f));
    json doc;
    doc["format"] = "facemimic-rig/1";
    doc["image_dims"] = {{"width", spec.dims.width}, {"height", spec.dims.height}};
    doc["blob_sigma"] = spec.blob_sigma;
    doc["neutral_layout"] = layout_json(spec.neutral);
    doc["displacement_fields"] = fields;
    doc["edge_topology"] = spec.edge_topology;
    doc["blob_channel"] = spec.blob_channel;
    doc["origin"] = {{"kind", spec.origin.kind}, {"seed", spec.origin.seed}, {"distortion", spec.origin.distortion}};
    return doc;
}

}  // namespace

FaceRig::FaceRig(FaceRigSpec spec) : spec_(std::move(spec)) {
    for (int k = 0; k < kLandmarkCount; ++k) max_displacement_[static_cast<std::size_t>(k)] = reachable_max_norm(spec_, k);
    validate_spec(spec_, max_displacement_);
    id_ = sha256_hex(canonical_json());
    auto img = std::make_shared<SelfImage>(render(*this, MotorCommand::zeros(motor_count())));
    static_image_ = std::move(img);
}

double FaceRig::max_total_displacement() const {
    return *std::max_element(max_displacement_.begin(), max_displacement_.end());
}

std::string FaceRig::canonical_json() const { return spec_json(spec_).dump(); }

std::string FaceRig::to_json() const {
    json doc = spec_json(spec_);
    doc["rig_id"] = id_;
    return doc.dump(1);
}

FaceRig FaceRig::from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw IntegrityError(std::string("rig document is not valid JSON: ") + e.what());
    }
    try {
        if (doc.at("format") != "facemimic-rig/1") throw ArgumentError("unknown rig format");
        FaceRigSpec spec;
        spec.dims = {doc.at("image_dims").at("width").get<int>(), doc.at("image_dims").at("height").get<int>()};
        spec.blob_sigma = doc.at("blob_sigma").get<double>();
        spec.neutral = layout_from_json(doc.at("neutral_layout"));
        for (const auto& f : doc.at("displacement_fields")) spec.displacement_fields.push_back(layout_from_json(f));
        spec.edge_topology = doc.at("edge_topology").get<std::vector<std::vector<int>>>();
        spec.blob_channel = doc.at("blob_channel").get<std::array<int, kLandmarkCount>>();
        const auto& o = doc.at("origin");
        spec.origin = {o.at("kind").get<std::string>(), o.at("seed").get<std::uint64_t>(),
                       o.at("distortion").get<double>()};
        FaceRig rig(std::move(spec));
        if (doc.contains("rig_id") && doc["rig_id"].get<std::string>() != rig.id()) {
            throw IntegrityError("rig_id does not match rig content");
        }
        return rig;
    } catch (const json::exception& e) {
        throw IntegrityError(std::string("malformed rig document: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Default layout

namespace {

struct NamedPoint {
    const char* name;
    double x, y;
    int channel;
};

// Designed at 96x64. Channels are a 3-colouring of the window-conflict graph.
constexpr std::array<NamedPoint, kLandmarkCount> kLayout = {{
    {"brow_left_0", 10, 9, 0},   {"brow_left_1", 18, 9, 0},   {"brow_left_2", 26, 9, 0},
    {"brow_left_3", 34, 9, 0},   {"brow_left_4", 42, 9, 1},   {"brow_right_0", 54, 9, 1},
    {"brow_right_1", 62, 9, 0},  {"brow_right_2", 70, 9, 0},  {"brow_right_3", 78, 9, 0},
    {"brow_right_4", 86, 9, 0},  {"eye_left_corner_0", 15, 22, 0}, {"eye_left_upper_0", 21, 17, 1},
    {"eye_left_upper_1", 31, 17, 1}, {"eye_left_corner_1", 37, 22, 0}, {"eye_left_lower_1", 31, 27, 1},
    {"eye_left_lower_0", 21, 27, 1}, {"eye_right_corner_0", 59, 22, 0}, {"eye_right_upper_0", 65, 17, 1},
    {"eye_right_upper_1", 75, 17, 1}, {"eye_right_corner_1", 81, 22, 0}, {"eye_right_lower_1", 75, 27, 1},
    {"eye_right_lower_0", 65, 27, 1}, {"nose_bridge_0", 48, 15, 0}, {"nose_bridge_1", 48, 21, 1},
    {"nose_bridge_2", 48, 27, 2}, {"nose_bridge_3", 48, 33, 0}, {"nose_base_0", 38, 37, 0},
    {"nose_base_1", 43, 38, 1},  {"nose_base_2", 48, 38, 2},  {"nose_base_3", 53, 38, 1},
    {"nose_base_4", 58, 37, 0},  {"mouth_outer_0", 24, 48, 2}, {"mouth_outer_1", 30, 44, 1},
    {"mouth_outer_2", 39, 43, 2}, {"mouth_outer_3", 48, 43, 0}, {"mouth_outer_4", 57, 43, 2},
    {"mouth_outer_5", 66, 44, 1}, {"mouth_outer_6", 72, 48, 2}, {"mouth_outer_7", 66, 53, 1},
    {"mouth_outer_8", 57, 55, 2}, {"mouth_outer_9", 48, 55, 0}, {"mouth_outer_10", 39, 55, 2},
    {"mouth_outer_11", 30, 53, 1}, {"mouth_inner_0", 32, 48, 0}, {"mouth_inner_1", 40, 47, 0},
    {"mouth_inner_2", 48, 47, 2}, {"mouth_inner_3", 56, 47, 0}, {"mouth_inner_4", 64, 48, 0},
    {"mouth_inner_5", 56, 50, 1}, {"mouth_inner_6", 48, 50, 1}, {"mouth_inner_7", 40, 50, 1},
    {"pupil_left", 26, 22, 0},   {"pupil_right", 70, 22, 0},
}};

struct MotorEffect {
    int motor;
    std::vector<const char*> landmarks;
    double dx;  // toward the face midline is positive on the left half
    double dy;
    bool mirrored = true;
};

// Ten muscle pairs; dx is mirrored for landmarks right of the midline unless the entry is a
// lateral (one-sided) pull. Every landmark moves on both axes.
const std::vector<MotorEffect>& motor_effects() {
    static const std::vector<MotorEffect> effects = {
        // 0: inner brow raise
        {0, {"brow_left_3", "brow_left_4", "brow_right_0", "brow_right_1"}, 0.6, -4.8},
        // 1: outer brow raise
        {1, {"brow_left_0", "brow_left_1", "brow_left_2", "brow_right_2", "brow_right_3", "brow_right_4"}, -0.6, -4.2},
        // 2: brow lowerer
        {2, {"brow_left_3", "brow_left_4", "brow_right_0", "brow_right_1"}, 2.4, 3.0},
        {2, {"eye_left_corner_1", "eye_right_corner_0"}, 1.2, 1.2},
        {2, {"nose_bridge_0", "nose_bridge_1"}, 0.0, 1.8},
        {2, {"pupil_left", "pupil_right"}, 0.6, 1.2},
        // 3: lid tightener
        {3, {"eye_left_upper_0", "eye_left_upper_1", "eye_right_upper_0", "eye_right_upper_1"}, 0.6, 3.6},
        {3, {"eye_left_lower_0", "eye_left_lower_1", "eye_right_lower_0", "eye_right_lower_1"}, 0.6, -2.4},
        {3, {"eye_left_corner_0", "eye_right_corner_1"}, 1.2, 0.6},
        // 4: nose wrinkler
        {4, {"nose_base_0", "nose_base_1", "nose_base_2", "nose_base_3", "nose_base_4"}, 0.0, -3.0},
        {4, {"nose_base_0", "nose_base_4"}, -1.8, 0.0},
        {4, {"nose_bridge_2", "nose_bridge_3"}, 0.0, -1.8},
        {4, {"nose_bridge_0", "nose_bridge_1", "nose_bridge_2", "nose_bridge_3", "nose_base_1", "nose_base_2",
             "nose_base_3"},
         0.6, 0.0, false},
        // 5: smile
        {5, {"mouth_outer_0", "mouth_outer_6"}, -3.6, -3.6},
        {5, {"mouth_outer_1", "mouth_outer_5"}, -2.4, -2.4},
        {5, {"mouth_inner_0", "mouth_inner_4"}, -2.4, -2.4},
        {5, {"eye_left_lower_0", "eye_left_lower_1", "eye_right_lower_0", "eye_right_lower_1"}, 0.0, -1.2},
        {5, {"pupil_left", "pupil_right"}, 0.0, -0.6},
        // 6: lip corner depressor
        {6, {"mouth_outer_0", "mouth_outer_6"}, 0.0, 3.6},
        {6, {"mouth_outer_11", "mouth_outer_7"}, 0.0, 2.4},
        {6, {"mouth_inner_0", "mouth_inner_4"}, 0.0, 2.4},
        // 7: jaw drop
        {7, {"mouth_outer_8", "mouth_outer_9", "mouth_outer_10"}, 0.0, 4.8},
        {7, {"mouth_inner_5", "mouth_inner_6", "mouth_inner_7"}, 0.0, 4.8},
        {7, {"mouth_outer_7", "mouth_outer_11"}, 0.0, 3.0},
        {7, {"mouth_outer_7", "mouth_outer_11"}, -0.6, 0.0},
        {7, {"mouth_outer_8", "mouth_outer_9", "mouth_outer_10"}, 0.6, 0.0, false},
        {7, {"mouth_inner_5", "mouth_inner_6", "mouth_inner_7"}, 0.3, 0.0, false},
        // 8: upper lip raiser
        {8, {"mouth_outer_2", "mouth_outer_3", "mouth_outer_4"}, 0.0, -3.6},
        {8, {"mouth_inner_1", "mouth_inner_2", "mouth_inner_3"}, 0.0, -3.0},
        {8, {"mouth_outer_2", "mouth_outer_3", "mouth_outer_4"}, -0.6, 0.0, false},
        {8, {"mouth_inner_1", "mouth_inner_2", "mouth_inner_3"}, -0.3, 0.0, false},
        // 9: lip pucker
        {9, {"mouth_outer_0", "mouth_outer_6"}, 3.6, 0.0},
        {9, {"mouth_outer_1", "mouth_outer_5", "mouth_outer_11", "mouth_outer_7"}, 2.4, 0.0},
        {9, {"mouth_inner_0", "mouth_inner_4"}, 2.4, 0.0},
    };
    return effects;
}

int index_of(std::string_view name) {
    for (int k = 0; k < kLandmarkCount; ++k) {
        if (name == kLayout[static_cast<std::size_t>(k)].name) return k;
    }
    throw ArgumentError("unknown landmark name " + std::string(name));
}

std::vector<int> index_range(int first, int count, bool closed) {
    std::vector<int> out(static_cast<std::size_t>(count));
    std::iota(out.begin(), out.end(), first);
    if (closed) out.push_back(first);
    return out;
}

constexpr double kDesignWidth = 96.0;
constexpr double kDesignHeight = 64.0;
constexpr double kDesignMidline = 48.0;
constexpr double kDesignSigma = 0.5;

}  // namespace

std::string_view landmark_name(int k) {
    if (k < 0 || k >= kLandmarkCount) throw RangeError("landmark index out of range");
    return kLayout[static_cast<std::size_t>(k)].name;
}

FaceRig master_rig(ImageDims dims, int motors) {
    if (motors < 1 || motors > kDefaultMotorCount) {
        throw RangeError("default rig supports 1.." + std::to_string(kDefaultMotorCount) + " motors");
    }
    const double sx = dims.width / kDesignWidth;
    const double sy = dims.height / kDesignHeight;
    FaceRigSpec spec;
    spec.dims = dims;
    spec.blob_sigma = kDesignSigma * std::min(sx, sy);
    for (int k = 0; k < kLandmarkCount; ++k) {
        const auto& p = kLayout[static_cast<std::size_t>(k)];
        spec.neutral[static_cast<std::size_t>(k)] = Point2{p.x * sx, p.y * sy};
        spec.blob_channel[static_cast<std::size_t>(k)] = p.channel;
    }
    spec.displacement_fields.assign(static_cast<std::size_t>(motors), LandmarkLayout{});
    for (const MotorEffect& e : motor_effects()) {
        if (e.motor >= motors) continue;
        for (const char* name : e.landmarks) {
            const int k = index_of(name);
            const double x = kLayout[static_cast<std::size_t>(k)].x;
            const double mirror =
                !e.mirrored ? 1.0 : (x > kDesignMidline ? -1.0 : (x == kDesignMidline ? 0.0 : 1.0));
            Point2& d = spec.displacement_fields[static_cast<std::size_t>(e.motor)][static_cast<std::size_t>(k)];
            d.x += e.dx * mirror * sx;
            d.y += e.dy * sy;
        }
    }
    spec.edge_topology = {
        index_range(0, 5, false),   // left brow
        index_range(5, 5, false),   // right brow
        index_range(10, 6, true),   // left eye
        index_range(16, 6, true),   // right eye
        index_range(22, 4, false),  // nose bridge
        index_range(26, 5, false),  // nose base
        index_range(31, 12, true),  // outer lips
        index_range(43, 8, true),   // inner lips
    };
    return FaceRig(std::move(spec));
}

// ---------------------------------------------------------------------------
// Forward model and rendering

LandmarkSet forward_landmarks(const FaceRig& rig, const MotorCommand& cmd) {
    if (cmd.size() != rig.motor_count()) {
        throw DimensionError("command has " + std::to_string(cmd.size()) + " motors, rig has " +
                             std::to_string(rig.motor_count()));
    }
    LandmarkSet out;
    for (int k = 0; k < kLandmarkCount; ++k) {
        Point2 p = rig.neutral(k);
        for (int n = 0; n < cmd.size(); ++n) {
            const Point2& d = rig.displacement(n, k);
            p.x += cmd[n] * d.x;
            p.y += cmd[n] * d.y;
        }
        out[k] = Landmark{p.x, p.y, 1.0};
    }
    return out;
}

SelfImage render_background(ImageDims dims) {
    SelfImage img(dims);
    constexpr std::array<float, 3> kBase = {0.05f, 0.05f, 0.06f};
    constexpr std::array<float, 3> kTint = {0.13f, 0.10f, 0.08f};
    const double cx = 0.5 * (dims.width - 1);
    const double cy = 0.5 * (dims.height - 1);
    for (int y = 0; y < dims.height; ++y) {
        for (int x = 0; x < dims.width; ++x) {
            const double u = (x - cx) / (0.47 * dims.width);
            const double v = (y - cy) / (0.52 * dims.height);
            const double r = std::sqrt(u * u + v * v);
            const double skull = std::clamp((1.05 - r) / 0.15, 0.0, 1.0);
            const double grain = 0.015 * std::sin(0.9 * x + 0.3 * y) * std::cos(0.55 * y - 0.2 * x);
            for (int c = 0; c < 3; ++c) {
                img.at(c, y, x) = static_cast<float>(kBase[static_cast<std::size_t>(c)] +
                                                     skull * (kTint[static_cast<std::size_t>(c)] + grain));
            }
        }
    }
    return img;
}

namespace {

const SelfImage& cached_background(ImageDims dims) {
    thread_local std::vector<std::pair<ImageDims, SelfImage>> cache;
    for (const auto& [d, img] : cache) {
        if (d == dims) return img;
    }
    cache.emplace_back(dims, render_background(dims));
    return cache.back().second;
}

double segment_distance(double px, double py, const Landmark& a, const Landmark& b) {
    const double vx = b.x - a.x;
    const double vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (a.x + t * vx), py - (a.y + t * vy));
}

}  // namespace

SelfImage render_landmarks(const FaceRig& rig, const LandmarkSet& landmarks, bool draw_edges, bool draw_blobs) {
    const ImageDims dims = rig.dims();
    SelfImage img = cached_background(dims);

    if (draw_edges) {
        std::vector<float> coverage(static_cast<std::size_t>(dims.pixels()), 0.0f);
        for (const auto& line : rig.spec().edge_topology) {
            for (std::size_t i = 0; i + 1 < line.size(); ++i) {
                const Landmark& a = landmarks[line[i]];
                const Landmark& b = landmarks[line[i + 1]];
                const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - 1.0)));
                const int x1 = std::min(dims.width - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + 1.0)));
                const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - 1.0)));
                const int y1 = std::min(dims.height - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + 1.0)));
                for (int y = y0; y <= y1; ++y) {
                    for (int x = x0; x <= x1; ++x) {
                        const double cov = std::clamp(1.0 - segment_distance(x, y, a, b), 0.0, 1.0);
                        float& slot = coverage[static_cast<std::size_t>(y) * dims.width + x];
                        slot = std::max(slot, static_cast<float>(cov));
                    }
                }
            }
        }
        for (int c = 0; c < SelfImage::kChannels; ++c) {
            auto ch = img.channel(c);
            for (std::size_t i = 0; i < ch.size(); ++i) ch[i] += RenderStyle::kEdgeAmplitude * coverage[i];
        }
    }

    if (draw_blobs) {
        const double sigma = rig.blob_sigma();
        const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
        const double reach = 4.0 * sigma;
        for (int k = 0; k < kLandmarkCount; ++k) {
            const Landmark& p = landmarks[k];
            const int c = rig.blob_channel(k);
            const int x0 = std::max(0, static_cast<int>(std::ceil(p.x - reach)));
            const int x1 = std::min(dims.width - 1, static_cast<int>(std::floor(p.x + reach)));
            const int y0 = std::max(0, static_cast<int>(std::ceil(p.y - reach)));
            const int y1 = std::min(dims.height - 1, static_cast<int>(std::floor(p.y + reach)));
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    const double r2 = (x - p.x) * (x - p.x) + (y - p.y) * (y - p.y);
                    img.at(c, y, x) += static_cast<float>(RenderStyle::kBlobAmplitude * std::exp(-r2 * inv2s2));
                }
            }
        }
    }

    img.quantize_8bit();
    return img;
}

SelfImage render(const FaceRig& rig, const MotorCommand& cmd) {
    return render_landmarks(rig, forward_landmarks(rig, cmd));
}

const SelfImage& static_self_image(const FaceRig& rig) { return rig.static_image(); }

// ---------------------------------------------------------------------------
// Detection

namespace {

struct Window {
    int x0, x1, y0, y1;
};

Window detection_window(const FaceRig& rig, int k) {
    const double half = rig.max_displacement(k) + 3.0 * rig.blob_sigma();
    const Point2& n = rig.neutral(k);
    const ImageDims d = rig.dims();
    return Window{std::max(0, static_cast<int>(std::ceil(n.x - half))),
                  std::min(d.width - 1, static_cast<int>(std::floor(n.x + half))),
                  std::max(0, static_cast<int>(std::ceil(n.y - half))),
                  std::min(d.height - 1, static_cast<int>(std::floor(n.y + half)))};
}

}  // namespace

LandmarkSet detect_landmarks(const FaceRig& rig, const SelfImage& image) {
    if (image.dims() != rig.dims()) throw DimensionError("detect_landmarks: image dims do not match rig");
    const SelfImage& bg = cached_background(rig.dims());
    const double amplitude = RenderStyle::kBlobAmplitude;
    const double floor = RenderStyle::kDetectThreshold * amplitude;
    LandmarkSet out;
    for (int k = 0; k < kLandmarkCount; ++k) {
        const int c = rig.blob_channel(k);
        const Window w = detection_window(rig, k);
        double peak = 0.0;
        double sum = 0.0, sx = 0.0, sy = 0.0;
        for (int y = w.y0; y <= w.y1; ++y) {
            for (int x = w.x0; x <= w.x1; ++x) {
                const double response = static_cast<double>(image.at(c, y, x)) - bg.at(c, y, x);
                peak = std::max(peak, response);
                const double weight = response - floor;
                if (weight > 0.0) {
                    sum += weight;
                    sx += weight * x;
                    sy += weight * y;
                }
            }
        }
        const double confidence = std::min(1.0, peak / amplitude);
        if (confidence < RenderStyle::kDetectThreshold || sum <= 0.0) {
            out[k] = Landmark{rig.neutral(k).x, rig.neutral(k).y, 0.0};
        } else {
            out[k] = Landmark{sx / sum, sy / sum, confidence};
        }
    }
    return out;
}

namespace {

// conflict[k][j]: blob j can enter landmark k's detection window, ignoring channels.
using ConflictMatrix = std::array<std::array<bool, kLandmarkCount>, kLandmarkCount>;

ConflictMatrix window_overlaps(const FaceRigSpec& spec, const std::array<double, kLandmarkCount>& max_disp) {
    const double sigma = spec.blob_sigma;
    // Reachable box of each blob, padded to where it drops below the response floor.
    const double footprint = sigma * std::sqrt(2.0 * std::log(1.0 / RenderStyle::kDetectThreshold));
    std::array<Point2, kLandmarkCount> lo{}, hi{};
    for (std::size_t k = 0; k < kLandmarkCount; ++k) {
        Point2 l = spec.neutral[k], h = spec.neutral[k];
        for (const auto& field : spec.displacement_fields) {
            const Point2& d = field[k];
            (d.x < 0 ? l.x : h.x) += d.x;
            (d.y < 0 ? l.y : h.y) += d.y;
        }
        lo[k] = {l.x - footprint, l.y - footprint};
        hi[k] = {h.x + footprint, h.y + footprint};
    }
    ConflictMatrix out{};
    for (std::size_t k = 0; k < kLandmarkCount; ++k) {
        const double half = max_disp[k] + 3.0 * sigma;
        const Point2& n = spec.neutral[k];
        for (std::size_t j = 0; j < kLandmarkCount; ++j) {
            if (j == k) continue;
            out[k][j] = lo[j].x < n.x + half && hi[j].x > n.x - half && lo[j].y < n.y + half && hi[j].y > n.y - half;
        }
    }
    return out;
}

}  // namespace

std::vector<std::pair<int, int>> detection_window_conflicts(const FaceRig& rig) {
    std::array<double, kLandmarkCount> max_disp{};
    for (int k = 0; k < kLandmarkCount; ++k) max_disp[static_cast<std::size_t>(k)] = rig.max_displacement(k);
    const ConflictMatrix adj = window_overlaps(rig.spec(), max_disp);
    std::vector<std::pair<int, int>> conflicts;
    for (int k = 0; k < kLandmarkCount; ++k) {
        for (int j = 0; j < kLandmarkCount; ++j) {
            if (adj[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)] && rig.blob_channel(j) == rig.blob_channel(k)) {
                conflicts.emplace_back(k, j);
            }
        }
    }
    return conflicts;
}

// ---------------------------------------------------------------------------
// Pseudo-human subjects

FaceRig make_subject(const FaceRig& master, std::uint64_t seed, double distortion) {
    if (!(distortion >= 0.0 && distortion <= 1.0)) {
        throw RangeError("distortion must be in [0,1], got " + std::to_string(distortion));
    }
    Rng rng(derive_seed(seed, 0x5B1EC7));
    const double scale_x = 1.0 + 0.3 * distortion * uniform_symmetric(rng);
    const double scale_y = 1.0 + 0.3 * distortion * uniform_symmetric(rng);
    const double shear = 0.1 * distortion * uniform_symmetric(rng);
    const double shift_x = 4.0 * distortion * uniform_symmetric(rng);
    const double shift_y = 4.0 * distortion * uniform_symmetric(rng);

    FaceRigSpec spec = master.spec();
    spec.origin = RigOrigin{"subject", seed, distortion};

    Point2 centroid;
    for (const auto& p : spec.neutral) {
        centroid.x += p.x / kLandmarkCount;
        centroid.y += p.y / kLandmarkCount;
    }
    for (auto& p : spec.neutral) {
        const double dx = p.x - centroid.x;
        const double dy = p.y - centroid.y;
        p = Point2{centroid.x + scale_x * dx + shear * dy, centroid.y + scale_y * dy};
    }
    for (auto& field : spec.displacement_fields) {
        const double factor = 1.0 + 0.5 * distortion * uniform_symmetric(rng);
        for (auto& d : field) d = Point2{d.x * factor, d.y * factor};
    }
    if (distortion == 0.0) return FaceRig(std::move(spec));

    // Zoom out if the distorted face breaks the margin, then shift within the slack.
    std::array<double, kLandmarkCount> reach{};
    for (int k = 0; k < kLandmarkCount; ++k) reach[static_cast<std::size_t>(k)] = reachable_max_norm(spec, k);
    const double margin = *std::max_element(reach.begin(), reach.end()) + 0.5;
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& p : spec.neutral) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    const double avail_w = spec.dims.width - 1.0;
    const double avail_h = spec.dims.height - 1.0;
    const double zoom = std::min({1.0, avail_w / (xmax - xmin + 2.0 * margin), avail_h / (ymax - ymin + 2.0 * margin)});
    const Point2 box_centre{0.5 * (xmin + xmax), 0.5 * (ymin + ymax)};
    const Point2 frame_centre{0.5 * avail_w, 0.5 * avail_h};
    const double half_w = 0.5 * zoom * (xmax - xmin) + zoom * margin;
    const double half_h = 0.5 * zoom * (ymax - ymin) + zoom * margin;
    const double slack_x = std::max(0.0, 0.5 * avail_w - half_w);
    const double slack_y = std::max(0.0, 0.5 * avail_h - half_h);
    const double tx = std::clamp(shift_x, -slack_x, slack_x);
    const double ty = std::clamp(shift_y, -slack_y, slack_y);
    for (auto& p : spec.neutral) {
        p = Point2{frame_centre.x + tx + zoom * (p.x - box_centre.x), frame_centre.y + ty + zoom * (p.y - box_centre.y)};
    }
    for (auto& field : spec.displacement_fields) {
        for (auto& d : field) d = Point2{d.x * zoom, d.y * zoom};
    }
    return FaceRig(std::move(spec));
}

}  // namespace facemimic
