#include <doctest.h>

#include "facemimic/errors.hpp"
#include "facemimic/simface.hpp"
#include "facemimic/util/hashing.hpp"

#include <cmath>

using namespace facemimic;

namespace {

MotorCommand random_grid_command(Rng& rng, int motors) {
    std::vector<int> c(static_cast<std::size_t>(motors));
    for (auto& v : c) v = static_cast<int>(uniform_index(rng, kMotorLevels));
    return MotorCommand::from_classes(c);
}

const FaceRig& rig() {
    static const FaceRig r = master_rig();
    return r;
}

}  // namespace

TEST_CASE("motor commands live on the 5-level grid") {
    CHECK_NOTHROW(MotorCommand({0.0, 0.25, 0.5, 0.75, 1.0}));
    CHECK_THROWS_AS(MotorCommand({0.3}), RangeError);
    CHECK_THROWS_AS(MotorCommand({1.25}), RangeError);
    CHECK_THROWS_AS(MotorCommand(std::vector<double>{}), DimensionError);
    const int classes[] = {0, 4, 2};
    const MotorCommand c = MotorCommand::from_classes(classes);
    CHECK(c[1] == 1.0);
    CHECK(c.classes() == std::vector<int>{0, 4, 2});
}

TEST_CASE("forward model examples") {
    const FaceRig& r = rig();
    const int n = r.motor_count();
    CHECK(n == 10);
    const LandmarkSet zero = forward_landmarks(r, MotorCommand::zeros(n));
    for (int k = 0; k < kLandmarkCount; ++k) {
        CHECK(zero[k].x == r.neutral(k).x);
        CHECK(zero[k].y == r.neutral(k).y);
        CHECK(zero[k].confidence == 1.0);
    }
    std::vector<double> one(static_cast<std::size_t>(n), 0.0);
    one[0] = 1.0;
    const LandmarkSet m0 = forward_landmarks(r, MotorCommand(one));
    for (int k = 0; k < kLandmarkCount; ++k) {
        CHECK(m0[k].x == doctest::Approx(r.neutral(k).x + r.displacement(0, k).x).epsilon(1e-12));
        CHECK(m0[k].y == doctest::Approx(r.neutral(k).y + r.displacement(0, k).y).epsilon(1e-12));
    }
    const LandmarkSet all = forward_landmarks(r, MotorCommand::ones(n));
    const LandmarkSet half = forward_landmarks(r, MotorCommand(std::vector<double>(static_cast<std::size_t>(n), 0.5)));
    for (int k = 0; k < kLandmarkCount; ++k) {
        CHECK(std::fabs(half[k].x - 0.5 * (zero[k].x + all[k].x)) < 1e-9);
        CHECK(std::fabs(half[k].y - 0.5 * (zero[k].y + all[k].y)) < 1e-9);
    }
    CHECK_THROWS_AS(forward_landmarks(r, MotorCommand::zeros(3)), DimensionError);
}

TEST_CASE("superposition holds for commands whose sum stays on the grid") {
    const FaceRig& r = rig();
    Rng rng(21);
    for (int t = 0; t < 200; ++t) {
        std::vector<int> a(10), b(10), s(10);
        for (int i = 0; i < 10; ++i) {
            a[i] = static_cast<int>(uniform_index(rng, kMotorLevels));
            b[i] = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(kMotorLevels - a[i])));
            s[i] = a[i] + b[i];
        }
        const auto la = forward_landmarks(r, MotorCommand::from_classes(a));
        const auto lb = forward_landmarks(r, MotorCommand::from_classes(b));
        const auto ls = forward_landmarks(r, MotorCommand::from_classes(s));
        for (int k = 0; k < kLandmarkCount; ++k) {
            CHECK(std::fabs((ls[k].x - r.neutral(k).x) - ((la[k].x - r.neutral(k).x) + (lb[k].x - r.neutral(k).x))) < 1e-9);
            CHECK(std::fabs((ls[k].y - r.neutral(k).y) - ((la[k].y - r.neutral(k).y) + (lb[k].y - r.neutral(k).y))) < 1e-9);
        }
    }
}

TEST_CASE("containment over 1000 sampled grid commands") {
    const FaceRig& r = rig();
    Rng rng(22);
    for (int t = 0; t < 1000; ++t) {
        const auto l = forward_landmarks(r, random_grid_command(rng, 10));
        for (int k = 0; k < kLandmarkCount; ++k) {
            REQUIRE(l[k].x >= 0.0);
            REQUIRE(l[k].y >= 0.0);
            REQUIRE(l[k].x <= r.dims().width - 1);
            REQUIRE(l[k].y <= r.dims().height - 1);
        }
    }
}

TEST_CASE("neutral layout respects the displacement margin") {
    const FaceRig& r = rig();
    const double m = r.max_total_displacement();
    for (int k = 0; k < kLandmarkCount; ++k) {
        CHECK(r.neutral(k).x >= m);
        CHECK(r.neutral(k).y >= m);
        CHECK(r.neutral(k).x <= r.dims().width - 1 - m);
        CHECK(r.neutral(k).y <= r.dims().height - 1 - m);
    }
}

TEST_CASE("render is deterministic and the zero pose is the static image") {
    const FaceRig& r = rig();
    Rng rng(23);
    const MotorCommand a = random_grid_command(rng, 10);
    CHECK(render(r, a) == render(r, a));
    CHECK(static_self_image(r) == render(r, MotorCommand::zeros(10)));
    CHECK(static_self_image(r).to_rgb8() == static_self_image(master_rig()).to_rgb8());
    CHECK(!(static_self_image(r) == render(r, MotorCommand::ones(10))));
    for (float v : render(r, a).values()) {
        REQUIRE(v >= 0.0f);
        REQUIRE(v <= 1.0f);
    }
}

TEST_CASE("blob centre is brighter than a point three sigma from every landmark and edge") {
    const FaceRig& r = rig();
    const SelfImage img = render(r, MotorCommand::zeros(10));
    const SelfImage bg = render_background(r.dims());
    // Blob formula evaluated directly: amplitude at the centre over the local background.
    for (int k = 0; k < kLandmarkCount; ++k) {
        const int x = static_cast<int>(std::lround(r.neutral(k).x));
        const int y = static_cast<int>(std::lround(r.neutral(k).y));
        const double dx = x - r.neutral(k).x, dy = y - r.neutral(k).y;
        const double expected = RenderStyle::kBlobAmplitude *
                                std::exp(-(dx * dx + dy * dy) / (2 * r.blob_sigma() * r.blob_sigma()));
        const int c = r.blob_channel(k);
        CHECK(img.at(c, y, x) - bg.at(c, y, x) >= expected - 0.01);
        CHECK(img.at(c, y, x) >= bg.at(c, y, x) + RenderStyle::kEdgeAmplitude);
    }
}

TEST_CASE("detector matches the forward model") {
    const FaceRig& r = rig();
    Rng rng(24);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const MotorCommand a = random_grid_command(rng, 10);
        const auto want = forward_landmarks(r, a);
        const auto got = detect_landmarks(r, render(r, a));
        for (int k = 0; k < kLandmarkCount; ++k) {
            worst = std::max(worst, std::hypot(got[k].x - want[k].x, got[k].y - want[k].y));
            CHECK(got[k].confidence > 0.0);
        }
    }
    CHECK(worst <= 0.5);
    const auto neutral = detect_landmarks(r, static_self_image(r));
    for (int k = 0; k < kLandmarkCount; ++k) {
        CHECK(std::hypot(neutral[k].x - r.neutral(k).x, neutral[k].y - r.neutral(k).y) <= 0.5);
    }
}

TEST_CASE("detector reports zero confidence on a blob-free image") {
    const FaceRig& r = rig();
    const SelfImage empty = render_landmarks(r, forward_landmarks(r, MotorCommand::zeros(10)), true, false);
    const auto l = detect_landmarks(r, empty);
    for (int k = 0; k < kLandmarkCount; ++k) {
        CHECK(l[k].confidence == 0.0);
        CHECK(l[k].x == r.neutral(k).x);
        CHECK(l[k].y == r.neutral(k).y);
    }
    CHECK_THROWS_AS(detect_landmarks(r, SelfImage({32, 32})), DimensionError);
}

TEST_CASE("the master rig has no ambiguous detection windows") {
    CHECK(detection_window_conflicts(rig()).empty());
}

// Ranges must not hinge on detector jitter along either axis.
TEST_CASE("every master landmark moves on both axes") {
    const FaceRigSpec& spec = rig().spec();
    for (int k = 0; k < kLandmarkCount; ++k) {
        bool moves_x = false, moves_y = false;
        for (const auto& field : spec.displacement_fields) {
            moves_x = moves_x || std::abs(field[static_cast<std::size_t>(k)].x) >= 0.25;
            moves_y = moves_y || std::abs(field[static_cast<std::size_t>(k)].y) >= 0.25;
        }
        INFO(landmark_name(k));
        CHECK(moves_x);
        CHECK(moves_y);
    }
}

TEST_CASE("rig json round trip and tamper detection") {
    const FaceRig& r = rig();
    const FaceRig back = FaceRig::from_json(r.to_json());
    CHECK(back.id() == r.id());
    CHECK(back.canonical_json() == r.canonical_json());
    CHECK(r.id() == sha256_hex(r.canonical_json()));
    std::string doc = r.to_json();
    const auto pos = doc.find("\"blob_sigma\"");
    REQUIRE(pos != std::string::npos);
    const auto digit = doc.find_first_of("123456789", pos);
    doc[digit] = doc[digit] == '9' ? '8' : static_cast<char>(doc[digit] + 1);
    CHECK_THROWS_AS(FaceRig::from_json(doc), IntegrityError);
    CHECK_THROWS_AS(FaceRig::from_json("{not json"), IntegrityError);
}

TEST_CASE("rigs scale to other dims and motor counts") {
    const FaceRig small = master_rig({48, 32}, 4);
    CHECK(small.motor_count() == 4);
    CHECK(small.dims() == ImageDims{48, 32});
    CHECK(small.id() != rig().id());
    CHECK_THROWS_AS(master_rig({96, 64}, 11), RangeError);
}

TEST_CASE("make_subject") {
    const FaceRig& r = rig();
    const FaceRig s0 = make_subject(r, 5, 0.0);
    CHECK(s0.spec().neutral == r.spec().neutral);
    CHECK(s0.spec().displacement_fields == r.spec().displacement_fields);
    CHECK(s0.id() != r.id());
    CHECK(make_subject(r, 1, 0.5).id() == make_subject(r, 1, 0.5).id());
    CHECK(make_subject(r, 1, 0.5).spec().neutral != make_subject(r, 2, 0.5).spec().neutral);
    CHECK_THROWS_AS(make_subject(r, 1, 1.5), RangeError);
    CHECK_THROWS_AS(make_subject(r, 1, -0.1), RangeError);
}

TEST_CASE("subject displacement fields stay within the distortion band") {
    const FaceRig& r = rig();
    const double d = 0.5;
    const FaceRig s = make_subject(r, 3, d);
    for (int n = 0; n < r.motor_count(); ++n) {
        double master_norm = 0.0, subject_norm = 0.0;
        for (int k = 0; k < kLandmarkCount; ++k) {
            master_norm += std::hypot(r.displacement(n, k).x, r.displacement(n, k).y);
            subject_norm += std::hypot(s.displacement(n, k).x, s.displacement(n, k).y);
        }
        if (master_norm == 0.0) continue;
        // Field factor in [1-d/2, 1+d/2], layout scale 1 +/- 0.3d, shear <= 0.1d, framing zoom.
        const double ratio = subject_norm / master_norm;
        CHECK(ratio > 0.3);
        CHECK(ratio < 2.5);
    }
    for (int k = 0; k < kLandmarkCount; ++k) {
        CHECK(s.neutral(k).x >= s.max_displacement(k));
        CHECK(s.neutral(k).x <= s.dims().width - 1 - s.max_displacement(k));
    }
}

TEST_CASE("landmark names") {
    CHECK(landmark_name(0) == "brow_left_0");
    CHECK(landmark_name(kLandmarkCount - 1) == "pupil_right");
    CHECK_THROWS_AS(landmark_name(kLandmarkCount), RangeError);
}
