#include <doctest.h>

#include "facemimic/errors.hpp"
#include "facemimic/landmarks.hpp"
#include "facemimic/util/hashing.hpp"

#include <cmath>

using namespace facemimic;

namespace {

LandmarkSet random_set(Rng& rng, double w = 96, double h = 64) {
    LandmarkSet s;
    for (int k = 0; k < kLandmarkCount; ++k) {
        s[k] = Landmark{uniform01(rng) * (w - 1), uniform01(rng) * (h - 1), uniform01(rng)};
    }
    return s;
}

LandmarkRanges random_ranges(Rng& rng) {
    LandmarkRanges r;
    for (auto& b : r) {
        b.min = {uniform01(rng) * 50, uniform01(rng) * 30};
        b.max = {b.min.x + 0.5 + uniform01(rng) * 40, b.min.y + 0.5 + uniform01(rng) * 30};
    }
    return r;
}

}  // namespace

TEST_CASE("compute_ranges two-point extremes") {
    LandmarkSet a, b;
    b[4] = Landmark{10, 4, 1};
    const LandmarkSet frames[] = {a, b};
    const auto r = compute_ranges(frames);
    CHECK(r[4].min == Point2{0, 0});
    CHECK(r[4].max == Point2{10, 4});
    CHECK(r[5].degenerate());
}

TEST_CASE("compute_ranges of a repeated frame is degenerate everywhere") {
    Rng rng(1);
    const LandmarkSet s = random_set(rng);
    const LandmarkSet frames[] = {s, s};
    CHECK(degenerate_landmarks(compute_ranges(frames)).size() == kLandmarkCount);
    CHECK_THROWS_AS(compute_ranges(std::span<const LandmarkSet>(frames, 1)), ArgumentError);
}

TEST_CASE("ranges over a superset contain ranges over a subset") {
    Rng rng(2);
    std::vector<LandmarkSet> all;
    for (int i = 0; i < 300; ++i) all.push_back(random_set(rng));
    const auto big = compute_ranges(all);
    const auto small = compute_ranges(std::span(all).subspan(100, 50));
    for (int k = 0; k < kLandmarkCount; ++k) {
        CHECK(big[k].min.x <= small[k].min.x);
        CHECK(big[k].min.y <= small[k].min.y);
        CHECK(big[k].max.x >= small[k].max.x);
        CHECK(big[k].max.y >= small[k].max.y);
    }
}

TEST_CASE("normalize midpoint example") {
    LandmarkRanges h, r;
    for (auto& b : h) b = RangeBox{{0, 0}, {10, 10}};
    for (auto& b : r) b = RangeBox{{2, 2}, {4, 4}};
    LandmarkSet s;
    for (int k = 0; k < kLandmarkCount; ++k) s[k] = Landmark{5, 5, 0.3};
    const LandmarkSet out = normalize(s, h, r);
    for (int k = 0; k < kLandmarkCount; ++k) {
        CHECK(out[k].x == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(out[k].y == doctest::Approx(3.0).epsilon(1e-15));
        CHECK(out[k].confidence == 0.3);
    }
}

TEST_CASE("normalize clamps and counts out-of-range inputs") {
    LandmarkRanges h, r;
    for (auto& b : h) b = RangeBox{{0, 0}, {10, 10}};
    for (auto& b : r) b = RangeBox{{20, 30}, {40, 50}};
    LandmarkSet s;
    for (int k = 0; k < kLandmarkCount; ++k) s[k] = Landmark{-3, 12, 1};
    NormalizeStats stats;
    const LandmarkSet out = normalize(s, h, r, &stats);
    CHECK(stats.clamped_coordinates == 2 * kLandmarkCount);
    CHECK(out[0].x == 20.0);
    CHECK(out[0].y == 50.0);
}

TEST_CASE("normalize properties on random ranges") {
    Rng rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const LandmarkRanges h = random_ranges(rng), r = random_ranges(rng);
        LandmarkSet lo, hi, a, b, between;
        const double t = uniform01(rng);
        for (int k = 0; k < kLandmarkCount; ++k) {
            const RangeBox& box = h[static_cast<std::size_t>(k)];
            lo[k] = Landmark{box.min.x, box.min.y, 1.0};
            hi[k] = Landmark{box.max.x, box.max.y, 1.0};
            a[k] = Landmark{box.min.x + uniform01(rng) * (box.max.x - box.min.x),
                            box.min.y + uniform01(rng) * (box.max.y - box.min.y), 0.5};
            b[k] = Landmark{box.min.x + uniform01(rng) * (box.max.x - box.min.x),
                            box.min.y + uniform01(rng) * (box.max.y - box.min.y), 0.5};
            between[k] = Landmark{a[k].x + t * (b[k].x - a[k].x), a[k].y + t * (b[k].y - a[k].y), 0.5};
        }
        const LandmarkSet nlo = normalize(lo, h, r), nhi = normalize(hi, h, r);
        const LandmarkSet na = normalize(a, h, r), nb = normalize(b, h, r), nt = normalize(between, h, r);
        const LandmarkSet same = normalize(a, h, h);
        for (int k = 0; k < kLandmarkCount; ++k) {
            const RangeBox& box = r[static_cast<std::size_t>(k)];
            CHECK(nlo[k].x == doctest::Approx(box.min.x).epsilon(1e-12));
            CHECK(nlo[k].y == doctest::Approx(box.min.y).epsilon(1e-12));
            CHECK(nhi[k].x == doctest::Approx(box.max.x).epsilon(1e-12));
            CHECK(nhi[k].y == doctest::Approx(box.max.y).epsilon(1e-12));
            // Affine per axis: the image of a convex combination is the same combination of images.
            CHECK(nt[k].x == doctest::Approx(na[k].x + t * (nb[k].x - na[k].x)).epsilon(1e-9));
            CHECK(nt[k].y == doctest::Approx(na[k].y + t * (nb[k].y - na[k].y)).epsilon(1e-9));
            CHECK(same[k].x == doctest::Approx(a[k].x).epsilon(1e-12));
            CHECK(same[k].y == doctest::Approx(a[k].y).epsilon(1e-12));
        }
    }
}

TEST_CASE("normalize rejects a degenerate human range and names the landmark") {
    Rng rng(4);
    LandmarkRanges h = random_ranges(rng);
    h[17].max.y = h[17].min.y;
    try {
        normalize(random_set(rng), h, random_ranges(rng));
        FAIL("expected RangeError");
    } catch (const RangeError& e) {
        CHECK(std::string(e.what()).find("17") != std::string::npos);
    }
}

TEST_CASE("encode_mask single landmark and omission rule") {
    LandmarkSet s;
    for (int k = 0; k < kLandmarkCount; ++k) s[k] = Landmark{50, 30, 0.0};
    LandmarkMask m = encode_mask(s, {96, 64});
    CHECK(m.occupied_pixels() == 0);
    s[0] = Landmark{3.0, 2.0, 0.8};
    m = encode_mask(s, {96, 64});
    CHECK(m.occupied_pixels() == 1);
    CHECK(m.occupancy_at(2, 3) == 1.0f);
    CHECK(m.confidence_at(2, 3) == doctest::Approx(0.8));
}

TEST_CASE("encode_mask collisions keep the larger confidence; rounding is half-up; clamping counts") {
    LandmarkSet s;
    s[0] = Landmark{9.5, 4.49, 0.5};
    s[1] = Landmark{10.2, 3.6, 0.9};
    s[2] = Landmark{-4, 70, 0.2};
    const LandmarkMask m = encode_mask(s, {96, 64});
    CHECK(m.occupancy_at(4, 10) == 1.0f);
    CHECK(m.confidence_at(4, 10) == doctest::Approx(0.9));
    CHECK(m.occupancy_at(63, 0) == 1.0f);
    CHECK(m.clamped == 1);
}

TEST_CASE("encode_mask invariants on random sets") {
    Rng rng(6);
    for (int t = 0; t < 50; ++t) {
        LandmarkSet s = random_set(rng);
        int positive = 0;
        for (int k = 0; k < kLandmarkCount; ++k) {
            if (uniform01(rng) < 0.2) s[k].confidence = 0.0;
            positive += s[k].confidence > 0.0;
        }
        const LandmarkMask m = encode_mask(s, {96, 64});
        CHECK(m.occupied_pixels() <= positive);
        for (std::size_t i = 0; i < m.confidence.size(); ++i) {
            if (m.confidence[i] > 0.0f) CHECK(m.occupancy[i] == 1.0f);
        }
    }
}

TEST_CASE("landmark_distance examples and symmetry") {
    LandmarkSet a, b;
    CHECK(landmark_distance(a, a) == 0.0);
    b[7] = Landmark{3, 4, 0};
    CHECK(landmark_distance(a, b) == doctest::Approx(5.0 / 53.0));
    Rng rng(8);
    for (int i = 0; i < 20; ++i) {
        const auto x = random_set(rng), y = random_set(rng);
        CHECK(landmark_distance(x, y) == landmark_distance(y, x));
        CHECK(landmark_distance(x, y) > 0.0);
    }
}

TEST_CASE("image_distance examples") {
    const SelfImage zeros({8, 6}, 0.0f), ones({8, 6}, 1.0f), half({8, 6}, 0.5f);
    CHECK(image_distance(zeros, zeros) == 0.0);
    CHECK(image_distance(zeros, ones) == doctest::Approx(1.0));
    CHECK(image_distance(zeros, half) == doctest::Approx(0.25 * image_distance(zeros, ones)));
    CHECK(image_distance(half, ones) == image_distance(ones, half));
    CHECK_THROWS_AS(image_distance(zeros, SelfImage({6, 8})), DimensionError);
}

TEST_CASE("landmark and range csv round trips") {
    Rng rng(10);
    const LandmarkSet s = random_set(rng);
    CHECK(landmarks_from_csv(landmarks_to_csv(s)) == s);
    const LandmarkRanges r = random_ranges(rng);
    CHECK(ranges_from_csv(ranges_to_csv(r)) == r);
    CHECK(landmarks_to_csv(s).rfind("index,x,y,confidence\n", 0) == 0);
    CHECK(ranges_to_csv(r).rfind("index,hmin_x,hmin_y,hmax_x,hmax_y\n", 0) == 0);
    CHECK_THROWS(landmarks_from_csv("index,x,y,confidence\n0,1,2,0.5\n"));
}
