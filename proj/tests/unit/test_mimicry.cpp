#include <doctest.h>

#include "facemimic/errors.hpp"
#include "facemimic/mimicry.hpp"
#include "facemimic/util/csv.hpp"

#include <cmath>
#include <filesystem>

using namespace facemimic;
namespace fs = std::filesystem;

namespace {

constexpr ImageDims kDims{96, 64};

const FaceRig& small_rig() {
    static const FaceRig r = master_rig(kDims);
    return r;
}

const BabbleDataset& small_data() {
    static const BabbleDataset ds = split(collect(small_rig(), 192, 3), 160, 16, 16);
    return ds;
}

TrainConfig quick(int epochs, std::uint64_t seed = 1) { return TrainConfig{epochs, 16, 1e-3, seed}; }

}  // namespace

TEST_CASE("discretize examples") {
    const double v[] = {0.5, 0.13, 0.125, 0.0, 1.0, 0.874};
    CHECK(discretize(v) == std::vector<int>{2, 1, 1, 0, 4, 3});
    const double bad[] = {1.01};
    CHECK_THROWS_AS(discretize(bad), RangeError);
    const double neg[] = {-0.2};
    CHECK_THROWS_AS(discretize(neg), RangeError);
}

TEST_CASE("discretize inverts the class grid exactly") {
    for (int a = 0; a < kMotorLevels; ++a) {
        for (int b = 0; b < kMotorLevels; ++b) {
            const int classes[] = {a, b};
            const MotorCommand c = MotorCommand::from_classes(classes);
            CHECK(discretize(c.values()) == std::vector<int>{a, b});
        }
    }
}

TEST_CASE("decode_logits argmax, ties and probabilities") {
    std::vector<float> logits(2 * kMotorLevels, 0.0f);
    logits[2] = 9.0f;
    logits[kMotorLevels + 1] = 3.0f;
    logits[kMotorLevels + 3] = 3.0f;
    const CommandInference r = decode_logits(logits, 2);
    CHECK(r.command[0] == 0.5);
    CHECK(r.command[1] == 0.25);
    for (const auto& p : r.probabilities) {
        double sum = 0.0;
        for (double q : p) sum += q;
        CHECK(std::fabs(sum - 1.0) < 1e-6);
    }
    CHECK_THROWS_AS(decode_logits(logits, 3), DimensionError);
}

TEST_CASE("architectures have the declared interfaces") {
    const auto g = generative_architecture({96, 64});
    CHECK(g.input_shape() == diffnet::Shape{5, 64, 96});
    CHECK(g.output_shape() == diffnet::Shape{3, 64, 96});
    CHECK_THROWS_AS(generative_architecture({50, 30}), DimensionError);
    const auto f = inverse_architecture({96, 64}, 3, 10);
    CHECK(f.input_shape() == diffnet::Shape{3, 64, 96});
    CHECK(f.output_shape().size() == 50);
    int convs = 0, dense = 0;
    for (const auto& l : f.layers()) {
        convs += l.kind == diffnet::LayerKind::Conv2d;
        dense += l.kind == diffnet::LayerKind::Dense;
    }
    CHECK(convs == 6);
    CHECK(dense == 2);
}

TEST_CASE("generator input packs mask then static image") {
    const FaceRig& rig = small_rig();
    const BabbleRecord& rec = small_data().records[0];
    const LandmarkMask mask = encode_mask(rec.landmarks, kDims);
    diffnet::Tensor t(2, diffnet::Shape{5, kDims.height, kDims.width});
    fill_generative_input(t, 1, mask, static_self_image(rig));
    const std::size_t plane = static_cast<std::size_t>(kDims.pixels());
    const float* s = t.sample(1);
    for (std::size_t i = 0; i < plane; ++i) {
        CHECK(s[i] == mask.occupancy[i]);
        CHECK(s[plane + i] == mask.confidence[i]);
        CHECK(s[2 * plane + i] == static_self_image(rig).values()[i]);
    }
    for (float v : std::span<const float>(t.sample(0), 5 * plane)) CHECK(v == 0.0f);
    CHECK_THROWS_AS(fill_image_input(t, 0, rec.image), DimensionError);
}

TEST_CASE("generative training improves on initialization and is deterministic") {
    const GenerativeModel a = train_generative(small_data(), small_rig(), quick(2));
    CHECK(a.log.epochs.size() == 3);
    CHECK(a.log.best_epoch >= 1);
    CHECK(a.log.epochs[static_cast<std::size_t>(a.log.best_epoch)].val_metric < a.log.epochs[0].val_metric);
    const GenerativeModel b = train_generative(small_data(), small_rig(), quick(2));
    CHECK(model_hash(a) == model_hash(b));

    const SelfImage out = generate(a, encode_mask(small_data().test()[0].landmarks, kDims), static_self_image(small_rig()));
    for (float v : out.values()) {
        CHECK(v > 0.0f);
        CHECK(v < 1.0f);
    }
    CHECK(out == generate(a, encode_mask(small_data().test()[0].landmarks, kDims), static_self_image(small_rig())));
    std::vector<LandmarkSet> lms{small_data().test()[0].landmarks, small_data().test()[1].landmarks};
    const auto batch = generate_batch(a, lms, static_self_image(small_rig()));
    CHECK(batch[0] == out);

    CHECK(a.log.to_csv().rfind("epoch,train_loss,val_metric,seconds\n0,,", 0) == 0);
}

TEST_CASE("inverse training, selection by validation accuracy, persistence") {
    const InverseModel im = train_inverse(small_data(), quick(3, 2));
    CHECK(im.log.best_epoch >= 1);
    const auto& best = im.log.epochs[static_cast<std::size_t>(im.log.best_epoch)];
    for (const auto& e : im.log.epochs) CHECK(e.val_metric <= best.val_metric);
    CHECK(best.val_loss < im.log.epochs[0].val_loss);

    const fs::path dir = fs::temp_directory_path() / "facemimic_inv_ckpt";
    fs::remove_all(dir);
    save_inverse(im, dir);
    CHECK(fs::exists(dir / "train_log.csv"));
    const InverseModel back = load_inverse(dir);
    CHECK(model_hash(back) == model_hash(im));
    CHECK(back.log.best_epoch == im.log.best_epoch);
    const auto r = infer_commands(back, small_data().test()[0].image);
    CHECK(r.command == infer_commands(im, small_data().test()[0].image).command);
    CHECK_THROWS_AS(load_generative(dir), IntegrityError);
    fs::remove_all(dir);
}

TEST_CASE("iteration-limited training stops after exactly k updates") {
    const InverseModel start = make_inverse(kDims, 10, 3, quick(1, 3));
    const InverseModel after = train_inverse_iterations(small_data(), start, 13);
    CHECK(after.graph.adam().step == 13);
    CHECK(train_inverse_iterations(small_data(), start, 0).graph == start.graph);
}

TEST_CASE("training errors") {
    CHECK_THROWS_AS(train_inverse(small_data(), quick(0)), TrainingError);
    CHECK_THROWS_AS(train_inverse(small_data(), TrainConfig{1, 16, 1e30, 1}), TrainingError);
    const BabbleDataset no_val = split(collect(small_rig(), 20, 1), 20, 0, 0);
    CHECK_THROWS_AS(train_generative(no_val, small_rig(), quick(1)), ArgumentError);
    const FaceRig other = master_rig(kDims, 9);
    CHECK_THROWS_AS(train_generative(small_data(), other, quick(1)), IntegrityError);
}

TEST_CASE("mask-input network and pipeline chain") {
    const InverseModel l2m = train_mask_inverse(small_data(), quick(2, 4));
    CHECK(l2m.in_channels == 2);
    const auto c = infer_from_mask(l2m, encode_mask(small_data().test()[0].landmarks, kDims));
    CHECK(c.command.size() == 10);
    CHECK_THROWS_AS(infer_commands(l2m, small_data().test()[0].image), ArgumentError);

    const GenerativeModel gm = train_generative(small_data(), small_rig(), quick(1));
    const InverseModel im = train_inverse(small_data(), quick(2));
    std::vector<LandmarkSet> frames;
    for (const auto& r : small_data().train()) frames.push_back(r.landmarks);
    const LandmarkRanges ranges = compute_ranges(frames);
    const LandmarkSet& human = small_data().test()[0].landmarks;
    const PipelineResult p = pipeline_infer(gm, im, human, ranges, ranges, static_self_image(small_rig()));
    CHECK(p.latency_ms > 0.0);
    CHECK(p.normalized == normalize(human, ranges, ranges));
    CHECK(p.command == infer_commands(im, p.generated).command);
    CHECK(p.generated == generate(gm, encode_mask(p.normalized, kDims), static_self_image(small_rig())));
}
