#include "facemimic/harness/evaluation.hpp"

#include "facemimic/baselines.hpp"
#include "facemimic/errors.hpp"
#include "facemimic/harness/metrics.hpp"
#include "facemimic/util/hashing.hpp"

#include <json.hpp>

#include <algorithm>
#include <map>

namespace facemimic {

using json = nlohmann::json;

const ReportRow* EvalReport::find(const std::string& method, const std::string& metric) const {
    for (const auto& r : rows) {
        if (r.method == method && r.metric == metric) return &r;
    }
    return nullptr;
}

const ReportRow& EvalReport::row(const std::string& method, const std::string& metric) const {
    const ReportRow* r = find(method, metric);
    if (!r) throw ArgumentError("report '" + experiment + "' has no row " + method + "/" + metric);
    return *r;
}

std::vector<ReportRow> aggregate(const std::vector<std::vector<Score>>& per_seed) {
    if (per_seed.empty()) throw ArgumentError("aggregate needs at least one seed");
    std::vector<ReportRow> rows;
    for (const auto& s : per_seed.front()) rows.push_back(ReportRow{s.method, s.metric, 0.0, 0.0, 0, {}});
    for (const auto& scores : per_seed) {
        if (scores.size() != rows.size()) throw ArgumentError("seeds report different method/metric sets");
        for (auto& row : rows) {
            const auto it = std::find_if(scores.begin(), scores.end(), [&](const Score& s) {
                return s.method == row.method && s.metric == row.metric;
            });
            if (it == scores.end()) throw ArgumentError("seed is missing " + row.method + "/" + row.metric);
            row.per_seed.push_back(it->value);
        }
    }
    for (auto& row : rows) {
        const MeanStderr m = mean_stderr(row.per_seed);
        row.mean = m.mean;
        row.stderr_ = m.stderr_;
        row.n_seeds = m.n;
    }
    return rows;
}

namespace {

// Running means keyed by (method, metric), reported in first-insertion order.
class ScoreSheet {
public:
    void add(const std::string& method, const std::string& metric, double value) {
        const auto key = method + '\x1f' + metric;
        auto it = index_.find(key);
        if (it == index_.end()) {
            it = index_.emplace(key, entries_.size()).first;
            entries_.push_back({method, metric, 0.0, 0});
        }
        entries_[it->second].sum += value;
        entries_[it->second].count += 1;
    }

    std::vector<Score> scores() const {
        std::vector<Score> out;
        for (const auto& e : entries_) out.push_back(Score{e.method, e.metric, e.sum / e.count});
        return out;
    }

private:
    struct Entry {
        std::string method;
        std::string metric;
        double sum;
        int count;
    };
    std::vector<Entry> entries_;
    std::map<std::string, std::size_t> index_;
};

void add_command_scores(ScoreSheet& sheet, const std::string& method, const MotorCommand& got,
                        const MotorCommand& want) {
    sheet.add(method, "command_accuracy", command_accuracy(got, want));
    sheet.add(method, "command_distance", command_distance(got, want));
}

void require_test_split(const BabbleDataset& ds) {
    if (ds.split.test <= 0) throw ArgumentError("dataset has an empty test split");
}

void require_models(const SeedModels& m, bool gm, bool inverse, bool baselines) {
    const auto missing = [&](const char* what) {
        return ArgumentError("seed " + std::to_string(m.seed) + ": missing " + what + " checkpoint");
    };
    if (gm && !m.gm) throw missing("generative");
    if (inverse && !m.im) throw missing("inverse");
    if (baselines && (!m.ri || !m.ri100)) throw missing("RI/RI-100");
    if (baselines && !m.l2m) throw missing("landmark-to-motor");
}

std::vector<SelfImage> test_images(const BabbleDataset& ds) {
    std::vector<SelfImage> out;
    for (const auto& r : ds.test()) out.push_back(r.image);
    return out;
}

json config_base(const std::string& experiment, std::span<const SeedModels> models, const BabbleDataset& ds) {
    json seeds = json::array();
    json per_seed = json::array();
    for (const auto& m : models) {
        seeds.push_back(m.seed);
        json entry = {{"seed", m.seed}};
        if (m.gm) entry["gm"] = {{"hash", model_hash(*m.gm)}, {"epochs", m.gm->config.epochs},
                                 {"batch", m.gm->config.batch}, {"lr", m.gm->config.lr},
                                 {"best_epoch", m.gm->log.best_epoch}};
        if (m.im) entry["im"] = {{"hash", model_hash(*m.im)}, {"epochs", m.im->config.epochs},
                                 {"batch", m.im->config.batch}, {"lr", m.im->config.lr},
                                 {"best_epoch", m.im->log.best_epoch}};
        if (m.ri) entry["ri"] = {{"hash", model_hash(*m.ri)}};
        if (m.ri100) entry["ri100"] = {{"hash", model_hash(*m.ri100)}, {"iterations", kRi100Iterations}};
        if (m.l2m) entry["l2m"] = {{"hash", model_hash(*m.l2m)}, {"epochs", m.l2m->config.epochs},
                                   {"batch", m.l2m->config.batch}, {"lr", m.l2m->config.lr}};
        per_seed.push_back(entry);
    }
    return {{"experiment", experiment},
            {"dataset_hash", dataset_hash(ds)},
            {"rig_id", ds.rig_id},
            {"split", {{"train", ds.split.train}, {"val", ds.split.val}, {"test", ds.split.test}}},
            {"seeds", seeds},
            {"models", per_seed}};
}

EvalReport make_report(const std::string& experiment, std::span<const SeedModels> models, const BabbleDataset& ds,
                       const json& config, std::vector<std::vector<Score>> per_seed) {
    EvalReport report;
    report.experiment = experiment;
    for (const auto& m : models) report.seeds.push_back(m.seed);
    report.dataset_hash = dataset_hash(ds);
    report.config_json = config.dump();
    report.rows = aggregate(per_seed);
    return report;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Score> eval_generative_seed(const GenerativeModel& gm, const BabbleDataset& ds, const FaceRig& rig,
                                        std::uint64_t seed) {
    require_test_split(ds);
    const auto test = ds.test();
    const SelfImage& is = static_self_image(rig);
    std::vector<LandmarkSet> targets;
    for (const auto& r : test) targets.push_back(r.landmarks);
    const auto generated = generate_batch(gm, targets, is);

    ScoreSheet sheet;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const BabbleRecord& rec = test[i];
        const SelfImage& rs = rs_image(ds, derive_seed(seed, static_cast<std::uint64_t>(rec.step)));
        const LandmarkSet gen_lm = detect_landmarks(rig, generated[i]);
        const LandmarkSet rs_lm = detect_landmarks(rig, rs);
        const double gm_lm = landmark_distance(gen_lm, rec.landmarks);
        sheet.add("GM", "image_distance", image_distance(generated[i], rec.image));
        sheet.add("GM", "landmark_distance", gm_lm);
        sheet.add("GM", "closer_than_random", gm_lm < landmark_distance(gen_lm, rs_lm) ? 1.0 : 0.0);
        sheet.add("RS", "image_distance", image_distance(rs, rec.image));
        sheet.add("RS", "landmark_distance", landmark_distance(rs_lm, rec.landmarks));
    }
    return sheet.scores();
}

EvalReport eval_generative(std::span<const SeedModels> models, const BabbleDataset& ds, const FaceRig& rig) {
    std::vector<std::vector<Score>> per_seed;
    for (const auto& m : models) {
        require_models(m, true, false, false);
        per_seed.push_back(eval_generative_seed(*m.gm, ds, rig, m.seed));
    }
    return make_report("generative", models, ds, config_base("generative", models, ds), std::move(per_seed));
}

// ---------------------------------------------------------------------------

std::vector<Score> eval_inverse_seed(const InverseModel& im, const InverseModel& ri, const InverseModel& ri100,
                                     const BabbleDataset& ds) {
    require_test_split(ds);
    const auto test = ds.test();
    const auto images = test_images(ds);
    ScoreSheet sheet;
    const std::pair<const char*, const InverseModel*> methods[] = {{"IM", &im}, {"RI", &ri}, {"RI-100", &ri100}};
    for (const auto& [name, model] : methods) {
        const auto inferred = infer_commands_batch(*model, images);
        for (std::size_t i = 0; i < test.size(); ++i) add_command_scores(sheet, name, inferred[i].command, test[i].command);
    }
    return sheet.scores();
}

EvalReport eval_inverse(std::span<const SeedModels> models, const BabbleDataset& ds) {
    std::vector<std::vector<Score>> per_seed;
    for (const auto& m : models) {
        require_models(m, false, true, false);
        if (!m.ri || !m.ri100) throw ArgumentError("seed " + std::to_string(m.seed) + ": missing RI/RI-100 checkpoint");
        per_seed.push_back(eval_inverse_seed(*m.im, *m.ri, *m.ri100, ds));
    }
    return make_report("inverse", models, ds, config_base("inverse", models, ds), std::move(per_seed));
}

// ---------------------------------------------------------------------------

LandmarkRanges robot_ranges(const BabbleDataset& ds) {
    std::vector<LandmarkSet> frames;
    for (const auto& r : ds.train()) frames.push_back(r.landmarks);
    return compute_ranges(frames);
}

std::vector<Score> eval_pipeline_seed(const SeedModels& m, const BabbleDataset& ds, const FaceRig& rig) {
    require_models(m, true, true, true);
    require_test_split(ds);
    const auto test = ds.test();
    const LandmarkRanges ranges = robot_ranges(ds);
    const SelfImage& is = static_self_image(rig);

    std::vector<LandmarkSet> normalized;
    for (const auto& r : test) normalized.push_back(normalize(r.landmarks, ranges, ranges));
    const auto generated = generate_batch(*m.gm, normalized, is);
    const auto via_im = infer_commands_batch(*m.im, generated);
    const auto via_ri = infer_commands_batch(*m.ri, generated);
    const auto via_ri100 = infer_commands_batch(*m.ri100, generated);
    const auto im_alone = infer_commands_batch(*m.im, test_images(ds));

    ScoreSheet sheet;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const MotorCommand& want = test[i].command;
        add_command_scores(sheet, "GM+IM", via_im[i].command, want);
        add_command_scores(sheet, "GM+NN", nn_retrieve(detect_landmarks(rig, generated[i]), ds), want);
        add_command_scores(sheet, "GM+RI", via_ri[i].command, want);
        add_command_scores(sheet, "GM+RI-100", via_ri100[i].command, want);
        add_command_scores(sheet, "Landmark-to-Motor",
                           infer_landmark_to_motor(*m.l2m, encode_mask(normalized[i], ds.dims)), want);
        add_command_scores(sheet, "Landmark-NN", nn_retrieve(normalized[i], ds), want);
        add_command_scores(sheet, "IM", im_alone[i].command, want);
    }
    return sheet.scores();
}

EvalReport eval_pipeline(std::span<const SeedModels> models, const BabbleDataset& ds, const FaceRig& rig) {
    std::vector<std::vector<Score>> per_seed;
    for (const auto& m : models) per_seed.push_back(eval_pipeline_seed(m, ds, rig));
    return make_report("pipeline", models, ds, config_base("pipeline", models, ds), std::move(per_seed));
}

// ---------------------------------------------------------------------------

std::string subject_label(int subject) { return "subject_" + std::to_string(subject); }

double subject_distortion(const ExecutionConfig& cfg, int subject) {
    if (subject <= 0 || cfg.subjects <= 1) return 0.0;
    return cfg.max_distortion * static_cast<double>(subject) / static_cast<double>(cfg.subjects - 1);
}

std::vector<FaceRig> make_subjects(const FaceRig& robot, const ExecutionConfig& cfg) {
    if (cfg.subjects < 1 || cfg.frames_per_subject < 1 || cfg.range_frames < 2) {
        throw ConfigError("execution needs >= 1 subject, >= 1 frame and >= 2 range frames");
    }
    std::vector<FaceRig> out;
    for (int s = 0; s < cfg.subjects; ++s) {
        out.push_back(make_subject(robot, derive_seed(cfg.subject_seed, static_cast<std::uint64_t>(s)),
                                   subject_distortion(cfg, s)));
    }
    return out;
}

namespace {

// Landmark distance after executing `cmd` on the robot.
double executed_distance(const FaceRig& robot, const MotorCommand& cmd, const LandmarkSet& target) {
    return landmark_distance(detect_landmarks(robot, render(robot, cmd)), target);
}

MotorCommand frame_command(const FaceRig& robot, const ExecutionConfig& cfg, int subject, int frame) {
    return babble_command(robot.motor_count(), derive_seed(cfg.subject_seed, 0xF000 + static_cast<std::uint64_t>(subject)),
                          frame);
}

}  // namespace

std::vector<Score> eval_execution_seed(const GenerativeModel& gm, const InverseModel& im, const FaceRig& robot,
                                       const LandmarkRanges& ranges, std::span<const FaceRig> subjects,
                                       const ExecutionConfig& cfg, std::uint64_t seed) {
    const SelfImage& is = static_self_image(robot);
    const int motors = robot.motor_count();
    ScoreSheet sheet;
    for (std::size_t s = 0; s < subjects.size(); ++s) {
        const FaceRig& subject = subjects[s];
        const int si = static_cast<int>(s);
        const BabbleDataset sb = collect(subject, cfg.range_frames, derive_seed(cfg.subject_seed, 0xB000 + s));
        std::vector<LandmarkSet> frames;
        for (const auto& r : sb.records) frames.push_back(r.landmarks);
        const LandmarkRanges subject_ranges = compute_ranges(frames);
        const auto degenerate = degenerate_landmarks(subject_ranges);
        if (!degenerate.empty()) {
            throw RangeError(subject_label(si) + " has " + std::to_string(degenerate.size()) +
                             " degenerate landmark ranges");
        }
        const std::string label = subject_label(si);
        for (int f = 0; f < cfg.frames_per_subject; ++f) {
            const MotorCommand expression = frame_command(robot, cfg, si, f);
            const LandmarkSet human = detect_landmarks(subject, render(subject, expression));
            const PipelineResult p = pipeline_infer(gm, im, human, subject_ranges, ranges, is);
            sheet.add("pipeline/" + label, "landmark_distance", executed_distance(robot, p.command, p.normalized));
            const MotorCommand rc =
                random_command(motors, derive_seed(seed, (static_cast<std::uint64_t>(s) << 20) + static_cast<std::uint64_t>(f)));
            sheet.add("random/" + label, "landmark_distance", executed_distance(robot, rc, p.normalized));
        }
    }
    for (int f = 0; f < cfg.frames_per_subject; ++f) {
        const MotorCommand expression = frame_command(robot, cfg, 0, f);
        const LandmarkSet own = detect_landmarks(robot, render(robot, expression));
        const PipelineResult p = pipeline_infer(gm, im, own, ranges, ranges, is);
        sheet.add("round_trip", "landmark_distance", executed_distance(robot, p.command, p.normalized));
    }
    return sheet.scores();
}

EvalReport eval_execution(std::span<const SeedModels> models, const BabbleDataset& ds, const FaceRig& robot,
                          const ExecutionConfig& cfg) {
    const auto subjects = make_subjects(robot, cfg);
    const LandmarkRanges ranges = robot_ranges(ds);
    std::vector<std::vector<Score>> per_seed;
    for (const auto& m : models) {
        require_models(m, true, true, false);
        per_seed.push_back(eval_execution_seed(*m.gm, *m.im, robot, ranges, subjects, cfg, m.seed));
    }
    json config = config_base("execution", models, ds);
    json subj = json::array();
    for (int s = 0; s < cfg.subjects; ++s) {
        subj.push_back({{"label", subject_label(s)},
                        {"rig_id", subjects[static_cast<std::size_t>(s)].id()},
                        {"distortion", subject_distortion(cfg, s)}});
    }
    config["execution"] = {{"subjects", subj},
                           {"frames_per_subject", cfg.frames_per_subject},
                           {"range_frames", cfg.range_frames},
                           {"max_distortion", cfg.max_distortion},
                           {"subject_seed", cfg.subject_seed}};
    EvalReport report = make_report("execution", models, ds, config, std::move(per_seed));
    report.note = "landmark distances are measured against the normalized human landmarks";
    return report;
}

}  // namespace facemimic
