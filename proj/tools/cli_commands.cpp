#include "cli_commands.hpp"

#include "facemimic/babble.hpp"
#include "facemimic/baselines.hpp"
#include "facemimic/errors.hpp"
#include "facemimic/harness/evaluation.hpp"
#include "facemimic/harness/plot.hpp"
#include "facemimic/harness/report.hpp"
#include "facemimic/mimicry.hpp"
#include "facemimic/util/csv.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

namespace facemimic::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Sidecar files next to every checkpoint.
constexpr const char* kRunConfig = "config.json";
constexpr const char* kRigFile = "rig.json";
constexpr const char* kRobotRanges = "robot_ranges.csv";

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out;
}

int fail(const std::string& kind, const std::string& message) {
    std::cerr << "error: kind=" << kind << " message=\"" << escape(message) << "\"\n";
    return 1;
}

// Every option of the subcommand that ran, as canonical JSON.
json options_json(const CLI::App& sub) {
    json j = json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_lnames().empty() || opt->get_lnames().front() == "help") continue;
        const auto results = opt->results();
        const std::string& name = opt->get_lnames().front();
        if (opt->get_expected_max() > 1) {
            j[name] = results;
        } else if (results.empty()) {
            j[name] = opt->get_default_str();
        } else {
            j[name] = results.front();
        }
    }
    return j;
}

void write_snapshot(const fs::path& dir, const CLI::App& sub, json extra = json::object()) {
    fs::create_directories(dir);
    json j = {{"command", sub.get_name()}, {"options", options_json(sub)}};
    for (auto& [k, v] : extra.items()) j[k] = v;
    write_text_file(dir / kRunConfig, j.dump(1) + "\n");
}

void require_dir(const fs::path& p, const std::string& what) {
    if (!fs::is_directory(p)) throw IoError(what + " '" + p.string() + "' does not exist");
}

void require_file(const fs::path& p, const std::string& what) {
    if (!fs::is_regular_file(p)) throw IoError(what + " '" + p.string() + "' does not exist");
}

struct Loaded {
    BabbleDataset ds;
    std::string hash;
};

Loaded load_data(const fs::path& dir) {
    require_dir(dir, "dataset");
    Loaded l{load_dataset(dir), {}};
    l.hash = dataset_hash(l.ds);
    return l;
}

FaceRig load_rig(const fs::path& path) {
    require_file(path, "rig file");
    return FaceRig::from_json(read_text_file(path));
}

// Refuses a checkpoint trained on a different dataset.
void check_trained_on(const fs::path& ckpt, const std::string& data_hash) {
    const fs::path cfg = ckpt / kRunConfig;
    require_file(cfg, "checkpoint config");
    const json j = json::parse(read_text_file(cfg));
    const std::string h = j.value("dataset_hash", "");
    if (h != data_hash) {
        throw IntegrityError("checkpoint " + ckpt.string() + " was trained on dataset " + h + ", not " + data_hash);
    }
}

TrainConfig train_config(const TrainConfig& defaults, std::optional<int> epochs, std::optional<int> batch,
                         std::optional<double> lr) {
    TrainConfig c = defaults;
    if (epochs) c.epochs = *epochs;
    if (batch) c.batch = *batch;
    if (lr) c.lr = *lr;
    return c;
}

void print_paths(const std::vector<fs::path>& paths) {
    for (const auto& p : paths) std::cout << p.string() << "\n";
}

// ---------------------------------------------------------------------------

struct BabbleArgs {
    int steps = 4000;
    std::uint64_t seed = 7;
    int width = 96;
    int height = 64;
    int motors = kDefaultMotorCount;
    int workers = 1;
    std::string out;
};

void cmd_babble(const BabbleArgs& a, const CLI::App& sub) {
    const FaceRig rig = master_rig(ImageDims{a.width, a.height}, a.motors);
    BabbleDataset ds = collect(rig, a.steps, a.seed, a.workers);
    const SplitCounts s = default_split(a.steps);
    ds = split(std::move(ds), s.train, s.val, s.test);
    save_dataset(ds, a.out);
    write_text_file(fs::path(a.out) / kRigFile, rig.to_json());
    const std::string hash = dataset_hash(ds);
    write_snapshot(a.out, sub, {{"dataset_hash", hash}, {"rig_id", rig.id()}});
    std::cout << "dataset_hash " << hash << "\n";
}

struct TrainArgs {
    std::string data;
    std::string out;
    std::uint64_t seed = 1;
    std::optional<int> epochs;
    std::optional<int> batch;
    std::optional<double> lr;
};

void cmd_train_gen(const TrainArgs& a, const CLI::App& sub) {
    const Loaded l = load_data(a.data);
    const FaceRig rig = load_rig(fs::path(a.data) / kRigFile);
    if (rig.id() != l.ds.rig_id) throw IntegrityError("rig.json does not match the dataset's rig");
    const GenerativeModel gm = train_generative(l.ds, rig, train_config(generative_defaults(a.seed), a.epochs, a.batch, a.lr));
    save_generative(gm, a.out);
    write_text_file(fs::path(a.out) / kRigFile, rig.to_json());
    write_ranges_csv(fs::path(a.out) / kRobotRanges, robot_ranges(l.ds));
    write_snapshot(a.out, sub, {{"dataset_hash", l.hash}, {"model_hash", model_hash(gm)}, {"best_epoch", gm.log.best_epoch}});
    std::cout << "model_hash " << model_hash(gm) << "\n";
}

void cmd_train_inv(const TrainArgs& a, const CLI::App& sub) {
    const Loaded l = load_data(a.data);
    const InverseModel im = train_inverse(l.ds, train_config(inverse_defaults(a.seed), a.epochs, a.batch, a.lr));
    save_inverse(im, a.out);
    write_snapshot(a.out, sub, {{"dataset_hash", l.hash}, {"model_hash", model_hash(im)}, {"best_epoch", im.log.best_epoch}});
    std::cout << "model_hash " << model_hash(im) << "\n";
}

void cmd_train_baselines(const TrainArgs& a, const CLI::App& sub) {
    const Loaded l = load_data(a.data);
    const fs::path out(a.out);
    const InverseModel ri = make_ri(l.ds.dims, l.ds.motor_count, a.seed);
    const InverseModel ri100 = make_ri100(l.ds, a.seed);
    const InverseModel l2m = train_landmark_to_motor(l.ds, train_config(inverse_defaults(a.seed), a.epochs, a.batch, a.lr));
    const std::pair<const char*, const InverseModel*> models[] = {{"ri", &ri}, {"ri100", &ri100}, {"l2m", &l2m}};
    json hashes = json::object();
    for (const auto& [name, m] : models) {
        save_inverse(*m, out / name);
        write_snapshot(out / name, sub, {{"dataset_hash", l.hash}, {"model_hash", model_hash(*m)}});
        hashes[name] = model_hash(*m);
        std::cout << name << "_hash " << model_hash(*m) << "\n";
    }
    write_snapshot(out, sub, {{"dataset_hash", l.hash}, {"model_hashes", hashes}});
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string data;
    std::vector<std::string> gen;
    std::vector<std::string> inv;
    std::vector<std::string> baselines;
    std::vector<std::uint64_t> seeds;
    std::string out;
    ExecutionConfig exec;
};

// Checkpoints for every seed, kept alive while the evaluation runs.
struct ModelSet {
    std::vector<GenerativeModel> gms;
    std::vector<InverseModel> ims, ris, ri100s, l2ms;
    std::vector<SeedModels> seeds;
};

ModelSet load_models(const EvalArgs& a, const std::string& data_hash, bool gen, bool inv, bool baselines) {
    const auto count = [&](const std::vector<std::string>& v, bool needed, const char* flag) {
        if (needed && v.empty()) throw ArgumentError(std::string("missing ") + flag);
        return v.size();
    };
    std::size_t n = std::max({count(a.gen, gen, "--gen"), count(a.inv, inv, "--inv"),
                              count(a.baselines, baselines, "--baselines")});
    for (const auto* v : {&a.gen, &a.inv, &a.baselines}) {
        if (!v->empty() && v->size() != n) throw ArgumentError("--gen/--inv/--baselines need one path per seed");
    }
    if (!a.seeds.empty() && a.seeds.size() != n) throw ArgumentError("--seeds needs one value per checkpoint");
    ModelSet m;
    m.gms.reserve(n);
    m.ims.reserve(n);
    m.ris.reserve(n);
    m.ri100s.reserve(n);
    m.l2ms.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        SeedModels s;
        s.seed = a.seeds.empty() ? i + 1 : a.seeds[i];
        if (gen) {
            require_dir(a.gen[i], "generative checkpoint");
            check_trained_on(a.gen[i], data_hash);
            m.gms.push_back(load_generative(a.gen[i]));
            s.gm = &m.gms.back();
        }
        if (inv) {
            require_dir(a.inv[i], "inverse checkpoint");
            check_trained_on(a.inv[i], data_hash);
            m.ims.push_back(load_inverse(a.inv[i]));
            s.im = &m.ims.back();
        }
        if (baselines) {
            const fs::path b(a.baselines[i]);
            for (const char* name : {"ri", "ri100", "l2m"}) {
                require_dir(b / name, "baseline checkpoint");
                check_trained_on(b / name, data_hash);
            }
            m.ris.push_back(load_inverse(b / "ri"));
            m.ri100s.push_back(load_inverse(b / "ri100"));
            m.l2ms.push_back(load_inverse(b / "l2m"));
            s.ri = &m.ris.back();
            s.ri100 = &m.ri100s.back();
            s.l2m = &m.l2ms.back();
        }
        m.seeds.push_back(s);
    }
    return m;
}

FaceRig eval_rig(const EvalArgs& a, const BabbleDataset& ds) {
    const FaceRig rig = load_rig(fs::path(a.data) / kRigFile);
    if (rig.id() != ds.rig_id) throw IntegrityError("rig.json does not match the dataset's rig");
    return rig;
}

void finish_eval(const EvalReport& report, const EvalArgs& a, const CLI::App& sub) {
    auto paths = write_report(report, a.out);
    write_snapshot(fs::path(a.out) / (report.experiment + "_run"), sub, {{"dataset_hash", report.dataset_hash}});
    paths.push_back(fs::path(a.out) / (report.experiment + "_run") / kRunConfig);
    print_paths(paths);
}

void cmd_eval(const std::string& which, const EvalArgs& a, const CLI::App& sub) {
    const Loaded l = load_data(a.data);
    if (which == "gen") {
        const ModelSet m = load_models(a, l.hash, true, false, false);
        finish_eval(eval_generative(m.seeds, l.ds, eval_rig(a, l.ds)), a, sub);
    } else if (which == "inv") {
        const ModelSet m = load_models(a, l.hash, false, true, true);
        finish_eval(eval_inverse(m.seeds, l.ds), a, sub);
    } else if (which == "pipeline") {
        const ModelSet m = load_models(a, l.hash, true, true, true);
        finish_eval(eval_pipeline(m.seeds, l.ds, eval_rig(a, l.ds)), a, sub);
    } else {
        const ModelSet m = load_models(a, l.hash, true, true, false);
        finish_eval(eval_execution(m.seeds, l.ds, eval_rig(a, l.ds), a.exec), a, sub);
    }
}

// ---------------------------------------------------------------------------

struct InferArgs {
    std::string landmarks;
    std::string human_ranges;
    std::string robot_ranges;
    std::string gen;
    std::string inv;
};

void cmd_infer(const InferArgs& a) {
    require_file(a.landmarks, "landmark file");
    require_file(a.human_ranges, "human ranges file");
    require_dir(a.gen, "generative checkpoint");
    require_dir(a.inv, "inverse checkpoint");
    const fs::path robot_path = a.robot_ranges.empty() ? fs::path(a.gen) / kRobotRanges : fs::path(a.robot_ranges);
    require_file(robot_path, "robot ranges file");
    const GenerativeModel gm = load_generative(a.gen);
    const InverseModel im = load_inverse(a.inv);
    const FaceRig rig = load_rig(fs::path(a.gen) / kRigFile);
    const PipelineResult r = pipeline_infer(gm, im, read_landmarks_csv(a.landmarks), read_ranges_csv(a.human_ranges),
                                            read_ranges_csv(robot_path), static_self_image(rig));
    std::string line;
    for (int n = 0; n < r.command.size(); ++n) line += (n ? "," : "") + format_number(r.command[n]);
    std::cout << line << "\n";
    std::cerr << "latency_ms " << format_number(r.latency_ms) << "\n";
}

struct ReportArgs {
    std::string in;
    std::string out;
    std::string format = "csv,png";
};

void cmd_report(const ReportArgs& a, const CLI::App& sub) {
    bool csv = false, png = false;
    std::stringstream ss(a.format);
    for (std::string f; std::getline(ss, f, ',');) {
        if (f == "csv") {
            csv = true;
        } else if (f == "png") {
            png = true;
        } else {
            throw ArgumentError("unknown report format '" + f + "'");
        }
    }
    const auto reports = read_reports(a.in);
    if (reports.empty()) throw IoError("no reports found in " + a.in);
    const fs::path out = a.out.empty() ? fs::path(a.in) / "report" : fs::path(a.out);
    fs::create_directories(out);
    std::vector<fs::path> written;
    json sources = json::array();
    for (const auto& r : reports) {
        sources.push_back({{"experiment", r.experiment}, {"dataset_hash", r.dataset_hash}});
        if (csv && r.experiment != "execution") {
            written.push_back(out / ("table_" + r.experiment + ".csv"));
            write_text_file(written.back(), report_csv(r));
        }
        if (png && r.experiment == "execution") {
            written.push_back(out / "figure_execution.png");
            write_bar_chart(written.back(), execution_chart(r));
        }
    }
    write_snapshot(out, sub, {{"reports", sources}});
    written.push_back(out / kRunConfig);
    print_paths(written);
}

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Facial expression mimicry on a simulated face rig"};
    app.set_config("--config", "", "TOML/INI file with options (sections per subcommand)");
    app.require_subcommand(1);

    BabbleArgs babble;
    auto* b = app.add_subcommand("babble", "Collect a motor-babbling dataset");
    b->add_option("--steps", babble.steps, "Babbling steps")->capture_default_str()->check(CLI::Range(16, 1 << 24));
    b->add_option("--seed", babble.seed, "Master seed")->capture_default_str();
    b->add_option("--width", babble.width, "Image width")->capture_default_str();
    b->add_option("--height", babble.height, "Image height")->capture_default_str();
    b->add_option("--motors", babble.motors, "Motor count")->capture_default_str();
    b->add_option("--workers", babble.workers, "Render threads")->capture_default_str()->check(CLI::PositiveNumber);
    b->add_option("--out", babble.out, "Output directory")->required();

    TrainArgs tg, ti, tb;
    const auto add_train = [](CLI::App* s, TrainArgs& t) {
        s->add_option("--data", t.data, "Dataset directory")->required();
        s->add_option("--out", t.out, "Checkpoint directory")->required();
        s->add_option("--seed", t.seed, "Training seed")->capture_default_str();
        s->add_option("--epochs", t.epochs, "Epochs");
        s->add_option("--batch", t.batch, "Batch size");
        s->add_option("--lr", t.lr, "Adam learning rate");
    };
    auto* sg = app.add_subcommand("train-gen", "Train the generative model");
    add_train(sg, tg);
    auto* si = app.add_subcommand("train-inv", "Train the inverse model");
    add_train(si, ti);
    auto* sb = app.add_subcommand("train-baselines", "Build RI, RI-100 and the landmark-to-motor network");
    add_train(sb, tb);

    EvalArgs eg, ei, ep, ee;
    const auto add_eval = [](CLI::App* s, EvalArgs& e, bool gen, bool inv, bool baselines) {
        s->add_option("--data", e.data, "Dataset directory")->required();
        s->add_option("--out", e.out, "Report directory")->required();
        s->add_option("--seeds", e.seeds, "Seed label per checkpoint (default 1..n)");
        if (gen) s->add_option("--gen", e.gen, "Generative checkpoint per seed")->required();
        if (inv) s->add_option("--inv", e.inv, "Inverse checkpoint per seed")->required();
        if (baselines) s->add_option("--baselines", e.baselines, "train-baselines output per seed")->required();
    };
    auto* seg = app.add_subcommand("eval-gen", "Generative model vs RS");
    add_eval(seg, eg, true, false, false);
    auto* sei = app.add_subcommand("eval-inv", "Inverse model vs RI and RI-100");
    add_eval(sei, ei, false, true, true);
    auto* sep = app.add_subcommand("eval-pipeline", "Two-stage pipeline vs baselines");
    add_eval(sep, ep, true, true, true);
    auto* see = app.add_subcommand("eval-exec", "Pipeline execution on pseudo-human subjects");
    add_eval(see, ee, true, true, false);
    see->add_option("--subjects", ee.exec.subjects, "Subject count")->capture_default_str();
    see->add_option("--frames", ee.exec.frames_per_subject, "Frames per subject")->capture_default_str();
    see->add_option("--range-frames", ee.exec.range_frames, "Babble frames for subject ranges")->capture_default_str();
    see->add_option("--max-distortion", ee.exec.max_distortion, "Distortion of the last subject")->capture_default_str();
    see->add_option("--subject-seed", ee.exec.subject_seed, "Subject seed")->capture_default_str();

    InferArgs inf;
    auto* sinf = app.add_subcommand("infer", "Motor command for one landmark file");
    sinf->add_option("--landmarks", inf.landmarks, "Landmark CSV")->required();
    sinf->add_option("--human-ranges", inf.human_ranges, "Human ranges CSV")->required();
    sinf->add_option("--robot-ranges", inf.robot_ranges, "Robot ranges CSV (default: from --gen)");
    sinf->add_option("--gen", inf.gen, "Generative checkpoint")->required();
    sinf->add_option("--inv", inf.inv, "Inverse checkpoint")->required();

    ReportArgs rep;
    auto* srep = app.add_subcommand("report", "Tables and figures from evaluation reports");
    srep->add_option("--in", rep.in, "Directory with evaluation reports")->required();
    srep->add_option("--out", rep.out, "Output directory (default: <in>/report)");
    srep->add_option("--format", rep.format, "Comma-separated: csv,png")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("argument", e.what());
    }

    try {
        if (b->parsed()) cmd_babble(babble, *b);
        if (sg->parsed()) cmd_train_gen(tg, *sg);
        if (si->parsed()) cmd_train_inv(ti, *si);
        if (sb->parsed()) cmd_train_baselines(tb, *sb);
        if (seg->parsed()) cmd_eval("gen", eg, *seg);
        if (sei->parsed()) cmd_eval("inv", ei, *sei);
        if (sep->parsed()) cmd_eval("pipeline", ep, *sep);
        if (see->parsed()) cmd_eval("exec", ee, *see);
        if (sinf->parsed()) cmd_infer(inf);
        if (srep->parsed()) cmd_report(rep, *srep);
    } catch (const Error& e) {
        return fail(std::string(to_string(e.kind())), e.what());
    } catch (const nlohmann::json::exception& e) {
        return fail("integrity", e.what());
    } catch (const std::filesystem::filesystem_error& e) {
        return fail("io", e.what());
    } catch (const std::exception& e) {
        return fail("internal", e.what());
    }
    return 0;
}

}  // namespace facemimic::cli
