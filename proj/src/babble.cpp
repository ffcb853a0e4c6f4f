#include "facemimic/babble.hpp"

#include "facemimic/errors.hpp"
#include "facemimic/util/csv.hpp"
#include "facemimic/util/hashing.hpp"
#include "facemimic/util/png_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <thread>

namespace facemimic {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kManifestFormat = "facemimic-babble/1";

std::string numbered(const char* pattern, int step) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, step);
    return buf;
}

std::string command_line(const BabbleRecord& r) {
    std::string line = std::to_string(r.step);
    for (double v : r.command.values()) {
        line += ',';
        line += format_number(v);
    }
    return line;
}

std::string commands_csv(const BabbleDataset& ds) {
    std::string out = "step";
    for (int n = 0; n < ds.motor_count; ++n) out += ",m" + std::to_string(n);
    out += '\n';
    for (const auto& r : ds.records) {
        out += command_line(r);
        out += '\n';
    }
    return out;
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

SplitCounts default_split(int steps) {
    if (steps < 1) throw ArgumentError("steps must be >= 1");
    const int held = steps / 16;
    return SplitCounts{steps - 2 * held, held, held};
}

std::span<const BabbleRecord> BabbleDataset::train() const {
    return std::span(records).subspan(0, static_cast<std::size_t>(split.train));
}
std::span<const BabbleRecord> BabbleDataset::val() const {
    return std::span(records).subspan(static_cast<std::size_t>(split.train), static_cast<std::size_t>(split.val));
}
std::span<const BabbleRecord> BabbleDataset::test() const {
    return std::span(records).subspan(static_cast<std::size_t>(split.train + split.val),
                                      static_cast<std::size_t>(split.test));
}

MotorCommand babble_command(int motors, std::uint64_t master_seed, int step) {
    Rng rng(derive_seed(master_seed, static_cast<std::uint64_t>(step)));
    std::vector<int> classes(static_cast<std::size_t>(motors));
    for (int& c : classes) c = static_cast<int>(uniform_index(rng, kMotorLevels));
    return MotorCommand::from_classes(classes);
}

BabbleDataset collect(const FaceRig& rig, int steps, std::uint64_t master_seed, int workers) {
    if (steps < 1) throw ArgumentError("collect: steps must be >= 1");
    workers = std::clamp(workers, 1, steps);
    BabbleDataset ds;
    ds.rig_id = rig.id();
    ds.master_seed = master_seed;
    ds.dims = rig.dims();
    ds.motor_count = rig.motor_count();
    ds.records.resize(static_cast<std::size_t>(steps));
    ds.split = default_split(steps);

    auto work = [&](int first) {
        for (int i = first; i < steps; i += workers) {
            BabbleRecord& r = ds.records[static_cast<std::size_t>(i)];
            r.step = i;
            r.command = babble_command(rig.motor_count(), master_seed, i);
            r.image = render(rig, r.command);
            r.landmarks = detect_landmarks(rig, r.image);
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }
    return ds;
}

BabbleDataset split(BabbleDataset ds, int n_train, int n_val, int n_test) {
    if (n_train < 0 || n_val < 0 || n_test < 0 ||
        static_cast<std::size_t>(n_train) + n_val + n_test != ds.records.size()) {
        throw ArgumentError("split counts " + std::to_string(n_train) + "/" + std::to_string(n_val) + "/" +
                            std::to_string(n_test) + " do not sum to " + std::to_string(ds.records.size()));
    }
    ds.split = SplitCounts{n_train, n_val, n_test};
    return ds;
}

std::string dataset_hash(const BabbleDataset& ds) {
    Sha256 h;
    h.update(ds.rig_id + "\n" + std::to_string(ds.master_seed) + "\n" + std::to_string(ds.dims.width) + "x" +
             std::to_string(ds.dims.height) + "\n" + std::to_string(ds.split.train) + "/" +
             std::to_string(ds.split.val) + "/" + std::to_string(ds.split.test) + "\n");
    for (const auto& r : ds.records) {
        h.update(command_line(r) + "\n");
        h.update(landmarks_to_csv(r.landmarks));
        const auto rgb = r.image.to_rgb8();
        h.update(std::span<const std::uint8_t>(rgb));
    }
    return h.finish_hex();
}

void save_dataset(const BabbleDataset& ds, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir / "images", ec);
    fs::create_directories(dir / "landmarks", ec);
    if (ec) throw IoError("cannot create dataset directory " + dir.string() + ": " + ec.message());

    json files = json::object();
    const std::string commands = commands_csv(ds);
    write_text_file(dir / "commands.csv", commands);
    files["commands.csv"] = sha256_hex(commands);
    for (const auto& r : ds.records) {
        const std::string lm_name = numbered("landmarks/lm_%06d.csv", r.step);
        const std::string lm_text = landmarks_to_csv(r.landmarks);
        write_text_file(dir / lm_name, lm_text);
        files[lm_name] = sha256_hex(lm_text);

        const std::string img_name = numbered("images/img_%06d.png", r.step);
        write_png(dir / img_name, r.image);
        files[img_name] = sha256_hex(std::span<const std::uint8_t>(read_bytes(dir / img_name)));
    }
    json manifest;
    manifest["format"] = kManifestFormat;
    manifest["rig_id"] = ds.rig_id;
    manifest["master_seed"] = ds.master_seed;
    manifest["dims"] = {{"width", ds.dims.width}, {"height", ds.dims.height}};
    manifest["motor_count"] = ds.motor_count;
    manifest["counts"] = {{"records", ds.records.size()},
                          {"train", ds.split.train},
                          {"val", ds.split.val},
                          {"test", ds.split.test}};
    manifest["dataset_hash"] = dataset_hash(ds);
    manifest["files"] = files;
    write_text_file(dir / "manifest.json", manifest.dump(1) + "\n");
}

BabbleDataset load_dataset(const fs::path& dir, const std::optional<std::string>& expected_rig_id) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw IntegrityError("missing manifest " + manifest_path.string());
    json manifest;
    try {
        manifest = json::parse(read_text_file(manifest_path));
    } catch (const json::exception& e) {
        throw IntegrityError("corrupt manifest " + manifest_path.string() + ": " + e.what());
    }

    BabbleDataset ds;
    json files;
    std::size_t count = 0;
    try {
        if (manifest.at("format") != kManifestFormat) throw IntegrityError("unknown dataset format");
        ds.rig_id = manifest.at("rig_id").get<std::string>();
        ds.master_seed = manifest.at("master_seed").get<std::uint64_t>();
        ds.dims = {manifest.at("dims").at("width").get<int>(), manifest.at("dims").at("height").get<int>()};
        ds.motor_count = manifest.at("motor_count").get<int>();
        const auto& counts = manifest.at("counts");
        count = counts.at("records").get<std::size_t>();
        ds.split = {counts.at("train").get<int>(), counts.at("val").get<int>(), counts.at("test").get<int>()};
        files = manifest.at("files");
    } catch (const json::exception& e) {
        throw IntegrityError("corrupt manifest " + manifest_path.string() + ": " + e.what());
    }
    if (expected_rig_id && *expected_rig_id != ds.rig_id) {
        throw IntegrityError("dataset " + dir.string() + " was collected on rig " + ds.rig_id + ", expected " +
                             *expected_rig_id);
    }
    if (static_cast<std::size_t>(ds.split.total()) != count) throw IntegrityError("manifest split does not cover records");

    auto checked_text = [&](const std::string& name) {
        if (!files.contains(name)) throw IntegrityError("manifest has no checksum for " + name);
        const fs::path p = dir / name;
        if (!fs::exists(p)) throw IntegrityError("missing dataset file " + name);
        std::string text = read_text_file(p);
        if (sha256_hex(text) != files[name].get<std::string>()) throw IntegrityError("checksum mismatch: " + name);
        return text;
    };

    const std::string commands = checked_text("commands.csv");
    const auto lines = split_lines(commands);
    if (lines.size() != count + 1) {
        throw IntegrityError("commands.csv has " + std::to_string(lines.size() - 1) + " rows, manifest says " +
                             std::to_string(count));
    }
    std::size_t images_on_disk = 0;
    for (const auto& e : fs::directory_iterator(dir / "images")) images_on_disk += e.is_regular_file();
    if (images_on_disk != count) {
        throw IntegrityError("image count mismatch: " + std::to_string(images_on_disk) + " files, manifest says " +
                             std::to_string(count));
    }

    ds.records.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        BabbleRecord& r = ds.records[i];
        const auto fields = split_fields(lines[i + 1]);
        if (fields.size() != static_cast<std::size_t>(ds.motor_count) + 1) {
            throw IntegrityError("commands.csv row " + std::to_string(i) + " has wrong field count");
        }
        r.step = static_cast<int>(parse_integer(fields[0]));
        if (r.step != static_cast<int>(i)) throw IntegrityError("commands.csv steps out of order");
        std::vector<double> values;
        for (std::size_t f = 1; f < fields.size(); ++f) values.push_back(parse_number(fields[f]));
        r.command = MotorCommand(std::move(values));

        const std::string lm_name = numbered("landmarks/lm_%06d.csv", r.step);
        r.landmarks = landmarks_from_csv(checked_text(lm_name));

        const std::string img_name = numbered("images/img_%06d.png", r.step);
        if (!files.contains(img_name)) throw IntegrityError("manifest has no checksum for " + img_name);
        if (!fs::exists(dir / img_name)) throw IntegrityError("missing dataset file " + img_name);
        const auto bytes = read_bytes(dir / img_name);
        if (sha256_hex(std::span<const std::uint8_t>(bytes)) != files[img_name].get<std::string>()) {
            throw IntegrityError("checksum mismatch: " + img_name);
        }
        r.image = read_png(dir / img_name);
        if (r.image.dims() != ds.dims) throw IntegrityError("image dims mismatch in " + img_name);
    }
    if (manifest.contains("dataset_hash") && manifest["dataset_hash"].get<std::string>() != dataset_hash(ds)) {
        throw IntegrityError("dataset hash mismatch for " + dir.string());
    }
    return ds;
}

}  // namespace facemimic
