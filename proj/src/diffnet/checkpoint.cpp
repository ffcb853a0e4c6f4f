#include "facemimic/diffnet/checkpoint.hpp"

#include "facemimic/errors.hpp"
#include "facemimic/util/csv.hpp"
#include "facemimic/util/hashing.hpp"

#include <json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace facemimic::diffnet {

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kFormat = "facemimic-model/1";

json shape_json(Shape s) { return json::array({s.c, s.h, s.w}); }

Shape shape_from_json(const json& j) { return Shape{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>()}; }

void append_floats(std::vector<std::uint8_t>& out, const Tensor& t) {
    for (float v : t.values()) {
        std::uint32_t bits = std::bit_cast<std::uint32_t>(v);
        for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
}

void read_floats(const std::vector<std::uint8_t>& in, std::size_t& pos, Tensor& t) {
    if (pos + 4 * t.size() > in.size()) throw IntegrityError("model.bin is truncated");
    for (float& v : t.values()) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(in[pos++]) << (8 * b);
        v = std::bit_cast<float>(bits);
    }
}

json header_json(const LayerGraph& graph, const std::string& metadata_json) {
    json layers = json::array();
    for (const auto& l : graph.layers()) {
        layers.push_back({{"kind", to_string(l.kind)},
                          {"inputs", l.inputs},
                          {"out_channels", l.out_channels},
                          {"kernel", l.kernel},
                          {"stride", l.stride},
                          {"bias", l.bias}});
    }
    json shapes = json::array();
    for (int i = 0; i < graph.node_count(); ++i) shapes.push_back(shape_json(graph.node_shape(i)));
    json params = json::array();
    for (const auto& p : graph.params()) params.push_back(shape_json(p.shape()));
    json doc;
    doc["format"] = kFormat;
    doc["input_shape"] = shape_json(graph.input_shape());
    doc["layers"] = layers;
    doc["node_shapes"] = shapes;
    doc["param_shapes"] = params;
    doc["parameter_count"] = graph.parameter_count();
    doc["adam_step"] = graph.adam().step;
    doc["has_moments"] = graph.adam().m.size() == graph.params().size() && !graph.params().empty();
    doc["seed"] = graph.seed();
    doc["metadata"] = json::parse(metadata_json);
    return doc;
}

}  // namespace

std::string checkpoint_header(const LayerGraph& graph, const std::string& metadata_json) {
    return header_json(graph, metadata_json).dump(1) + "\n";
}

std::vector<std::uint8_t> checkpoint_payload(const LayerGraph& graph) {
    std::vector<std::uint8_t> out;
    out.reserve(graph.parameter_count() * 12);
    for (const auto& p : graph.params()) append_floats(out, p);
    const AdamState& s = graph.adam();
    if (s.m.size() == graph.params().size()) {
        for (const auto& m : s.m) append_floats(out, m);
        for (const auto& v : s.v) append_floats(out, v);
    }
    return out;
}

std::string checkpoint_hash(const LayerGraph& graph, const std::string& metadata_json) {
    Sha256 h;
    h.update(checkpoint_header(graph, metadata_json));
    const auto payload = checkpoint_payload(graph);
    h.update(std::span<const std::uint8_t>(payload));
    return h.finish_hex();
}

void save_checkpoint(const LayerGraph& graph, const fs::path& dir, const std::string& metadata_json) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory " + dir.string() + ": " + ec.message());
    write_text_file(dir / "model.json", checkpoint_header(graph, metadata_json));
    const auto payload = checkpoint_payload(graph);
    std::ofstream out(dir / "model.bin", std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("cannot write " + (dir / "model.bin").string());
}

LayerGraph load_checkpoint(const fs::path& dir, std::string* metadata_json) {
    if (!fs::exists(dir / "model.json")) throw IntegrityError("missing checkpoint header " + (dir / "model.json").string());
    json doc;
    try {
        doc = json::parse(read_text_file(dir / "model.json"));
    } catch (const json::exception& e) {
        throw IntegrityError("corrupt model.json: " + std::string(e.what()));
    }
    LayerGraph graph;
    bool has_moments = false;
    try {
        if (doc.at("format") != kFormat) throw IntegrityError("unknown checkpoint format");
        graph = LayerGraph(shape_from_json(doc.at("input_shape")));
        for (const auto& l : doc.at("layers")) {
            LayerSpec spec;
            spec.kind = layer_kind_from_string(l.at("kind").get<std::string>());
            spec.inputs = l.at("inputs").get<std::vector<int>>();
            spec.out_channels = l.at("out_channels").get<int>();
            spec.kernel = l.at("kernel").get<int>();
            spec.stride = l.at("stride").get<int>();
            spec.bias = l.at("bias").get<bool>();
            graph.add_layer(spec);
        }
        const auto& shapes = doc.at("node_shapes");
        if (shapes.size() != static_cast<std::size_t>(graph.node_count())) throw IntegrityError("node count mismatch");
        for (int i = 0; i < graph.node_count(); ++i) {
            if (shape_from_json(shapes.at(static_cast<std::size_t>(i))) != graph.node_shape(i)) {
                throw IntegrityError("node " + std::to_string(i) + " shape mismatch");
            }
        }
        graph.initialize(doc.at("seed").get<std::uint64_t>());
        graph.adam().step = doc.at("adam_step").get<long long>();
        has_moments = doc.at("has_moments").get<bool>();
        if (metadata_json) *metadata_json = doc.at("metadata").dump();
    } catch (const json::exception& e) {
        throw IntegrityError("malformed model.json: " + std::string(e.what()));
    }

    std::ifstream in(dir / "model.bin", std::ios::binary);
    if (!in) throw IntegrityError("missing checkpoint payload " + (dir / "model.bin").string());
    const std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    std::size_t pos = 0;
    for (auto& p : graph.params()) read_floats(bytes, pos, p);
    if (has_moments) {
        AdamState& s = graph.adam();
        s.m.clear();
        s.v.clear();
        for (const auto& p : graph.params()) {
            s.m.emplace_back(p.n(), p.shape());
            s.v.emplace_back(p.n(), p.shape());
        }
        for (auto& m : s.m) read_floats(bytes, pos, m);
        for (auto& v : s.v) read_floats(bytes, pos, v);
    }
    if (pos != bytes.size()) throw IntegrityError("model.bin has trailing bytes");
    for (const auto& p : graph.params()) p.check_finite("loaded checkpoint");
    return graph;
}

}  // namespace facemimic::diffnet
