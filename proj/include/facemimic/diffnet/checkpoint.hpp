#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "facemimic/diffnet/graph.hpp"

namespace facemimic::diffnet {

/// model.json header: layer specs, node shapes, parameter shapes, Adam step, seed, and
/// caller metadata (a JSON object given as text).
std::string checkpoint_header(const LayerGraph& graph, const std::string& metadata_json = "{}");

/// model.bin payload: little-endian float32 parameters, then Adam first and second moments.
std::vector<std::uint8_t> checkpoint_payload(const LayerGraph& graph);

/// SHA-256 of header and payload together.
std::string checkpoint_hash(const LayerGraph& graph, const std::string& metadata_json = "{}");

void save_checkpoint(const LayerGraph& graph, const std::filesystem::path& dir,
                     const std::string& metadata_json = "{}");

/// Rebuilds the graph from model.json/model.bin. Throws IntegrityError on malformed or
/// truncated files. `metadata_json` receives the stored metadata if non-null.
LayerGraph load_checkpoint(const std::filesystem::path& dir, std::string* metadata_json = nullptr);

}  // namespace facemimic::diffnet
