#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "facemimic/harness/evaluation.hpp"

namespace facemimic {

/// `method,metric,mean,stderr,n_seeds`
std::string report_csv(const EvalReport& report);

/// Canonical JSON: rows with per-seed values, seeds, dataset hash, config snapshot.
std::string report_json(const EvalReport& report);
/// Throws IntegrityError on malformed input.
EvalReport report_from_json(const std::string& text);

/// Writes <experiment>.json and <experiment>.csv; returns the paths written.
std::vector<std::filesystem::path> write_report(const EvalReport& report, const std::filesystem::path& dir);
EvalReport read_report(const std::filesystem::path& json_path);

/// All *.json reports in a directory, sorted by file name.
std::vector<EvalReport> read_reports(const std::filesystem::path& dir);

}  // namespace facemimic
