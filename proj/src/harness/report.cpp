#include "facemimic/harness/report.hpp"

#include "facemimic/errors.hpp"
#include "facemimic/util/csv.hpp"

#include <json.hpp>

#include <algorithm>

namespace facemimic {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string report_csv(const EvalReport& report) {
    std::string out = "method,metric,mean,stderr,n_seeds\n";
    for (const auto& r : report.rows) {
        out += r.method + "," + r.metric + "," + format_number(r.mean) + "," + format_number(r.stderr_) + "," +
               std::to_string(r.n_seeds) + "\n";
    }
    return out;
}

std::string report_json(const EvalReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"method", r.method},
                        {"metric", r.metric},
                        {"mean", r.mean},
                        {"stderr", r.stderr_},
                        {"n_seeds", r.n_seeds},
                        {"per_seed", r.per_seed}});
    }
    json config = report.config_json.empty() ? json::object() : json::parse(report.config_json);
    json j = {{"format", "facemimic-report/1"},
              {"experiment", report.experiment},
              {"seeds", report.seeds},
              {"dataset_hash", report.dataset_hash},
              {"config", config},
              {"note", report.note},
              {"rows", rows}};
    return j.dump(1) + "\n";
}

EvalReport report_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        if (j.at("format") != "facemimic-report/1") throw IntegrityError("unknown report format");
        EvalReport r;
        r.experiment = j.at("experiment").get<std::string>();
        r.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        r.dataset_hash = j.at("dataset_hash").get<std::string>();
        r.config_json = j.at("config").dump();
        r.note = j.at("note").get<std::string>();
        for (const auto& row : j.at("rows")) {
            r.rows.push_back(ReportRow{row.at("method").get<std::string>(), row.at("metric").get<std::string>(),
                                       row.at("mean").get<double>(), row.at("stderr").get<double>(),
                                       row.at("n_seeds").get<int>(), row.at("per_seed").get<std::vector<double>>()});
        }
        return r;
    } catch (const json::exception& e) {
        throw IntegrityError(std::string("malformed report: ") + e.what());
    }
}

std::vector<fs::path> write_report(const EvalReport& report, const fs::path& dir) {
    if (report.experiment.empty()) throw ArgumentError("report has no experiment tag");
    fs::create_directories(dir);
    const fs::path j = dir / (report.experiment + ".json");
    const fs::path c = dir / (report.experiment + ".csv");
    write_text_file(j, report_json(report));
    write_text_file(c, report_csv(report));
    return {j, c};
}

EvalReport read_report(const fs::path& json_path) { return report_from_json(read_text_file(json_path)); }

std::vector<EvalReport> read_reports(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw IoError("report directory " + dir.string() + " does not exist");
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".json") paths.push_back(e.path());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<EvalReport> out;
    for (const auto& p : paths) {
        const std::string text = read_text_file(p);
        if (text.find("\"facemimic-report/1\"") == std::string::npos) continue;  // config snapshots etc.
        out.push_back(report_from_json(text));
    }
    return out;
}

}  // namespace facemimic
