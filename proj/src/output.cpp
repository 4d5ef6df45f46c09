#include "wefsim/output.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "wefsim/config.hpp"
#include "wefsim/errors.hpp"

namespace fs = std::filesystem;

namespace wefsim {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << content;
    if (!out) throw std::runtime_error(path + ": write failed");
}

std::string join_ids(const std::vector<int>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(ids[i]);
    }
    return out;
}

}  // namespace

void write_results_csv(const std::string& path, const RunResult& result, int clients) {
    std::ostringstream out;
    out << "round,acc_clean,acc_flagged,mean_acc_benign,mean_acc_free_rider,"
           "hma_benign,hma_free_rider,xi,exact_match,partition_match,flagged";
    for (int i = 0; i < clients; ++i) out << ",dev_" << i;
    out << "\n";
    for (const auto& r : result.records) {
        out << r.round << ',' << format_double(r.acc_clean) << ',' << format_double(r.acc_flagged)
            << ',' << format_double(r.mean_acc_benign) << ','
            << format_double(r.mean_acc_free_rider) << ',' << format_double(r.hma_benign) << ','
            << format_double(r.hma_free_rider) << ',';
        const bool separated = !r.dev.empty();
        if (separated) out << format_double(r.xi);
        out << ',' << (r.exact_match ? 1 : 0) << ',' << (r.partition_match ? 1 : 0) << ','
            << join_ids(r.flagged);
        for (int i = 0; i < clients; ++i) {
            out << ',';
            if (separated) out << format_double(r.dev[static_cast<std::size_t>(i)]);
        }
        out << "\n";
    }
    write_file(path, out.str());
}

void write_summary_json(const std::string& path, const RunResult& result) {
    nlohmann::json j;
    j["hma_benign"] = result.hma_benign;
    j["hma_free_rider"] = result.hma_free_rider;
    if (result.detection_round.has_value()) {
        j["detection_round"] = *result.detection_round;
    } else {
        j["detection_round"] = nullptr;
    }
    j["rounds"] = result.records.size();
    j["free_riders"] = result.free_riders;
    if (!result.records.empty()) {
        j["final_acc_clean"] = result.records.back().acc_clean;
        j["final_acc_flagged"] = result.records.back().acc_flagged;
    }
    write_file(path, j.dump(2) + "\n");
}

void write_wef_csv(const std::string& path, const WefMatrix& m) {
    std::ostringstream out;
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) {
            if (c) out << ',';
            out << m.at(r, c);
        }
        out << "\n";
    }
    write_file(path, out.str());
}

WefMatrix read_wef_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parse_error(path + ": cannot open file");
    std::vector<std::vector<int>> rows;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<int> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stoi(cell));
            } catch (const std::exception&) {
                throw parse_error(path + ":" + std::to_string(line_no) + ": bad count '" + cell + "'");
            }
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw parse_error(path + ":" + std::to_string(line_no) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw parse_error(path + ": empty grid");
    WefMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) m.at(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
    return m;
}

void write_dataset_csv(const std::string& path, const Dataset& d) {
    std::ostringstream out;
    for (int c = 0; c < d.feature_dim(); ++c) out << 'f' << c << ',';
    out << "label\n";
    for (int r = 0; r < d.size(); ++r) {
        for (int c = 0; c < d.feature_dim(); ++c) out << format_double(d.features(r, c)) << ',';
        out << d.labels[static_cast<std::size_t>(r)] << "\n";
    }
    write_file(path, out.str());
}

void write_run_outputs(const std::string& out_dir, const ExperimentConfig& cfg,
                       const RunResult& result) {
    fs::create_directories(out_dir);
    write_file((fs::path(out_dir) / "manifest.txt").string(), serialize_manifest(cfg));
    write_results_csv((fs::path(out_dir) / "results.csv").string(), result, cfg.clients);
    write_summary_json((fs::path(out_dir) / "summary.json").string(), result);
    if (!result.snapshots.empty()) {
        const fs::path snap_dir = fs::path(out_dir) / "snapshots";
        fs::create_directories(snap_dir);
        for (const auto& snap : result.snapshots) {
            for (std::size_t id = 0; id < snap.matrices.size(); ++id) {
                const std::string name =
                    "wef_client" + std::to_string(id) + "_round" + std::to_string(snap.round) + ".csv";
                write_wef_csv((snap_dir / name).string(), snap.matrices[id]);
            }
        }
    }
}

}  // namespace wefsim
