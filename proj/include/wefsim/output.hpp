#pragma once

#include <string>

#include "wefsim/data.hpp"
#include "wefsim/sim.hpp"
#include "wefsim/wef.hpp"

namespace wefsim {

// Shortest exact decimal representation (%.17g); used everywhere doubles
// are written so reruns are byte-identical.
std::string format_double(double v);

void write_results_csv(const std::string& path, const RunResult& result, int clients);
void write_summary_json(const std::string& path, const RunResult& result);

void write_wef_csv(const std::string& path, const WefMatrix& m);
WefMatrix read_wef_csv(const std::string& path);

void write_dataset_csv(const std::string& path, const Dataset& d);

// manifest.txt, results.csv, summary.json, and one snapshot grid per
// client per configured snapshot round under <out_dir>/snapshots/.
void write_run_outputs(const std::string& out_dir, const ExperimentConfig& cfg,
                       const RunResult& result);

}  // namespace wefsim
