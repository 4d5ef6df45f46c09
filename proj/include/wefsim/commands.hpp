#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace wefsim {

// Exit codes shared by the CLI: 0 success, 1 usage/config error, 2 runtime failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitRuntime = 2;

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, std::optional<int> threads_override,
            std::ostream& out, std::ostream& err, int verbosity = 0);

int cmd_inspect_partition(const std::string& config_path, std::ostream& out, std::ostream& err);

// Re-emits the snapshot grids for the requested rounds into to_dir
// (default <run_dir>/heatmaps). Missing rounds list what is available.
int cmd_export_heatmaps(const std::string& run_dir, const std::vector<int>& rounds,
                        const std::string& to_dir, std::ostream& out, std::ostream& err);

}  // namespace wefsim
