// SPDX-License-Identifier: Apache-2.0
//
// Subcommands behind the raysep executable. Exit codes: 0 success, 2 invalid
// input, 3 I/O failure, 4 numerical failure.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>

namespace raysep {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitIo = 3, kExitNumerical = 4 };

struct CliOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> out;        // overrides output.directory
    std::optional<std::filesystem::path> snapshots;  // estimate input
    std::optional<std::uint64_t> seed;               // overrides the config seed
    std::optional<int> threads;                      // bench workers; falls back to RAYSEP_THREADS
};

/// Writes snapshots.csv and truth.json.
void cmd_simulate(const CliOptions& opts);
/// Writes spectrum_<algorithm>.csv per algorithm, peaks.json and diagnostics.json.
void cmd_estimate(const CliOptions& opts);
/// Writes report.csv and report.json.
void cmd_bench(const CliOptions& opts);

/// Worker count: explicit value, else RAYSEP_THREADS, else 1.
int resolve_threads(std::optional<int> requested);

/// Runs `body`, printing any error to `err` and mapping it to an exit code.
int guarded(const std::function<void()>& body, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace raysep
