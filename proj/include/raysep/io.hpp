// SPDX-License-Identifier: Apache-2.0
//
// On-disk formats.
//
// Every file starts with a provenance line:
//   # raysep <version> config=<16 hex digits> seed=<n>
// CSV files continue with further '#' comment lines, then a column header.
//
// Snapshot files hold one block per frequency bin:
//   M,L,frequency_hz
//   M rows of 2L values: re,im of snapshot 0, re,im of snapshot 1, ...
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "raysep/array_model.hpp"
#include "raysep/simulator.hpp"

namespace raysep {

inline constexpr const char* kVersion = "0.1.0";

struct Provenance {
    std::string config_hash;  // FNV-1a 64 of the canonical config text, hex
    std::uint64_t seed = 0;

    std::string header_line() const;  // without trailing newline
    nlohmann::ordered_json to_json() const;
};

std::string config_hash(const std::string& canonical_text);

void write_snapshots(std::ostream& os, const std::vector<SnapshotMatrix>& bins, const Provenance& prov);
/// Throws ValidationError on malformed content.
std::vector<SnapshotMatrix> read_snapshots(std::istream& is);

void write_spectrum_csv(std::ostream& os, const AngleGrid& grid, const Eigen::VectorXd& values,
                        const std::string& algorithm, const Provenance& prov);

nlohmann::ordered_json truth_to_json(const RaypathSet& paths, const Provenance& prov);

/// Writes `text` to `path`, creating parent directories. Throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);
/// Throws IoError.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace raysep
