// SPDX-License-Identifier: Apache-2.0
#include "raysep/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "raysep/error.hpp"
#include "raysep/format.hpp"

namespace raysep {

std::string config_hash(const std::string& canonical_text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canonical_text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string Provenance::header_line() const {
    return std::string("# raysep ") + kVersion + " config=" + config_hash + " seed=" + std::to_string(seed);
}

nlohmann::ordered_json Provenance::to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "raysep";
    j["version"] = kVersion;
    j["config"] = config_hash;
    j["seed"] = seed;
    return j;
}

void write_snapshots(std::ostream& os, const std::vector<SnapshotMatrix>& bins, const Provenance& prov) {
    os << prov.header_line() << '\n';
    os << "# snapshots: " << bins.size() << " block(s); each block is a line M,L,frequency_hz then M rows"
       << " of interleaved re,im pairs, one pair per snapshot\n";
    for (const auto& b : bins) {
        os << b.num_sensors() << ',' << b.num_snapshots() << ',' << format_double(b.frequency) << '\n';
        for (Eigen::Index m = 0; m < b.data.rows(); ++m) {
            for (Eigen::Index l = 0; l < b.data.cols(); ++l) {
                if (l) os << ',';
                os << format_double(b.data(m, l).real()) << ',' << format_double(b.data(m, l).imag());
            }
            os << '\n';
        }
    }
}

namespace {

std::vector<double> parse_row(const std::string& line, std::size_t line_no) {
    std::vector<double> out;
    const char* p = line.data();
    const char* end = p + line.size();
    while (p <= end) {
        const char* comma = std::find(p, end, ',');
        double v = 0.0;
        const auto res = std::from_chars(p, comma, v);
        if (res.ec != std::errc() || res.ptr != comma)
            throw ValidationError("snapshots line " + std::to_string(line_no) + ": bad number");
        out.push_back(v);
        if (comma == end) break;
        p = comma + 1;
    }
    return out;
}

}  // namespace

std::vector<SnapshotMatrix> read_snapshots(std::istream& is) {
    std::vector<SnapshotMatrix> bins;
    std::string line;
    std::size_t line_no = 0;
    auto next_data_line = [&](std::string& out) {
        while (std::getline(is, out)) {
            ++line_no;
            if (!out.empty() && out.back() == '\r') out.pop_back();
            if (out.empty() || out[0] == '#') continue;
            return true;
        }
        return false;
    };
    while (next_data_line(line)) {
        const auto head = parse_row(line, line_no);
        if (head.size() != 3 || head[0] < 1 || head[1] < 1 || head[0] != std::floor(head[0]) ||
            head[1] != std::floor(head[1]) || !(head[2] > 0.0))
            throw ValidationError("snapshots line " + std::to_string(line_no) +
                                  ": expected block header M,L,frequency_hz");
        const auto M = static_cast<Eigen::Index>(head[0]);
        const auto L = static_cast<Eigen::Index>(head[1]);
        SnapshotMatrix b;
        b.frequency = head[2];
        b.data.resize(M, L);
        for (Eigen::Index m = 0; m < M; ++m) {
            if (!next_data_line(line))
                throw ValidationError("snapshots: block truncated before row " + std::to_string(m));
            const auto row = parse_row(line, line_no);
            if (row.size() != static_cast<std::size_t>(2 * L))
                throw ValidationError("snapshots line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(2 * L) + " values");
            for (Eigen::Index l = 0; l < L; ++l)
                b.data(m, l) = cdouble(row[static_cast<std::size_t>(2 * l)],
                                       row[static_cast<std::size_t>(2 * l + 1)]);
        }
        if (!bins.empty() && (bins.front().data.rows() != M || bins.front().data.cols() != L))
            throw ValidationError("snapshots: blocks differ in size");
        bins.push_back(std::move(b));
    }
    if (is.bad()) throw IoError("snapshots: read failure");
    if (bins.empty()) throw ValidationError("snapshots: no data blocks");
    return bins;
}

void write_spectrum_csv(std::ostream& os, const AngleGrid& grid, const Eigen::VectorXd& values,
                        const std::string& algorithm, const Provenance& prov) {
    os << prov.header_line() << '\n';
    os << "# algorithm=" << algorithm << '\n';
    os << "angle_deg,value\n";
    for (std::size_t q = 0; q < grid.size(); ++q)
        os << format_double(grid[q]) << ',' << format_double(values[static_cast<Eigen::Index>(q)]) << '\n';
}

nlohmann::ordered_json truth_to_json(const RaypathSet& paths, const Provenance& prov) {
    nlohmann::ordered_json j;
    j["provenance"] = prov.to_json();
    j["angles_deg"] = nlohmann::ordered_json::array();
    j["amplitudes"] = nlohmann::ordered_json::array();
    j["delays_s"] = nlohmann::ordered_json::array();
    for (const auto& p : paths.paths()) {
        j["angles_deg"].push_back(p.angle_deg);
        j["amplitudes"].push_back({p.amplitude.real(), p.amplitude.imag()});
        j["delays_s"].push_back(p.delay_s);
    }
    return j;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failed for " + path.string());
    return buf.str();
}

}  // namespace raysep
