#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "nlsa/accuracy.hpp"
#include "nlsa/network.hpp"
#include "nlsa/segment_table.hpp"
#include "nlsa/systolic_config.hpp"

namespace nlsa {

/// Ordered `key = value` document; '#' starts a comment line. All project
/// file formats (tables, configs, manifests) are built on it so they stay
/// diffable and byte-stable.
struct KvDoc {
    std::vector<std::pair<std::string, std::string>> entries;

    void add(const std::string& key, const std::string& value);
    bool has(const std::string& key) const;
    const std::string& get(const std::string& key) const;
    std::string get_or(const std::string& key, const std::string& fallback) const;
};

KvDoc parse_kv(const std::string& text);
std::string serialize_kv(const KvDoc& doc);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Shortest representation that round-trips an IEEE double exactly.
std::string format_double(double v);
/// Fixed six-decimal form used in CSV metric columns.
std::string format_fixed(double v);
double parse_double(const std::string& text);

/// FNV-1a 64-bit, for config hashes in report metadata.
std::uint64_t fnv1a64(const std::string& text);

// Segment tables round-trip bit-exactly: the k/b arrays are stored as raw
// integers.
std::string serialize_table(const SegmentTable& table);
SegmentTable deserialize_table(const std::string& text);
void write_table_file(const std::filesystem::path& path, const SegmentTable& table);
SegmentTable read_table_file(const std::filesystem::path& path);

// Config files accept exactly the documented keys; unknown keys are rejected.
std::string serialize_config(const SystolicConfig& cfg);
SystolicConfig deserialize_config(const std::string& text);
SystolicConfig read_config_file(const std::filesystem::path& path);
void write_config_file(const std::filesystem::path& path, const SystolicConfig& cfg);
std::string config_hash(const SystolicConfig& cfg);

// Network manifest plus sibling little-endian int16 weight containers.
void write_network(const std::filesystem::path& manifest_path, const NetworkSpec& net);
NetworkSpec read_network(const std::filesystem::path& manifest_path);

void write_weights_file(const std::filesystem::path& path, const QuantizedMatrix& m);
QuantizedMatrix read_weights_file(const std::filesystem::path& path, Eigen::Index rows,
                                  Eigen::Index cols, FixedPointFormat fmt);

void write_eval_set(const std::filesystem::path& path, const EvalSet& set);
EvalSet read_eval_set(const std::filesystem::path& path);

/// CSV with one metadata comment line (tool version, config hash,
/// calibration constants) followed by a header row. Rows are buffered and
/// written in insertion order; emission is byte-deterministic.
class CsvWriter {
  public:
    CsvWriter(std::string meta, std::vector<std::string> header);

    void add_row(std::vector<std::string> cells);
    std::string str() const;
    void write(const std::filesystem::path& path) const;

  private:
    std::string meta_;
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

}  // namespace nlsa
