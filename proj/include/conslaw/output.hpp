#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "conslaw/grid.hpp"
#include "conslaw/uq.hpp"

namespace conslaw {

inline constexpr int kSnapshotFormatVersion = 1;

/// Version of this tool.
std::string tool_version();
/// Source revision captured at configure time ("unknown" outside git).
std::string source_revision();
/// Current UTC time as 2026-01-31T12:00:00Z.
std::string utc_timestamp();

/// Reproducibility stamp carried by every output file.
struct OutputHeader {
  std::string tool_version;
  std::string revision;
  std::string config_digest;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> sample;
  std::optional<int> level;
  std::string created;
  /// Free-form extra lines, written after the standard keys.
  std::vector<std::pair<std::string, std::string>> extra;

  /// Header for this build with the current timestamp.
  static OutputHeader make(const std::string& config_digest);
  std::vector<std::pair<std::string, std::string>> lines() const;
};

struct Snapshot {
  Field field;
  OutputHeader header;
  double t = 0.0;
  std::vector<std::string> components;
};

/// Text header of "key: value" lines, a blank line, then the interior values
/// as little-endian binary64, component-major with x fastest.
void write_snapshot(const std::filesystem::path& path, const Field& field,
                    const OutputHeader& header, double t,
                    const std::vector<std::string>& components);
Snapshot read_snapshot(const std::filesystem::path& path);

/// Plot-ready CSV of the interior: cell centre coordinates then one column
/// per component.
void write_field_csv(const std::filesystem::path& path, const Field& field,
                     const OutputHeader& header, double t,
                     const std::vector<std::string>& components);

/// "# key: value" lines for CSV outputs.
std::string csv_header_comment(const OutputHeader& header);

/// Writes a text file, creating parent directories; failures are IoError
/// naming the path.
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Writes every estimate of `result`: moments as <name>_mean_t<i>.snap and
/// <name>_variance_t<i>.snap, histograms and structure functions as
/// <name>_t<i>.csv. Returns the paths written.
std::vector<std::filesystem::path> write_stats(const UqResult& result, const OutputHeader& header,
                                               const std::filesystem::path& directory,
                                               const std::vector<FunctionalSpec>& specs,
                                               const std::vector<std::string>& components);
std::vector<std::filesystem::path> write_stats(const MlmcResult& result, const OutputHeader& header,
                                               const std::filesystem::path& directory,
                                               const std::vector<std::string>& components);

}  // namespace conslaw
