#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "railcrowd/desttable.hpp"
#include "railcrowd/estimator.hpp"
#include "railcrowd/loctable.hpp"
#include "railcrowd/network.hpp"

namespace railcrowd {

inline constexpr std::uint32_t kArchiveVersion = 1;

/// Grid and sampling parameters the tables were built with.
struct ArchiveParameters {
  double step = 15.0;
  std::uint64_t horizon = 0;  // 0: sized per route
  std::uint64_t samples = 20000;
  Timestamp bin_width = kDefaultBinWidth;
  std::uint64_t seed = 1;
};

/// Everything the online evaluator needs, as stored on disk.
struct OperationalDatabase {
  ArchiveParameters parameters;
  std::int64_t built_at = 0;  // unix seconds
  ActionTimeModel model;
  std::vector<LocationTable> tables;
  DestinationTable destinations;
};

struct ArchiveSummary {
  std::uint64_t fingerprint = 0;
  std::uint64_t bytes = 0;
  std::size_t variables = 0;
  std::size_t location_tables = 0;
  std::size_t destination_records = 0;
  bool destination_empty = false;
};

class ArchiveError : public DataError {
 public:
  using DataError::DataError;
};

/// Writes a single-file archive (layout in docs/archive_format.md).
ArchiveSummary save_archive(const std::string& path, const NetworkTopology& topology, const OperationalDatabase& db);

/// Reads an archive and checks magic, version, checksum and that it was built
/// for `topology`. Throws ArchiveError on any mismatch.
OperationalDatabase load_archive(const std::string& path, const NetworkTopology& topology);

}  // namespace railcrowd
