#pragma once

#include <filesystem>
#include <stdexcept>

namespace vkg {

struct ArchiveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ArchiveKind { none, gzip, zip };

/// Sniffs the leading magic bytes of a file.
ArchiveKind detect_archive(const std::filesystem::path& path);

/// Streams a gzip file into `out`.
void gunzip_file(const std::filesystem::path& in, const std::filesystem::path& out);

/// Extracts the first delimited-text member (.csv/.txt/.tsv, else the first
/// regular member) of a zip archive into `out`. Supports stored and deflated
/// members; zip64 archives are rejected.
void unzip_first_delimited(const std::filesystem::path& in, const std::filesystem::path& out);

}  // namespace vkg
