#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nscale {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);
std::string timestamp_utc();

// Record of one CLI run: config hash, code version, timestamps, produced
// files with checksums. Deterministic stages reproduce identical checksums.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string code_version;
  std::string started;
  std::string finished;

  struct FileEntry {
    std::string path;
    std::string sha256;
    std::uint64_t bytes;
  };
  std::vector<FileEntry> files;

  void add_file(const std::string& path);
  void write(const std::string& path) const;
};

}  // namespace nscale
