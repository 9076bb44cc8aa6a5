#pragma once

// Output plumbing: atomic file writes (temp + rename), a stable config hash,
// and the run manifest.

#include <filesystem>
#include <functional>
#include <string>

namespace homog {

// Writes via a temp file in the same directory, then renames into place.
void atomic_write(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer);

// FNV-1a 64-bit over raw bytes, lowercase hex.
std::string fnv1a_hex(const std::string& bytes);

struct Manifest {
    std::string experiment;
    std::string config_hash;
    std::string tool_version;
    double wall_seconds = 0.0;
};

void write_manifest(const std::filesystem::path& path, const Manifest& m);

inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace homog
