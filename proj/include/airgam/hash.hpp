#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace airgam {

/// FNV-1a 64-bit content fingerprint (not cryptographic; used to detect
/// identical inputs/outputs across runs).
std::uint64_t fnv1a64(std::string_view bytes);
std::string fnv1a64_hex(std::string_view bytes);

/// Fingerprint of a file's bytes; throws MissingArtifact when unreadable.
std::string hash_file(const std::string& path);

} // namespace airgam
