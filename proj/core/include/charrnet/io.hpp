#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace charrnet {

// Writes to "<path>.tmp" and renames over `path`. IoError on failure.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace charrnet
