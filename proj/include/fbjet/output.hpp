#pragma once

// File emission. Every file appears under its final name only once it is
// complete.

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include <json.hpp>

namespace fbjet {

/// Writes content to a temporary file next to path, then renames it.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Same, with the content produced by a stream writer.
void write_atomic(const std::filesystem::path& path,
                  const std::function<void(std::ostream&)>& writer);

/// Output directory: FBJET_OUTPUT_DIR if set, else the configured one.
std::filesystem::path output_directory(const std::string& configured);

/// Pretty-printed JSON with a trailing newline.
std::string report_text(const nlohmann::json& report);

}  // namespace fbjet
