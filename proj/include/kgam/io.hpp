#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"

namespace kgam {

// Throws DataError if the file cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

// Writes to a sibling temporary file, then renames it over path, so readers
// never see a partial file.  Throws DataError when the target is unwritable.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

nlohmann::json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
std::string dump_json(const nlohmann::json& j);

// %.17g
std::string format_double(double v);

}  // namespace kgam
