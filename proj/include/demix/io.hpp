#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "demix/linalg.hpp"

namespace demix {

std::string read_text(const std::filesystem::path& path);

/// Writes through a sibling temp file and renames it over `path`.
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& doc);

/// Vector wire format: {"len": N, "data": [...]}.
nlohmann::json vector_to_json(std::span<const double> v);
Vector vector_from_json(const nlohmann::json& doc, const std::string& path = "$");

/// Reads a JSON array of numbers, reporting `path` on failure.
Vector number_array(const nlohmann::json& node, const std::string& path);

/// %.17g, the shortest fixed width that round-trips every double.
std::string format_double(double v);

}  // namespace demix
