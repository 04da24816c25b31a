#include "demix/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "demix/errors.hpp"

namespace demix {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

nlohmann::json read_json(const std::filesystem::path& path) {
  const std::string text = read_text(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("$", path.string() + " is not valid JSON: " + e.what());
  }
}

void write_json_atomic(const std::filesystem::path& path, const nlohmann::json& doc) {
  write_text_atomic(path, doc.dump(2) + "\n");
}

Vector number_array(const nlohmann::json& node, const std::string& path) {
  if (!node.is_array()) throw ParseError(path, "expected an array of numbers");
  Vector out;
  out.reserve(node.size());
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto& v = node[i];
    if (!v.is_number()) throw ParseError(path + "[" + std::to_string(i) + "]", "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(path + "[" + std::to_string(i) + "]", "non-finite value");
    out.push_back(d);
  }
  return out;
}

nlohmann::json vector_to_json(std::span<const double> v) {
  return {{"len", v.size()}, {"data", std::vector<double>(v.begin(), v.end())}};
}

Vector vector_from_json(const nlohmann::json& doc, const std::string& path) {
  if (!doc.is_object()) throw ParseError(path, "expected an object with len and data");
  if (!doc.contains("len") || !doc["len"].is_number_integer() || doc["len"].get<std::int64_t>() < 0) {
    throw ParseError(path + ".len", "missing or not a non-negative integer");
  }
  if (!doc.contains("data")) throw ParseError(path + ".data", "missing");
  Vector data = number_array(doc["data"], path + ".data");
  const auto len = doc["len"].get<std::size_t>();
  if (data.size() != len) {
    throw ParseError(path + ".data", "has " + std::to_string(data.size()) + " entries but len is " +
                                         std::to_string(len));
  }
  return data;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace demix
