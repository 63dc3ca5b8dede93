#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "paris/common/error.hpp"
#include "paris/common/geometry.hpp"

namespace paris {

using Json = nlohmann::json;

/// Strict reader for one JSON object: typed access with path-qualified
/// errors, and rejection of keys that were never read.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path);

  bool has(const std::string& key) const;

  double number(const std::string& key);
  double number(const std::string& key, double fallback);
  std::int64_t integer(const std::string& key);
  std::int64_t integer(const std::string& key, std::int64_t fallback);
  bool boolean(const std::string& key, bool fallback);
  std::string string(const std::string& key);
  std::string string(const std::string& key, const std::string& fallback);
  Vec2 vec2(const std::string& key);
  Vec3 vec3(const std::string& key);
  Vec3 vec3(const std::string& key, const Vec3& fallback);
  std::vector<double> numbers(const std::string& key);

  /// Sub-object or array access; marks the key consumed.
  const Json& raw(const std::string& key);
  const Json* raw_optional(const std::string& key);
  ObjectReader object(const std::string& key);

  std::string child_path(const std::string& key) const { return path_ + "." + key; }
  const std::string& path() const { return path_; }

  /// Throws ParseError naming the first unknown key.
  void finish() const;

 private:
  const Json& at(const std::string& key);

  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace paris
