#include "paris/common/json_reader.hpp"

namespace paris {

ObjectReader::ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw ParseError(path_ + ": expected an object");
}

bool ObjectReader::has(const std::string& key) const { return j_.contains(key); }

const Json& ObjectReader::at(const std::string& key) {
  auto it = j_.find(key);
  if (it == j_.end()) throw ParseError(child_path(key) + ": missing required field");
  seen_.insert(key);
  return *it;
}

double ObjectReader::number(const std::string& key) {
  const Json& v = at(key);
  if (!v.is_number()) throw ParseError(child_path(key) + ": expected a number");
  return v.get<double>();
}

double ObjectReader::number(const std::string& key, double fallback) {
  return has(key) ? number(key) : fallback;
}

std::int64_t ObjectReader::integer(const std::string& key) {
  const Json& v = at(key);
  if (!v.is_number_integer()) throw ParseError(child_path(key) + ": expected an integer");
  return v.get<std::int64_t>();
}

std::int64_t ObjectReader::integer(const std::string& key, std::int64_t fallback) {
  return has(key) ? integer(key) : fallback;
}

bool ObjectReader::boolean(const std::string& key, bool fallback) {
  if (!has(key)) return fallback;
  const Json& v = at(key);
  if (!v.is_boolean()) throw ParseError(child_path(key) + ": expected a boolean");
  return v.get<bool>();
}

std::string ObjectReader::string(const std::string& key) {
  const Json& v = at(key);
  if (!v.is_string()) throw ParseError(child_path(key) + ": expected a string");
  return v.get<std::string>();
}

std::string ObjectReader::string(const std::string& key, const std::string& fallback) {
  return has(key) ? string(key) : fallback;
}

std::vector<double> ObjectReader::numbers(const std::string& key) {
  const Json& v = at(key);
  if (!v.is_array()) throw ParseError(child_path(key) + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ParseError(child_path(key) + ": expected an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

Vec2 ObjectReader::vec2(const std::string& key) {
  const auto n = numbers(key);
  if (n.size() != 2) throw ParseError(child_path(key) + ": expected 2 numbers");
  return {n[0], n[1]};
}

Vec3 ObjectReader::vec3(const std::string& key) {
  const auto n = numbers(key);
  if (n.size() != 3) throw ParseError(child_path(key) + ": expected 3 numbers");
  return {n[0], n[1], n[2]};
}

Vec3 ObjectReader::vec3(const std::string& key, const Vec3& fallback) {
  return has(key) ? vec3(key) : fallback;
}

const Json& ObjectReader::raw(const std::string& key) { return at(key); }

const Json* ObjectReader::raw_optional(const std::string& key) {
  return has(key) ? &at(key) : nullptr;
}

ObjectReader ObjectReader::object(const std::string& key) { return ObjectReader(at(key), child_path(key)); }

void ObjectReader::finish() const {
  for (auto it = j_.begin(); it != j_.end(); ++it) {
    if (!seen_.count(it.key())) throw ParseError(child_path(it.key()) + ": unknown field");
  }
}

}  // namespace paris
