#pragma once

// Scene documents (JSON):
//
//   {"dimension": 2,
//    "obstacles": [
//      {"kind": "circle",  "center": [x, y],    "radius": r},
//      {"kind": "ellipse", "center": [x, y],    "semi_axes": [a, b], "rotation": phi},
//      {"kind": "star",    "center": [x, y],    "coefficients": [a0, a1, ...], "rotation": phi},
//      {"kind": "sphere",  "center": [x, y, z], "radius": r}]}
//
// "rotation" is optional (default 0). Star radius is a0 + sum_k a_k cos(k (t - phi)).

#include <json.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "relxi/error.hpp"
#include "relxi/geometry.hpp"

namespace relxi {

namespace detail {

using nlohmann::json;
using nlohmann::ordered_json;

inline double number_field(const json& obj, const char* key, std::size_t index, bool required = true,
                           double fallback = 0.0) {
  if (!obj.contains(key)) {
    if (required) {
      throw SceneError("obstacle " + std::to_string(index) + ": missing field '" + key + "'");
    }
    return fallback;
  }
  if (!obj[key].is_number()) {
    throw SceneError("obstacle " + std::to_string(index) + ": field '" + key + "' must be a number");
  }
  return obj[key].get<double>();
}

inline std::vector<double> array_field(const json& obj, const char* key, std::size_t index,
                                       std::size_t min_size, std::size_t max_size) {
  if (!obj.contains(key) || !obj[key].is_array()) {
    throw SceneError("obstacle " + std::to_string(index) + ": field '" + key + "' must be an array");
  }
  std::vector<double> v;
  for (const auto& x : obj[key]) {
    if (!x.is_number()) {
      throw SceneError("obstacle " + std::to_string(index) + ": field '" + key + "' must hold numbers");
    }
    v.push_back(x.get<double>());
  }
  if (v.size() < min_size || v.size() > max_size) {
    throw SceneError("obstacle " + std::to_string(index) + ": field '" + key + "' has " +
                     std::to_string(v.size()) + " entries");
  }
  return v;
}

inline ObstacleShape parse_obstacle(const json& obj, std::size_t index) {
  if (!obj.is_object() || !obj.contains("kind") || !obj["kind"].is_string()) {
    throw SceneError("obstacle " + std::to_string(index) + ": expected an object with a string 'kind'");
  }
  const std::string kind = obj["kind"].get<std::string>();
  const std::size_t center_size = kind == "sphere" ? 3 : 2;
  const auto c = array_field(obj, "center", index, center_size, center_size);
  if (kind == "circle") return Circle{Vec2(c[0], c[1]), number_field(obj, "radius", index)};
  if (kind == "sphere") return Sphere{Vec3(c[0], c[1], c[2]), number_field(obj, "radius", index)};
  if (kind == "ellipse") {
    const auto axes = array_field(obj, "semi_axes", index, 2, 2);
    return Ellipse{Vec2(c[0], c[1]), axes[0], axes[1], number_field(obj, "rotation", index, false)};
  }
  if (kind == "star") {
    const auto coeffs = array_field(obj, "coefficients", index, 1, kMaxStarHarmonic + 1);
    return Star{Vec2(c[0], c[1]), coeffs, number_field(obj, "rotation", index, false)};
  }
  throw SceneError("obstacle " + std::to_string(index) + ": unknown kind '" + kind + "'");
}

}  // namespace detail

inline Scene parse_scene(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SceneError(std::string("scene file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("dimension") || !doc["dimension"].is_number_integer()) {
    throw SceneError("scene needs an integer 'dimension'");
  }
  if (!doc.contains("obstacles") || !doc["obstacles"].is_array()) {
    throw SceneError("scene needs an 'obstacles' array");
  }
  const int dimension = doc["dimension"].get<int>();
  std::vector<ObstacleShape> obstacles;
  for (std::size_t i = 0; i < doc["obstacles"].size(); ++i) {
    obstacles.push_back(detail::parse_obstacle(doc["obstacles"][i], i));
  }
  return Scene(dimension, std::move(obstacles));
}

inline Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SceneError("cannot open scene file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scene(buf.str());
}

/// Canonical JSON text: fixed key order, every optional field spelled out.
inline std::string canonical_scene(const Scene& scene) {
  using detail::ordered_json;
  ordered_json doc;
  doc["dimension"] = scene.dimension();
  doc["obstacles"] = ordered_json::array();
  for (const auto& shape : scene.obstacles()) {
    ordered_json o;
    std::visit(
        [&](const auto& s) {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Circle>) {
            o["kind"] = "circle";
            o["center"] = {s.center.x(), s.center.y()};
            o["radius"] = s.radius;
          } else if constexpr (std::is_same_v<S, Ellipse>) {
            o["kind"] = "ellipse";
            o["center"] = {s.center.x(), s.center.y()};
            o["semi_axes"] = {s.semi_major, s.semi_minor};
            o["rotation"] = s.rotation;
          } else if constexpr (std::is_same_v<S, Star>) {
            o["kind"] = "star";
            o["center"] = {s.center.x(), s.center.y()};
            o["coefficients"] = s.cosine_coefficients;
            o["rotation"] = s.rotation;
          } else {
            o["kind"] = "sphere";
            o["center"] = {s.center.x(), s.center.y(), s.center.z()};
            o["radius"] = s.radius;
          }
        },
        shape);
    doc["obstacles"].push_back(o);
  }
  return doc.dump();
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string scene_hash(const Scene& scene) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_scene(scene))));
  return buf;
}

}  // namespace relxi
