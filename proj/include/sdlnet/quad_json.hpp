#pragma once

#include <json.hpp>

#include "sdlnet/geometry.hpp"

namespace sdlnet {

// JSON text form: {"tl":[x,y],"tr":[x,y],"bl":[x,y],"br":[x,y]}
inline nlohmann::json quad_to_json(const Quadrangle& q) {
  nlohmann::json j;
  for (int i = 0; i < 4; ++i) j[corner_name(i)] = {q[i].x, q[i].y};
  return j;
}

inline Quadrangle quad_from_json(const nlohmann::json& j) {
  Quadrangle q;
  for (int i = 0; i < 4; ++i) {
    const char* key = corner_name(i);
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != 2)
      throw std::invalid_argument(std::string("quadrangle JSON: missing or malformed \"") + key +
                                  "\"");
    q[i] = {j[key][0].get<double>(), j[key][1].get<double>()};
  }
  return q;
}

}  // namespace sdlnet
