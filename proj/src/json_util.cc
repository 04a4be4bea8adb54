// Copyright 2026 The ETR Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "json_util.h"

#include <charconv>
#include <cmath>
#include <string>

#include "etr/errors.h"

namespace etr {

void append_json_number(std::string& out, double value) {
  if (!std::isfinite(value)) {
    out += "null";
    return;
  }
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, value,
                           std::chars_format::general, 17);
  out.append(buf, res.ptr);
}

void append_json_array(std::string& out, const double* data, std::size_t n) {
  out += '[';
  for (std::size_t i = 0; i < n; ++i) {
    if (i != 0) out += ',';
    append_json_number(out, data[i]);
  }
  out += ']';
}

void append_json_array(std::string& out, const Vector& values) {
  append_json_array(out, values.data(), static_cast<std::size_t>(values.size()));
}

nlohmann::json parse_json(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("malformed " + std::string(what) + " JSON: " + e.what());
  }
}

Vector vector_from_json(const nlohmann::json& node, std::string_view field) {
  if (!node.is_array()) {
    throw InputError("field '" + std::string(field) + "' must be an array");
  }
  Vector out(static_cast<Eigen::Index>(node.size()));
  for (std::size_t i = 0; i < node.size(); ++i) {
    const auto& item = node[i];
    if (!item.is_number()) {
      throw InputError("field '" + std::string(field) + "' entry " +
                       std::to_string(i) + " is not a number");
    }
    out(static_cast<Eigen::Index>(i)) = item.get<double>();
    if (!std::isfinite(out(static_cast<Eigen::Index>(i)))) {
      throw InputError("field '" + std::string(field) + "' entry " +
                       std::to_string(i) + " is not finite");
    }
  }
  return out;
}

}  // namespace etr
