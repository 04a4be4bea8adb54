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

// JSON helpers shared by the serializers. Writing goes through to_chars so
// that every double keeps 17 significant digits; reading uses nlohmann.

#ifndef ETR_SRC_JSON_UTIL_H_
#define ETR_SRC_JSON_UTIL_H_

#include <string>
#include <string_view>

#include "etr/types.h"
#include "json.hpp"

namespace etr {

// Appends `value` with 17 significant digits; non-finite values become null.
void append_json_number(std::string& out, double value);
void append_json_array(std::string& out, const double* data, std::size_t n);
void append_json_array(std::string& out, const Vector& values);

// Throws InputError naming `what` on a syntax error.
nlohmann::json parse_json(std::string_view text, std::string_view what);

// Array of finite numbers; throws InputError naming `field` otherwise.
Vector vector_from_json(const nlohmann::json& node, std::string_view field);

}  // namespace etr

#endif  // ETR_SRC_JSON_UTIL_H_
