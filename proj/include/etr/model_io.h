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

#ifndef ETR_MODEL_IO_H_
#define ETR_MODEL_IO_H_

#include <string>
#include <string_view>

#include "etr/gcn.h"

namespace etr {

// {"d", "h", "C", "w0", "w1", "grad_snapshot" (array or null),
//  "fisher_snapshot" (array or null), "train_size"}; weights row-major,
// every double written with 17 significant digits.
std::string model_to_json(const ModelState& model);
// Throws InputError on malformed documents or inconsistent shapes. A missing
// fisher_snapshot key reads as absent.
ModelState model_from_json(std::string_view text);

// Reads or writes a whole file; IoError on filesystem failures. save_model
// writes a sibling temporary file and renames it over `path`.
std::string read_text_file(const std::string& path);
void write_text_file_atomic(const std::string& path, std::string_view text);

ModelState load_model(const std::string& path);
void save_model(const ModelState& model, const std::string& path);

}  // namespace etr

#endif  // ETR_MODEL_IO_H_
