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

#include "etr/model_io.h"

#include <cerrno>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "etr/errors.h"
#include "json_util.h"

namespace etr {

namespace {

void append_optional(std::string& out, const std::optional<Vector>& v) {
  if (v) {
    append_json_array(out, *v);
  } else {
    out += "null";
  }
}

std::optional<Vector> optional_vector(const nlohmann::json& doc,
                                      const char* key, std::size_t length) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  Vector v = vector_from_json(*it, key);
  if (static_cast<std::size_t>(v.size()) != length) {
    throw InputError(std::string(key) + " has length " +
                     std::to_string(v.size()) + ", expected " +
                     std::to_string(length));
  }
  return v;
}

int positive_int(const nlohmann::json& doc, const char* key) {
  const auto& node = doc.at(key);
  if (!node.is_number_integer() || node.get<long long>() <= 0 ||
      node.get<long long>() > (1LL << 30)) {
    throw InputError(std::string("model field '") + key +
                     "' must be a positive integer");
  }
  return node.get<int>();
}

}  // namespace

std::string model_to_json(const ModelState& model) {
  std::string out;
  out.reserve(24 * (model.num_params() + 64));
  out += "{\"d\":" + std::to_string(model.input_dim());
  out += ",\"h\":" + std::to_string(model.hidden_dim());
  out += ",\"C\":" + std::to_string(model.num_classes());
  out += ",\"train_size\":" + std::to_string(model.train_size);
  out += ",\"w0\":";
  append_json_array(out, model.w0.data(), model.w0.size());
  out += ",\"w1\":";
  append_json_array(out, model.w1.data(), model.w1.size());
  out += ",\"grad_snapshot\":";
  append_optional(out, model.grad_snapshot);
  out += ",\"fisher_snapshot\":";
  append_optional(out, model.fisher_snapshot);
  out += "}\n";
  return out;
}

ModelState model_from_json(std::string_view text) {
  nlohmann::json doc = parse_json(text, "model");
  if (!doc.is_object()) throw InputError("model JSON must be an object");
  try {
    const int d = positive_int(doc, "d");
    const int h = positive_int(doc, "h");
    const int c = positive_int(doc, "C");
    ModelState model = ModelState::zeros(d, h, c);
    Vector w0 = vector_from_json(doc.at("w0"), "w0");
    Vector w1 = vector_from_json(doc.at("w1"), "w1");
    if (w0.size() != model.w0.size() || w1.size() != model.w1.size()) {
      throw InputError("weight arrays do not match d, h and C");
    }
    std::copy_n(w0.data(), w0.size(), model.w0.data());
    std::copy_n(w1.data(), w1.size(), model.w1.data());
    model.grad_snapshot =
        optional_vector(doc, "grad_snapshot", model.num_params());
    model.fisher_snapshot =
        optional_vector(doc, "fisher_snapshot", model.num_params());
    if (model.fisher_snapshot && (model.fisher_snapshot->array() < 0.0).any()) {
      throw InputError("fisher_snapshot has negative entries");
    }
    const auto& ts = doc.at("train_size");
    if (!ts.is_number_integer() || ts.get<long long>() < 0) {
      throw InputError("train_size must be a nonnegative integer");
    }
    model.train_size = ts.get<int>();
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model JSON: ") + e.what());
  }
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path + ": " + std::strerror(errno));
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read error on " + path);
  return buf.str();
}

void write_text_file_atomic(const std::string& path, std::string_view text) {
  namespace fs = std::filesystem;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + tmp + ": " + std::strerror(errno));
    }
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw IoError("write error on " + tmp);
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename " + tmp + " to " + path + ": " +
                  ec.message());
  }
}

ModelState load_model(const std::string& path) {
  return model_from_json(read_text_file(path));
}

void save_model(const ModelState& model, const std::string& path) {
  write_text_file_atomic(path, model_to_json(model));
}

}  // namespace etr
