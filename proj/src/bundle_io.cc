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

#include "etr/bundle_io.h"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string_view>
#include <system_error>
#include <vector>

#include "etr/errors.h"
#include "etr/model_io.h"
#include "json_util.h"

namespace etr {

namespace fs = std::filesystem;

namespace {

constexpr const char* kMeta = "meta.json";
constexpr const char* kEdges = "edges.tsv";
constexpr const char* kFeatures = "features.csv";
constexpr const char* kLabels = "labels.csv";
constexpr const char* kSplits = "splits.csv";

// Splits a file into lines, dropping one trailing newline and any '\r'
// before '\n'. Blank lines are kept so the caller can report them.
std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t end = line.find(sep, start);
    if (end == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, end - start));
    start = end + 1;
  }
}

template <typename T>
bool parse_number(std::string_view token, T& value) {
  if (token.empty()) return false;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  if (*first == '+') ++first;
  auto res = std::from_chars(first, last, value);
  return res.ec == std::errc() && res.ptr == last;
}

class FileReader {
 public:
  FileReader(const std::string& dir, const char* file)
      : file_(file), text_(read_text_file((fs::path(dir) / file).string())) {
    lines_ = split_lines(text_);
  }
  const std::vector<std::string_view>& lines() const { return lines_; }
  [[noreturn]] void fail(std::size_t line, const std::string& what) const {
    throw ValidationError(file_, line, what);
  }
  void expect_lines(std::size_t count) const {
    for (std::size_t i = 0; i < lines_.size(); ++i) {
      if (lines_[i].empty()) fail(i + 1, "blank line");
    }
    if (lines_.size() != count) {
      fail(std::min(lines_.size(), count) + 1,
           "expected " + std::to_string(count) + " lines, found " +
               std::to_string(lines_.size()));
    }
  }

 private:
  std::string file_;
  std::string text_;
  std::vector<std::string_view> lines_;
};

int manifest_count(const nlohmann::json& doc, const char* key, long long lo) {
  auto it = doc.find(key);
  if (it == doc.end()) throw ValidationError(kMeta, 0, "missing key " + std::string(key));
  if (!it->is_number_integer() || it->get<long long>() < lo ||
      it->get<long long>() > (1LL << 31) - 1) {
    throw ValidationError(kMeta, 0,
                          std::string(key) + " must be an integer >= " +
                              std::to_string(lo));
  }
  return it->get<int>();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write error on " + path.string());
}

}  // namespace

BundleManifest read_manifest(const std::string& dir) {
  const std::string text = read_text_file((fs::path(dir) / kMeta).string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(kMeta, 0, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError(kMeta, 0, "expected an object");
  BundleManifest m;
  m.format_version = manifest_count(doc, "format_version", 0);
  if (m.format_version != kBundleFormatVersion) {
    throw ValidationError(kMeta, 0,
                          "unsupported format_version " +
                              std::to_string(m.format_version));
  }
  auto name = doc.find("name");
  if (name != doc.end()) {
    if (!name->is_string()) throw ValidationError(kMeta, 0, "name must be a string");
    m.name = name->get<std::string>();
  }
  m.num_nodes = manifest_count(doc, "num_nodes", 1);
  m.num_edges = static_cast<std::size_t>(manifest_count(doc, "num_edges", 0));
  m.feature_dim = manifest_count(doc, "feature_dim", 1);
  m.num_classes = manifest_count(doc, "num_classes", 1);
  return m;
}

GraphBundle load_bundle(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a bundle directory: " + dir);
  const BundleManifest m = read_manifest(dir);
  const int n = m.num_nodes;

  std::vector<Edge> edges;
  {
    FileReader r(dir, kEdges);
    r.expect_lines(m.num_edges);
    std::set<Edge> seen;
    for (std::size_t i = 0; i < r.lines().size(); ++i) {
      auto cols = split(r.lines()[i], '\t');
      if (cols.size() != 2) r.fail(i + 1, "expected two tab-separated ids");
      Edge e;
      if (!parse_number(cols[0], e.u) || !parse_number(cols[1], e.v)) {
        r.fail(i + 1, "node id is not an integer");
      }
      if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n) {
        r.fail(i + 1, "node id out of range [0, " + std::to_string(n) + ")");
      }
      if (e.u == e.v) r.fail(i + 1, "self-loop on node " + std::to_string(e.u));
      if (e.u > e.v) r.fail(i + 1, "edge must be written with u < v");
      if (!seen.insert(e).second) r.fail(i + 1, "duplicate edge");
      edges.push_back(e);
    }
  }

  Matrix features(n, m.feature_dim);
  {
    FileReader r(dir, kFeatures);
    r.expect_lines(n);
    for (int i = 0; i < n; ++i) {
      auto cols = split(r.lines()[i], ',');
      if (cols.size() != static_cast<std::size_t>(m.feature_dim)) {
        r.fail(i + 1, "expected " + std::to_string(m.feature_dim) +
                          " values, found " + std::to_string(cols.size()));
      }
      for (int j = 0; j < m.feature_dim; ++j) {
        double v = 0.0;
        if (!parse_number(cols[j], v) || !std::isfinite(v)) {
          r.fail(i + 1, "column " + std::to_string(j + 1) +
                            " is not a finite number");
        }
        features(i, j) = v;
      }
    }
  }

  std::vector<int> labels(n);
  {
    FileReader r(dir, kLabels);
    r.expect_lines(n);
    for (int i = 0; i < n; ++i) {
      if (!parse_number(r.lines()[i], labels[i])) {
        r.fail(i + 1, "label is not an integer");
      }
      if (labels[i] < 0 || labels[i] >= m.num_classes) {
        r.fail(i + 1, "label " + std::to_string(labels[i]) +
                          " outside [0, " + std::to_string(m.num_classes) +
                          ")");
      }
    }
  }

  std::vector<bool> train(n);
  {
    FileReader r(dir, kSplits);
    r.expect_lines(n);
    for (int i = 0; i < n; ++i) {
      std::string_view token = r.lines()[i];
      if (token == "train") {
        train[i] = true;
      } else if (token != "test") {
        r.fail(i + 1, "split must be 'train' or 'test'");
      }
    }
  }

  return GraphBundle(n, std::move(edges), std::move(features),
                     std::move(labels), std::move(train), m.num_classes,
                     m.name);
}

void save_bundle(const GraphBundle& graph, const std::string& dir) {
  const fs::path target = fs::absolute(fs::path(dir)).lexically_normal();
  std::error_code ec;
  if (fs::exists(target, ec)) {
    if (!fs::is_directory(target) ||
        (!fs::is_empty(target) && !fs::exists(target / kMeta))) {
      throw IoError("refusing to replace " + target.string() +
                    ": not a bundle directory");
    }
  }
  const fs::path parent = target.parent_path();
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create " + parent.string() + ": " + ec.message());
  const fs::path staging = parent / (target.filename().string() + ".tmp");
  fs::remove_all(staging, ec);
  if (!fs::create_directory(staging, ec) || ec) {
    throw IoError("cannot create " + staging.string());
  }

  try {
    std::string meta = "{\"format_version\":" +
                       std::to_string(kBundleFormatVersion) + ",\"name\":";
    meta += nlohmann::json(graph.name()).dump();
    meta += ",\"num_nodes\":" + std::to_string(graph.num_nodes());
    meta += ",\"num_edges\":" + std::to_string(graph.num_edges());
    meta += ",\"feature_dim\":" + std::to_string(graph.feature_dim());
    meta += ",\"num_classes\":" + std::to_string(graph.num_classes());
    meta += "}\n";
    write_file(staging / kMeta, meta);

    std::string text;
    for (const Edge& e : graph.edges()) {
      text += std::to_string(e.u) + '\t' + std::to_string(e.v) + '\n';
    }
    write_file(staging / kEdges, text);

    text.clear();
    const Matrix& x = graph.features();
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        if (j != 0) text += ',';
        append_json_number(text, x(i, j));
      }
      text += '\n';
    }
    write_file(staging / kFeatures, text);

    text.clear();
    for (int y : graph.labels()) text += std::to_string(y) + '\n';
    write_file(staging / kLabels, text);

    text.clear();
    for (bool t : graph.train_mask()) text += t ? "train\n" : "test\n";
    write_file(staging / kSplits, text);
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }

  const fs::path backup = parent / (target.filename().string() + ".old");
  fs::remove_all(backup, ec);
  bool had_target = fs::exists(target);
  if (had_target) {
    fs::rename(target, backup, ec);
    if (ec) throw IoError("cannot move " + target.string() + " aside: " + ec.message());
  }
  fs::rename(staging, target, ec);
  if (ec) {
    if (had_target) fs::rename(backup, target, ec);
    throw IoError("cannot rename " + staging.string() + " to " +
                  target.string());
  }
  if (had_target) fs::remove_all(backup, ec);
}

}  // namespace etr
