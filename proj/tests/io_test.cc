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

#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include <unistd.h>

#include <gtest/gtest.h>

#include "etr/bundle_io.h"
#include "etr/errors.h"
#include "etr/model_io.h"
#include "etr/request.h"
#include "etr/sbm.h"
#include "oracles.h"

namespace etr {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("etr_io_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

GraphBundle awkward_graph() {
  Matrix x(4, 3);
  x << 0.1, 1.0 / 3.0, -2.5e-300,  //
      1e300, 0.0, -0.0,             //
      std::nextafter(1.0, 2.0), 7.0, -1.0 / 7.0,  //
      123456789.123456789, 5e-324, 2.0;
  return GraphBundle(4, {{0, 1}, {2, 3}, {1, 3}}, x, {0, 1, 2, 1},
                     {true, false, true, true}, 3, "awkward");
}

TEST(BundleIoTest, RoundTripIsExact) {
  TempDir tmp;
  GraphBundle g = awkward_graph();
  save_bundle(g, (tmp / "b").string());
  GraphBundle back = load_bundle((tmp / "b").string());
  EXPECT_EQ(back, g);
  EXPECT_EQ(back.name(), "awkward");
  for (Eigen::Index k = 0; k < g.features().size(); ++k) {
    EXPECT_EQ(back.features().data()[k], g.features().data()[k]);
  }
  BundleManifest m = read_manifest((tmp / "b").string());
  EXPECT_EQ(m.num_nodes, 4);
  EXPECT_EQ(m.num_edges, 3u);
  EXPECT_EQ(m.feature_dim, 3);
  EXPECT_EQ(m.num_classes, 3);
}

TEST(BundleIoTest, SbmRoundTripAndByteIdenticalResave) {
  TempDir tmp;
  GraphBundle g = generate_sbm(60, 3, 0.2, 0.02, 5, 4);
  save_bundle(g, (tmp / "a").string());
  save_bundle(load_bundle((tmp / "a").string()), (tmp / "b").string());
  for (const char* f :
       {"meta.json", "edges.tsv", "features.csv", "labels.csv", "splits.csv"}) {
    EXPECT_EQ(slurp(tmp / "a" / f), slurp(tmp / "b" / f)) << f;
  }
  // Overwriting an existing bundle in place.
  save_bundle(g, (tmp / "a").string());
  EXPECT_EQ(load_bundle((tmp / "a").string()), g);
  EXPECT_FALSE(fs::exists(tmp / "a.tmp"));
  EXPECT_FALSE(fs::exists(tmp / "a.old"));
}

TEST(BundleIoTest, RefusesToReplaceForeignDirectory) {
  TempDir tmp;
  fs::create_directories(tmp / "docs");
  spit(tmp / "docs" / "notes.txt", "keep me");
  EXPECT_THROW(save_bundle(awkward_graph(), (tmp / "docs").string()), IoError);
  EXPECT_EQ(slurp(tmp / "docs" / "notes.txt"), "keep me");
}

TEST(BundleIoTest, MissingDirectory) {
  TempDir tmp;
  EXPECT_THROW(load_bundle((tmp / "nope").string()), IoError);
}

TEST(BundleIoTest, AcceptsCrlfLineEndings) {
  TempDir tmp;
  GraphBundle g = awkward_graph();
  save_bundle(g, (tmp / "b").string());
  for (const char* f : {"edges.tsv", "labels.csv", "splits.csv"}) {
    std::string text = slurp(tmp / "b" / f), crlf;
    for (char c : text) {
      if (c == '\n') crlf += '\r';
      crlf += c;
    }
    spit(tmp / "b" / f, crlf);
  }
  EXPECT_EQ(load_bundle((tmp / "b").string()), g);
}

struct Corruption {
  const char* name;
  const char* file;
  std::size_t line;  // expected line in the error, 0 for the whole file
  std::function<std::string(std::string)> edit;
};

std::string replace_line(std::string text, std::size_t line,
                         const std::string& with) {
  std::size_t start = 0;
  for (std::size_t i = 1; i < line; ++i) start = text.find('\n', start) + 1;
  std::size_t end = text.find('\n', start);
  return text.replace(start, end - start, with);
}

TEST(BundleIoTest, MalformedCorpusReportsFileAndLine) {
  // awkward_graph(): edges "0 1", "1 3", "2 3"; 4 nodes; 3 classes.
  const std::vector<Corruption> cases = {
      {"self loop", "edges.tsv", 2,
       [](std::string t) { return replace_line(t, 2, "3\t3"); }},
      {"duplicate edge", "edges.tsv", 3,
       [](std::string t) { return replace_line(t, 3, "0\t1"); }},
      {"reversed edge", "edges.tsv", 1,
       [](std::string t) { return replace_line(t, 1, "1\t0"); }},
      {"id out of range", "edges.tsv", 2,
       [](std::string t) { return replace_line(t, 2, "1\t4"); }},
      {"non-integer id", "edges.tsv", 1,
       [](std::string t) { return replace_line(t, 1, "zero\t1"); }},
      {"one column", "edges.tsv", 3,
       [](std::string t) { return replace_line(t, 3, "2 3"); }},
      {"missing edge line", "edges.tsv", 3,
       [](std::string t) { return t.substr(0, t.rfind('\n', t.size() - 2) + 1); }},
      {"unparseable float", "features.csv", 2,
       [](std::string t) { return replace_line(t, 2, "1,abc,2"); }},
      {"nan feature", "features.csv", 4,
       [](std::string t) { return replace_line(t, 4, "nan,0,0"); }},
      {"short feature row", "features.csv", 1,
       [](std::string t) { return replace_line(t, 1, "1,2"); }},
      {"label out of range", "labels.csv", 3,
       [](std::string t) { return replace_line(t, 3, "3"); }},
      {"negative label", "labels.csv", 1,
       [](std::string t) { return replace_line(t, 1, "-1"); }},
      {"blank label line", "labels.csv", 2,
       [](std::string t) { return replace_line(t, 2, ""); }},
      {"unknown split", "splits.csv", 4,
       [](std::string t) { return replace_line(t, 4, "validation"); }},
      {"extra split line", "splits.csv", 5,
       [](std::string t) { return t + "train\n"; }},
      {"bad format version", "meta.json", 0,
       [](std::string t) {
         return t.replace(t.find("\"format_version\":1"), 18,
                          "\"format_version\":2");
       }},
      {"invalid json", "meta.json", 0,
       [](std::string t) { return t.substr(0, t.size() / 2); }},
      {"negative node count", "meta.json", 0,
       [](std::string t) {
         return t.replace(t.find("\"num_nodes\":4"), 13, "\"num_nodes\":-4");
       }},
  };
  for (const Corruption& c : cases) {
    TempDir tmp;
    const fs::path dir = tmp / "b";
    save_bundle(awkward_graph(), dir.string());
    spit(dir / c.file, c.edit(slurp(dir / c.file)));
    try {
      load_bundle(dir.string());
      ADD_FAILURE() << c.name << ": loaded without error";
    } catch (const ValidationError& e) {
      EXPECT_EQ(e.file(), c.file) << c.name;
      EXPECT_EQ(e.line(), c.line) << c.name << ": " << e.what();
    } catch (const std::exception& e) {
      ADD_FAILURE() << c.name << ": wrong error type: " << e.what();
    }
  }
}

TEST(ModelIoTest, RoundTripWithAndWithoutSnapshots) {
  std::mt19937_64 rng(1);
  ModelState m = testing::random_model(rng, 3, 4, 2);
  m.w0(0, 0) = 1.0 / 3.0;
  m.w1(1, 1) = -5e-324;
  ModelState bare = model_from_json(model_to_json(m));
  EXPECT_TRUE(weights_equal(bare, m));
  EXPECT_FALSE(bare.grad_snapshot.has_value());

  m.grad_snapshot = Vector::LinSpaced(m.num_params(), -1.0, 1.0);
  m.fisher_snapshot = Vector::LinSpaced(m.num_params(), 0.0, 2.0);
  m.train_size = 17;
  ModelState full = model_from_json(model_to_json(m));
  EXPECT_EQ(*full.grad_snapshot, *m.grad_snapshot);
  EXPECT_EQ(*full.fisher_snapshot, *m.fisher_snapshot);
  EXPECT_EQ(full.train_size, 17);
  EXPECT_EQ(model_to_json(full), model_to_json(m));

  TempDir tmp;
  save_model(m, (tmp / "m.json").string());
  EXPECT_TRUE(weights_equal(load_model((tmp / "m.json").string()), m));
  EXPECT_FALSE(fs::exists(tmp / "m.json.tmp"));
}

TEST(ModelIoTest, RejectsMalformed) {
  EXPECT_THROW(model_from_json("not json"), InputError);
  EXPECT_THROW(model_from_json("[]"), InputError);
  EXPECT_THROW(model_from_json(R"({"d":1,"h":1,"C":1,"w0":[1],"w1":[1,2]})"),
               InputError);
  EXPECT_THROW(model_from_json(R"({"d":0,"h":1,"C":1,"w0":[],"w1":[1]})"),
               InputError);
  EXPECT_THROW(
      model_from_json(
          R"({"d":1,"h":1,"C":1,"w0":[1],"w1":[1],"grad_snapshot":[1]})"),
      InputError);
  EXPECT_THROW(
      model_from_json(
          R"({"d":1,"h":1,"C":1,"w0":[1],"w1":[1],"fisher_snapshot":[-1,0]})"),
      InputError);
  EXPECT_THROW(load_model("/nonexistent/model.json"), IoError);
}

TEST(RequestTest, ParseAndRoundTrip) {
  UnlearnRequest n = parse_request_json(R"({"kind":"node","ids":[5,2,5]})");
  EXPECT_EQ(n.kind, RequestKind::kNode);
  EXPECT_EQ(n.nodes, (NodeSet{2, 5}));
  UnlearnRequest e =
      parse_request_json(R"({"kind":"edge","edges":[[4,1],[0,2]]})");
  EXPECT_EQ(e.kind, RequestKind::kEdge);
  ASSERT_EQ(e.edges.size(), 2u);
  EXPECT_EQ(e.edges[0], (Edge{0, 2}));
  EXPECT_EQ(e.edges[1], (Edge{1, 4}));
  UnlearnRequest f = parse_request_json(R"({"kind":"feature","ids":[3]})");
  EXPECT_EQ(f.kind, RequestKind::kFeature);
  for (const UnlearnRequest& r : {n, e, f}) {
    UnlearnRequest back = parse_request_json(request_to_json(r));
    EXPECT_EQ(back.kind, r.kind);
    EXPECT_EQ(back.nodes, r.nodes);
    EXPECT_EQ(back.edges, r.edges);
  }
  EXPECT_TRUE(parse_request_json(R"({"kind":"node","ids":[]})").empty());
}

TEST(RequestTest, RejectsMalformed) {
  for (const char* text :
       {"", "{}", "[1,2]", R"({"kind":"graph","ids":[1]})",
        R"({"kind":"node"})", R"({"kind":"node","ids":["a"]})",
        R"({"kind":"edge","edges":[[1]]})", R"({"kind":"edge","ids":[1]})",
        R"({"kind":"edge","edges":[[1,2,3]]})"}) {
    EXPECT_THROW(parse_request_json(text), InputError) << text;
  }
}

}  // namespace
}  // namespace etr
