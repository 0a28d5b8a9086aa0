// Exercises the shared library strictly through its C interface.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>

#include "fdikit/fdikit.h"

using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string data_file(const std::string& name) {
  return std::string(FDIKIT_DATA_DIR) + "/" + name;
}

struct Handle {
  fdk_model* m = nullptr;
  ~Handle() { fdk_model_free(m); }
};

struct Str {
  char* s = nullptr;
  ~Str() { fdk_string_free(s); }
  std::string str() const { return s ? s : ""; }
};

}  // namespace

TEST_CASE("model JSON round trip is canonical") {
  std::string text = slurp(data_file("ex54.json"));
  Handle m;
  REQUIRE(fdk_model_from_json(text.c_str(), &m.m) == FDK_OK);
  Str once;
  REQUIRE(fdk_model_to_json(m.m, &once.s) == FDK_OK);
  Handle again;
  REQUIRE(fdk_model_from_json(once.s, &again.m) == FDK_OK);
  Str twice;
  REQUIRE(fdk_model_to_json(again.m, &twice.s) == FDK_OK);
  CHECK(once.str() == twice.str());
}

TEST_CASE("malformed input and unknown options give usage errors") {
  Handle m;
  CHECK(fdk_model_from_json("{\"a\": [[1,2]]}", &m.m) == FDK_ERR_USAGE);
  CHECK(std::string(fdk_last_error()).size() > 0);

  std::string text = slurp(data_file("ex54.json"));
  Handle ok;
  REQUIRE(fdk_model_from_json(text.c_str(), &ok.m) == FDK_OK);
  Str rep;
  CHECK(fdk_genspec(ok.m, "{\"bogus\": 1}", &rep.s) == FDK_ERR_USAGE);
}

TEST_CASE("genspec through the C interface reproduces the benchmark") {
  std::string text = slurp(data_file("yuan.json"));
  Handle m;
  REQUIRE(fdk_model_from_json(text.c_str(), &m.m) == FDK_OK);
  Str rep;
  REQUIRE(fdk_genspec(m.m, "{\"tol\": 1e-7, \"fd-tol\": 1e-5}", &rep.s) ==
          FDK_OK);
  json r = json::parse(rep.str());
  CHECK(r.at("rows").get<int>() == 18);
}

TEST_CASE("efdsyn handles and solvability failures") {
  std::string text = slurp(data_file("ex54.json"));
  Handle m;
  REQUIRE(fdk_model_from_json(text.c_str(), &m.m) == FDK_OK);
  Handle q, r;
  Str rep;
  REQUIRE(fdk_efdsyn(m.m, "{\"rdim\": 1, \"sdeg\": -3.0}", &q.m, &r.m,
                     &rep.s) == FDK_OK);
  CHECK(fdk_model_count(q.m) == 1);
  Str qjson;
  REQUIRE(fdk_model_to_json(q.m, &qjson.s) == FDK_OK);
  json qj = json::parse(qjson.str());
  CHECK(qj.contains("groups"));
  CHECK(qj["groups"].contains("outputs"));

  // Undetectable fault: a zero fault column must be reported as unsolvable.
  std::string zero_fault = R"({
    "a": [[-1.0]], "b": [[1.0, 0.0]], "c": [[1.0]], "d": [[0.0, 0.0]],
    "ts": 0, "groups": {"controls": [0], "faults": [1]}})";
  Handle bad;
  REQUIRE(fdk_model_from_json(zero_fault.c_str(), &bad.m) == FDK_OK);
  Handle q2, r2;
  Str rep2;
  CHECK(fdk_efdsyn(bad.m, "{}", &q2.m, &r2.m, &rep2.s) == FDK_ERR_UNSOLVABLE);
}

TEST_CASE("afdisyn gaps through the C interface") {
  std::string text = slurp(data_file("afd_example.json"));
  Handle m;
  REQUIRE(fdk_model_from_json(text.c_str(), &m.m) == FDK_OK);
  Handle q, r;
  Str rep;
  std::string opts = R"({"sfdi": [[0,1,1],[1,0,1],[1,1,0]],
                         "sdeg": -3.0, "smarg": -3.0})";
  REQUIRE(fdk_afdisyn(m.m, opts.c_str(), &q.m, &r.m, &rep.s) == FDK_OK);
  json rj = json::parse(rep.str());
  CHECK(rj.at("gaps")[0].get<double>() == doctest::Approx(1.5).epsilon(1e-4));
  CHECK(rj.at("gaps")[1].get<std::string>() == "inf");
  CHECK(rj.at("gaps")[2].get<double>() == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("model detection pipeline through the C interface") {
  std::string text = slurp(data_file("lateral_grid.json"));
  Handle mm;
  REQUIRE(fdk_model_from_json(text.c_str(), &mm.m) == FDK_OK);
  CHECK(fdk_model_count(mm.m) == 9);

  Handle q, r;
  Str rep;
  std::string opts = R"({"sdeg": -1.0, "poles": [-1.0],
                         "hdesign": [[0.7645, 0.8848, 0.5778, 0.9026]]})";
  REQUIRE(fdk_emdsyn(mm.m, opts.c_str(), &q.m, &r.m, &rep.s) == FDK_OK);
  CHECK(fdk_model_count(q.m) == 9);
  CHECK(fdk_model_count(r.m) == 81);
  json rj = json::parse(rep.str());
  for (int i = 0; i < 9; ++i)
    CHECK(rj.at("mdperf")[i][i].get<double>() < 1e-8);

  // Classification of the mid-grid model.
  std::string cur = slurp(data_file("lateral_mid.json"));
  Handle c;
  REQUIRE(fdk_model_from_json(cur.c_str(), &c.m) == FDK_OK);
  Str drep;
  REQUIRE(fdk_mddist2c(mm.m, c.m, "{}", &drep.s) == FDK_OK);
  CHECK(json::parse(drep.str()).at("mind").get<int>() == 4);

  Str mrep;
  REQUIRE(fdk_mdmatch(q.m, c.m, "{}", &mrep.s) == FDK_OK);
  CHECK(json::parse(mrep.str()).at("mind").get<int>() == 4);

  // Simulation of one internal-form row.
  Str csv, srep;
  std::string sopts = R"({"signals": ["square:0.3@6.2832", "sine:1.5@3.1416"],
                          "t-final": 4.0, "dt": 0.01, "tau": 0.01})";
  REQUIRE(fdk_simulate(r.m, sopts.c_str(), &csv.s, &srep.s) == FDK_OK);
  CHECK(csv.str().substr(0, 2) == "t,");
  json sj = json::parse(srep.str());
  CHECK(sj.at("decision").size() == 81);
}
