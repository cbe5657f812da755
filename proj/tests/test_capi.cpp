#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "delsos/delsos.h"

namespace {

std::string model_path(const char* name) { return std::string(MODELS_DIR "/") + name; }

}  // namespace

TEST_CASE("model loading and validation through the C API") {
  delsos_model* m = nullptr;
  CHECK(delsos_model_load(model_path("example1.json").c_str(), &m) == DELSOS_OK);
  REQUIRE(m != nullptr);
  delsos_model_free(m);

  m = nullptr;
  CHECK(delsos_model_load("/nonexistent/file.json", &m) == DELSOS_ERR_IO);
  CHECK(std::strlen(delsos_last_error()) > 0);

  CHECK(delsos_model_parse("{\"bogus\": 1}", &m) == DELSOS_ERR_PARSE);
  CHECK(delsos_model_parse("{", &m) == DELSOS_ERR_PARSE);

  // malformed spec: A1 wrong shape is rejected naming the key
  const char* bad = R"({
    "tau": [0.5],
    "A0": [[0, 0], [0, 1]],
    "A": [[[1, 2, 3]]],
    "B1": [[1], [0]],
    "B2": [[0], [1]],
    "C10": [[1, 0]],
    "C2": [[1, 0]],
    "C30": [[1, 0]]
  })";
  CHECK(delsos_model_parse(bad, &m) == DELSOS_ERR_PARSE);
  CHECK(std::string(delsos_last_error()).find("A[0]") != std::string::npos);

  const char* unknown = R"({"tau": [1], "A0": [[1]], "A": [[[1]]], "B1": [[1]],
    "B2": [[1]], "C10": [[1]], "C2": [[1]], "C30": [[1]], "mystery": 3})";
  CHECK(delsos_model_parse(unknown, &m) == DELSOS_ERR_PARSE);
  CHECK(std::string(delsos_last_error()).find("mystery") != std::string::npos);
}

TEST_CASE("synthesis, save/load, simulate through the C API") {
  delsos_model* m = nullptr;
  REQUIRE(delsos_model_load(model_path("example2.json").c_str(), &m) == DELSOS_OK);

  delsos_gains* g = nullptr;
  delsos_report* rep = nullptr;
  REQUIRE(delsos_synth(m, "{\"degree\":1}", &g, &rep) == DELSOS_OK);
  char* text = nullptr;
  REQUIRE(delsos_report_to_json(rep, &text) == DELSOS_OK);
  std::string json_text(text);
  delsos_string_free(text);
  CHECK(json_text.find("\"gamma1\"") != std::string::npos);
  CHECK(json_text.find("\"coupling\"") != std::string::npos);
  delsos_report_free(rep);

  auto dir = std::filesystem::temp_directory_path() / "delsos_capi_test";
  std::filesystem::create_directories(dir);
  std::string gpath = (dir / "gains.json").string();
  REQUIRE(delsos_gains_save(g, gpath.c_str()) == DELSOS_OK);
  delsos_gains* g2 = nullptr;
  REQUIRE(delsos_gains_load(gpath.c_str(), &g2) == DELSOS_OK);

  delsos_trace* tr = nullptr;
  REQUIRE(delsos_simulate(m, g2, "{\"disturbance\":\"step\"}", &tr) == DELSOS_OK);
  int diverged = 1;
  CHECK(delsos_trace_diverged(tr, &diverged) == DELSOS_OK);
  CHECK(diverged == 0);
  double gain = 0.0;
  CHECK(delsos_trace_l2_gain(tr, &gain) == DELSOS_OK);
  CHECK(gain > 0.01);
  CHECK(gain < 1.0);
  std::string cpath = (dir / "trace.csv").string();
  CHECK(delsos_trace_save_csv(tr, cpath.c_str()) == DELSOS_OK);
  CHECK(std::filesystem::file_size(cpath) > 1000);
  CHECK(delsos_trace_save_meta(tr, (dir / "trace.json").string().c_str()) == DELSOS_OK);
  delsos_trace_free(tr);

  // dimension mismatch between gains and model is rejected
  delsos_model* m3 = nullptr;
  REQUIRE(delsos_model_load(model_path("example3.json").c_str(), &m3) == DELSOS_OK);
  delsos_trace* tr2 = nullptr;
  CHECK(delsos_simulate(m3, g2, nullptr, &tr2) == DELSOS_ERR_DIMENSION);
  delsos_model_free(m3);

  delsos_gains_free(g2);
  delsos_gains_free(g);
  delsos_model_free(m);
}

TEST_CASE("version and error strings") {
  CHECK(std::string(delsos_version()) == "1.0.0");
  CHECK(delsos_model_load(nullptr, nullptr) == DELSOS_ERR_INVALID_ARG);
}
