// Copyright 2026 the cstarphase authors
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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>

#include "cstarphase/io.hpp"

using namespace cstar;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(static_cast<bool>(f));
  return std::string(std::istreambuf_iterator<char>(f),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("fmt17 renders doubles that parse back bit-exactly") {
  const double samples[] = {0.0,
                            -0.0,
                            1.0,
                            -1.0,
                            1.0 / 3.0,
                            0.1,
                            M_PI,
                            6.62607015e-34,
                            1.7976931348623157e308,
                            5e-324,
                            -2.2250738585072014e-308,
                            123456789.123456789,
                            std::exp(1.0)};
  for (double v : samples) {
    const std::string s = fmt17(v);
    const double back = std::strtod(s.c_str(), nullptr);
    CAPTURE(s);
    CHECK(std::memcmp(&back, &v, sizeof v) == 0);
    // Rendering is a pure function of the value: byte-identical on repeat.
    CHECK(fmt17(v) == s);
  }
  CHECK(fmt17(0.0) == "0");
  CHECK(fmt17(-0.0) == "-0");
}

TEST_CASE("complex and matrix values round-trip through json") {
  const Complex z(-1.5, 2.25);
  CHECK(complex_from_json(complex_to_json(z)) == z);

  ComplexMatrix m(2, 3);
  m << Complex(1.0, -2.0), Complex(0.0, 0.5), Complex(-0.125, 0.0),
      Complex(1.0 / 3.0, M_PI), Complex(0.0, 0.0), Complex(-1e-15, 1e15);
  const ComplexMatrix back = matrix_from_json(matrix_to_json(m));
  REQUIRE(back.rows() == m.rows());
  REQUIRE(back.cols() == m.cols());
  CHECK((back - m).norm() == 0.0);

  RealVector v(4);
  v << -0.5, 0.0, 1.0 / 7.0, 3e-11;
  const RealVector vback = real_vector_from_json(real_vector_to_json(v));
  REQUIRE(vback.size() == v.size());
  CHECK((vback - v).norm() == 0.0);
}

TEST_CASE("malformed json payloads are rejected") {
  CHECK_THROWS_AS(complex_from_json(Json(1.0)), std::invalid_argument);
  CHECK_THROWS_AS(complex_from_json(Json::array({1.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(complex_from_json(Json::array({1.0, 2.0, 3.0})),
                  std::invalid_argument);
  CHECK_THROWS_AS(complex_from_json(Json::array({"re", 2.0})),
                  std::invalid_argument);

  CHECK_THROWS_AS(matrix_from_json(Json::object()), std::invalid_argument);
  CHECK_THROWS_AS(matrix_from_json(Json::array()), std::invalid_argument);
  // Ragged rows are rejected.
  Json ragged = Json::array();
  ragged.push_back(Json::array({Json::array({1.0, 0.0})}));
  ragged.push_back(Json::array(
      {Json::array({1.0, 0.0}), Json::array({2.0, 0.0})}));
  CHECK_THROWS_AS(matrix_from_json(ragged), std::invalid_argument);

  CHECK_THROWS_AS(real_vector_from_json(Json(3.0)), std::invalid_argument);
  CHECK_THROWS_AS(real_vector_from_json(Json::array({1.0, "x"})),
                  std::invalid_argument);
}

TEST_CASE("csv fields are quoted only when necessary") {
  CHECK(csv_field("plain") == "plain");
  CHECK(csv_field("1.5e-3") == "1.5e-3");
  CHECK(csv_field("") == "");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(csv_field("two\nlines") == "\"two\nlines\"");
  CHECK(csv_field("cr\rhere") == "\"cr\rhere\"");
}

TEST_CASE("csv tables render with a header, LF endings, and strict widths") {
  CsvTable t;
  t.header = {"t", "trace_residual", "leakage"};
  t.rows = {{fmt17(0.0), fmt17(1e-12), fmt17(0.5)},
            {fmt17(0.25), "has,comma", "ok"}};
  const std::string body = render_csv(t);
  CHECK(body ==
        "t,trace_residual,leakage\n"
        "0,9.9999999999999998e-13,0.5\n"
        "0.25,\"has,comma\",ok\n");
  CHECK(body.find('\r') == std::string::npos);

  t.rows.push_back({"only", "two"});
  CHECK_THROWS_WITH_AS(render_csv(t), "csv row width differs from header",
                       std::invalid_argument);
}

TEST_CASE("text and json files hit the disk byte-for-byte") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "cstarphase-io-test";
  fs::create_directories(dir);

  const std::string body = "alpha,beta\n1,2\n";
  const std::string csv_path = (dir / "table.csv").string();
  write_text_file(csv_path, body);
  CHECK(read_file(csv_path) == body);

  Json j;
  j["version"] = 1;
  j["values"] = Json::array({1.5, -2.0});
  const std::string json_path = (dir / "summary.json").string();
  write_json_file(json_path, j);
  const std::string jbody = read_file(json_path);
  CHECK(jbody.back() == '\n');
  CHECK(Json::parse(jbody) == j);

  CHECK_THROWS_AS(
      write_text_file((dir / "missing" / "x.csv").string(), body),
      std::runtime_error);
  fs::remove_all(dir);
}
