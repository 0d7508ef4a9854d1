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

#ifndef CSTARPHASE_IO_HPP_
#define CSTARPHASE_IO_HPP_

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cstarphase/mat_core.hpp"

namespace cstar {

using Json = nlohmann::json;

// Shortest-round-trip decimal rendering (printf %.17g): every finite double
// parses back to the identical bit pattern, and repeated runs are
// byte-identical.
std::string fmt17(double v);

// Complex scalar as a [re, im] pair; matrices as row-major nested arrays of
// pairs.  from_* throw std::invalid_argument on malformed input.
Json complex_to_json(const Complex& z);
Complex complex_from_json(const Json& j);
Json matrix_to_json(const ComplexMatrix& m);
ComplexMatrix matrix_from_json(const Json& j);
Json real_vector_to_json(const RealVector& v);
RealVector real_vector_from_json(const Json& j);

// RFC-4180 style CSV: comma separated, header row, '.' decimal separator,
// CRLF-free LF line endings, fields quoted only when they contain a comma,
// quote, or newline.  Numeric cells are rendered with fmt17.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};
std::string csv_field(const std::string& raw);
std::string render_csv(const CsvTable& table);
void write_text_file(const std::string& path, const std::string& body);
void write_json_file(const std::string& path, const Json& j);

}  // namespace cstar

#endif  // CSTARPHASE_IO_HPP_
