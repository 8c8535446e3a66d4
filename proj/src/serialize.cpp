// serialize.cpp

// Copyright 2026 The LieGen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "liegen/serialize.hpp"

#include <fstream>
#include <sstream>

namespace liegen::serialize {

using nlohmann::json;

json element_to_json(const lie::GroupElement& g) {
  const int n = g.kind.matrix_dim();
  const bool complex_kind = g.kind.is_complex();
  json arr = json::array();
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      if (complex_kind) {
        arr.push_back(json::array({g.mat(r, c).real(), g.mat(r, c).imag()}));
      } else {
        arr.push_back(g.mat(r, c).real());
      }
    }
  return arr;
}

lie::GroupElement element_from_json(const lie::GroupKind& kind, const json& j) {
  const int n = kind.matrix_dim();
  const bool complex_kind = kind.is_complex();
  if (!j.is_array() || static_cast<int>(j.size()) != n * n)
    throw IoError("group element JSON has wrong length for kind " + kind.tag());
  lie::Matrix m(n, n);
  int idx = 0;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c, ++idx) {
      if (complex_kind) {
        const auto& e = j[idx];
        if (!e.is_array() || e.size() != 2)
          throw IoError("complex entry must be an [re, im] pair");
        m(r, c) = lie::cplx(e[0].get<double>(), e[1].get<double>());
      } else {
        m(r, c) = lie::cplx(j[idx].get<double>(), 0.0);
      }
    }
  return lie::GroupElement{kind, std::move(m)};
}

json algebra_to_json(const lie::AlgebraVector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.coeffs.size(); ++i) arr.push_back(v.coeffs[i]);
  return arr;
}

lie::AlgebraVector algebra_from_json(const lie::GroupKind& kind,
                                     const json& j) {
  if (!j.is_array() || static_cast<int>(j.size()) != kind.algebra_dim())
    throw IoError("algebra vector JSON has wrong length for kind " +
                  kind.tag());
  lie::AlgebraVector v = lie::AlgebraVector::zero(kind);
  for (Eigen::Index i = 0; i < v.coeffs.size(); ++i)
    v.coeffs[i] = j[static_cast<std::size_t>(i)].get<double>();
  return v;
}

void write_text_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << contents;
  if (!out) throw IoError("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_lines(const std::string& contents) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : contents) {
    if (ch == '\n') {
      if (!cur.empty()) lines.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  return lines;
}

}  // namespace liegen::serialize
