// liegen/serialize.hpp

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
//
// JSON wire formats:
//  * group element  -> row-major array of entries; real kinds emit plain
//    numbers, complex kinds emit [re, im] pairs.  Round trips are bit-exact
//    (nlohmann/json prints shortest-round-trip doubles).
//  * phase state    -> {"t": ..., "g": [...], "xi": [...]}.

#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "liegen/lie.hpp"

namespace liegen::serialize {

nlohmann::json element_to_json(const lie::GroupElement& g);
lie::GroupElement element_from_json(const lie::GroupKind& kind,
                                    const nlohmann::json& j);

nlohmann::json algebra_to_json(const lie::AlgebraVector& v);
lie::AlgebraVector algebra_from_json(const lie::GroupKind& kind,
                                     const nlohmann::json& j);

/// Write lines joined by '\n' (with a trailing newline) atomically enough for
/// our purposes; throws IoError on failure.
void write_text_file(const std::string& path, const std::string& contents);

std::string read_text_file(const std::string& path);

/// Split file contents into non-empty lines.
std::vector<std::string> split_lines(const std::string& contents);

}  // namespace liegen::serialize
