//
// Copyright 2026 The SNH Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "snh/error.hpp"
#include "snh/geo.hpp"

namespace snh::internal {

using nlohmann::json;

inline json region_to_json(const Region& r) {
  return {{"center_lat", r.center().lat()}, {"center_lon", r.center().lon()}, {"side", r.side()}};
}

inline Region region_from_json(const json& j) {
  return Region(GeoPoint(j.at("center_lat").get<double>(), j.at("center_lon").get<double>()),
                j.at("side").get<double>());
}

inline json parse_json_document(std::string_view text, std::string_view what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string(what) + ": " + e.what());
  }
}

inline void check_version(const json& j, int expected, std::string_view what) {
  if (!j.is_object() || !j.contains("version") || !j["version"].is_number_integer()) {
    throw Error(ErrorCode::kCorruptFile, std::string(what) + ": missing version");
  }
  const int got = j["version"].get<int>();
  if (got != expected) {
    throw Error(ErrorCode::kVersionMismatch, std::string(what) + ": version " +
                                                 std::to_string(got) + ", expected " +
                                                 std::to_string(expected));
  }
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path);
  out << text;
  if (!out) throw Error(ErrorCode::kIoError, "write failed: " + path);
}

// Wraps nlohmann field-access errors as corrupt-file errors.
template <class F>
auto guarded_parse(std::string_view what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string(what) + ": " + e.what());
  }
}

}  // namespace snh::internal
