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

// Helpers shared by the unit and acceptance suites. The noise-free entry
// points live here, outside the public headers, so production callers never
// see them.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

#include <unistd.h>

#include "snh/dp_collect.hpp"
#include "snh/eval.hpp"
#include "snh/geo.hpp"
#include "snh/random.hpp"
#include "snh/snh_model.hpp"

namespace snh::testing {

inline NoisyHistogram collect_exact(AuditedDataset& data, double rho, double epsilon = 1.0) {
  return detail::collect_with_noise(data, rho, epsilon, [] { return 0.0; });
}

inline FitOutput fit_exact(AuditedDataset& data, const FitConfig& cfg,
                           std::span<const RangeQuery> workload = {}) {
  return detail::fit_with_noise(data, cfg, workload, [] { return 0.0; });
}

// Region centered on (0, 0) with the given side; planar tests never use the
// geographic center beyond projection.
inline Region square(double side) { return Region(GeoPoint(0.0, 0.0), side); }

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("snh-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace snh::testing
