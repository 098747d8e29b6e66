// Copyright 2026 The VBDA Authors.
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

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vbda/data.hpp"
#include "vbda/rng.hpp"
#include "vbda/tensor.hpp"

namespace vbda::testing {

inline Tensor random_tensor(std::size_t rows, std::size_t cols, RngStream& rng,
                            double scale = 1.0, bool requires_grad = true) {
  std::vector<double> v(rows * cols);
  for (auto& e : v) e = scale * rng.normal();
  return Tensor({rows, cols}, std::move(v), requires_grad);
}

inline std::vector<std::size_t> random_labels(std::size_t n, std::size_t classes,
                                              RngStream& rng) {
  std::vector<std::size_t> y(n);
  for (auto& e : y) e = rng.below(classes);
  return y;
}

inline DomainBatch toy_batch(std::size_t b_s, std::size_t b_t, std::size_t d_x,
                             std::size_t classes, RngStream& rng) {
  return DomainBatch{random_tensor(b_s, d_x, rng, 1.0, false),
                     random_labels(b_s, classes, rng),
                     random_tensor(b_t, d_x, rng, 1.0, false)};
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vbda_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace vbda::testing
