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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vbda/rng.hpp"
#include "vbda/tensor.hpp"

namespace vbda {

/// Inputs [n x d_x] with class indices in [0, classes).
struct Dataset {
  Tensor x;
  std::vector<std::size_t> labels;
  std::size_t classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return x.cols(); }
  void validate() const;
};

/// Target domain. Training code only ever sees `inputs()`; ground truth is
/// behind `evaluation_view()`, which the batch iterator never touches.
class TargetDomain {
 public:
  TargetDomain() = default;
  explicit TargetDomain(Dataset labelled) : data_(std::move(labelled)) {}

  const Tensor& inputs() const { return data_.x; }
  std::size_t size() const { return data_.size(); }
  std::size_t classes() const { return data_.classes; }

  /// Labelled target data for evaluation and oracle diagnostics only.
  const Dataset& evaluation_view() const { return data_; }

 private:
  Dataset data_;
};

struct DomainPair {
  Dataset source;
  TargetDomain target;
};

/// One training step's worth of data. Deliberately has no target labels.
struct DomainBatch {
  Tensor x_s;
  std::vector<std::size_t> y_s;
  Tensor x_t;
};

enum class TaskKind { kNuisanceCorrelation, kRotatedMoons };

struct SyntheticSpec {
  TaskKind kind = TaskKind::kNuisanceCorrelation;
  std::size_t n = 2000;  // per domain
  std::size_t classes = 2;
  std::size_t d_signal = 2;
  std::size_t d_nuisance = 8;
  double rho = 0.95;
  double angle_deg = 30.0;  // moons only
  double signal_radius = 3.0;  // radius of the class-mean circle
  double noise = 1.8;          // signal dims / moons
  double nuisance_noise = 0.15;
  std::uint64_t seed = 0;

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

struct NuisanceTask {
  Dataset source;
  Dataset target;
  // Background code of each example, exposed for diagnostics.
  std::vector<std::size_t> source_codes;
  std::vector<std::size_t> target_codes;
};

/// Signal dims: class-conditional Gaussians with means on a circle of radius
/// `signal_radius`, shared by both domains. Nuisance dims: a categorical code embedded on
/// a circle in a random 2-D subspace plus isotropic noise. In the source the
/// code equals the label with probability rho and is otherwise uniform; in
/// the target it is uniform and independent of the label, so its marginal
/// is the same in both domains. The nuisance radius is chosen so that the two
/// subspaces have equal total variance.
NuisanceTask generate_nuisance_task(const SyntheticSpec& spec);

/// Radius of the nuisance code circle implied by the equal-variance rule.
double nuisance_radius(const SyntheticSpec& spec);

/// Two interleaving half circles centred on the origin; the target is the
/// same point set rotated by spec.angle_deg.
DomainPair generate_rotated_moons(const SyntheticSpec& spec);
Dataset sample_moons(std::size_t n, double noise, RngStream& rng);
Dataset rotate(const Dataset& d, double angle_deg);

/// Build a source/target pair from a spec of either kind.
DomainPair generate_task(const SyntheticSpec& spec);

/// Reads IDX images (magic 0x00000803) and labels (0x00000801). Pixels are
/// scaled to [0, 1]; with `downsample`, images are area-averaged to 16x16.
/// At most `limit` examples are kept (0 keeps all).
Dataset load_idx(const std::filesystem::path& images,
                 const std::filesystem::path& labels, bool downsample,
                 std::size_t limit, std::size_t classes = 10);

/// Area-average resampling of one row-major image.
std::vector<double> area_downsample(std::span<const double> image,
                                    std::size_t rows, std::size_t cols,
                                    std::size_t out_rows, std::size_t out_cols);

/// Shuffled mini-batches from both domains, independent permutation per
/// domain per epoch; the short tail of each epoch is dropped.
class BatchIterator {
 public:
  BatchIterator(const Dataset& source, const Tensor& target_inputs,
                std::size_t batch_source, std::size_t batch_target,
                RngStream rng);

  DomainBatch next();
  std::size_t source_epoch() const { return source_.epoch; }
  std::size_t target_epoch() const { return target_.epoch; }

 private:
  struct Cursor {
    std::vector<std::size_t> order;
    std::size_t pos = 0;
    std::size_t epoch = 0;
  };
  void reshuffle(Cursor& c);
  std::vector<std::size_t> take(Cursor& c, std::size_t count);

  const Dataset& source_data_;
  const Tensor& target_inputs_;
  std::size_t batch_source_;
  std::size_t batch_target_;
  RngStream rng_;
  Cursor source_;
  Cursor target_;
};

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows);

// Dataset cache: a text header line
//   vbda-dataset <n> <d_x> <K>
// followed by n rows of (label, x_0 .. x_{d_x-1}) as little-endian float64.
void save_dataset_cache(const std::filesystem::path& path, const Dataset& d);
Dataset load_dataset_cache(const std::filesystem::path& path);

}  // namespace vbda
