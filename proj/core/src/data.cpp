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

#include "vbda/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

namespace vbda {

void Dataset::validate() const {
  if (labels.empty()) throw ContractError("dataset is empty");
  if (x.rank() != 2 || x.rows() != labels.size()) {
    throw DimensionError("dataset has " + std::to_string(labels.size()) +
                         " labels but inputs " + shape_to_string(x.shape));
  }
  for (auto y : labels) {
    if (y >= classes) {
      throw ContractError("label " + std::to_string(y) + " outside [0, " +
                          std::to_string(classes) + ")");
    }
  }
}

namespace {

void check_spec(const SyntheticSpec& spec) {
  if (spec.n == 0) throw ContractError("synthetic spec: n must be positive");
  if (spec.classes < 2) throw ContractError("synthetic spec: need K >= 2");
  if (!(spec.rho >= 0.0 && spec.rho <= 1.0)) {
    throw ContractError("synthetic spec: rho must lie in [0, 1]");
  }
  if (!(spec.signal_radius > 0.0)) {
    throw ContractError("synthetic spec: signal_radius must be positive");
  }
  if (!(spec.noise >= 0.0) || !(spec.nuisance_noise >= 0.0)) {
    throw ContractError("synthetic spec: noise must be non-negative");
  }
}

// Points on the unit circle for K codes, in the first min(dim, 2) coords.
std::vector<std::vector<double>> circle_means(std::size_t classes,
                                              std::size_t dim) {
  std::vector<std::vector<double>> means(classes, std::vector<double>(dim, 0.0));
  for (std::size_t k = 0; k < classes; ++k) {
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(k) /
                         static_cast<double>(classes);
    means[k][0] = std::cos(angle);
    if (dim > 1) means[k][1] = std::sin(angle);
  }
  return means;
}

// Mean squared distance of equiprobable class means from their centroid.
double between_class_variance(const std::vector<std::vector<double>>& means) {
  const std::size_t dim = means.front().size();
  std::vector<double> centroid(dim, 0.0);
  for (const auto& m : means) {
    for (std::size_t j = 0; j < dim; ++j) centroid[j] += m[j] / means.size();
  }
  double total = 0.0;
  for (const auto& m : means) {
    for (std::size_t j = 0; j < dim; ++j) {
      total += (m[j] - centroid[j]) * (m[j] - centroid[j]);
    }
  }
  return total / static_cast<double>(means.size());
}

// Two orthonormal directions in R^dim (one when dim == 1).
std::vector<std::vector<double>> random_plane(std::size_t dim, RngStream rng) {
  const std::size_t count = std::min<std::size_t>(dim, 2);
  std::vector<std::vector<double>> basis;
  while (basis.size() < count) {
    std::vector<double> v(dim);
    for (auto& e : v) e = rng.normal();
    for (const auto& b : basis) {
      double dot = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dot += v[j] * b[j];
      for (std::size_t j = 0; j < dim; ++j) v[j] -= dot * b[j];
    }
    double norm = 0.0;
    for (double e : v) norm += e * e;
    norm = std::sqrt(norm);
    if (norm < 1e-6) continue;
    for (auto& e : v) e /= norm;
    basis.push_back(std::move(v));
  }
  return basis;
}

struct NuisanceGeometry {
  std::vector<std::vector<double>> signal_means;
  std::vector<std::vector<double>> code_centers;
};

NuisanceGeometry nuisance_geometry(const SyntheticSpec& spec) {
  NuisanceGeometry g;
  g.signal_means = circle_means(spec.classes, spec.d_signal);
  for (auto& m : g.signal_means) {
    for (auto& v : m) v *= spec.signal_radius;
  }
  const double radius = nuisance_radius(spec);
  const auto plane = random_plane(spec.d_nuisance,
                                  RngStream(spec.seed).derive("nuisance-plane"));
  const auto unit = circle_means(spec.classes, 2);
  g.code_centers.assign(spec.classes, std::vector<double>(spec.d_nuisance, 0.0));
  for (std::size_t c = 0; c < spec.classes; ++c) {
    for (std::size_t a = 0; a < plane.size(); ++a) {
      for (std::size_t j = 0; j < spec.d_nuisance; ++j) {
        g.code_centers[c][j] += radius * unit[c][a] * plane[a][j];
      }
    }
  }
  return g;
}

void fill_domain(const SyntheticSpec& spec, const NuisanceGeometry& geom,
                 bool is_source, RngStream rng, Dataset& out,
                 std::vector<std::size_t>& codes) {
  const std::size_t d_x = spec.d_signal + spec.d_nuisance;
  out.classes = spec.classes;
  out.labels.resize(spec.n);
  codes.resize(spec.n);
  std::vector<double> x(spec.n * d_x);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t y = rng.below(spec.classes);
    std::size_t code = rng.below(spec.classes);
    const double u = rng.uniform();
    if (is_source && u < spec.rho) code = y;
    out.labels[i] = y;
    codes[i] = code;
    double* row = x.data() + i * d_x;
    for (std::size_t j = 0; j < spec.d_signal; ++j) {
      row[j] = geom.signal_means[y][j] + spec.noise * rng.normal();
    }
    for (std::size_t j = 0; j < spec.d_nuisance; ++j) {
      row[spec.d_signal + j] =
          geom.code_centers[code][j] + spec.nuisance_noise * rng.normal();
    }
  }
  out.x = Tensor({spec.n, d_x}, std::move(x));
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes,
                        std::size_t offset, const std::string& file) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(file + ": truncated header at byte offset " +
                      std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) |
         (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

// Row weights of an area-average from `in` cells to `out` cells.
std::vector<std::vector<double>> area_weights(std::size_t in, std::size_t out) {
  std::vector<std::vector<double>> w(out, std::vector<double>(in, 0.0));
  const double step = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double lo = o * step;
    const double hi = (o + 1) * step;
    for (std::size_t i = 0; i < in; ++i) {
      const double overlap =
          std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
      if (overlap > 0.0) w[o][i] = overlap / step;
    }
  }
  return w;
}

}  // namespace

double nuisance_radius(const SyntheticSpec& spec) {
  check_spec(spec);
  if (spec.d_signal == 0 || spec.d_nuisance == 0) {
    throw ContractError("nuisance task needs d_signal >= 1 and d_nuisance >= 1");
  }
  const double signal_total =
      spec.signal_radius * spec.signal_radius *
          between_class_variance(circle_means(spec.classes, spec.d_signal)) +
      static_cast<double>(spec.d_signal) * spec.noise * spec.noise;
  const double unit = between_class_variance(
      circle_means(spec.classes, std::min<std::size_t>(spec.d_nuisance, 2)));
  const double r2 =
      (signal_total -
       static_cast<double>(spec.d_nuisance) * spec.nuisance_noise * spec.nuisance_noise) /
      unit;
  if (!(r2 > 0.0)) {
    throw ContractError(
        "nuisance noise too large to match the signal variance");
  }
  return std::sqrt(r2);
}

NuisanceTask generate_nuisance_task(const SyntheticSpec& spec) {
  const NuisanceGeometry geom = nuisance_geometry(spec);
  const RngStream base(spec.seed);
  NuisanceTask task;
  fill_domain(spec, geom, true, base.derive("source"), task.source, task.source_codes);
  fill_domain(spec, geom, false, base.derive("target"), task.target, task.target_codes);
  return task;
}

Dataset sample_moons(std::size_t n, double noise, RngStream& rng) {
  Dataset d;
  d.classes = 2;
  d.labels.resize(n);
  std::vector<double> x(2 * n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = i % 2;
    const double t = std::numbers::pi * rng.uniform();
    double px = 0.0, py = 0.0;
    if (y == 0) {
      px = std::cos(t);
      py = std::sin(t);
    } else {
      px = 1.0 - std::cos(t);
      py = 0.5 - std::sin(t);
    }
    x[2 * i] = px - 0.5 + noise * rng.normal();
    x[2 * i + 1] = py - 0.25 + noise * rng.normal();
    d.labels[i] = y;
  }
  d.x = Tensor({n, 2}, std::move(x));
  return d;
}

Dataset rotate(const Dataset& d, double angle_deg) {
  if (d.dim() != 2) throw DimensionError("rotate expects 2-D inputs");
  const double a = angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(a), s = std::sin(a);
  Dataset out = d;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double px = d.x.at(i, 0), py = d.x.at(i, 1);
    out.x.at(i, 0) = c * px - s * py;
    out.x.at(i, 1) = s * px + c * py;
  }
  return out;
}

DomainPair generate_rotated_moons(const SyntheticSpec& spec) {
  check_spec(spec);
  if (spec.classes != 2) {
    throw ContractError("rotated moons needs K = 2, got " +
                        std::to_string(spec.classes));
  }
  // The target is the source sample itself, rotated about the origin.
  RngStream rng = RngStream(spec.seed).derive("moons");
  Dataset source = sample_moons(spec.n, spec.noise, rng);
  Dataset target = rotate(source, spec.angle_deg);
  return DomainPair{std::move(source), TargetDomain(std::move(target))};
}

DomainPair generate_task(const SyntheticSpec& spec) {
  if (spec.kind == TaskKind::kRotatedMoons) return generate_rotated_moons(spec);
  NuisanceTask t = generate_nuisance_task(spec);
  return DomainPair{std::move(t.source), TargetDomain(std::move(t.target))};
}

std::vector<double> area_downsample(std::span<const double> image,
                                    std::size_t rows, std::size_t cols,
                                    std::size_t out_rows, std::size_t out_cols) {
  if (image.size() != rows * cols) {
    throw DimensionError("area_downsample: image size does not match dims");
  }
  const auto wr = area_weights(rows, out_rows);
  const auto wc = area_weights(cols, out_cols);
  std::vector<double> out(out_rows * out_cols, 0.0);
  for (std::size_t i = 0; i < out_rows; ++i) {
    for (std::size_t a = 0; a < rows; ++a) {
      if (wr[i][a] == 0.0) continue;
      for (std::size_t j = 0; j < out_cols; ++j) {
        double acc = 0.0;
        for (std::size_t b = 0; b < cols; ++b) acc += wc[j][b] * image[a * cols + b];
        out[i * out_cols + j] += wr[i][a] * acc;
      }
    }
  }
  return out;
}

Dataset load_idx(const std::filesystem::path& images,
                 const std::filesystem::path& labels, bool downsample,
                 std::size_t limit, std::size_t classes) {
  const std::string img_name = images.string();
  const std::string lbl_name = labels.string();
  const auto img = read_file(images);
  const auto lbl = read_file(labels);

  const std::uint32_t img_magic = read_be32(img, 0, img_name);
  if (img_magic != 0x00000803) {
    std::ostringstream os;
    os << img_name << ": bad image magic 0x" << std::hex << img_magic
       << " at byte offset 0";
    throw FormatError(os.str());
  }
  const std::uint32_t lbl_magic = read_be32(lbl, 0, lbl_name);
  if (lbl_magic != 0x00000801) {
    std::ostringstream os;
    os << lbl_name << ": bad label magic 0x" << std::hex << lbl_magic
       << " at byte offset 0";
    throw FormatError(os.str());
  }
  const std::size_t n_img = read_be32(img, 4, img_name);
  const std::size_t rows = read_be32(img, 8, img_name);
  const std::size_t cols = read_be32(img, 12, img_name);
  const std::size_t n_lbl = read_be32(lbl, 4, lbl_name);
  if (n_img != n_lbl) {
    throw FormatError(img_name + " has " + std::to_string(n_img) +
                      " images but " + lbl_name + " has " +
                      std::to_string(n_lbl) + " labels");
  }
  if (rows == 0 || cols == 0) throw FormatError(img_name + ": zero image size");

  const std::size_t n = limit == 0 ? n_img : std::min(limit, n_img);
  const std::size_t pixels = rows * cols;
  const std::size_t img_need = 16 + n * pixels;
  if (img.size() < img_need) {
    throw FormatError(img_name + ": truncated pixel data at byte offset " +
                      std::to_string(img.size()) + " (need " +
                      std::to_string(img_need) + ")");
  }
  if (lbl.size() < 8 + n) {
    throw FormatError(lbl_name + ": truncated label data at byte offset " +
                      std::to_string(lbl.size()) + " (need " +
                      std::to_string(8 + n) + ")");
  }

  const bool resample = downsample && !(rows == 16 && cols == 16);
  const std::size_t out_rows = downsample ? 16 : rows;
  const std::size_t out_cols = downsample ? 16 : cols;
  const std::size_t d_x = out_rows * out_cols;

  Dataset d;
  d.classes = classes;
  d.labels.resize(n);
  std::vector<double> x(n * d_x);
  std::vector<double> scaled(pixels);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = lbl[8 + i];
    if (label >= classes) {
      throw FormatError(lbl_name + ": label " + std::to_string(label) +
                        " out of range at byte offset " + std::to_string(8 + i));
    }
    d.labels[i] = label;
    for (std::size_t p = 0; p < pixels; ++p) {
      scaled[p] = static_cast<double>(img[16 + i * pixels + p]) / 255.0;
    }
    if (resample) {
      const auto small = area_downsample(scaled, rows, cols, out_rows, out_cols);
      std::copy(small.begin(), small.end(), x.begin() + i * d_x);
    } else {
      std::copy(scaled.begin(), scaled.end(), x.begin() + i * d_x);
    }
  }
  d.x = Tensor({n, d_x}, std::move(x));
  return d;
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> rows) {
  const std::size_t d = x.cols();
  std::vector<double> out(rows.size() * d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(x.data.begin() + rows[i] * d, d, out.begin() + i * d);
  }
  return Tensor({rows.size(), d}, std::move(out));
}

BatchIterator::BatchIterator(const Dataset& source, const Tensor& target_inputs,
                             std::size_t batch_source, std::size_t batch_target,
                             RngStream rng)
    : source_data_(source),
      target_inputs_(target_inputs),
      batch_source_(batch_source),
      batch_target_(batch_target),
      rng_(rng) {
  if (source.size() == 0 || target_inputs.size() == 0) {
    throw ContractError("batch iterator: empty dataset");
  }
  if (batch_source == 0 || batch_target == 0) {
    throw ContractError("batch iterator: batch sizes must be positive");
  }
  if (batch_source > source.size() || batch_target > target_inputs.rows()) {
    throw ContractError("batch iterator: batch size exceeds dataset size");
  }
  source_.order.resize(source.size());
  target_.order.resize(target_inputs.rows());
  reshuffle(source_);
  reshuffle(target_);
  source_.epoch = 0;
  target_.epoch = 0;
}

void BatchIterator::reshuffle(Cursor& c) {
  for (std::size_t i = 0; i < c.order.size(); ++i) c.order[i] = i;
  for (std::size_t i = c.order.size(); i > 1; --i) {
    std::swap(c.order[i - 1], c.order[rng_.below(i)]);
  }
  c.pos = 0;
  ++c.epoch;
}

std::vector<std::size_t> BatchIterator::take(Cursor& c, std::size_t count) {
  if (c.pos + count > c.order.size()) reshuffle(c);
  std::vector<std::size_t> idx(c.order.begin() + c.pos,
                               c.order.begin() + c.pos + count);
  c.pos += count;
  return idx;
}

DomainBatch BatchIterator::next() {
  DomainBatch b;
  const auto s = take(source_, batch_source_);
  const auto t = take(target_, batch_target_);
  b.x_s = gather_rows(source_data_.x, s);
  b.y_s.reserve(s.size());
  for (auto i : s) b.y_s.push_back(source_data_.labels[i]);
  b.x_t = gather_rows(target_inputs_, t);
  return b;
}

void save_dataset_cache(const std::filesystem::path& path, const Dataset& d) {
  d.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write dataset cache " + path.string());
  out << "vbda-dataset " << d.size() << ' ' << d.dim() << ' ' << d.classes << '\n';
  static_assert(std::endian::native == std::endian::little,
                "dataset cache assumes a little-endian host");
  std::vector<double> row(d.dim() + 1);
  for (std::size_t i = 0; i < d.size(); ++i) {
    row[0] = static_cast<double>(d.labels[i]);
    std::copy_n(d.x.data.begin() + i * d.dim(), d.dim(), row.begin() + 1);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(double)));
  }
  if (!out) throw Error("failed writing dataset cache " + path.string());
}

Dataset load_dataset_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read dataset cache " + path.string());
  std::string header;
  std::getline(in, header);
  std::istringstream hs(header);
  std::string magic;
  std::size_t n = 0, d_x = 0, k = 0;
  hs >> magic >> n >> d_x >> k;
  if (!hs || magic != "vbda-dataset" || n == 0 || d_x == 0) {
    throw FormatError(path.string() + ": bad dataset header at byte offset 0");
  }
  Dataset d;
  d.classes = k;
  d.labels.resize(n);
  std::vector<double> x(n * d_x);
  std::vector<double> row(d_x + 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto offset = static_cast<std::size_t>(in.tellg());
    if (!in.read(reinterpret_cast<char*>(row.data()),
                 static_cast<std::streamsize>(row.size() * sizeof(double)))) {
      throw FormatError(path.string() + ": truncated row " + std::to_string(i) +
                        " at byte offset " + std::to_string(offset));
    }
    d.labels[i] = static_cast<std::size_t>(row[0]);
    std::copy(row.begin() + 1, row.end(), x.begin() + i * d_x);
  }
  d.x = Tensor({n, d_x}, std::move(x));
  d.validate();
  return d;
}

}  // namespace vbda
