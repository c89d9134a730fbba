// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

namespace cdconv {

// S points in D dimensions, stored row-major. Coordinates are always finite.
class PointCloud {
 public:
  PointCloud() = default;
  PointCloud(std::size_t dim, std::vector<double> coords);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : coords_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  bool empty() const noexcept { return coords_.empty(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dim_, dim_};
  }
  const std::vector<double>& coords() const noexcept { return coords_; }

  friend bool operator==(const PointCloud&, const PointCloud&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> coords_;
};

// Euclidean distance |a - b|. Every distance in the library goes through
// this so that samplers and searches agree to the last bit.
double distance(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> v);

using CellKey = std::vector<std::int64_t>;

// Uniform-grid bucketing of a cloud. Point x lives in cell floor(x / cell_size).
class GridIndex {
 public:
  GridIndex(const PointCloud& cloud, double cell_size);

  double cell_size() const noexcept { return cell_size_; }
  const PointCloud& source() const noexcept { return *source_; }
  const std::map<CellKey, std::vector<std::size_t>>& buckets() const noexcept {
    return buckets_;
  }
  const std::vector<std::size_t>* bucket(const CellKey& key) const;
  CellKey cell_of(std::span<const double> x) const;

 private:
  const PointCloud* source_;
  double cell_size_;
  std::map<CellKey, std::vector<std::size_t>> buckets_;
};

GridIndex build_grid_index(const PointCloud& cloud, double cell_size);

// Sparse (out, in) edge structure in CSR layout. Edges are grouped by
// ascending out index, then ascending in index; edge e stores
// delta = query[out] - source[in].
class Neighborhood {
 public:
  Neighborhood() = default;
  Neighborhood(std::size_t num_out, std::size_t num_in, std::size_t dim,
               std::vector<std::size_t> row_splits, std::vector<std::size_t> in_index,
               std::vector<double> deltas, std::optional<double> radius);

  std::size_t num_out() const noexcept { return num_out_; }
  std::size_t num_in() const noexcept { return num_in_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t num_edges() const noexcept { return in_index_.size(); }
  std::optional<double> radius() const noexcept { return radius_; }

  // Edges of output i occupy [row_splits[i], row_splits[i + 1]).
  const std::vector<std::size_t>& row_splits() const noexcept { return row_splits_; }
  const std::vector<std::size_t>& in_index() const noexcept { return in_index_; }
  const std::vector<std::size_t>& out_index() const noexcept { return out_index_; }
  const std::vector<double>& deltas() const noexcept { return deltas_; }
  std::span<const double> delta(std::size_t e) const {
    return {deltas_.data() + e * dim_, dim_};
  }

  friend bool operator==(const Neighborhood&, const Neighborhood&) = default;

 private:
  std::size_t num_out_ = 0;
  std::size_t num_in_ = 0;
  std::size_t dim_ = 0;
  std::vector<std::size_t> row_splits_{0};
  std::vector<std::size_t> in_index_;
  std::vector<std::size_t> out_index_;
  std::vector<double> deltas_;
  std::optional<double> radius_;
};

// Closed-ball search: edge (i, j) iff |queries[i] - source[j]| <= radius.
// Radii larger than the index cell size scan proportionally more cells.
Neighborhood ball_search(const GridIndex& index, const PointCloud& queries, double radius);

// Convenience: builds a grid with cell_size = radius.
Neighborhood ball_search(const PointCloud& source, const PointCloud& queries, double radius);

Neighborhood brute_force_ball_search(const PointCloud& source, const PointCloud& queries,
                                     double radius);

// k nearest sources per query; distance ties go to the lower source index.
Neighborhood knn_search(const PointCloud& source, const PointCloud& queries, std::size_t k);

}  // namespace cdconv
