// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#include "cdconv/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cdconv/error.hpp"

namespace cdconv {

PointCloud::PointCloud(std::size_t dim, std::vector<double> coords)
    : dim_(dim), coords_(std::move(coords)) {
  require(dim_ > 0, ErrorKind::kArgument, "point cloud dimension must be positive");
  require(coords_.size() % dim_ == 0, ErrorKind::kArgument,
          "point cloud coordinate count is not a multiple of the dimension");
  for (std::size_t k = 0; k < coords_.size(); ++k) {
    require(std::isfinite(coords_[k]), ErrorKind::kArgument,
            "point cloud coordinate " + std::to_string(k / dim_) + " is not finite");
  }
}

double distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = a[d] - b[d];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

double norm(std::span<const double> v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

GridIndex::GridIndex(const PointCloud& cloud, double cell_size)
    : source_(&cloud), cell_size_(cell_size) {
  require(cell_size > 0.0 && std::isfinite(cell_size), ErrorKind::kArgument,
          "grid cell size must be positive and finite");
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    buckets_[cell_of(cloud.point(i))].push_back(i);
  }
}

const std::vector<std::size_t>* GridIndex::bucket(const CellKey& key) const {
  auto it = buckets_.find(key);
  return it == buckets_.end() ? nullptr : &it->second;
}

CellKey GridIndex::cell_of(std::span<const double> x) const {
  CellKey key(x.size());
  for (std::size_t d = 0; d < x.size(); ++d) {
    key[d] = static_cast<std::int64_t>(std::floor(x[d] / cell_size_));
  }
  return key;
}

GridIndex build_grid_index(const PointCloud& cloud, double cell_size) {
  return GridIndex(cloud, cell_size);
}

Neighborhood::Neighborhood(std::size_t num_out, std::size_t num_in, std::size_t dim,
                           std::vector<std::size_t> row_splits,
                           std::vector<std::size_t> in_index, std::vector<double> deltas,
                           std::optional<double> radius)
    : num_out_(num_out),
      num_in_(num_in),
      dim_(dim),
      row_splits_(std::move(row_splits)),
      in_index_(std::move(in_index)),
      deltas_(std::move(deltas)),
      radius_(radius) {
  const std::size_t num_edges = in_index_.size();
  require(row_splits_.size() == num_out_ + 1, ErrorKind::kArgument,
          "row_splits must have num_out + 1 entries");
  require(row_splits_.front() == 0 && row_splits_.back() == num_edges,
          ErrorKind::kArgument, "row_splits must span all edges");
  require(deltas_.size() == num_edges * dim_, ErrorKind::kArgument,
          "edge vector payload does not match edge count");
  out_index_.resize(num_edges);
  for (std::size_t i = 0; i < num_out_; ++i) {
    require(row_splits_[i] <= row_splits_[i + 1], ErrorKind::kArgument,
            "row_splits must be non-decreasing");
    for (std::size_t e = row_splits_[i]; e < row_splits_[i + 1]; ++e) {
      require(in_index_[e] < num_in_, ErrorKind::kArgument, "edge input index out of range");
      if (e > row_splits_[i]) {
        require(in_index_[e - 1] < in_index_[e], ErrorKind::kArgument,
                "edges must be sorted by input index without duplicates");
      }
      out_index_[e] = i;
    }
  }
}

namespace {

void check_dims(const PointCloud& source, const PointCloud& queries) {
  if (source.empty() || queries.empty()) return;
  require(source.dim() == queries.dim(), ErrorKind::kArgument,
          "query and source dimensions differ");
}

void check_radius(double radius) {
  require(radius >= 0.0 && std::isfinite(radius), ErrorKind::kArgument,
          "radius must be non-negative and finite");
}

// Accumulates per-query candidate lists into the canonical CSR layout.
class NeighborhoodBuilder {
 public:
  NeighborhoodBuilder(const PointCloud& source, const PointCloud& queries)
      : source_(source), queries_(queries), dim_(std::max(source.dim(), queries.dim())) {
    row_splits_.reserve(queries.size() + 1);
    row_splits_.push_back(0);
  }

  // `in` must already be sorted ascending.
  void add_row(std::size_t i, std::span<const std::size_t> in) {
    const auto q = queries_.point(i);
    for (std::size_t j : in) {
      in_index_.push_back(j);
      const auto x = source_.point(j);
      for (std::size_t d = 0; d < dim_; ++d) deltas_.push_back(q[d] - x[d]);
    }
    row_splits_.push_back(in_index_.size());
  }

  Neighborhood finish(std::optional<double> radius) {
    return Neighborhood(queries_.size(), source_.size(), dim_, std::move(row_splits_),
                        std::move(in_index_), std::move(deltas_), radius);
  }

 private:
  const PointCloud& source_;
  const PointCloud& queries_;
  std::size_t dim_;
  std::vector<std::size_t> row_splits_;
  std::vector<std::size_t> in_index_;
  std::vector<double> deltas_;
};

}  // namespace

Neighborhood ball_search(const GridIndex& index, const PointCloud& queries, double radius) {
  const PointCloud& source = index.source();
  check_dims(source, queries);
  check_radius(radius);
  NeighborhoodBuilder builder(source, queries);
  const std::size_t dim = queries.dim();
  std::vector<std::size_t> hits;
  std::vector<double> shifted(dim);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    hits.clear();
    if (!source.empty()) {
      const auto q = queries.point(i);
      for (std::size_t d = 0; d < dim; ++d) shifted[d] = q[d] - radius;
      const CellKey lo = index.cell_of(shifted);
      for (std::size_t d = 0; d < dim; ++d) shifted[d] = q[d] + radius;
      const CellKey hi = index.cell_of(shifted);
      double box_cells = 1.0;
      for (std::size_t d = 0; d < dim; ++d) box_cells *= static_cast<double>(hi[d] - lo[d] + 1);
      if (box_cells > static_cast<double>(index.buckets().size())) {
        // Radius far above the cell size: visiting occupied buckets is cheaper.
        for (const auto& [key, members] : index.buckets()) {
          for (std::size_t j : members) {
            if (distance(q, source.point(j)) <= radius) hits.push_back(j);
          }
        }
        std::sort(hits.begin(), hits.end());
        builder.add_row(i, hits);
        continue;
      }
      // Odometer walk over the box of cells [lo, hi].
      CellKey cell = lo;
      while (true) {
        if (const auto* members = index.bucket(cell)) {
          for (std::size_t j : *members) {
            if (distance(q, source.point(j)) <= radius) hits.push_back(j);
          }
        }
        std::size_t d = 0;
        for (; d < dim; ++d) {
          if (cell[d] < hi[d]) {
            ++cell[d];
            break;
          }
          cell[d] = lo[d];
        }
        if (d == dim) break;
      }
      std::sort(hits.begin(), hits.end());
    }
    builder.add_row(i, hits);
  }
  return builder.finish(radius);
}

Neighborhood ball_search(const PointCloud& source, const PointCloud& queries, double radius) {
  check_radius(radius);
  // A zero radius still needs a positive cell size; any positive value is correct.
  const GridIndex index(source, radius > 0.0 ? radius : 1.0);
  return ball_search(index, queries, radius);
}

Neighborhood brute_force_ball_search(const PointCloud& source, const PointCloud& queries,
                                     double radius) {
  check_dims(source, queries);
  check_radius(radius);
  NeighborhoodBuilder builder(source, queries);
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    hits.clear();
    for (std::size_t j = 0; j < source.size(); ++j) {
      if (distance(queries.point(i), source.point(j)) <= radius) hits.push_back(j);
    }
    builder.add_row(i, hits);
  }
  return builder.finish(radius);
}

Neighborhood knn_search(const PointCloud& source, const PointCloud& queries, std::size_t k) {
  check_dims(source, queries);
  require(k > 0, ErrorKind::kArgument, "k must be positive");
  require(k <= source.size(), ErrorKind::kArgument,
          "k = " + std::to_string(k) + " exceeds source size " +
              std::to_string(source.size()));
  NeighborhoodBuilder builder(source, queries);
  std::vector<std::pair<double, std::size_t>> ranked(source.size());
  std::vector<std::size_t> hits(k);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    for (std::size_t j = 0; j < source.size(); ++j) {
      ranked[j] = {distance(queries.point(i), source.point(j)), j};
    }
    // Pair ordering gives (distance, index) lexicographic ties.
    std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     ranked.end());
    std::sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t n = 0; n < k; ++n) hits[n] = ranked[n].second;
    std::sort(hits.begin(), hits.end());
    builder.add_row(i, hits);
  }
  return builder.finish(std::nullopt);
}

}  // namespace cdconv
