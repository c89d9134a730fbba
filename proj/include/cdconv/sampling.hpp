// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>
#include <queue>
#include <vector>

#include "cdconv/geometry.hpp"

namespace cdconv {

struct SampleResult {
  // Selected input indices in order of selection.
  std::vector<std::size_t> indices;
  // Distance from each input point to its nearest selected point, as far as
  // the sampler tracked it; +inf where never updated.
  std::vector<double> min_dist;
};

// Max-priority queue over point indices keyed by current minimum distance.
// Keys only ever decrease; stale heap entries are skipped on pop. Equal keys
// pop lowest index first.
class DistanceQueue {
 public:
  static constexpr double kInf = std::numeric_limits<double>::infinity();

  // Every index starts with key +inf.
  explicit DistanceQueue(std::size_t size);
  // Index j starts with keys[j]; indices flagged in `exclude` never pop.
  DistanceQueue(const std::vector<double>& keys, const std::vector<bool>& exclude);

  bool empty();
  std::size_t pop();
  // key[j] = min(key[j], candidate). Popped indices keep their key updated
  // but are not re-queued.
  void update(std::size_t j, double candidate);

  const std::vector<double>& keys() const noexcept { return keys_; }

 private:
  struct Entry {
    double key;
    std::size_t index;
    bool operator<(const Entry& o) const {
      if (key != o.key) return key < o.key;
      return index > o.index;
    }
  };
  void drop_stale();

  std::vector<double> keys_;
  std::vector<bool> done_;
  std::priority_queue<Entry> heap_;
};

// Exact iterative farthest point: O(count * S).
SampleResult ifp_sample(const PointCloud& cloud, std::size_t count);

// Farthest-point selection with distance updates restricted to each pick's
// neighborhood. `self` must be a cloud -> cloud neighborhood.
SampleResult approx_ifp_sample(const PointCloud& cloud, std::size_t count,
                               const Neighborhood& self, DistanceQueue& queue);

// approx_ifp_sample seeded with an all-infinite queue.
SampleResult approx_ifp_sample(const PointCloud& cloud, std::size_t count,
                               const Neighborhood& self);

// Scan in index order; keep any point not yet inside a kept point's ball.
// `limit` stops after that many selections.
SampleResult rejection_sample(const PointCloud& cloud, const Neighborhood& self,
                              std::size_t limit = std::numeric_limits<std::size_t>::max());
SampleResult rejection_sample(const PointCloud& cloud, double radius);

// Rejection sampling, truncated or topped up with approximate IFP so that
// exactly `count` indices are returned.
SampleResult approx_ifp_with_rejection(const PointCloud& cloud, std::size_t count,
                                       double radius);

}  // namespace cdconv
