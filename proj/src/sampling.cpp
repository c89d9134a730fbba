// Copyright Contributors to the cdconv project
// SPDX-License-Identifier: Apache-2.0
#include "cdconv/sampling.hpp"

#include <algorithm>
#include <string>

#include "cdconv/error.hpp"

namespace cdconv {

DistanceQueue::DistanceQueue(std::size_t size)
    : DistanceQueue(std::vector<double>(size, kInf), std::vector<bool>(size, false)) {}

DistanceQueue::DistanceQueue(const std::vector<double>& keys, const std::vector<bool>& exclude)
    : keys_(keys), done_(exclude) {
  require(keys_.size() == done_.size(), ErrorKind::kArgument,
          "queue keys and exclusion mask differ in size");
  for (std::size_t j = 0; j < keys_.size(); ++j) {
    if (!done_[j]) heap_.push({keys_[j], j});
  }
}

void DistanceQueue::drop_stale() {
  while (!heap_.empty()) {
    const Entry& top = heap_.top();
    if (!done_[top.index] && top.key == keys_[top.index]) return;
    heap_.pop();
  }
}

bool DistanceQueue::empty() {
  drop_stale();
  return heap_.empty();
}

std::size_t DistanceQueue::pop() {
  drop_stale();
  require(!heap_.empty(), ErrorKind::kState, "pop from an empty distance queue");
  const std::size_t j = heap_.top().index;
  heap_.pop();
  done_[j] = true;
  return j;
}

void DistanceQueue::update(std::size_t j, double candidate) {
  if (candidate < keys_[j]) {
    keys_[j] = candidate;
    if (!done_[j]) heap_.push({candidate, j});
  }
}

namespace {

void check_count(const PointCloud& cloud, std::size_t count) {
  require(count >= 1, ErrorKind::kArgument, "sample count must be at least 1");
  require(count <= cloud.size(), ErrorKind::kArgument,
          "sample count " + std::to_string(count) + " exceeds cloud size " +
              std::to_string(cloud.size()));
}

void check_self(const PointCloud& cloud, const Neighborhood& self) {
  require(self.num_out() == cloud.size() && self.num_in() == cloud.size(),
          ErrorKind::kArgument, "sampling neighborhood must map the cloud onto itself");
}

}  // namespace

SampleResult ifp_sample(const PointCloud& cloud, std::size_t count) {
  check_count(cloud, count);
  const std::size_t n = cloud.size();
  SampleResult out;
  out.min_dist.assign(n, DistanceQueue::kInf);
  std::vector<bool> taken(n, false);
  out.indices.reserve(count);
  for (std::size_t step = 0; step < count; ++step) {
    std::size_t best = n;
    for (std::size_t j = 0; j < n; ++j) {
      if (taken[j]) continue;
      if (best == n || out.min_dist[j] > out.min_dist[best]) best = j;
    }
    taken[best] = true;
    out.indices.push_back(best);
    const auto picked = cloud.point(best);
    for (std::size_t j = 0; j < n; ++j) {
      out.min_dist[j] = std::min(out.min_dist[j], distance(picked, cloud.point(j)));
    }
  }
  return out;
}

SampleResult approx_ifp_sample(const PointCloud& cloud, std::size_t count,
                               const Neighborhood& self, DistanceQueue& queue) {
  check_self(cloud, self);
  require(queue.keys().size() == cloud.size(), ErrorKind::kArgument,
          "queue size does not match cloud");
  SampleResult out;
  out.indices.reserve(count);
  const auto& splits = self.row_splits();
  const auto& in_index = self.in_index();
  for (std::size_t step = 0; step < count; ++step) {
    const std::size_t picked = queue.pop();
    out.indices.push_back(picked);
    for (std::size_t e = splits[picked]; e < splits[picked + 1]; ++e) {
      queue.update(in_index[e], norm(self.delta(e)));
    }
  }
  out.min_dist = queue.keys();
  return out;
}

SampleResult approx_ifp_sample(const PointCloud& cloud, std::size_t count,
                               const Neighborhood& self) {
  check_count(cloud, count);
  DistanceQueue queue(cloud.size());
  return approx_ifp_sample(cloud, count, self, queue);
}

SampleResult rejection_sample(const PointCloud& cloud, const Neighborhood& self,
                              std::size_t limit) {
  check_self(cloud, self);
  const std::size_t n = cloud.size();
  SampleResult out;
  out.min_dist.assign(n, DistanceQueue::kInf);
  std::vector<bool> visited(n, false);
  const auto& splits = self.row_splits();
  const auto& in_index = self.in_index();
  for (std::size_t i = 0; i < n && out.indices.size() < limit; ++i) {
    if (visited[i]) continue;
    out.indices.push_back(i);
    for (std::size_t e = splits[i]; e < splits[i + 1]; ++e) {
      const std::size_t j = in_index[e];
      visited[j] = true;
      out.min_dist[j] = std::min(out.min_dist[j], norm(self.delta(e)));
    }
  }
  return out;
}

SampleResult rejection_sample(const PointCloud& cloud, double radius) {
  return rejection_sample(cloud, ball_search(cloud, cloud, radius));
}

SampleResult approx_ifp_with_rejection(const PointCloud& cloud, std::size_t count,
                                       double radius) {
  check_count(cloud, count);
  const Neighborhood self = ball_search(cloud, cloud, radius);
  SampleResult first = rejection_sample(cloud, self, count);
  if (first.indices.size() == count) return first;

  std::vector<bool> exclude(cloud.size(), false);
  for (std::size_t j : first.indices) exclude[j] = true;
  DistanceQueue queue(first.min_dist, exclude);
  SampleResult rest = approx_ifp_sample(cloud, count - first.indices.size(), self, queue);
  first.indices.insert(first.indices.end(), rest.indices.begin(), rest.indices.end());
  first.min_dist = std::move(rest.min_dist);
  return first;
}

}  // namespace cdconv
