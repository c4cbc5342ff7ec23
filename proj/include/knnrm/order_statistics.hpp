#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <vector>

#include "knnrm/error.hpp"

namespace knnrm {

/// Multiset of distances with exact k-th smallest retrieval.
///
/// Two heaps split the multiset at a movable rank: `low_` is a max-heap with
/// the smallest elements, `high_` a min-heap with the rest. `select(k)` moves
/// the split to rank k, so a nondecreasing sequence of ranks costs amortized
/// O(log n) per insert and query.
class DistanceLedger {
 public:
  DistanceLedger() = default;

  void insert(double distance) {
    if (!low_.empty() && distance <= low_.front()) {
      low_.push_back(distance);
      std::push_heap(low_.begin(), low_.end());
    } else {
      high_.push_back(distance);
      std::push_heap(high_.begin(), high_.end(), std::greater<>{});
    }
  }

  [[nodiscard]] std::size_t size() const { return low_.size() + high_.size(); }
  [[nodiscard]] bool empty() const { return size() == 0; }

  /// k-th smallest element, 1-based. The split point is cached state, not
  /// part of the multiset, hence const.
  [[nodiscard]] double select(std::size_t k) const {
    detail::require(k >= 1 && k <= size(), "DistanceLedger::select: 1 <= k <= size violated");
    while (low_.size() > k) {
      std::pop_heap(low_.begin(), low_.end());
      high_.push_back(low_.back());
      low_.pop_back();
      std::push_heap(high_.begin(), high_.end(), std::greater<>{});
    }
    while (low_.size() < k) {
      std::pop_heap(high_.begin(), high_.end(), std::greater<>{});
      low_.push_back(high_.back());
      high_.pop_back();
      std::push_heap(low_.begin(), low_.end());
    }
    return low_.front();
  }

  [[nodiscard]] std::vector<double> sorted() const {
    std::vector<double> all(low_);
    all.insert(all.end(), high_.begin(), high_.end());
    std::sort(all.begin(), all.end());
    return all;
  }

  void reserve(std::size_t n) {
    low_.reserve(n);
    high_.reserve(n);
  }

 private:
  mutable std::vector<double> low_;
  mutable std::vector<double> high_;
};

}  // namespace knnrm
