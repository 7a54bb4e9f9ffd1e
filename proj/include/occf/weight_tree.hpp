/*
 * Copyright 2026 The occf Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "occf/errors.hpp"

namespace occf {

/// Prefix-sum tree over nonnegative leaf weights, padded to a power of two.
/// Drawing, zeroing and restoring a leaf are all O(log n).
class WeightTree {
 public:
  WeightTree() = default;

  explicit WeightTree(std::span<const double> weights) : leaves_(weights.size()) {
    capacity_ = 1;
    while (capacity_ < leaves_) capacity_ <<= 1;
    nodes_.assign(2 * capacity_, 0.0);
    for (std::size_t i = 0; i < leaves_; ++i) {
      if (!(weights[i] >= 0.0)) throw ContractError("tree weights must be nonnegative");
      nodes_[capacity_ + i] = weights[i];
    }
    for (std::size_t p = capacity_ - 1; p >= 1; --p) nodes_[p] = nodes_[2 * p] + nodes_[2 * p + 1];
  }

  std::size_t size() const noexcept { return leaves_; }
  double total() const noexcept { return nodes_.empty() ? 0.0 : nodes_[1]; }
  double weight(std::size_t leaf) const { return nodes_[capacity_ + leaf]; }

  void set(std::size_t leaf, double w) {
    std::size_t p = capacity_ + leaf;
    nodes_[p] = w;
    // parents are recomputed from children, never patched by a delta, so a
    // restored leaf set reproduces every internal sum bit for bit
    for (p >>= 1; p >= 1; p >>= 1) nodes_[p] = nodes_[2 * p] + nodes_[2 * p + 1];
  }

  /// Leaf whose cumulative weight interval contains u, for u in [0, total).
  /// Never lands on a zero-weight leaf while total() > 0.
  std::size_t find(double u) const {
    std::size_t p = 1;
    while (p < capacity_) {
      const double left = nodes_[2 * p];
      const double right = nodes_[2 * p + 1];
      if (u < left || right <= 0.0) {
        p = 2 * p;
      } else {
        u -= left;
        p = 2 * p + 1;
      }
    }
    return p - capacity_;
  }

  template <class Engine>
  std::optional<std::size_t> draw(Engine& rng) const {
    const double t = total();
    if (!(t > 0.0)) return std::nullopt;
    std::uniform_real_distribution<double> unif(0.0, t);
    return find(unif(rng));
  }

  friend bool operator==(const WeightTree&, const WeightTree&) = default;

 private:
  std::size_t leaves_ = 0;
  std::size_t capacity_ = 0;
  std::vector<double> nodes_;
};

/// Temporarily zeroes leaves of a tree; the destructor puts back the
/// original weights.
class ExclusionSession {
 public:
  explicit ExclusionSession(WeightTree& tree) : tree_(tree) {}
  ExclusionSession(const ExclusionSession&) = delete;
  ExclusionSession& operator=(const ExclusionSession&) = delete;
  ~ExclusionSession() { restore(); }

  void exclude(std::size_t leaf) {
    const double w = tree_.weight(leaf);
    if (w == 0.0) return;
    saved_.emplace_back(leaf, w);
    tree_.set(leaf, 0.0);
  }

  /// Draws one leaf proportionally to the current weights and excludes it.
  template <class Engine>
  std::optional<std::size_t> draw(Engine& rng) {
    auto leaf = tree_.draw(rng);
    if (leaf) exclude(*leaf);
    return leaf;
  }

  void restore() {
    for (auto it = saved_.rbegin(); it != saved_.rend(); ++it) tree_.set(it->first, it->second);
    saved_.clear();
  }

 private:
  WeightTree& tree_;
  std::vector<std::pair<std::size_t, double>> saved_;
};

}  // namespace occf
