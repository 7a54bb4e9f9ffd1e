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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "occf/errors.hpp"
#include "occf/graph.hpp"
#include "occf/parallel.hpp"
#include "occf/random.hpp"
#include "occf/weight_tree.hpp"

namespace occf {

/// Popularity-adjusted multinomial over items: weight d_n^gamma, where gamma
/// is chosen so that the most popular item gets weight rate * d_max.
struct ItemHistogram {
  double rate = 1.0;
  double exponent = 1.0;
  std::vector<double> weights;
  WeightTree tree;
};

inline ItemHistogram build_histogram(const DegreeStats& stats, double rate) {
  if (!(rate > 0.0) || !std::isfinite(rate))
    throw ConfigError("histogram rate r must be a positive finite number");
  ItemHistogram h;
  h.rate = rate;
  if (rate != 1.0) {
    if (stats.d_max <= 1) {
      throw ConfigError("histogram rate r = " + std::to_string(rate) +
                        " needs a maximum item degree >= 2 (log d_max is zero for d_max = " +
                        std::to_string(stats.d_max) + ")");
    }
    // log2 keeps powers of two exact, e.g. r = 1/2 and d_max = 1024
    h.exponent = 1.0 + std::log2(rate) / std::log2(static_cast<double>(stats.d_max));
  }
  h.weights.resize(stats.item_degrees.size());
  for (std::size_t n = 0; n < h.weights.size(); ++n) {
    const auto d = stats.item_degrees[n];
    // through log2 so that d_max = 2^j lands exactly on r * d_max
    h.weights[n] = d == 0 ? 0.0 : std::exp2(h.exponent * std::log2(static_cast<double>(d)));
  }
  h.tree = WeightTree(h.weights);
  return h;
}

/// Draws up to k distinct leaves, never any in `exclude`, each draw
/// proportional to the remaining weights. The tree is unchanged on return.
template <class Engine>
std::vector<Index> draw_without_replacement(WeightTree& tree, std::size_t k,
                                            std::span<const Index> exclude, Engine& rng) {
  ExclusionSession session(tree);
  for (Index n : exclude) session.exclude(n);
  std::vector<Index> out;
  out.reserve(k);
  while (out.size() < k) {
    const auto leaf = session.draw(rng);
    if (!leaf) break;
    out.push_back(static_cast<Index>(*leaf));
  }
  return out;
}

template <class Engine>
std::vector<Index> draw_without_replacement(const ItemHistogram& hist, std::size_t k,
                                            std::span<const Index> exclude, Engine& rng) {
  WeightTree scratch = hist.tree;
  return draw_without_replacement(scratch, k, exclude, rng);
}

/// One considered edge of a hidden graph. `vertex` is the item on a user row
/// and the user on an item row.
struct HiddenEdge {
  Index vertex = 0;
  bool liked = false;

  friend bool operator==(const HiddenEdge&, const HiddenEdge&) = default;
};

/// A draw H from q(H): every observed edge plus sampled negatives, stored
/// both user-major and item-major, each row ascending.
class HiddenGraphSample {
 public:
  HiddenGraphSample() = default;

  HiddenGraphSample(std::size_t num_items, std::uint64_t epoch,
                    std::vector<std::vector<HiddenEdge>> user_rows)
      : epoch_(epoch) {
    user_offsets_.assign(user_rows.size() + 1, 0);
    item_offsets_.assign(num_items + 1, 0);
    for (std::size_t m = 0; m < user_rows.size(); ++m) {
      user_offsets_[m + 1] = user_offsets_[m] + user_rows[m].size();
      for (const auto& e : user_rows[m]) ++item_offsets_[e.vertex + 1];
    }
    for (std::size_t n = 0; n < num_items; ++n) item_offsets_[n + 1] += item_offsets_[n];
    user_entries_.reserve(user_offsets_.back());
    item_entries_.resize(user_offsets_.back());
    std::vector<std::size_t> cursor(item_offsets_.begin(), item_offsets_.end() - 1);
    for (std::size_t m = 0; m < user_rows.size(); ++m) {
      for (const auto& e : user_rows[m]) {
        user_entries_.push_back(e);
        item_entries_[cursor[e.vertex]++] = {static_cast<Index>(m), e.liked};
      }
    }
  }

  std::uint64_t epoch() const noexcept { return epoch_; }
  std::size_t num_users() const noexcept { return user_offsets_.size() - 1; }
  std::size_t num_items() const noexcept { return item_offsets_.size() - 1; }
  std::size_t num_edges() const noexcept { return user_entries_.size(); }

  std::span<const HiddenEdge> user_row(Index m) const {
    return {user_entries_.data() + user_offsets_[m], user_entries_.data() + user_offsets_[m + 1]};
  }
  std::span<const HiddenEdge> item_row(Index n) const {
    return {item_entries_.data() + item_offsets_[n], item_entries_.data() + item_offsets_[n + 1]};
  }

  std::vector<Index> negatives(Index m) const {
    std::vector<Index> out;
    for (const auto& e : user_row(m))
      if (!e.liked) out.push_back(e.vertex);
    return out;
  }

  friend bool operator==(const HiddenGraphSample&, const HiddenGraphSample&) = default;

 private:
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> user_offsets_{0};
  std::vector<std::size_t> item_offsets_{0};
  std::vector<HiddenEdge> user_entries_;
  std::vector<HiddenEdge> item_entries_;
};

/// Hidden row of one user: positives plus min(d_m, N - d_m) negatives drawn
/// without replacement from the histogram, merged in ascending item order.
template <class Engine>
std::vector<HiddenEdge> sample_hidden_row(std::span<const Index> positives, WeightTree& tree,
                                          Engine& rng) {
  const std::size_t want = std::min(positives.size(), tree.size() - positives.size());
  auto negatives = draw_without_replacement(tree, want, positives, rng);
  std::sort(negatives.begin(), negatives.end());
  std::vector<HiddenEdge> row;
  row.reserve(positives.size() + negatives.size());
  auto p = positives.begin();
  auto q = negatives.begin();
  while (p != positives.end() || q != negatives.end()) {
    if (q == negatives.end() || (p != positives.end() && *p < *q))
      row.push_back({*p++, true});
    else
      row.push_back({*q++, false});
  }
  return row;
}

/// Samples H for epoch t. User m draws from its own substream
/// derive_seed(seed, t, m), so the result does not depend on `workers`.
inline HiddenGraphSample sample_hidden_graph(const BipartiteGraph& g, const ItemHistogram& hist,
                                             std::uint64_t seed, std::uint64_t epoch,
                                             int workers = 1) {
  if (hist.weights.size() != g.num_items())
    throw ContractError("histogram covers " + std::to_string(hist.weights.size()) +
                        " items, graph has " + std::to_string(g.num_items()));
  std::vector<std::vector<HiddenEdge>> rows(g.num_users());
  parallel_for_with_scratch(
      g.num_users(), workers, [&] { return hist.tree; },
      [&](std::size_t m, WeightTree& tree) {
        Rng rng(derive_seed(seed, epoch, m));
        rows[m] = sample_hidden_row(g.items_of(static_cast<Index>(m)), tree, rng);
      });
  return HiddenGraphSample(g.num_items(), epoch, std::move(rows));
}

struct ItemRatio {
  std::size_t positives = 0;
  double negatives = 0.0;  // mean count per sample
  double ratio = 0.0;      // +infinity when never sampled as a negative
};

/// Per-item ratio of observed positives to sampled negatives, with the
/// negative count averaged over the samples.
inline std::vector<ItemRatio> positive_negative_ratio(const BipartiteGraph& g,
                                                      std::span<const HiddenGraphSample> samples) {
  if (samples.empty()) throw ContractError("positive_negative_ratio needs at least one sample");
  std::vector<ItemRatio> out(g.num_items());
  for (Index n = 0; n < g.num_items(); ++n) out[n].positives = g.item_degree(n);
  for (const auto& h : samples) {
    for (Index n = 0; n < g.num_items(); ++n)
      for (const auto& e : h.item_row(n))
        if (!e.liked) out[n].negatives += 1.0;
  }
  for (auto& r : out) {
    r.negatives /= static_cast<double>(samples.size());
    r.ratio = r.negatives > 0.0 ? static_cast<double>(r.positives) / r.negatives
                                : std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace occf
