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
#include <cstdint>
#include <deque>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "occf/errors.hpp"

namespace occf {

using Index = std::uint32_t;

struct Edge {
  Index user = 0;
  Index item = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Observed positive user-item graph. Immutable after construction.
///
/// Adjacency is stored twice, user-major (items ascending) and item-major
/// (users ascending), so both sides of the bipartite graph can be walked in a
/// fixed order.
class BipartiteGraph {
 public:
  BipartiteGraph() = default;

  /// Builds a graph over dense indices. Edges are sorted and deduplicated;
  /// the number of dropped duplicates is written to `duplicates` if given.
  static BipartiteGraph from_edges(std::vector<std::string> user_ids,
                                   std::vector<std::string> item_ids,
                                   std::vector<Edge> edges,
                                   std::size_t* duplicates = nullptr) {
    BipartiteGraph g;
    const auto M = user_ids.size();
    const auto N = item_ids.size();
    for (const auto& e : edges) {
      if (e.user >= M || e.item >= N) {
        throw ContractError("edge (" + std::to_string(e.user) + ", " +
                            std::to_string(e.item) + ") outside a " +
                            std::to_string(M) + "x" + std::to_string(N) +
                            " graph");
      }
    }
    std::sort(edges.begin(), edges.end());
    const auto last = std::unique(edges.begin(), edges.end());
    if (duplicates) *duplicates = static_cast<std::size_t>(edges.end() - last);
    edges.erase(last, edges.end());

    g.user_ids_ = std::move(user_ids);
    g.item_ids_ = std::move(item_ids);
    g.user_offsets_.assign(M + 1, 0);
    g.item_offsets_.assign(N + 1, 0);
    for (const auto& e : edges) {
      ++g.user_offsets_[e.user + 1];
      ++g.item_offsets_[e.item + 1];
    }
    for (std::size_t m = 0; m < M; ++m) g.user_offsets_[m + 1] += g.user_offsets_[m];
    for (std::size_t n = 0; n < N; ++n) g.item_offsets_[n + 1] += g.item_offsets_[n];

    g.user_adj_.resize(edges.size());
    g.item_adj_.resize(edges.size());
    std::vector<std::size_t> cursor(g.item_offsets_.begin(), g.item_offsets_.end() - 1);
    for (std::size_t k = 0; k < edges.size(); ++k) {
      g.user_adj_[k] = edges[k].item;
      // edges are user-major, so each item list receives users ascending
      g.item_adj_[cursor[edges[k].item]++] = edges[k].user;
    }
    g.index_ids();
    return g;
  }

  std::size_t num_users() const noexcept { return user_ids_.size(); }
  std::size_t num_items() const noexcept { return item_ids_.size(); }
  std::size_t num_edges() const noexcept { return user_adj_.size(); }

  std::span<const Index> items_of(Index user) const {
    return {user_adj_.data() + user_offsets_[user],
            user_adj_.data() + user_offsets_[user + 1]};
  }
  std::span<const Index> users_of(Index item) const {
    return {item_adj_.data() + item_offsets_[item],
            item_adj_.data() + item_offsets_[item + 1]};
  }

  std::size_t user_degree(Index user) const {
    return user_offsets_[user + 1] - user_offsets_[user];
  }
  std::size_t item_degree(Index item) const {
    return item_offsets_[item + 1] - item_offsets_[item];
  }

  bool has_edge(Index user, Index item) const {
    const auto row = items_of(user);
    return std::binary_search(row.begin(), row.end(), item);
  }

  const std::string& user_id(Index user) const { return user_ids_[user]; }
  const std::string& item_id(Index item) const { return item_ids_[item]; }
  std::span<const std::string> user_ids() const noexcept { return user_ids_; }
  std::span<const std::string> item_ids() const noexcept { return item_ids_; }

  std::optional<Index> find_user(std::string_view id) const {
    const auto it = user_lookup_.find(std::string(id));
    if (it == user_lookup_.end()) return std::nullopt;
    return it->second;
  }
  std::optional<Index> find_item(std::string_view id) const {
    const auto it = item_lookup_.find(std::string(id));
    if (it == item_lookup_.end()) return std::nullopt;
    return it->second;
  }

  /// All edges, user-major with items ascending.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(num_edges());
    for (Index m = 0; m < num_users(); ++m)
      for (Index n : items_of(m)) out.push_back({m, n});
    return out;
  }

  friend bool operator==(const BipartiteGraph& a, const BipartiteGraph& b) {
    return a.user_ids_ == b.user_ids_ && a.item_ids_ == b.item_ids_ &&
           a.user_offsets_ == b.user_offsets_ && a.user_adj_ == b.user_adj_;
  }

 private:
  void index_ids() {
    user_lookup_.clear();
    item_lookup_.clear();
    for (Index m = 0; m < user_ids_.size(); ++m) {
      if (!user_lookup_.emplace(user_ids_[m], m).second)
        throw ContractError("duplicate user id '" + user_ids_[m] + "'");
    }
    for (Index n = 0; n < item_ids_.size(); ++n) {
      if (!item_lookup_.emplace(item_ids_[n], n).second)
        throw ContractError("duplicate item id '" + item_ids_[n] + "'");
    }
  }

  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::vector<std::size_t> user_offsets_{0};
  std::vector<std::size_t> item_offsets_{0};
  std::vector<Index> user_adj_;
  std::vector<Index> item_adj_;
  std::unordered_map<std::string, Index> user_lookup_;
  std::unordered_map<std::string, Index> item_lookup_;
};

/// Assigns dense indices to string ids in first-appearance order.
class GraphBuilder {
 public:
  void add(std::string_view user, std::string_view item) {
    edges_.push_back({intern(user, users_, user_ids_), intern(item, items_, item_ids_)});
  }

  BipartiteGraph build(std::size_t* duplicates = nullptr) && {
    return BipartiteGraph::from_edges(std::move(user_ids_), std::move(item_ids_),
                                      std::move(edges_), duplicates);
  }

 private:
  static Index intern(std::string_view id, std::unordered_map<std::string, Index>& lookup,
                      std::vector<std::string>& ids) {
    auto [it, inserted] = lookup.try_emplace(std::string(id), static_cast<Index>(ids.size()));
    if (inserted) ids.emplace_back(id);
    return it->second;
  }

  std::unordered_map<std::string, Index> users_;
  std::unordered_map<std::string, Index> items_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::vector<Edge> edges_;
};

struct IdPair {
  std::string user;
  std::string item;
};

/// Reads `<user-id> <item-id>` lines. Blank lines and lines whose first
/// non-blank character is '#' are skipped.
inline std::vector<IdPair> read_edge_pairs(std::istream& in) {
  std::vector<IdPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string_view> tokens;
    std::string_view rest(line);
    while (!rest.empty()) {
      const auto start = rest.find_first_not_of(" \t\r\v\f");
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      const auto stop = std::min(rest.find_first_of(" \t\r\v\f"), rest.size());
      tokens.push_back(rest.substr(0, stop));
      rest.remove_prefix(stop);
    }
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.size() != 2) {
      throw ParseError(line_no, "expected 2 tokens (user item), found " +
                                    std::to_string(tokens.size()));
    }
    pairs.push_back({std::string(tokens[0]), std::string(tokens[1])});
  }
  return pairs;
}

struct LoadResult {
  BipartiteGraph graph;
  std::size_t duplicates = 0;
};

inline LoadResult load_edges(std::istream& in) {
  GraphBuilder builder;
  for (const auto& p : read_edge_pairs(in)) builder.add(p.user, p.item);
  LoadResult result;
  result.graph = std::move(builder).build(&result.duplicates);
  return result;
}

/// Edge order whose first appearances reproduce the graph's dense indices.
///
/// An edge can be emitted once every user and item index below its own has
/// appeared. Emittability only grows as indices are introduced, so the
/// greedy walk finds an order whenever one exists. Edges left over (indices
/// not consistent with any first-appearance order) follow user-major.
inline std::vector<Edge> first_appearance_order(const BipartiteGraph& g) {
  const auto M = g.num_users();
  const auto N = g.num_items();
  std::vector<Edge> edges = g.edges();
  std::vector<std::size_t> user_start(M + 1, 0);
  for (Index m = 0; m < M; ++m) user_start[m + 1] = user_start[m] + g.user_degree(m);
  // position of each item-major entry inside the user-major edge array
  std::vector<std::vector<std::size_t>> by_item(N);
  for (std::size_t k = 0; k < edges.size(); ++k) by_item[edges[k].item].push_back(k);

  std::vector<std::uint8_t> unlocked(edges.size(), 0);
  std::vector<bool> emitted(edges.size(), false);
  std::deque<std::size_t> ready;
  auto unlock = [&](std::size_t k) {
    if (++unlocked[k] == 2) ready.push_back(k);
  };
  std::size_t users_seen = 0;
  std::size_t items_seen = 0;
  auto open_user = [&](std::size_t m) {
    if (m < M)
      for (std::size_t k = user_start[m]; k < user_start[m + 1]; ++k) unlock(k);
  };
  auto open_item = [&](std::size_t n) {
    if (n < N)
      for (std::size_t k : by_item[n]) unlock(k);
  };
  open_user(0);
  open_item(0);

  std::vector<Edge> order;
  order.reserve(edges.size());
  while (!ready.empty()) {
    const auto k = ready.front();
    ready.pop_front();
    emitted[k] = true;
    order.push_back(edges[k]);
    if (edges[k].user == users_seen) open_user(++users_seen);
    if (edges[k].item == items_seen) open_item(++items_seen);
  }
  for (std::size_t k = 0; k < edges.size(); ++k)
    if (!emitted[k]) order.push_back(edges[k]);
  return order;
}

inline void write_edges(std::ostream& out, const BipartiteGraph& g) {
  for (const auto& e : first_appearance_order(g))
    out << g.user_id(e.user) << '\t' << g.item_id(e.item) << '\n';
}

// ---------------------------------------------------------------------------
// Degree statistics

/// Logarithmic degree bin: 0 holds degree 0, bin k >= 1 holds [2^(k-1), 2^k).
inline std::size_t degree_bin(std::size_t degree) {
  std::size_t bin = 0;
  while (degree > 0) {
    degree >>= 1;
    ++bin;
  }
  return bin;
}

inline std::pair<std::size_t, std::size_t> degree_bin_range(std::size_t bin) {
  if (bin == 0) return {0, 0};
  const std::size_t lo = std::size_t{1} << (bin - 1);
  return {lo, 2 * lo - 1};
}

struct DegreeBin {
  std::size_t lo = 0;
  std::size_t hi = 0;
  std::size_t count = 0;
};

inline std::vector<DegreeBin> log_binned_histogram(std::span<const std::size_t> degrees) {
  std::vector<std::size_t> counts;
  for (auto d : degrees) {
    const auto b = degree_bin(d);
    if (b >= counts.size()) counts.resize(b + 1, 0);
    ++counts[b];
  }
  std::vector<DegreeBin> bins;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    if (counts[b] == 0) continue;
    const auto [lo, hi] = degree_bin_range(b);
    bins.push_back({lo, hi, counts[b]});
  }
  return bins;
}

struct DegreeStats {
  std::vector<std::size_t> user_degrees;
  std::vector<std::size_t> item_degrees;
  double mu = 0.0;  // mean user degree
  double nu = 0.0;  // mean item degree
  std::size_t d_max = 0;  // largest item degree
  std::vector<DegreeBin> user_histogram;
  std::vector<DegreeBin> item_histogram;
};

inline DegreeStats degree_stats(const BipartiteGraph& g) {
  DegreeStats s;
  const auto M = g.num_users();
  const auto N = g.num_items();
  s.user_degrees.resize(M);
  s.item_degrees.resize(N);
  for (Index m = 0; m < M; ++m) s.user_degrees[m] = g.user_degree(m);
  for (Index n = 0; n < N; ++n) s.item_degrees[n] = g.item_degree(n);
  const auto E = static_cast<double>(g.num_edges());
  if (M > 0 && N > 0) {
    s.mu = E / static_cast<double>(M);
    s.nu = E / static_cast<double>(N);
  }
  if (N > 0) s.d_max = *std::max_element(s.item_degrees.begin(), s.item_degrees.end());
  s.user_histogram = log_binned_histogram(s.user_degrees);
  s.item_histogram = log_binned_histogram(s.item_degrees);
  return s;
}

// ---------------------------------------------------------------------------
// Leave-one-out split

struct SplitResult {
  BipartiteGraph train;        // same vertex ids and indices as the input
  std::vector<Edge> test;      // at most one edge per user, ascending user
  std::vector<Index> excluded_users;  // degree < 2, left intact in train
};

/// Moves one uniformly chosen edge of every user with degree >= 2 into the
/// test set.
inline SplitResult leave_one_out_split(const BipartiteGraph& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SplitResult out;
  std::vector<Edge> train;
  train.reserve(g.num_edges());
  for (Index m = 0; m < g.num_users(); ++m) {
    const auto row = g.items_of(m);
    if (row.size() < 2) {
      out.excluded_users.push_back(m);
      for (Index n : row) train.push_back({m, n});
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, row.size() - 1);
    const auto held = pick(rng);
    for (std::size_t k = 0; k < row.size(); ++k) {
      if (k == held)
        out.test.push_back({m, row[k]});
      else
        train.push_back({m, row[k]});
    }
  }
  std::vector<std::string> users(g.user_ids().begin(), g.user_ids().end());
  std::vector<std::string> items(g.item_ids().begin(), g.item_ids().end());
  out.train = BipartiteGraph::from_edges(std::move(users), std::move(items), std::move(train));
  return out;
}

}  // namespace occf
