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
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "occf/errors.hpp"
#include "occf/graph.hpp"
#include "occf/hidden_graph.hpp"
#include "occf/variational.hpp"

namespace occf {

enum class ScoreMode { like, popularity, popularity_times_like };

inline std::string_view to_string(ScoreMode mode) {
  switch (mode) {
    case ScoreMode::like: return "like";
    case ScoreMode::popularity: return "popularity";
    case ScoreMode::popularity_times_like: return "popularity-like";
  }
  return "like";
}

inline ScoreMode parse_score_mode(std::string_view s) {
  if (s == "like") return ScoreMode::like;
  if (s == "popularity") return ScoreMode::popularity;
  if (s == "popularity-like" || s == "popularity_times_like") return ScoreMode::popularity_times_like;
  throw ConfigError("unknown score mode '" + std::string(s) + "'");
}

inline bool uses_popularity(ScoreMode mode) { return mode != ScoreMode::like; }

/// E[sigma(a)] for a ~ N(mean, variance), MacKay's probit-style approximation.
inline double logistic_gaussian(double mean, double variance) {
  return sigmoid(mean / std::sqrt(1.0 + std::numbers::pi * variance / 8.0));
}

inline double like_probability(const EdgeMoments& a) { return logistic_gaussian(a.mean, a.variance); }

inline double like_probability(const Posterior& q, Index m, Index n) {
  return like_probability(edge_moments(q, m, n));
}

inline double score(const Posterior& q, Index m, Index n, ScoreMode mode, const ItemHistogram* hist) {
  if (uses_popularity(mode) && hist == nullptr)
    throw ConfigError(std::string("score mode '") + std::string(to_string(mode)) + "' needs an item histogram");
  switch (mode) {
    case ScoreMode::like: return like_probability(q, m, n);
    case ScoreMode::popularity: return hist->weights.at(n);
    case ScoreMode::popularity_times_like: return hist->weights.at(n) * like_probability(q, m, n);
  }
  return 0.0;
}

struct ScoredItem {
  Index item = 0;
  double score = 0.0;
  friend bool operator==(const ScoredItem&, const ScoredItem&) = default;
};

/// Items absent from the user's training row, best first; equal scores keep
/// ascending item order.
template <class ScoreFn>
std::vector<ScoredItem> rank_absent(const BipartiteGraph& train, Index m, ScoreFn&& score_of) {
  std::vector<ScoredItem> out;
  const auto row = train.items_of(m);
  out.reserve(train.num_items() - row.size());
  auto it = row.begin();
  for (Index n = 0; n < train.num_items(); ++n) {
    if (it != row.end() && *it == n) {
      ++it;
      continue;
    }
    out.push_back({n, score_of(n)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ScoredItem& a, const ScoredItem& b) { return a.score > b.score; });
  return out;
}

inline std::vector<ScoredItem> rank_items(const Posterior& q, Index m, const BipartiteGraph& train,
                                          ScoreMode mode, const ItemHistogram* hist) {
  if (train.num_items() != q.num_items() || m >= q.num_users())
    throw ContractError("rank_items: model and graph dimensions differ");
  return rank_absent(train, m, [&](Index n) { return score(q, m, n, mode, hist); });
}

}  // namespace occf
