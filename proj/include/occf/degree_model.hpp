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
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "occf/errors.hpp"
#include "occf/graph.hpp"
#include "occf/random.hpp"

namespace occf {

/// Degree distribution over the support [d_min, d_max].
struct DegreeDistribution {
  enum class Family { power_law, power_law_cutoff, empirical };

  Family family = Family::power_law;
  double exponent = 1.0;     // p(d) ~ d^-exponent
  double cutoff = 0.0;       // extra factor exp(-d / cutoff)
  std::vector<double> weights;  // empirical: weight of d_min + i
  std::size_t d_min = 1;
  std::size_t d_max = 1;

  static DegreeDistribution power_law(double exponent, std::size_t d_min, std::size_t d_max) {
    DegreeDistribution d;
    d.family = Family::power_law;
    d.exponent = exponent;
    d.d_min = d_min;
    d.d_max = d_max;
    return d;
  }

  static DegreeDistribution power_law_cutoff(double exponent, double cutoff, std::size_t d_min,
                                             std::size_t d_max) {
    DegreeDistribution d = power_law(exponent, d_min, d_max);
    d.family = Family::power_law_cutoff;
    d.cutoff = cutoff;
    return d;
  }

  static DegreeDistribution empirical(std::vector<double> weights, std::size_t d_min) {
    DegreeDistribution d;
    d.family = Family::empirical;
    d.d_min = d_min;
    d.d_max = d_min + (weights.empty() ? 0 : weights.size() - 1);
    d.weights = std::move(weights);
    return d;
  }

  void validate() const {
    if (d_min < 1) throw ConfigError("degree support must start at d_min >= 1");
    if (d_max < d_min) throw ConfigError("degree support needs d_max >= d_min");
    switch (family) {
      case Family::power_law_cutoff:
        if (!(cutoff > 0.0)) throw ConfigError("cutoff must be positive");
        [[fallthrough]];
      case Family::power_law:
        if (!(exponent > 0.0)) throw ConfigError("exponent must be positive");
        break;
      case Family::empirical: {
        if (weights.empty()) throw ConfigError("empirical degree histogram is empty");
        double total = 0.0;
        for (double w : weights) {
          if (!(w >= 0.0) || !std::isfinite(w))
            throw ConfigError("empirical weights must be finite and nonnegative");
          total += w;
        }
        if (!(total > 0.0)) throw ConfigError("empirical weights sum to zero");
        break;
      }
    }
  }

  /// Normalized probabilities of d_min, d_min + 1, ..., d_max.
  std::vector<double> probabilities() const {
    validate();
    std::vector<double> p(d_max - d_min + 1);
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double d = static_cast<double>(d_min + i);
      switch (family) {
        case Family::power_law: p[i] = std::pow(d, -exponent); break;
        case Family::power_law_cutoff: p[i] = std::pow(d, -exponent) * std::exp(-d / cutoff); break;
        case Family::empirical: p[i] = weights[i]; break;
      }
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    if (!(total > 0.0)) throw ConfigError("degree distribution does not normalize");
    for (double& x : p) x /= total;
    return p;
  }
};

struct GeneratedGraph {
  BipartiteGraph graph;
  std::vector<std::size_t> user_degrees;  // as drawn, before pairing
  std::vector<std::size_t> item_degrees;
  std::size_t redraws = 0;
  std::size_t collapsed = 0;  // multi-edges merged after pairing
};

/// Configuration-model bipartite graph: draw all degrees i.i.d., redraw one
/// random user and one random item degree until both sides sum to the same
/// total, then pair half-edges uniformly at random. Multi-edges collapse.
inline GeneratedGraph generate_graph_from_degrees(const DegreeDistribution& user_spec,
                                                  const DegreeDistribution& item_spec,
                                                  std::size_t num_users, std::size_t num_items,
                                                  std::uint64_t seed,
                                                  std::size_t redraw_budget = 1'000'000) {
  if (num_users == 0 || num_items == 0)
    throw ConfigError("graph generation needs at least one user and one item");
  const auto user_p = user_spec.probabilities();
  const auto item_p = item_spec.probabilities();
  Rng rng(seed);
  std::discrete_distribution<std::size_t> user_draw(user_p.begin(), user_p.end());
  std::discrete_distribution<std::size_t> item_draw(item_p.begin(), item_p.end());

  GeneratedGraph out;
  out.user_degrees.resize(num_users);
  out.item_degrees.resize(num_items);
  long long balance = 0;  // user stubs minus item stubs
  for (auto& d : out.user_degrees) {
    d = user_spec.d_min + user_draw(rng);
    balance += static_cast<long long>(d);
  }
  for (auto& d : out.item_degrees) {
    d = item_spec.d_min + item_draw(rng);
    balance -= static_cast<long long>(d);
  }
  std::uniform_int_distribution<std::size_t> pick_user(0, num_users - 1);
  std::uniform_int_distribution<std::size_t> pick_item(0, num_items - 1);
  while (balance != 0) {
    if (out.redraws == redraw_budget) {
      throw GenerationError("degree sums still differ by " + std::to_string(balance) +
                            " after " + std::to_string(redraw_budget) + " redraws");
    }
    ++out.redraws;
    auto& du = out.user_degrees[pick_user(rng)];
    auto& di = out.item_degrees[pick_item(rng)];
    balance -= static_cast<long long>(du) - static_cast<long long>(di);
    du = user_spec.d_min + user_draw(rng);
    di = item_spec.d_min + item_draw(rng);
    balance += static_cast<long long>(du) - static_cast<long long>(di);
  }

  std::vector<Index> user_stubs;
  std::vector<Index> item_stubs;
  for (std::size_t m = 0; m < num_users; ++m)
    user_stubs.insert(user_stubs.end(), out.user_degrees[m], static_cast<Index>(m));
  for (std::size_t n = 0; n < num_items; ++n)
    item_stubs.insert(item_stubs.end(), out.item_degrees[n], static_cast<Index>(n));
  std::shuffle(item_stubs.begin(), item_stubs.end(), rng);
  std::vector<Edge> edges(user_stubs.size());
  for (std::size_t k = 0; k < edges.size(); ++k) edges[k] = {user_stubs[k], item_stubs[k]};
  std::sort(edges.begin(), edges.end());

  // Relabel items in first-appearance order of the user-major edge list so
  // the graph survives an edge-list round trip with identical indices.
  std::vector<Index> relabel(num_items, static_cast<Index>(-1));
  Index next = 0;
  for (const auto& e : edges)
    if (relabel[e.item] == static_cast<Index>(-1)) relabel[e.item] = next++;
  for (auto& r : relabel)
    if (r == static_cast<Index>(-1)) r = next++;
  std::vector<std::size_t> item_degrees(num_items);
  for (std::size_t n = 0; n < num_items; ++n) item_degrees[relabel[n]] = out.item_degrees[n];
  out.item_degrees = std::move(item_degrees);
  for (auto& e : edges) e.item = relabel[e.item];

  std::vector<std::string> user_ids(num_users);
  std::vector<std::string> item_ids(num_items);
  for (std::size_t m = 0; m < num_users; ++m) user_ids[m] = "u" + std::to_string(m);
  for (std::size_t n = 0; n < num_items; ++n) item_ids[n] = "i" + std::to_string(n);
  out.graph = BipartiteGraph::from_edges(std::move(user_ids), std::move(item_ids),
                                         std::move(edges), &out.collapsed);
  return out;
}

}  // namespace occf
