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

#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "occf/errors.hpp"
#include "occf/evaluation.hpp"
#include "occf/graph.hpp"
#include "occf/posterior_io.hpp"
#include "occf/random.hpp"
#include "occf/variational.hpp"
#include "occf/weight_tree.hpp"

namespace occf {

enum class NegativeSampling { uniform, popularity };

inline std::string_view to_string(NegativeSampling s) {
  return s == NegativeSampling::uniform ? "uniform" : "popularity";
}

inline NegativeSampling parse_negative_sampling(std::string_view s) {
  if (s == "uniform") return NegativeSampling::uniform;
  if (s == "popularity") return NegativeSampling::popularity;
  throw ConfigError("unknown negative sampling '" + std::string(s) + "'");
}

struct BprConfig {
  std::size_t dim = 20;
  double learning_rate = 0.05;
  double regularization = 0.01;
  std::size_t epochs = 100;  // each epoch draws |E| triples
  NegativeSampling sampling = NegativeSampling::uniform;
  std::uint64_t seed = 1;
  double init_scale = 0.1;

  void validate() const {
    if (dim < 1) throw ConfigError("latent dimension K must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(regularization >= 0.0)) throw ConfigError("regularization must be nonnegative");
    if (!(init_scale >= 0.0)) throw ConfigError("init scale must be nonnegative");
  }
};

/// Point-estimate matrix factorization: s = w_m . h_n + b_n. User biases are
/// left out since they cancel in every pairwise difference.
struct BprModel {
  std::size_t dim = 0;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::vector<double> user_factors;  // num_users x dim
  std::vector<double> item_factors;  // num_items x dim
  std::vector<double> item_bias;

  std::size_t num_users() const noexcept { return user_ids.size(); }
  std::size_t num_items() const noexcept { return item_bias.size(); }
  std::span<double> user(Index m) { return {user_factors.data() + m * dim, dim}; }
  std::span<const double> user(Index m) const { return {user_factors.data() + m * dim, dim}; }
  std::span<double> item(Index n) { return {item_factors.data() + n * dim, dim}; }
  std::span<const double> item(Index n) const { return {item_factors.data() + n * dim, dim}; }

  friend bool operator==(const BprModel&, const BprModel&) = default;
};

inline double bpr_score(const BprModel& model, Index m, Index n) {
  const auto w = model.user(m);
  const auto h = model.item(n);
  double s = model.item_bias[n];
  for (std::size_t k = 0; k < model.dim; ++k) s += w[k] * h[k];
  return s;
}

/// ln sigma(s_mi - s_mj) minus the L2 penalty on the parameters the triple
/// touches; one SGD step ascends this.
inline double bpr_triple_objective(const BprModel& model, Index m, Index i, Index j, double reg) {
  double penalty = model.item_bias[i] * model.item_bias[i] + model.item_bias[j] * model.item_bias[j];
  for (std::size_t k = 0; k < model.dim; ++k) {
    penalty += model.user(m)[k] * model.user(m)[k] + model.item(i)[k] * model.item(i)[k] +
               model.item(j)[k] * model.item(j)[k];
  }
  return log_sigmoid(bpr_score(model, m, i) - bpr_score(model, m, j)) - 0.5 * reg * penalty;
}

/// One stochastic gradient step on the triple (m, i, j), i liked and j not
/// (Rendle et al., BPR-MF). All gradients use the pre-step values.
inline void bpr_step(BprModel& model, Index m, Index i, Index j, double lr, double reg) {
  const double x = bpr_score(model, m, i) - bpr_score(model, m, j);
  const double delta = sigmoid(-x);
  auto w = model.user(m);
  auto hi = model.item(i);
  auto hj = model.item(j);
  for (std::size_t k = 0; k < model.dim; ++k) {
    const double wk = w[k], hik = hi[k], hjk = hj[k];
    w[k] += lr * (delta * (hik - hjk) - reg * wk);
    hi[k] += lr * (delta * wk - reg * hik);
    hj[k] += lr * (-delta * wk - reg * hjk);
  }
  model.item_bias[i] += lr * (delta - reg * model.item_bias[i]);
  model.item_bias[j] += lr * (-delta - reg * model.item_bias[j]);
}

inline BprModel bpr_initialize(const BipartiteGraph& g, const BprConfig& cfg) {
  BprModel model;
  model.dim = cfg.dim;
  model.user_ids.assign(g.user_ids().begin(), g.user_ids().end());
  model.item_ids.assign(g.item_ids().begin(), g.item_ids().end());
  Rng rng(derive_seed(cfg.seed, ~std::uint64_t{0}, 1));
  std::normal_distribution<double> normal(0.0, cfg.init_scale);
  model.user_factors.resize(g.num_users() * cfg.dim);
  model.item_factors.resize(g.num_items() * cfg.dim);
  for (auto& x : model.user_factors) x = cfg.init_scale > 0 ? normal(rng) : 0.0;
  for (auto& x : model.item_factors) x = cfg.init_scale > 0 ? normal(rng) : 0.0;
  model.item_bias.assign(g.num_items(), 0.0);
  return model;
}

/// Draws an item absent from the user's row: uniformly, or proportional to
/// item degree. Returns nothing when no such item can be drawn.
class NegativeSampler {
 public:
  NegativeSampler(const BipartiteGraph& g, NegativeSampling mode) : graph_(g), mode_(mode) {
    if (mode_ == NegativeSampling::popularity) {
      std::vector<double> w(g.num_items());
      for (Index n = 0; n < g.num_items(); ++n) w[n] = static_cast<double>(g.item_degree(n));
      tree_ = WeightTree(w);
    }
  }

  template <class Engine>
  std::optional<Index> draw(Index m, Engine& rng) {
    const auto row = graph_.items_of(m);
    const auto N = graph_.num_items();
    if (row.size() >= N) return std::nullopt;
    constexpr int kTries = 64;
    if (mode_ == NegativeSampling::uniform) {
      std::uniform_int_distribution<Index> pick(0, static_cast<Index>(N - 1));
      for (;;) {
        const Index j = pick(rng);
        if (!graph_.has_edge(m, j)) return j;
      }
    }
    for (int t = 0; t < kTries; ++t) {
      const auto j = tree_.draw(rng);
      if (!j) return std::nullopt;
      if (!graph_.has_edge(m, static_cast<Index>(*j))) return static_cast<Index>(*j);
    }
    // the row holds most of the popularity mass: exclude it and draw once
    ExclusionSession session(tree_);
    for (Index n : row) session.exclude(n);
    const auto j = tree_.draw(rng);
    if (!j) return std::nullopt;
    return static_cast<Index>(*j);
  }

 private:
  const BipartiteGraph& graph_;
  NegativeSampling mode_;
  WeightTree tree_;
};

/// Stochastic gradient ascent on the BPR criterion. Each epoch draws |E|
/// triples: a liked pair uniformly from the edges, then a negative item.
inline BprModel bpr_train(const BipartiteGraph& g, const BprConfig& cfg) {
  cfg.validate();
  if (g.num_edges() == 0) throw ConfigError("training graph is empty");
  auto model = bpr_initialize(g, cfg);
  const auto edges = g.edges();
  NegativeSampler sampler(g, cfg.sampling);
  Rng rng(derive_seed(cfg.seed, ~std::uint64_t{0}, 2));
  std::uniform_int_distribution<std::size_t> pick_edge(0, edges.size() - 1);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t s = 0; s < edges.size(); ++s) {
      const auto [m, i] = edges[pick_edge(rng)];
      const auto j = sampler.draw(m, rng);
      if (!j) continue;
      bpr_step(model, m, i, *j, cfg.learning_rate, cfg.regularization);
    }
  }
  return model;
}

inline Scorer bpr_scorer(const BprModel& model) {
  Scorer s;
  s.scores = [&model](Index m, std::span<double> out) {
    for (Index n = 0; n < out.size(); ++n) out[n] = bpr_score(model, m, n);
  };
  return s;
}

// Stored in the model-file layout with every precision infinite and the
// precision-factor line zeroed.
inline void write_bpr_model(std::ostream& out, const BprModel& model) {
  ModelTable t;
  t.dim = model.dim;
  t.flags = kPointEstimate;
  t.user_ids = model.user_ids;
  t.item_ids = model.item_ids;
  for (double x : model.user_factors) t.user_factors.push_back({x, kInf});
  for (double x : model.item_factors) t.item_factors.push_back({x, kInf});
  t.user_bias.assign(model.num_users(), GaussianFactor{0.0, kInf});
  for (double b : model.item_bias) t.item_bias.push_back({b, kInf});
  t.tau = {{0, 0}, {0, 0}, {0, 0}, {0, 0}};
  write_model_table(out, t);
}

inline BprModel read_bpr_model(std::istream& in) {
  const auto t = read_model_table(in);
  if (!(t.flags & kPointEstimate)) throw ConfigError("model file holds a posterior, not a BPR model");
  BprModel model;
  model.dim = t.dim;
  model.user_ids = t.user_ids;
  model.item_ids = t.item_ids;
  for (const auto& f : t.user_factors) model.user_factors.push_back(f.mean);
  for (const auto& f : t.item_factors) model.item_factors.push_back(f.mean);
  for (const auto& f : t.item_bias) model.item_bias.push_back(f.mean);
  return model;
}

}  // namespace occf
