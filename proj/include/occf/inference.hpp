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
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "occf/errors.hpp"
#include "occf/graph.hpp"
#include "occf/hidden_graph.hpp"
#include "occf/parallel.hpp"
#include "occf/random.hpp"
#include "occf/variational.hpp"

namespace occf {

struct TrainConfig {
  std::size_t dim = 20;  // K
  HyperPriors hyper;
  double rate = 0.5;  // r, histogram weight of the top item is r * d_max
  std::size_t iterations = 100;   // t_max
  std::size_t warmup = 10;        // t_eps: step size stays 1 up to here
  std::size_t hyper_start = 3;    // t_tau: precisions update for t > t_tau
  std::size_t kappa = 0;          // coordinates per partial solve, 0 = dim
  bool clamp_user_bias = true;
  std::uint64_t seed = 1;
  std::size_t block_count = 1;    // item blocks in the message simulation
  int workers = 0;                // 0 = all available
  double schedule_exponent = 0.6;
  double init_scale = 0.1;        // std of the initial vector means

  std::size_t partial_size() const noexcept { return kappa == 0 ? dim : kappa; }

  void validate() const {
    hyper.validate();
    if (dim < 1) throw ConfigError("latent dimension K must be >= 1");
    if (partial_size() < 1 || partial_size() > dim)
      throw ConfigError("kappa must lie in [1, K]");
    if (iterations > 0 && (warmup >= iterations || hyper_start >= iterations))
      throw ConfigError("t_eps and t_tau must be smaller than the iteration count");
    if (block_count < 1) throw ConfigError("block count must be >= 1");
    if (!(rate > 0.0)) throw ConfigError("rate r must be positive");
    if (!(schedule_exponent > 0.0)) throw ConfigError("schedule exponent must be positive");
    if (!(init_scale >= 0.0)) throw ConfigError("init scale must be nonnegative");
  }
};

// ---------------------------------------------------------------------------
// Step size

struct StepSchedule {
  double accumulator = 0.0;
  double epsilon = 1.0;
};

/// Advances the schedule at the end of iteration t. The step stays at 1
/// through the warm-up; afterwards a <- (1 - D^-p) a + 1 and eps = 1 / a with
/// D = t - warmup.
inline StepSchedule step_size(std::size_t t, std::size_t warmup, StepSchedule s,
                              double exponent = 0.6) {
  if (t == 0) throw ContractError("iterations are numbered from 1");
  if (t <= warmup) {
    s.epsilon = 1.0;
    return s;
  }
  const double delta = static_cast<double>(t - warmup);
  s.accumulator = (1.0 - std::pow(delta, -exponent)) * s.accumulator + 1.0;
  s.epsilon = 1.0 / s.accumulator;
  return s;
}

// ---------------------------------------------------------------------------
// Natural parameters

/// Gaussian in information form: precision P and potential z = P mu.
struct GaussianNatural {
  Eigen::MatrixXd precision;
  Eigen::VectorXd potential;
};

struct ScalarNatural {
  double precision = 0.0;
  double potential = 0.0;
};

inline GaussianNatural blend(const GaussianNatural& fresh, const GaussianNatural& old, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ContractError("step size must lie in (0, 1]");
  if (eps == 1.0) return fresh;
  return {eps * fresh.precision + (1.0 - eps) * old.precision,
          eps * fresh.potential + (1.0 - eps) * old.potential};
}

inline ScalarNatural blend(const ScalarNatural& fresh, const ScalarNatural& old, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw ContractError("step size must lie in (0, 1]");
  if (eps == 1.0) return fresh;
  return {eps * fresh.precision + (1.0 - eps) * old.precision,
          eps * fresh.potential + (1.0 - eps) * old.potential};
}

/// Persistent natural parameters for every vertex on one side of the graph.
class VertexNaturals {
 public:
  VertexNaturals() = default;
  VertexNaturals(std::size_t count, std::size_t dim)
      : dim_(dim),
        precision_(count * dim * dim, 0.0),
        potential_(count * dim, 0.0),
        bias_(count) {}

  std::size_t size() const noexcept { return bias_.size(); }

  GaussianNatural vector(Index v) const {
    return {Eigen::Map<const Eigen::MatrixXd>(precision_.data() + v * dim_ * dim_, dim_, dim_),
            Eigen::Map<const Eigen::VectorXd>(potential_.data() + v * dim_, dim_)};
  }
  void set_vector(Index v, const GaussianNatural& g) {
    Eigen::Map<Eigen::MatrixXd>(precision_.data() + v * dim_ * dim_, dim_, dim_) = g.precision;
    Eigen::Map<Eigen::VectorXd>(potential_.data() + v * dim_, dim_) = g.potential;
  }
  const ScalarNatural& bias(Index v) const { return bias_[v]; }
  void set_bias(Index v, const ScalarNatural& b) { bias_[v] = b; }

  /// Natural parameters of a factorized Gaussian: diagonal precision.
  void assign_from(Index v, std::span<const GaussianFactor> factors, const GaussianFactor& bias) {
    GaussianNatural g{Eigen::MatrixXd::Zero(dim_, dim_), Eigen::VectorXd::Zero(dim_)};
    for (std::size_t k = 0; k < dim_; ++k) {
      g.precision(k, k) = factors[k].precision;
      g.potential(k) = factors[k].precision * factors[k].mean;
    }
    set_vector(v, g);
    if (std::isfinite(bias.precision)) bias_[v] = {bias.precision, bias.precision * bias.mean};
  }

 private:
  std::size_t dim_ = 0;
  std::vector<double> precision_;
  std::vector<double> potential_;
  std::vector<ScalarNatural> bias_;
};

struct NaturalGradientState {
  VertexNaturals users;
  VertexNaturals items;

  static NaturalGradientState from_posterior(const Posterior& q) {
    NaturalGradientState s{VertexNaturals(q.num_users(), q.dim), VertexNaturals(q.num_items(), q.dim)};
    for (Index m = 0; m < q.num_users(); ++m) s.users.assign_from(m, q.user(m), q.user_bias[m]);
    for (Index n = 0; n < q.num_items(); ++n) s.items.assign_from(n, q.item(n), q.item_bias[n]);
    return s;
  }
};

enum class Side { user, item };

namespace detail {

/// Accumulates one hidden edge into a vector natural gradient. `other` is
/// the factor row of the opposite vertex.
inline void accumulate_vector_edge(const Posterior& q, Side side, Index self, const HiddenEdge& e,
                                   double* precision, double* potential) {
  const Index m = side == Side::user ? self : e.vertex;
  const Index n = side == Side::user ? e.vertex : self;
  const auto other = side == Side::user ? q.item(n) : q.user(m);
  const double w = 2.0 * lambda_xi(optimal_xi(edge_moments(q, m, n)));
  const double bias = q.user_bias[m].mean + q.item_bias[n].mean;
  const double coef = (e.liked ? 0.5 : -0.5) - w * bias;
  const std::size_t K = q.dim;
  for (std::size_t k = 0; k < K; ++k) {
    const double ek = other[k].mean;
    potential[k] += coef * ek;
    for (std::size_t l = 0; l < K; ++l) precision[k * K + l] += w * ek * other[l].mean;
    precision[k * K + k] += w * other[k].variance();
  }
}

inline void accumulate_bias_edge(const Posterior& q, Side side, Index self, const HiddenEdge& e,
                                 ScalarNatural& out) {
  const Index m = side == Side::user ? self : e.vertex;
  const Index n = side == Side::user ? e.vertex : self;
  const double w = 2.0 * lambda_xi(optimal_xi(edge_moments(q, m, n)));
  double rest = side == Side::user ? q.item_bias[n].mean : q.user_bias[m].mean;
  const auto u = q.user(m);
  const auto v = q.item(n);
  for (std::size_t k = 0; k < q.dim; ++k) rest += u[k].mean * v[k].mean;
  out.precision += w;
  out.potential += (e.liked ? 0.5 : -0.5) - w * rest;
}

}  // namespace detail

/// Natural gradient for the latent vector of one vertex from its hidden row:
/// P = sum 2 lambda(xi) E[w w^T] + E[tau] I and
/// z = sum (g - 1/2 - 2 lambda(xi) E[b_m + b_n]) E[w], w the opposite vector.
inline GaussianNatural vector_natural_gradient(const Posterior& q, Side side, Index vertex,
                                               std::span<const HiddenEdge> row) {
  const std::size_t K = q.dim;
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(K);
  for (const auto& e : row) detail::accumulate_vector_edge(q, side, vertex, e, P.data(), z.data());
  P.diagonal().array() += (side == Side::user ? q.tau.user : q.tau.item).mean();
  return {std::move(P), std::move(z)};
}

inline GaussianNatural user_natural_gradient(Index m, std::span<const HiddenEdge> row,
                                             const Posterior& q) {
  return vector_natural_gradient(q, Side::user, m, row);
}

inline GaussianNatural item_natural_gradient(Index n, std::span<const HiddenEdge> row,
                                             const Posterior& q) {
  return vector_natural_gradient(q, Side::item, n, row);
}

inline ScalarNatural bias_natural_gradient(const Posterior& q, Side side, Index vertex,
                                           std::span<const HiddenEdge> row) {
  ScalarNatural out;
  for (const auto& e : row) detail::accumulate_bias_edge(q, side, vertex, e, out);
  out.precision += (side == Side::user ? q.tau.user_bias : q.tau.item_bias).mean();
  return out;
}

// ---------------------------------------------------------------------------
// Recovering factorized posteriors

namespace detail {

inline NumericalError not_positive_definite(std::size_t vertex, const Eigen::MatrixXd& P) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(P);
  const double pivot = ldlt.vectorD().size() ? ldlt.vectorD().minCoeff() : 0.0;
  return NumericalError("precision matrix of vertex " + std::to_string(vertex) +
                            " is not positive definite (smallest pivot " + std::to_string(pivot) + ")",
                        vertex, pivot);
}

}  // namespace detail

/// Mean-field projection of a full Gaussian: mu = P^-1 z through a Cholesky
/// factorization, precisions from the diagonal of P.
inline void refactorize(std::size_t vertex, const GaussianNatural& g, std::span<GaussianFactor> out) {
  const auto K = static_cast<Eigen::Index>(out.size());
  if (g.precision.rows() != K || g.potential.size() != K)
    throw ContractError("refactorize: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(g.precision);
  if (llt.info() != Eigen::Success) throw detail::not_positive_definite(vertex, g.precision);
  const Eigen::VectorXd mu = llt.solve(g.potential);
  for (Eigen::Index k = 0; k < K; ++k) out[k] = {mu(k), g.precision(k, k)};
}

/// Updates only the coordinates in `subset`, holding the others at their
/// current means: solves P_SS mu_S = z_S - P_SR eta_R.
inline void partial_refactorize(std::size_t vertex, const GaussianNatural& g,
                                std::span<GaussianFactor> factors, std::span<const std::size_t> subset) {
  const auto K = factors.size();
  const auto S = static_cast<Eigen::Index>(subset.size());
  if (S == 0 || subset.size() > K) throw ContractError("partial_refactorize: subset size out of range");
  std::vector<bool> in_subset(K, false);
  for (auto k : subset) {
    if (k >= K || in_subset[k]) throw ContractError("partial_refactorize: invalid subset");
    in_subset[k] = true;
  }
  Eigen::MatrixXd block(S, S);
  Eigen::VectorXd rhs(S);
  for (Eigen::Index i = 0; i < S; ++i) {
    const auto k = subset[i];
    rhs(i) = g.potential(k);
    for (std::size_t l = 0; l < K; ++l)
      if (!in_subset[l]) rhs(i) -= g.precision(k, l) * factors[l].mean;
    for (Eigen::Index j = 0; j < S; ++j) block(i, j) = g.precision(k, subset[j]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(block);
  if (llt.info() != Eigen::Success) throw detail::not_positive_definite(vertex, block);
  const Eigen::VectorXd mu = llt.solve(rhs);
  for (Eigen::Index i = 0; i < S; ++i) factors[subset[i]] = {mu(i), g.precision(subset[i], subset[i])};
}

/// Applies partial solves over consecutive chunks of `chunk` coordinates.
inline void refactorize_in_chunks(std::size_t vertex, const GaussianNatural& g,
                                  std::span<GaussianFactor> factors, std::size_t chunk) {
  if (chunk >= factors.size()) {
    refactorize(vertex, g, factors);
    return;
  }
  std::vector<std::size_t> subset;
  for (std::size_t start = 0; start < factors.size(); start += chunk) {
    subset.clear();
    for (std::size_t k = start; k < std::min(start + chunk, factors.size()); ++k) subset.push_back(k);
    partial_refactorize(vertex, g, factors, subset);
  }
}

inline void set_bias_from_natural(std::size_t vertex, const ScalarNatural& b, GaussianFactor& out) {
  if (!(b.precision > 0.0))
    throw NumericalError("bias precision of vertex " + std::to_string(vertex) + " is not positive",
                         vertex, b.precision);
  out = {b.potential / b.precision, b.precision};
}

// ---------------------------------------------------------------------------
// Precision hyperparameters

/// Closed-form Gamma factors for tau_u, tau_v, tau_bu, tau_bv given the
/// current vertex factors. A clamped user bias keeps its current tau factor.
inline PrecisionFactors update_hyperparameters(const Posterior& q, const HyperPriors& hp) {
  auto factor = [&](const std::vector<GaussianFactor>& f) {
    double sum = 0.0;
    for (const auto& x : f) sum += x.second_moment();
    return GammaFactor{hp.alpha + 0.5 * static_cast<double>(f.size()), hp.beta + 0.5 * sum};
  };
  PrecisionFactors out;
  out.user = factor(q.user_factors);
  out.item = factor(q.item_factors);
  out.user_bias = q.user_bias_clamped ? q.tau.user_bias : factor(q.user_bias);
  out.item_bias = factor(q.item_bias);
  return out;
}

// ---------------------------------------------------------------------------
// Item-block message interface

/// Contiguous item blocks; block_of[n] names the block that owns item n.
struct ItemPartition {
  std::size_t block_count = 1;
  std::vector<std::size_t> block_of;

  static ItemPartition contiguous(std::size_t num_items, std::size_t blocks) {
    if (blocks == 0) throw ConfigError("block count must be >= 1");
    ItemPartition p;
    p.block_count = blocks;
    p.block_of.resize(num_items);
    for (std::size_t n = 0; n < num_items; ++n) p.block_of[n] = n * blocks / std::max<std::size_t>(num_items, 1);
    return p;
  }
};

/// The partial natural gradients one item block sends for the users it
/// touches: X_m^(b) and the matching potential, without any prior term.
struct NaturalGradientMessage {
  std::size_t block = 0;
  std::size_t dim = 0;
  std::vector<Index> users;
  std::vector<double> precision;  // users.size() blocks of dim x dim
  std::vector<double> potential;  // users.size() blocks of dim

  Eigen::Map<const Eigen::MatrixXd> precision_of(std::size_t slot) const {
    return {precision.data() + slot * dim * dim, static_cast<Eigen::Index>(dim),
            static_cast<Eigen::Index>(dim)};
  }
  Eigen::Map<const Eigen::VectorXd> potential_of(std::size_t slot) const {
    return {potential.data() + slot * dim, static_cast<Eigen::Index>(dim)};
  }
};

struct BiasMessage {
  std::size_t block = 0;
  std::vector<Index> users;
  std::vector<ScalarNatural> partial;
};

namespace detail {

/// users touching each block, plus the sub-range of every user row
template <class Visit>
void for_each_block_segment(const HiddenGraphSample& h, const ItemPartition& part, Visit&& visit) {
  for (Index m = 0; m < h.num_users(); ++m) {
    const auto row = h.user_row(m);
    std::size_t start = 0;
    while (start < row.size()) {
      const auto b = part.block_of[row[start].vertex];
      std::size_t stop = start;
      while (stop < row.size() && part.block_of[row[stop].vertex] == b) ++stop;
      visit(b, m, row.subspan(start, stop - start));
      start = stop;
    }
  }
}

}  // namespace detail

inline std::vector<NaturalGradientMessage> block_messages(const HiddenGraphSample& h, const Posterior& q,
                                                          const ItemPartition& part) {
  if (part.block_of.size() != h.num_items()) throw ContractError("partition does not cover all items");
  const std::size_t K = q.dim;
  std::vector<NaturalGradientMessage> out(part.block_count);
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b].block = b;
    out[b].dim = K;
  }
  detail::for_each_block_segment(h, part, [&](std::size_t b, Index m, std::span<const HiddenEdge> seg) {
    auto& msg = out[b];
    msg.users.push_back(m);
    msg.precision.resize(msg.precision.size() + K * K, 0.0);
    msg.potential.resize(msg.potential.size() + K, 0.0);
    double* P = msg.precision.data() + msg.precision.size() - K * K;
    double* z = msg.potential.data() + msg.potential.size() - K;
    for (const auto& e : seg) detail::accumulate_vector_edge(q, Side::user, m, e, P, z);
  });
  return out;
}

inline std::vector<BiasMessage> bias_block_messages(const HiddenGraphSample& h, const Posterior& q,
                                                    const ItemPartition& part) {
  if (part.block_of.size() != h.num_items()) throw ContractError("partition does not cover all items");
  std::vector<BiasMessage> out(part.block_count);
  for (std::size_t b = 0; b < out.size(); ++b) out[b].block = b;
  detail::for_each_block_segment(h, part, [&](std::size_t b, Index m, std::span<const HiddenEdge> seg) {
    ScalarNatural s;
    for (const auto& e : seg) detail::accumulate_bias_edge(q, Side::user, m, e, s);
    out[b].users.push_back(m);
    out[b].partial.push_back(s);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Training

/// Vector means ~ N(0, init_scale^2) with precision alpha/beta, biases N(0, 1),
/// precision factors at the hyperprior.
inline Posterior initialize_posterior(const BipartiteGraph& g, std::size_t dim, const HyperPriors& hp,
                                      bool clamp_user_bias, std::uint64_t seed, double init_scale) {
  Posterior q;
  q.dim = dim;
  q.user_ids.assign(g.user_ids().begin(), g.user_ids().end());
  q.item_ids.assign(g.item_ids().begin(), g.item_ids().end());
  const double precision = hp.alpha / hp.beta;
  Rng rng(derive_seed(seed, ~std::uint64_t{0}, 0));
  std::normal_distribution<double> normal(0.0, 1.0);
  q.user_factors.resize(g.num_users() * dim);
  q.item_factors.resize(g.num_items() * dim);
  for (auto& f : q.user_factors) f = {init_scale * normal(rng), precision};
  for (auto& f : q.item_factors) f = {init_scale * normal(rng), precision};
  q.user_bias.assign(g.num_users(), clamp_user_bias ? GaussianFactor{0.0, kInf} : GaussianFactor{0.0, 1.0});
  q.item_bias.assign(g.num_items(), GaussianFactor{0.0, 1.0});
  q.user_bias_clamped = clamp_user_bias;
  const GammaFactor prior{hp.alpha, hp.beta};
  q.tau = {prior, prior, prior, prior};
  return q;
}

struct ProgressRow {
  std::size_t iteration = 0;
  double epsilon = 1.0;  // step used during this iteration
  double elbo = 0.0;     // on this iteration's hidden graph sample
  double tau_user = 0.0;
  double tau_item = 0.0;
  double tau_user_bias = 0.0;
  double tau_item_bias = 0.0;
};

/// Stochastic variational Bayes over hidden-graph samples. Each iteration
/// draws H, then sweeps user biases, item biases, user vectors and item
/// vectors in that order, updates the precisions once t > t_tau, and advances
/// the step size. Results are independent of the worker count.
class Trainer {
 public:
  Trainer(const BipartiteGraph& g, TrainConfig cfg)
      : graph_(g), cfg_(std::move(cfg)) {
    cfg_.validate();
    if (g.num_users() == 0 || g.num_items() == 0) throw ConfigError("training graph is empty");
    histogram_ = build_histogram(degree_stats(g), cfg_.rate);
    posterior_ = initialize_posterior(g, cfg_.dim, cfg_.hyper, cfg_.clamp_user_bias, cfg_.seed,
                                      cfg_.init_scale);
    state_ = NaturalGradientState::from_posterior(posterior_);
    partition_ = ItemPartition::contiguous(g.num_items(), cfg_.block_count);
  }

  const TrainConfig& config() const noexcept { return cfg_; }
  const Posterior& posterior() const noexcept { return posterior_; }
  Posterior& posterior() noexcept { return posterior_; }
  const ItemHistogram& histogram() const noexcept { return histogram_; }
  const StepSchedule& schedule() const noexcept { return schedule_; }
  std::size_t iteration() const noexcept { return iteration_; }

  HiddenGraphSample sample(std::uint64_t epoch) const {
    return sample_hidden_graph(graph_, histogram_, cfg_.seed, epoch, cfg_.workers);
  }

  void update_user_biases(const HiddenGraphSample& h, double eps) {
    if (posterior_.user_bias_clamped) return;
    const auto M = posterior_.num_users();
    if (cfg_.block_count > 1) {
      const auto messages = bias_block_messages(h, posterior_, partition_);
      std::vector<ScalarNatural> sums(M);
      for (const auto& msg : messages)
        for (std::size_t s = 0; s < msg.users.size(); ++s) {
          sums[msg.users[s]].precision += msg.partial[s].precision;
          sums[msg.users[s]].potential += msg.partial[s].potential;
        }
      const double prior = posterior_.tau.user_bias.mean();
      parallel_for(M, cfg_.workers, [&](std::size_t m) {
        sums[m].precision += prior;
        apply_bias(Side::user, static_cast<Index>(m), sums[m], eps);
      });
      return;
    }
    parallel_for(M, cfg_.workers, [&](std::size_t m) {
      const auto v = static_cast<Index>(m);
      apply_bias(Side::user, v, bias_natural_gradient(posterior_, Side::user, v, h.user_row(v)), eps);
    });
  }

  void update_item_biases(const HiddenGraphSample& h, double eps) {
    parallel_for(posterior_.num_items(), cfg_.workers, [&](std::size_t n) {
      const auto v = static_cast<Index>(n);
      apply_bias(Side::item, v, bias_natural_gradient(posterior_, Side::item, v, h.item_row(v)), eps);
    });
  }

  void update_user_vectors(const HiddenGraphSample& h, double eps) {
    const auto M = posterior_.num_users();
    if (cfg_.block_count > 1) {
      const auto messages = block_messages(h, posterior_, partition_);
      const auto K = static_cast<Eigen::Index>(posterior_.dim);
      std::vector<GaussianNatural> sums(M, GaussianNatural{Eigen::MatrixXd::Zero(K, K), Eigen::VectorXd::Zero(K)});
      for (const auto& msg : messages)
        for (std::size_t s = 0; s < msg.users.size(); ++s) {
          sums[msg.users[s]].precision += msg.precision_of(s);
          sums[msg.users[s]].potential += msg.potential_of(s);
        }
      const double prior = posterior_.tau.user.mean();
      parallel_for(M, cfg_.workers, [&](std::size_t m) {
        sums[m].precision.diagonal().array() += prior;
        apply_vector(Side::user, static_cast<Index>(m), sums[m], eps);
      });
      return;
    }
    parallel_for(M, cfg_.workers, [&](std::size_t m) {
      const auto v = static_cast<Index>(m);
      apply_vector(Side::user, v, user_natural_gradient(v, h.user_row(v), posterior_), eps);
    });
  }

  void update_item_vectors(const HiddenGraphSample& h, double eps) {
    parallel_for(posterior_.num_items(), cfg_.workers, [&](std::size_t n) {
      const auto v = static_cast<Index>(n);
      apply_vector(Side::item, v, item_natural_gradient(v, h.item_row(v), posterior_), eps);
    });
  }

  /// Blends the closed-form Gamma factors into the current ones; shape and
  /// rate are the Gamma natural parameters up to sign and offset.
  void update_precisions(double eps) {
    const auto fresh = update_hyperparameters(posterior_, cfg_.hyper);
    auto mix = [eps](GammaFactor& cur, const GammaFactor& next) {
      cur = {eps * next.shape + (1.0 - eps) * cur.shape, eps * next.rate + (1.0 - eps) * cur.rate};
    };
    mix(posterior_.tau.user, fresh.user);
    mix(posterior_.tau.item, fresh.item);
    if (!posterior_.user_bias_clamped) mix(posterior_.tau.user_bias, fresh.user_bias);
    mix(posterior_.tau.item_bias, fresh.item_bias);
  }

  /// One full iteration. The objective is evaluated on the iteration's
  /// sample only when with_elbo is set.
  ProgressRow step(bool with_elbo = true) {
    const std::size_t t = iteration_ + 1;
    const double eps = schedule_.epsilon;
    const auto h = sample(t);
    try {
      update_user_biases(h, eps);
      update_item_biases(h, eps);
      update_user_vectors(h, eps);
      update_item_vectors(h, eps);
    } catch (const NumericalError& e) {
      throw NumericalError("iteration " + std::to_string(t) + ": " + e.what(), e.vertex(),
                           e.smallest_pivot());
    }
    if (t > cfg_.hyper_start) update_precisions(eps);
    schedule_ = step_size(t, cfg_.warmup, schedule_, cfg_.schedule_exponent);
    iteration_ = t;

    ProgressRow row;
    row.iteration = t;
    row.epsilon = eps;
    row.elbo = with_elbo ? elbo(h, posterior_, cfg_.hyper) : std::nan("");
    row.tau_user = posterior_.tau.user.mean();
    row.tau_item = posterior_.tau.item.mean();
    row.tau_user_bias = posterior_.tau.user_bias.mean();
    row.tau_item_bias = posterior_.tau.item_bias.mean();
    return row;
  }

  void run(const std::function<void(const ProgressRow&)>& on_iteration = {}) {
    while (iteration_ < cfg_.iterations) {
      const auto row = step(static_cast<bool>(on_iteration));
      if (on_iteration) on_iteration(row);
    }
  }

 private:
  void apply_bias(Side side, Index v, const ScalarNatural& fresh, double eps) {
    auto& store = side == Side::user ? state_.users : state_.items;
    const auto blended = blend(fresh, store.bias(v), eps);
    store.set_bias(v, blended);
    set_bias_from_natural(v, blended, side == Side::user ? posterior_.user_bias[v] : posterior_.item_bias[v]);
  }

  void apply_vector(Side side, Index v, const GaussianNatural& fresh, double eps) {
    auto& store = side == Side::user ? state_.users : state_.items;
    const auto blended = blend(fresh, store.vector(v), eps);
    store.set_vector(v, blended);
    refactorize_in_chunks(v, blended, side == Side::user ? posterior_.user(v) : posterior_.item(v),
                          cfg_.partial_size());
  }

  const BipartiteGraph& graph_;
  TrainConfig cfg_;
  ItemHistogram histogram_;
  Posterior posterior_;
  NaturalGradientState state_;
  ItemPartition partition_;
  StepSchedule schedule_;
  std::size_t iteration_ = 0;
};

inline Posterior train(const BipartiteGraph& g, const TrainConfig& cfg,
                       const std::function<void(const ProgressRow&)>& on_iteration = {}) {
  Trainer trainer(g, cfg);
  trainer.run(on_iteration);
  return trainer.posterior();
}

}  // namespace occf
