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
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

#include "occf/errors.hpp"
#include "occf/graph.hpp"
#include "occf/hidden_graph.hpp"

namespace occf {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// |a| and xi are capped here before anything is exponentiated.
inline constexpr double kLogitCap = 500.0;

/// N(mean, 1/precision). precision == +inf marks a point mass.
struct GaussianFactor {
  double mean = 0.0;
  double precision = 1.0;

  double variance() const noexcept { return std::isinf(precision) ? 0.0 : 1.0 / precision; }
  double second_moment() const noexcept { return mean * mean + variance(); }

  friend bool operator==(const GaussianFactor&, const GaussianFactor&) = default;
};

/// Gamma(shape, rate).
struct GammaFactor {
  double shape = 1.0;
  double rate = 1.0;

  double mean() const noexcept { return shape / rate; }
  double mean_log() const { return boost::math::digamma(shape) - std::log(rate); }

  friend bool operator==(const GammaFactor&, const GammaFactor&) = default;
};

struct HyperPriors {
  double alpha = 0.01;
  double beta = 0.01;

  void validate() const {
    if (!(alpha > 0.0) || !(beta > 0.0)) throw ConfigError("hyperprior alpha and beta must be > 0");
  }
};

/// The four precision hyperparameters.
struct PrecisionFactors {
  GammaFactor user;       // tau_u
  GammaFactor item;       // tau_v
  GammaFactor user_bias;  // tau_bu
  GammaFactor item_bias;  // tau_bv

  friend bool operator==(const PrecisionFactors&, const PrecisionFactors&) = default;
};

/// Fully factorized posterior over user/item vectors, biases and precisions.
struct Posterior {
  std::size_t dim = 0;  // K
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::vector<GaussianFactor> user_factors;  // row-major, num_users x dim
  std::vector<GaussianFactor> item_factors;  // row-major, num_items x dim
  std::vector<GaussianFactor> user_bias;
  std::vector<GaussianFactor> item_bias;
  PrecisionFactors tau;
  bool user_bias_clamped = false;

  std::size_t num_users() const noexcept { return user_bias.size(); }
  std::size_t num_items() const noexcept { return item_bias.size(); }

  std::span<GaussianFactor> user(Index m) { return {user_factors.data() + m * dim, dim}; }
  std::span<const GaussianFactor> user(Index m) const { return {user_factors.data() + m * dim, dim}; }
  std::span<GaussianFactor> item(Index n) { return {item_factors.data() + n * dim, dim}; }
  std::span<const GaussianFactor> item(Index n) const { return {item_factors.data() + n * dim, dim}; }

  friend bool operator==(const Posterior&, const Posterior&) = default;
};

// ---------------------------------------------------------------------------
// Logistic pieces

inline double sigmoid(double x) {
  x = std::clamp(x, -kLogitCap, kLogitCap);
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log sigma(x) without overflow.
inline double log_sigmoid(double x) {
  x = std::clamp(x, -kLogitCap, kLogitCap);
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

/// Curvature of the Jaakkola-Jordan bound, (sigma(xi) - 1/2) / (2 xi), with
/// the limit 1/8 at xi = 0. Written as tanh(xi/2) / (4 xi), which equals it.
inline double lambda_xi(double xi) {
  xi = std::min(std::abs(xi), kLogitCap);
  if (xi < 1e-6) return 0.125 - xi * xi / 96.0;
  return std::tanh(0.5 * xi) / (4.0 * xi);
}

/// Mean and variance of a = u.v + b_m + b_n under independent factors.
struct EdgeMoments {
  double mean = 0.0;
  double variance = 0.0;

  double second_moment() const noexcept { return mean * mean + variance; }
};

inline EdgeMoments edge_moments(std::span<const GaussianFactor> u, std::span<const GaussianFactor> v,
                                const GaussianFactor& user_bias, const GaussianFactor& item_bias) {
  if (u.size() != v.size()) throw ContractError("edge_moments: latent dimensions differ");
  EdgeMoments a;
  a.mean = user_bias.mean + item_bias.mean;
  a.variance = user_bias.variance() + item_bias.variance();
  double dot = 0.0;
  double var = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double vu = u[k].variance();
    const double vv = v[k].variance();
    dot += u[k].mean * v[k].mean;
    var += u[k].mean * u[k].mean * vv + v[k].mean * v[k].mean * vu + vu * vv;
  }
  a.mean += dot;
  a.variance += var;
  return a;
}

inline EdgeMoments edge_moments(const Posterior& q, Index m, Index n) {
  return edge_moments(q.user(m), q.item(n), q.user_bias[m], q.item_bias[n]);
}

/// xi maximizing the expected bound: xi^2 = E[a^2].
inline double optimal_xi(const EdgeMoments& a) { return std::sqrt(a.second_moment()); }

/// Jaakkola-Jordan lower bound on log p(g | a, h) for one user-item pair.
inline double jj_bound_edge(int g, int h, double a, double xi) {
  if ((g != 0 && g != 1) || (h != 0 && h != 1)) throw ContractError("g and h must be binary");
  if (g == 1 && h == 0) throw ContractError("an observed edge (g = 1) must be considered (h = 1)");
  const int active = g + h * (1 - g);
  if (active == 0) return 0.0;
  a = std::clamp(a, -kLogitCap, kLogitCap);
  xi = std::min(std::abs(xi), kLogitCap);
  return g * a + log_sigmoid(xi) - 0.5 * (a + xi) - lambda_xi(xi) * (a * a - xi * xi);
}

// ---------------------------------------------------------------------------
// Variational objective

/// Additive pieces of the objective for one fixed hidden graph.
struct ElboTerms {
  double edges = 0.0;           // expected bounded log-likelihood over h = 1
  double vertex_priors = 0.0;   // E[log N(.)] for vectors and biases
  double vertex_entropy = 0.0;  // entropy of the Gaussian factors
  double hyper = 0.0;           // E[log Gamma prior] + entropy of the Gamma factors

  double total() const noexcept { return edges + vertex_priors + vertex_entropy + hyper; }
};

namespace detail {

inline constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

/// E_q[log N(x; 0, 1/tau)] for x ~ factor and tau ~ Gamma.
inline double expected_log_normal_prior(const GaussianFactor& x, double tau_mean,
                                        double tau_mean_log) {
  return 0.5 * (tau_mean_log - kLog2Pi - tau_mean * x.second_moment());
}

inline double gaussian_entropy(const GaussianFactor& x) {
  return 0.5 * (kLog2Pi + 1.0 - std::log(x.precision));
}

inline double expected_log_gamma_prior(const GammaFactor& tau, const HyperPriors& hp) {
  return hp.alpha * std::log(hp.beta) - std::lgamma(hp.alpha) +
         (hp.alpha - 1.0) * tau.mean_log() - hp.beta * tau.mean();
}

inline double gamma_entropy(const GammaFactor& tau) {
  return tau.shape - std::log(tau.rate) + std::lgamma(tau.shape) +
         (1.0 - tau.shape) * boost::math::digamma(tau.shape);
}

}  // namespace detail

/// Expected bounded log-likelihood of one considered edge, with xi at its
/// optimum sqrt(E[a^2]).
inline double expected_edge_bound(bool liked, const EdgeMoments& a) {
  const double xi = std::min(optimal_xi(a), kLogitCap);
  const double g = liked ? 1.0 : 0.0;
  // the lambda(xi) (E[a^2] - xi^2) term vanishes at the optimum
  return log_sigmoid(xi) + (g - 0.5) * a.mean - 0.5 * xi;
}

/// The stochastic objective evaluated on a fixed hidden graph H. Terms with
/// h = 0 drop out; log p(H) and the entropy of q(H) are constants and are
/// left out. Clamped user biases are point masses with no prior or entropy.
inline ElboTerms elbo_terms(const HiddenGraphSample& h, const Posterior& q, const HyperPriors& hp) {
  if (h.num_users() != q.num_users() || h.num_items() != q.num_items())
    throw ContractError("elbo: hidden graph and posterior dimensions differ");
  ElboTerms t;
  for (Index m = 0; m < q.num_users(); ++m)
    for (const auto& e : h.user_row(m)) t.edges += expected_edge_bound(e.liked, edge_moments(q, m, e.vertex));

  const double tu = q.tau.user.mean(), ltu = q.tau.user.mean_log();
  const double tv = q.tau.item.mean(), ltv = q.tau.item.mean_log();
  const double tbu = q.tau.user_bias.mean(), ltbu = q.tau.user_bias.mean_log();
  const double tbv = q.tau.item_bias.mean(), ltbv = q.tau.item_bias.mean_log();
  for (const auto& f : q.user_factors) {
    t.vertex_priors += detail::expected_log_normal_prior(f, tu, ltu);
    t.vertex_entropy += detail::gaussian_entropy(f);
  }
  for (const auto& f : q.item_factors) {
    t.vertex_priors += detail::expected_log_normal_prior(f, tv, ltv);
    t.vertex_entropy += detail::gaussian_entropy(f);
  }
  if (!q.user_bias_clamped) {
    for (const auto& f : q.user_bias) {
      t.vertex_priors += detail::expected_log_normal_prior(f, tbu, ltbu);
      t.vertex_entropy += detail::gaussian_entropy(f);
    }
  }
  for (const auto& f : q.item_bias) {
    t.vertex_priors += detail::expected_log_normal_prior(f, tbv, ltbv);
    t.vertex_entropy += detail::gaussian_entropy(f);
  }
  for (const GammaFactor* g : {&q.tau.user, &q.tau.item, &q.tau.user_bias, &q.tau.item_bias})
    t.hyper += detail::expected_log_gamma_prior(*g, hp) + detail::gamma_entropy(*g);
  return t;
}

inline double elbo(const HiddenGraphSample& h, const Posterior& q, const HyperPriors& hp) {
  return elbo_terms(h, q, hp).total();
}

inline double elbo(const BipartiteGraph& g, const HiddenGraphSample& h, const Posterior& q,
                   const HyperPriors& hp) {
  if (g.num_users() != q.num_users() || g.num_items() != q.num_items())
    throw ContractError("elbo: graph and posterior dimensions differ");
  return elbo(h, q, hp);
}

}  // namespace occf
