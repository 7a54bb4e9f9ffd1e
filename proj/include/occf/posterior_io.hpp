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

#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "occf/errors.hpp"
#include "occf/variational.hpp"

// Model file layout (version 1):
//
//   occf-model 1
//   K M N flags
//   <user-id> eta_1 omega_1 ... eta_K omega_K eta_b omega_b     (M lines)
//   <item-id> eta_1 omega_1 ... eta_K omega_K eta_b omega_b     (N lines)
//   shape_u rate_u shape_v rate_v shape_bu rate_bu shape_bv rate_bv
//
// omega is a precision; "inf" marks a point estimate. flags is a bitmask of
// ModelFlags. Values carry 9 significant digits.

namespace occf {

enum ModelFlags : unsigned {
  kUserBiasClamped = 1u << 0,
  kPointEstimate = 1u << 1,  // BPR model, all precisions infinite
};

inline constexpr std::string_view kModelMagic = "occf-model";
inline constexpr int kModelVersion = 1;

namespace detail {

inline void write_factor(std::ostream& out, const GaussianFactor& f) {
  out << ' ' << f.mean << ' ';
  if (std::isinf(f.precision))
    out << "inf";
  else
    out << f.precision;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  while (!line.empty()) {
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string_view::npos) break;
    line.remove_prefix(start);
    const auto stop = std::min(line.find_first_of(" \t\r"), line.size());
    tokens.push_back(line.substr(0, stop));
    line.remove_prefix(stop);
  }
  return tokens;
}

inline double parse_double(std::string_view token, std::size_t line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError(line_no, "not a number: '" + std::string(token) + "'");
  return value;
}

inline std::size_t parse_count(std::string_view token, std::size_t line_no) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size())
    throw ParseError(line_no, "not a count: '" + std::string(token) + "'");
  return value;
}

}  // namespace detail

/// Vertex rows as stored in a model file; shared by the variational
/// posterior and the BPR baseline.
struct ModelTable {
  std::size_t dim = 0;
  unsigned flags = 0;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
  std::vector<GaussianFactor> user_factors;
  std::vector<GaussianFactor> item_factors;
  std::vector<GaussianFactor> user_bias;
  std::vector<GaussianFactor> item_bias;
  PrecisionFactors tau;
};

inline void write_model_table(std::ostream& out, const ModelTable& t) {
  const auto old_precision = out.precision(9);
  out << kModelMagic << ' ' << kModelVersion << '\n';
  out << t.dim << ' ' << t.user_ids.size() << ' ' << t.item_ids.size() << ' ' << t.flags << '\n';
  auto rows = [&](const std::vector<std::string>& ids, const std::vector<GaussianFactor>& f,
                  const std::vector<GaussianFactor>& b) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      out << ids[i];
      for (std::size_t k = 0; k < t.dim; ++k) detail::write_factor(out, f[i * t.dim + k]);
      detail::write_factor(out, b[i]);
      out << '\n';
    }
  };
  rows(t.user_ids, t.user_factors, t.user_bias);
  rows(t.item_ids, t.item_factors, t.item_bias);
  out << t.tau.user.shape << ' ' << t.tau.user.rate << ' ' << t.tau.item.shape << ' '
      << t.tau.item.rate << ' ' << t.tau.user_bias.shape << ' ' << t.tau.user_bias.rate << ' '
      << t.tau.item_bias.shape << ' ' << t.tau.item_bias.rate << '\n';
  out.precision(old_precision);
}

inline ModelTable read_model_table(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() -> std::vector<std::string_view> {
    if (!std::getline(in, line)) throw ParseError(line_no + 1, "unexpected end of model file");
    ++line_no;
    return detail::split_ws(line);
  };

  auto magic = next();
  if (magic.size() != 2 || magic[0] != kModelMagic)
    throw ParseError(line_no, "not an occf model file");
  if (detail::parse_count(magic[1], line_no) != kModelVersion)
    throw ParseError(line_no, "unsupported model version " + std::string(magic[1]));

  auto header = next();
  if (header.size() != 4) throw ParseError(line_no, "header must be 'K M N flags'");
  ModelTable t;
  t.dim = detail::parse_count(header[0], line_no);
  const auto M = detail::parse_count(header[1], line_no);
  const auto N = detail::parse_count(header[2], line_no);
  t.flags = static_cast<unsigned>(detail::parse_count(header[3], line_no));

  auto rows = [&](std::size_t count, std::vector<std::string>& ids, std::vector<GaussianFactor>& f,
                  std::vector<GaussianFactor>& b) {
    ids.reserve(count);
    f.reserve(count * t.dim);
    b.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      auto tok = next();
      if (tok.size() != 2 * t.dim + 3)
        throw ParseError(line_no, "expected " + std::to_string(2 * t.dim + 3) + " fields, found " +
                                      std::to_string(tok.size()));
      ids.emplace_back(tok[0]);
      for (std::size_t k = 0; k <= t.dim; ++k) {
        GaussianFactor g{detail::parse_double(tok[1 + 2 * k], line_no),
                         detail::parse_double(tok[2 + 2 * k], line_no)};
        if (!std::isfinite(g.mean)) throw ParseError(line_no, "mean must be finite");
        if (!(g.precision > 0.0)) throw ParseError(line_no, "precision must be positive");
        (k < t.dim ? f : b).push_back(g);
      }
    }
  };
  rows(M, t.user_ids, t.user_factors, t.user_bias);
  rows(N, t.item_ids, t.item_factors, t.item_bias);

  auto gamma = next();
  if (gamma.size() != 8) throw ParseError(line_no, "expected 8 precision-factor fields");
  GammaFactor* slots[] = {&t.tau.user, &t.tau.item, &t.tau.user_bias, &t.tau.item_bias};
  for (int i = 0; i < 4; ++i) {
    slots[i]->shape = detail::parse_double(gamma[2 * i], line_no);
    slots[i]->rate = detail::parse_double(gamma[2 * i + 1], line_no);
  }
  return t;
}

inline void write_posterior(std::ostream& out, const Posterior& q) {
  ModelTable t{q.dim,          q.user_bias_clamped ? kUserBiasClamped : 0u,
               q.user_ids,     q.item_ids,
               q.user_factors, q.item_factors,
               q.user_bias,    q.item_bias,
               q.tau};
  write_model_table(out, t);
}

inline Posterior read_posterior(std::istream& in) {
  auto t = read_model_table(in);
  if (t.flags & kPointEstimate) throw ConfigError("model file holds a BPR model, not a posterior");
  Posterior q;
  q.dim = t.dim;
  q.user_ids = std::move(t.user_ids);
  q.item_ids = std::move(t.item_ids);
  q.user_factors = std::move(t.user_factors);
  q.item_factors = std::move(t.item_factors);
  q.user_bias = std::move(t.user_bias);
  q.item_bias = std::move(t.item_bias);
  q.tau = t.tau;
  q.user_bias_clamped = (t.flags & kUserBiasClamped) != 0;
  return q;
}

}  // namespace occf
