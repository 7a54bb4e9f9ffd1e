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
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <vector>

#include "occf/errors.hpp"
#include "occf/graph.hpp"
#include "occf/parallel.hpp"
#include "occf/prediction.hpp"

namespace occf {

/// Fraction of the user's absent items that score strictly below the
/// held-out item. `scores` covers all items; train positives are skipped.
inline double rank_score(const BipartiteGraph& train, Index m, Index held_out, std::span<const double> scores) {
  if (scores.size() != train.num_items()) throw ContractError("rank_score: one score per item expected");
  if (held_out >= train.num_items() || train.has_edge(m, held_out))
    throw ContractError("rank_score: held-out item is not absent from the training row");
  const double s = scores[held_out];
  const auto row = train.items_of(m);
  std::size_t below = 0;
  auto it = row.begin();
  for (Index n = 0; n < train.num_items(); ++n) {
    if (it != row.end() && *it == n) {
      ++it;
      continue;
    }
    if (s > scores[n]) ++below;
  }
  return static_cast<double>(below) / static_cast<double>(train.num_items() - row.size());
}

/// Same metric over an explicit absent set.
inline double rank_score(std::span<const ScoredItem> absent, Index held_out) {
  const auto it = std::find_if(absent.begin(), absent.end(), [&](const ScoredItem& x) { return x.item == held_out; });
  if (it == absent.end()) throw ContractError("rank_score: held-out item is not in the absent set");
  const auto below = std::count_if(absent.begin(), absent.end(), [&](const ScoredItem& x) { return it->score > x.score; });
  return static_cast<double>(below) / static_cast<double>(absent.size());
}

// ---------------------------------------------------------------------------
// Percentiles and degree groups

/// Nearest-rank percentile of sorted values: the ceil(p n / 100)-th smallest.
inline double percentile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw ContractError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw ContractError("percentile must lie in [0, 100]");
  const auto n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

struct EvalRecord {
  Index user = 0;
  Index item = 0;
  double rank_score = 0.0;
  double like_probability = std::numeric_limits<double>::quiet_NaN();  // NaN for point-estimate models
  std::size_t user_degree = 0;  // in train
  std::size_t item_degree = 0;  // in train
};

enum class Axis { user, item };

struct BinSummary {
  std::size_t bin = 0;
  std::size_t lo = 0;
  std::size_t hi = 0;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  double p05 = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  double p95 = 0.0;
};

inline BinSummary summarize(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  BinSummary s;
  s.count = values.size();
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.median = percentile(values, 50);
  s.p05 = percentile(values, 5);
  s.p25 = percentile(values, 25);
  s.p75 = percentile(values, 75);
  s.p95 = percentile(values, 95);
  return s;
}

/// Rank scores grouped by the log2 bin of the user's or the item's degree.
inline std::vector<BinSummary> group_by_degree(std::span<const EvalRecord> records, Axis axis) {
  std::vector<std::vector<double>> by_bin;
  for (const auto& r : records) {
    const auto b = degree_bin(axis == Axis::user ? r.user_degree : r.item_degree);
    if (b >= by_bin.size()) by_bin.resize(b + 1);
    by_bin[b].push_back(r.rank_score);
  }
  std::vector<BinSummary> out;
  for (std::size_t b = 0; b < by_bin.size(); ++b) {
    if (by_bin[b].empty()) continue;
    auto s = summarize(std::move(by_bin[b]));
    s.bin = b;
    std::tie(s.lo, s.hi) = degree_bin_range(b);
    out.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Classification of held-out likes

inline constexpr std::size_t kProbabilityBins = 20;

struct ClassificationBin {
  std::size_t bin = 0;
  std::size_t lo = 0;
  std::size_t hi = 0;
  std::size_t count = 0;
  std::size_t errors = 0;  // held-out likes predicted as dislikes
  std::vector<std::size_t> histogram = std::vector<std::size_t>(kProbabilityBins, 0);

  double error_rate() const { return count ? static_cast<double>(errors) / static_cast<double>(count) : 0.0; }
};

/// Every record is a true like; p >= 0.5 counts as a correct prediction.
/// Grouped by the user's training degree; records without a probability are
/// ignored and empty bins are omitted.
inline std::vector<ClassificationBin> classification_error(std::span<const EvalRecord> records) {
  std::vector<ClassificationBin> bins;
  for (const auto& r : records) {
    if (std::isnan(r.like_probability)) continue;
    const auto b = degree_bin(r.user_degree);
    if (b >= bins.size()) bins.resize(b + 1);
    auto& c = bins[b];
    ++c.count;
    if (r.like_probability < 0.5) ++c.errors;
    const auto slot = std::min(kProbabilityBins - 1,
                               static_cast<std::size_t>(r.like_probability * static_cast<double>(kProbabilityBins)));
    ++c.histogram[slot];
  }
  std::vector<ClassificationBin> out;
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].count == 0) continue;
    bins[b].bin = b;
    std::tie(bins[b].lo, bins[b].hi) = degree_bin_range(b);
    out.push_back(std::move(bins[b]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Driver

/// Fills one score per item for a user. `probability` stays empty for
/// models without a like probability.
struct Scorer {
  std::function<void(Index, std::span<double>)> scores;
  std::function<double(Index, Index)> probability;
};

inline Scorer posterior_scorer(const Posterior& q, ScoreMode mode, const ItemHistogram* hist) {
  if (uses_popularity(mode) && hist == nullptr)
    throw ConfigError(std::string("score mode '") + std::string(to_string(mode)) + "' needs an item histogram");
  Scorer s;
  s.scores = [&q, mode, hist](Index m, std::span<double> out) {
    for (Index n = 0; n < out.size(); ++n) out[n] = score(q, m, n, mode, hist);
  };
  s.probability = [&q](Index m, Index n) { return like_probability(q, m, n); };
  return s;
}

struct EvalReport {
  std::vector<EvalRecord> records;
  std::vector<BinSummary> by_user;
  std::vector<BinSummary> by_item;
  std::vector<ClassificationBin> classification;
  double mean_rank = std::numeric_limits<double>::quiet_NaN();
  double median_rank = std::numeric_limits<double>::quiet_NaN();
  double error_rate = std::numeric_limits<double>::quiet_NaN();  // NaN without probabilities
};

inline EvalReport evaluate(const BipartiteGraph& train, std::span<const Edge> test, const Scorer& scorer,
                           int workers = 1) {
  EvalReport report;
  report.records.resize(test.size());
  const auto N = train.num_items();
  parallel_for_with_scratch(
      test.size(), workers, [N] { return std::vector<double>(N); },
      [&](std::size_t i, std::vector<double>& buf) {
        const auto [m, n] = test[i];
        if (m >= train.num_users() || n >= N) throw ContractError("test edge outside the training id range");
        auto& r = report.records[i];
        r.user = m;
        r.item = n;
        r.user_degree = train.user_degree(m);
        r.item_degree = train.item_degree(n);
        scorer.scores(m, buf);
        r.rank_score = rank_score(train, m, n, buf);
        if (scorer.probability) r.like_probability = scorer.probability(m, n);
      });
  if (report.records.empty()) return report;
  report.by_user = group_by_degree(report.records, Axis::user);
  report.by_item = group_by_degree(report.records, Axis::item);
  report.classification = classification_error(report.records);
  std::vector<double> ranks;
  for (const auto& r : report.records) ranks.push_back(r.rank_score);
  const auto all = summarize(std::move(ranks));
  report.mean_rank = all.mean;
  report.median_rank = all.median;
  std::size_t count = 0, errors = 0;
  for (const auto& c : report.classification) {
    count += c.count;
    errors += c.errors;
  }
  if (count > 0) report.error_rate = static_cast<double>(errors) / static_cast<double>(count);
  return report;
}

// ---------------------------------------------------------------------------
// TSV output

inline void write_rank_bins(std::ostream& out, std::span<const BinSummary> bins, Axis axis, std::string_view mode) {
  out << "# rank score of held-out items grouped by " << (axis == Axis::user ? "user" : "item")
      << " training degree; bin k covers degrees [lo, hi]\n";
  out << "mode\tbin\tlo\thi\tcount\tmean\tmedian\tp05\tp25\tp75\tp95\n";
  for (const auto& b : bins)
    out << mode << '\t' << b.bin << '\t' << b.lo << '\t' << b.hi << '\t' << b.count << '\t' << b.mean << '\t'
        << b.median << '\t' << b.p05 << '\t' << b.p25 << '\t' << b.p75 << '\t' << b.p95 << '\n';
}

inline void write_classification_bins(std::ostream& out, std::span<const ClassificationBin> bins) {
  out << "# held-out likes predicted as dislikes (p < 0.5), grouped by user training degree\n";
  out << "bin\tlo\thi\tcount\terrors\terror_rate\n";
  for (const auto& b : bins)
    out << b.bin << '\t' << b.lo << '\t' << b.hi << '\t' << b.count << '\t' << b.errors << '\t' << b.error_rate()
        << '\n';
}

inline void write_like_histograms(std::ostream& out, std::span<const ClassificationBin> bins) {
  out << "# distribution of the like probability of held-out items per user degree bin;"
         " p_lo and p_hi bound each probability slot\n";
  out << "bin\tlo\thi\tp_lo\tp_hi\tcount\n";
  for (const auto& b : bins)
    for (std::size_t k = 0; k < kProbabilityBins; ++k)
      out << b.bin << '\t' << b.lo << '\t' << b.hi << '\t' << static_cast<double>(k) / kProbabilityBins << '\t'
          << static_cast<double>(k + 1) / kProbabilityBins << '\t' << b.histogram[k] << '\n';
}

}  // namespace occf
