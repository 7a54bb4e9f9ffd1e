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

// Command-line front end: split, train, train-bpr, evaluate, predict,
// sample-graph, stats.
//
// Exit codes: 0 success, 1 usage or configuration, 2 I/O or input format,
// 3 inconsistent inputs, 4 graph generation failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "manifest.hpp"
#include "occf/bpr.hpp"
#include "occf/degree_model.hpp"
#include "occf/evaluation.hpp"
#include "occf/graph.hpp"
#include "occf/hidden_graph.hpp"
#include "occf/inference.hpp"
#include "occf/posterior_io.hpp"
#include "occf/prediction.hpp"

namespace fs = std::filesystem;
using occf::cli::ConsistencyError;
using occf::cli::IoError;
using occf::cli::RunManifest;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kConsistency = 3, kGeneration = 4 };

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  return out;
}

occf::BipartiteGraph load_graph(const std::string& path, std::size_t* duplicates = nullptr) {
  auto in = open_in(path);
  try {
    auto r = occf::load_edges(in);
    if (duplicates) *duplicates = r.duplicates;
    return std::move(r.graph);
  } catch (const occf::ParseError& e) {
    throw IoError(path + ": " + e.what());
  }
}

std::string manifest_path(const std::string& flag, const std::string& primary) {
  return flag.empty() ? primary + ".manifest.json" : flag;
}

// Worker count: explicit flag, then the WORKERS variable, then all cores.
int resolve_workers(int flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w > 0) return w;
    } catch (const std::exception&) {
    }
    throw occf::ConfigError(std::string("WORKERS must be a positive integer, got '") + env + "'");
  }
  return occf::default_workers();
}

std::string format_ratio(double r) {
  if (std::isinf(r)) return "inf";
  std::ostringstream s;
  s << r;
  return s.str();
}

// ---------------------------------------------------------------------------

struct SplitArgs {
  std::string input, train, test, excluded, manifest;
  std::uint64_t seed = 1;
};

void run_split(const SplitArgs& a) {
  RunManifest man("split");
  man.input(a.input);
  man.seed(a.seed);
  const auto g = load_graph(a.input);
  const auto split = occf::leave_one_out_split(g, a.seed);

  auto train = open_out(a.train);
  occf::write_edges(train, split.train);
  auto test = open_out(a.test);
  for (const auto& e : split.test) test << g.user_id(e.user) << '\t' << g.item_id(e.item) << '\n';
  const std::string excluded = a.excluded.empty() ? a.test + ".excluded" : a.excluded;
  auto ex = open_out(excluded);
  for (auto m : split.excluded_users) ex << g.user_id(m) << '\n';

  man.config() = {{"seed", a.seed}};
  for (const auto& p : {a.train, a.test, excluded}) man.output(p);
  man.write(manifest_path(a.manifest, a.train));
  std::cout << "users=" << g.num_users() << " items=" << g.num_items() << " train_edges=" << split.train.num_edges()
            << " test_edges=" << split.test.size() << " excluded_users=" << split.excluded_users.size() << '\n';
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string input, model, log, ratios, manifest;
  occf::TrainConfig cfg;
  bool no_clamp = false;
};

nlohmann::json to_json(const occf::TrainConfig& c) {
  return {{"K", c.dim},
          {"alpha", c.hyper.alpha},
          {"beta", c.hyper.beta},
          {"r", c.rate},
          {"iterations", c.iterations},
          {"t_eps", c.warmup},
          {"t_tau", c.hyper_start},
          {"kappa", c.partial_size()},
          {"clamp_user_bias", c.clamp_user_bias},
          {"seed", c.seed},
          {"blocks", c.block_count},
          {"workers", c.workers},
          {"schedule_exponent", c.schedule_exponent},
          {"init_scale", c.init_scale}};
}

void run_train(TrainArgs a) {
  a.cfg.clamp_user_bias = !a.no_clamp;
  a.cfg.workers = resolve_workers(a.cfg.workers);
  a.cfg.validate();
  RunManifest man("train");
  man.input(a.input);
  man.seed(a.cfg.seed);
  const auto g = load_graph(a.input);

  occf::Trainer trainer(g, a.cfg);
  const std::string log_path = a.log.empty() ? a.model + ".log.tsv" : a.log;
  const std::string ratio_path = a.ratios.empty() ? a.model + ".ratios.tsv" : a.ratios;

  {
    // negatives of the first hidden-graph sample, per item
    const std::vector<occf::HiddenGraphSample> first{trainer.sample(1)};
    const auto ratios = occf::positive_negative_ratio(g, first);
    auto out = open_out(ratio_path);
    out << "item_id\tpositives\tnegatives\tratio\n";
    for (occf::Index n = 0; n < g.num_items(); ++n)
      out << g.item_id(n) << '\t' << ratios[n].positives << '\t' << ratios[n].negatives << '\t'
          << format_ratio(ratios[n].ratio) << '\n';
  }

  auto log = open_out(log_path);
  log.precision(10);
  log << "t\tepsilon\telbo_sample\tE[tau_u]\tE[tau_v]\tE[tau_bu]\tE[tau_bv]\n";
  trainer.run([&](const occf::ProgressRow& r) {
    log << r.iteration << '\t' << r.epsilon << '\t' << r.elbo << '\t' << r.tau_user << '\t' << r.tau_item << '\t'
        << r.tau_user_bias << '\t' << r.tau_item_bias << '\n';
  });

  auto out = open_out(a.model);
  occf::write_posterior(out, trainer.posterior());
  man.config() = to_json(a.cfg);
  for (const auto& p : {a.model, log_path, ratio_path}) man.output(p);
  man.write(manifest_path(a.manifest, a.model));
}

// ---------------------------------------------------------------------------

struct BprArgs {
  std::string input, model, manifest, sampling = "uniform";
  occf::BprConfig cfg;
};

void run_train_bpr(BprArgs a) {
  a.cfg.sampling = occf::parse_negative_sampling(a.sampling);
  a.cfg.validate();
  RunManifest man("train-bpr");
  man.input(a.input);
  man.seed(a.cfg.seed);
  const auto g = load_graph(a.input);
  const auto model = occf::bpr_train(g, a.cfg);
  auto out = open_out(a.model);
  occf::write_bpr_model(out, model);
  man.config() = {{"K", a.cfg.dim},
                  {"learning_rate", a.cfg.learning_rate},
                  {"regularization", a.cfg.regularization},
                  {"epochs", a.cfg.epochs},
                  {"sampling", std::string(occf::to_string(a.cfg.sampling))},
                  {"seed", a.cfg.seed},
                  {"init_scale", a.cfg.init_scale}};
  man.output(a.model);
  man.write(manifest_path(a.manifest, a.model));
}

// ---------------------------------------------------------------------------

// Either a posterior or a BPR model, checked against the training graph.
struct LoadedModel {
  std::optional<occf::Posterior> posterior;
  std::optional<occf::BprModel> bpr;
};

LoadedModel load_model(const std::string& model, const std::string& bpr_model, const occf::BipartiteGraph& train) {
  LoadedModel out;
  const std::string& path = model.empty() ? bpr_model : model;
  auto in = open_in(path);
  std::vector<std::string> users, items;
  try {
    if (!model.empty()) {
      out.posterior = occf::read_posterior(in);
      users = out.posterior->user_ids;
      items = out.posterior->item_ids;
    } else {
      out.bpr = occf::read_bpr_model(in);
      users = out.bpr->user_ids;
      items = out.bpr->item_ids;
    }
  } catch (const occf::ParseError& e) {
    throw IoError(path + ": " + e.what());
  } catch (const occf::ConfigError& e) {
    throw IoError(path + ": " + e.what());
  }
  const auto tu = train.user_ids();
  const auto ti = train.item_ids();
  if (!std::equal(users.begin(), users.end(), tu.begin(), tu.end()) ||
      !std::equal(items.begin(), items.end(), ti.begin(), ti.end()))
    throw ConsistencyError("model '" + path + "' was not trained on this training graph (id maps differ)");
  return out;
}

struct EvalArgs {
  std::string model, bpr_model, train, test, out_dir, manifest;
  std::vector<std::string> modes{"like"};
  double rate = 1.0;
  int workers = 0;
};

void run_evaluate(const EvalArgs& a) {
  RunManifest man("evaluate");
  for (const auto& p : {a.model.empty() ? a.bpr_model : a.model, a.train, a.test}) man.input(p);
  const auto train = load_graph(a.train);
  const auto loaded = load_model(a.model, a.bpr_model, train);
  const int workers = resolve_workers(a.workers);

  std::vector<occf::Edge> test;
  std::size_t skipped = 0;
  {
    auto in = open_in(a.test);
    std::vector<occf::IdPair> pairs;
    try {
      pairs = occf::read_edge_pairs(in);
    } catch (const occf::ParseError& e) {
      throw IoError(a.test + ": " + e.what());
    }
    for (const auto& p : pairs) {
      const auto m = train.find_user(p.user);
      if (!m) throw ConsistencyError("test user '" + p.user + "' does not appear in the training graph");
      const auto n = train.find_item(p.item);
      if (!n) {
        // the held-out edge was the item's only edge
        ++skipped;
        continue;
      }
      if (train.has_edge(*m, *n))
        throw ConsistencyError("test edge (" + p.user + ", " + p.item + ") is also a training edge");
      test.push_back({*m, *n});
    }
  }

  fs::create_directories(a.out_dir);
  const auto path = [&](const char* name) { return (fs::path(a.out_dir) / name).string(); };
  auto by_user = open_out(path("rank_by_user_bin.tsv"));
  auto by_item = open_out(path("rank_by_item_bin.tsv"));
  auto classification = open_out(path("classification_by_user_bin.tsv"));
  auto histograms = open_out(path("like_histograms.tsv"));
  auto summary = open_out(path("summary.tsv"));
  summary << "mode\trecords\tskipped\tmean_rank\tmedian_rank\tclassification_error\n";

  std::optional<occf::ItemHistogram> hist;
  std::vector<std::string> modes = a.modes;
  if (loaded.bpr) modes = {"bpr"};
  bool first = true;
  for (const auto& name : modes) {
    occf::Scorer scorer;
    if (loaded.bpr) {
      scorer = occf::bpr_scorer(*loaded.bpr);
    } else {
      const auto mode = occf::parse_score_mode(name);
      if (occf::uses_popularity(mode) && !hist) hist = occf::build_histogram(occf::degree_stats(train), a.rate);
      scorer = occf::posterior_scorer(*loaded.posterior, mode, hist ? &*hist : nullptr);
    }
    const auto report = occf::evaluate(train, test, scorer, workers);
    occf::write_rank_bins(by_user, report.by_user, occf::Axis::user, name);
    occf::write_rank_bins(by_item, report.by_item, occf::Axis::item, name);
    if (first) {
      // the like probability does not depend on the ranking mode
      occf::write_classification_bins(classification, report.classification);
      occf::write_like_histograms(histograms, report.classification);
      first = false;
    }
    summary << name << '\t' << report.records.size() << '\t' << skipped << '\t' << report.mean_rank << '\t'
            << report.median_rank << '\t' << report.error_rate << '\n';
    std::cout << "mode=" << name << " records=" << report.records.size() << " skipped=" << skipped
              << " mean_rank=" << report.mean_rank << " median_rank=" << report.median_rank
              << " classification_error=" << report.error_rate << '\n';
  }

  man.config() = {{"modes", modes}, {"r", a.rate}, {"workers", workers}};
  for (const auto* n : {"rank_by_user_bin.tsv", "rank_by_item_bin.tsv", "classification_by_user_bin.tsv",
                        "like_histograms.tsv", "summary.tsv"})
    man.output(path(n));
  man.write(a.manifest.empty() ? path("manifest.json") : a.manifest);
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model, bpr_model, train, output, manifest, mode = "like";
  std::vector<std::string> users;
  std::size_t top_k = 10;
  double rate = 1.0;
};

void run_predict(const PredictArgs& a) {
  RunManifest man("predict");
  for (const auto& p : {a.model.empty() ? a.bpr_model : a.model, a.train}) man.input(p);
  const auto train = load_graph(a.train);
  const auto loaded = load_model(a.model, a.bpr_model, train);

  std::optional<occf::ItemHistogram> hist;
  std::optional<occf::ScoreMode> mode;
  if (!loaded.bpr) {
    mode = occf::parse_score_mode(a.mode);
    if (occf::uses_popularity(*mode)) hist = occf::build_histogram(occf::degree_stats(train), a.rate);
  }
  const std::string mode_name = loaded.bpr ? "bpr" : std::string(occf::to_string(*mode));

  std::vector<occf::Index> users;
  if (a.users.empty()) {
    for (occf::Index m = 0; m < train.num_users(); ++m) users.push_back(m);
  } else {
    for (const auto& id : a.users) {
      const auto m = train.find_user(id);
      if (!m) throw ConsistencyError("unknown user '" + id + "'");
      users.push_back(*m);
    }
  }

  auto out = open_out(a.output);
  out << "user_id\titem_id\tscore\tmode\n";
  for (auto m : users) {
    const auto ranked = loaded.bpr ? occf::rank_absent(train, m, [&](occf::Index n) { return occf::bpr_score(*loaded.bpr, m, n); })
                                   : occf::rank_items(*loaded.posterior, m, train, *mode, hist ? &*hist : nullptr);
    for (std::size_t i = 0; i < std::min(a.top_k, ranked.size()); ++i)
      out << train.user_id(m) << '\t' << train.item_id(ranked[i].item) << '\t' << ranked[i].score << '\t' << mode_name
          << '\n';
  }
  man.config() = {{"mode", mode_name}, {"top_k", a.top_k}, {"r", a.rate}};
  man.output(a.output);
  man.write(manifest_path(a.manifest, a.output));
}

// ---------------------------------------------------------------------------

struct DegreeArgs {
  std::string family;
  double exponent = 1.0;
  double cutoff = 70.0;
  std::size_t d_min = 1;
  std::size_t d_max = 0;  // 0: size of the other side
};

occf::DegreeDistribution make_spec(const DegreeArgs& a, std::size_t other_side) {
  const auto d_max = a.d_max == 0 ? other_side : a.d_max;
  if (a.family == "power-law") return occf::DegreeDistribution::power_law(a.exponent, a.d_min, d_max);
  if (a.family == "power-law-cutoff")
    return occf::DegreeDistribution::power_law_cutoff(a.exponent, a.cutoff, a.d_min, d_max);
  throw occf::ConfigError("unknown degree family '" + a.family + "'");
}

nlohmann::json to_json(const DegreeArgs& a, std::size_t d_max) {
  return {{"family", a.family}, {"exponent", a.exponent}, {"cutoff", a.cutoff}, {"d_min", a.d_min}, {"d_max", d_max}};
}

struct SampleArgs {
  std::size_t users = 0, items = 0, budget = 1'000'000;
  std::uint64_t seed = 1;
  std::string output, histogram, manifest;
  DegreeArgs user{"power-law-cutoff", 1.4, 70.0, 1, 0};
  DegreeArgs item{"power-law", 0.77, 70.0, 1, 0};
};

void write_degree_histogram(std::ostream& out, const occf::DegreeStats& s) {
  out << "# log2-binned degree counts; bin k covers degrees [lo, hi]\n";
  out << "side\tbin\tlo\thi\tcount\n";
  for (const auto* side : {"user", "item"})
    for (const auto& b : side[0] == 'u' ? s.user_histogram : s.item_histogram)
      out << side << '\t' << occf::degree_bin(b.lo) << '\t' << b.lo << '\t' << b.hi << '\t' << b.count << '\n';
}

void run_sample_graph(const SampleArgs& a) {
  RunManifest man("sample-graph");
  man.seed(a.seed);
  const auto user_spec = make_spec(a.user, a.items);
  const auto item_spec = make_spec(a.item, a.users);
  const auto gen = occf::generate_graph_from_degrees(user_spec, item_spec, a.users, a.items, a.seed, a.budget);
  auto out = open_out(a.output);
  occf::write_edges(out, gen.graph);
  const std::string hist_path = a.histogram.empty() ? a.output + ".degrees.tsv" : a.histogram;
  auto hist = open_out(hist_path);
  write_degree_histogram(hist, occf::degree_stats(gen.graph));

  man.config() = {{"users", a.users},
                  {"items", a.items},
                  {"seed", a.seed},
                  {"redraw_budget", a.budget},
                  {"user_degrees", to_json(a.user, user_spec.d_max)},
                  {"item_degrees", to_json(a.item, item_spec.d_max)}};
  man.output(a.output);
  man.output(hist_path);
  man.write(manifest_path(a.manifest, a.output));
  std::cout << "edges=" << gen.graph.num_edges() << " redraws=" << gen.redraws << " collapsed=" << gen.collapsed
            << '\n';
}

// ---------------------------------------------------------------------------

struct StatsArgs {
  std::string input, output, manifest;
};

void run_stats(const StatsArgs& a) {
  RunManifest man("stats");
  man.input(a.input);
  std::size_t duplicates = 0;
  const auto g = load_graph(a.input, &duplicates);
  const auto s = occf::degree_stats(g);
  std::ofstream file;
  if (!a.output.empty()) file = open_out(a.output);
  std::ostream& out = a.output.empty() ? std::cout : file;
  out << "# users=" << g.num_users() << " items=" << g.num_items() << " edges=" << g.num_edges()
      << " duplicates=" << duplicates << " mean_user_degree=" << s.mu << " mean_item_degree=" << s.nu
      << " max_item_degree=" << s.d_max << '\n';
  write_degree_histogram(out, s);
  if (!a.output.empty()) {
    man.output(a.output);
    man.write(manifest_path(a.manifest, a.output));
  } else if (!a.manifest.empty()) {
    man.write(a.manifest);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-class collaborative filtering with variational Bayes over random hidden graphs"};
  app.require_subcommand(1);

  SplitArgs split;
  auto* split_cmd = app.add_subcommand("split", "Hold out one random edge per user");
  split_cmd->add_option("--input", split.input, "Edge list")->required();
  split_cmd->add_option("--train", split.train, "Training edge list to write")->required();
  split_cmd->add_option("--test", split.test, "Held-out edge list to write")->required();
  split_cmd->add_option("--excluded", split.excluded, "Users left out of the test set (default: <test>.excluded)");
  split_cmd->add_option("--seed", split.seed, "Random seed");
  split_cmd->add_option("--manifest", split.manifest, "Run manifest path");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Fit the variational posterior");
  train_cmd->add_option("--input", train.input, "Training edge list")->required();
  train_cmd->add_option("--model", train.model, "Model file to write")->required();
  train_cmd->add_option("--log", train.log, "Per-iteration progress TSV (default: <model>.log.tsv)");
  train_cmd->add_option("--ratios", train.ratios, "Per-item positive/negative ratio TSV (default: <model>.ratios.tsv)");
  train_cmd->add_option("-K,--dim", train.cfg.dim, "Latent dimension")->check(CLI::PositiveNumber);
  train_cmd->add_option("--alpha", train.cfg.hyper.alpha, "Gamma hyperprior shape")->check(CLI::PositiveNumber);
  train_cmd->add_option("--beta", train.cfg.hyper.beta, "Gamma hyperprior rate")->check(CLI::PositiveNumber);
  train_cmd->add_option("-r,--rate", train.cfg.rate, "Negative-sampling weight of the most popular item, relative to its degree")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--iterations", train.cfg.iterations, "Number of iterations");
  train_cmd->add_option("--warmup", train.cfg.warmup, "Iterations run with step size 1");
  train_cmd->add_option("--hyper-start", train.cfg.hyper_start, "Precisions update after this iteration");
  train_cmd->add_option("--kappa", train.cfg.kappa, "Coordinates per partial solve (0: all)");
  train_cmd->add_option("--seed", train.cfg.seed, "Random seed");
  train_cmd->add_option("--blocks", train.cfg.block_count, "Item blocks for the message-passing simulation")
      ->check(CLI::PositiveNumber);
  train_cmd->add_flag("--no-clamp-user-bias", train.no_clamp, "Learn user biases instead of fixing them at 0");
  train_cmd->add_option("--workers", train.cfg.workers, "Worker threads (default: WORKERS or all cores)");
  train_cmd->add_option("--manifest", train.manifest, "Run manifest path");

  BprArgs bpr;
  auto* bpr_cmd = app.add_subcommand("train-bpr", "Fit a BPR matrix factorization baseline");
  bpr_cmd->add_option("--input", bpr.input, "Training edge list")->required();
  bpr_cmd->add_option("--model", bpr.model, "Model file to write")->required();
  bpr_cmd->add_option("-K,--dim", bpr.cfg.dim, "Latent dimension")->check(CLI::PositiveNumber);
  bpr_cmd->add_option("--learning-rate", bpr.cfg.learning_rate, "SGD step")->check(CLI::PositiveNumber);
  bpr_cmd->add_option("--regularization", bpr.cfg.regularization, "L2 penalty")->check(CLI::NonNegativeNumber);
  bpr_cmd->add_option("--epochs", bpr.cfg.epochs, "Epochs of |E| sampled triples");
  bpr_cmd->add_option("--sampling", bpr.sampling, "Negative sampling")->check(CLI::IsMember({"uniform", "popularity"}));
  bpr_cmd->add_option("--seed", bpr.cfg.seed, "Random seed");
  bpr_cmd->add_option("--manifest", bpr.manifest, "Run manifest path");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("evaluate", "Rank held-out items and write report tables");
  auto* eval_model = eval_cmd->add_option("--model", eval.model, "Variational model file");
  auto* eval_bpr = eval_cmd->add_option("--bpr-model", eval.bpr_model, "BPR model file");
  eval_model->excludes(eval_bpr);
  eval_cmd->add_option("--train", eval.train, "Training edge list")->required();
  eval_cmd->add_option("--test", eval.test, "Held-out edge list")->required();
  eval_cmd->add_option("--out-dir", eval.out_dir, "Directory for the report tables")->required();
  eval_cmd->add_option("--mode", eval.modes, "Score modes: like, popularity, popularity-like")
      ->check(CLI::IsMember({"like", "popularity", "popularity-like"}))
      ->delimiter(',');
  eval_cmd->add_option("-r,--rate", eval.rate, "Popularity histogram rate")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--workers", eval.workers, "Worker threads (default: WORKERS or all cores)");
  eval_cmd->add_option("--manifest", eval.manifest, "Run manifest path (default: <out-dir>/manifest.json)");

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "Write the top-k absent items per user");
  auto* pred_model = pred_cmd->add_option("--model", pred.model, "Variational model file");
  auto* pred_bpr = pred_cmd->add_option("--bpr-model", pred.bpr_model, "BPR model file");
  pred_model->excludes(pred_bpr);
  pred_cmd->add_option("--train", pred.train, "Training edge list")->required();
  pred_cmd->add_option("--output", pred.output, "TSV to write")->required();
  pred_cmd->add_option("--mode", pred.mode, "Score mode")->check(CLI::IsMember({"like", "popularity", "popularity-like"}));
  pred_cmd->add_option("-k,--top-k", pred.top_k, "Items per user");
  pred_cmd->add_option("--users", pred.users, "Only these user ids")->delimiter(',');
  pred_cmd->add_option("-r,--rate", pred.rate, "Popularity histogram rate")->check(CLI::PositiveNumber);
  pred_cmd->add_option("--manifest", pred.manifest, "Run manifest path");

  SampleArgs sample;
  auto* sample_cmd = app.add_subcommand("sample-graph", "Generate a random bipartite graph from degree distributions");
  sample_cmd->add_option("--users", sample.users, "Number of users")->required()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--items", sample.items, "Number of items")->required()->check(CLI::PositiveNumber);
  sample_cmd->add_option("--output", sample.output, "Edge list to write")->required();
  sample_cmd->add_option("--histogram", sample.histogram, "Degree histogram TSV (default: <output>.degrees.tsv)");
  sample_cmd->add_option("--seed", sample.seed, "Random seed");
  sample_cmd->add_option("--redraw-budget", sample.budget, "Maximum degree redraws while balancing");
  for (auto* side : {&sample.user, &sample.item}) {
    const std::string p = side == &sample.user ? "--user-" : "--item-";
    sample_cmd->add_option(p + "family", side->family, "power-law or power-law-cutoff")
        ->check(CLI::IsMember({"power-law", "power-law-cutoff"}));
    sample_cmd->add_option(p + "exponent", side->exponent, "Power-law exponent")->check(CLI::PositiveNumber);
    sample_cmd->add_option(p + "cutoff", side->cutoff, "Exponential cutoff scale")->check(CLI::PositiveNumber);
    sample_cmd->add_option(p + "dmin", side->d_min, "Smallest degree")->check(CLI::PositiveNumber);
    sample_cmd->add_option(p + "dmax", side->d_max, "Largest degree (default: size of the other side)");
  }
  sample_cmd->add_option("--manifest", sample.manifest, "Run manifest path");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Degree statistics of an edge list");
  stats_cmd->add_option("--input", stats.input, "Edge list")->required();
  stats_cmd->add_option("--output", stats.output, "TSV to write (default: stdout)");
  stats_cmd->add_option("--manifest", stats.manifest, "Run manifest path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kUsage;
  }

  try {
    if (*split_cmd) run_split(split);
    if (*train_cmd) run_train(train);
    if (*bpr_cmd) run_train_bpr(bpr);
    if (*eval_cmd) {
      if (eval.model.empty() && eval.bpr_model.empty()) throw occf::ConfigError("evaluate needs --model or --bpr-model");
      run_evaluate(eval);
    }
    if (*pred_cmd) {
      if (pred.model.empty() && pred.bpr_model.empty()) throw occf::ConfigError("predict needs --model or --bpr-model");
      run_predict(pred);
    }
    if (*sample_cmd) run_sample_graph(sample);
    if (*stats_cmd) run_stats(stats);
  } catch (const occf::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const ConsistencyError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConsistency;
  } catch (const occf::GenerationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kGeneration;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kOk;
}
