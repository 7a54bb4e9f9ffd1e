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

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "occf/inference.hpp"
#include "occf/posterior_io.hpp"

namespace {

occf::Posterior trained() {
  occf::GraphBuilder b;
  for (int m = 0; m < 8; ++m)
    for (int n = 0; n < 6; ++n)
      if ((m * 7 + n * 3) % 4 == 0) b.add("user-" + std::to_string(m), "item-" + std::to_string(n));
  occf::TrainConfig cfg;
  cfg.dim = 3;
  cfg.iterations = 8;
  cfg.warmup = 3;
  return occf::train(std::move(b).build(), cfg);
}

void expect_close(const std::vector<occf::GaussianFactor>& a, const std::vector<occf::GaussianFactor>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].mean, b[i].mean, 1e-8 * (1.0 + std::abs(a[i].mean)));
    if (std::isinf(a[i].precision))
      EXPECT_TRUE(std::isinf(b[i].precision));
    else
      EXPECT_NEAR(a[i].precision, b[i].precision, 1e-8 * a[i].precision);
  }
}

TEST(ModelFile, PosteriorRoundTrip) {
  const auto q = trained();
  std::stringstream buf;
  occf::write_posterior(buf, q);
  const auto back = occf::read_posterior(buf);
  EXPECT_EQ(back.dim, q.dim);
  EXPECT_EQ(back.user_ids, q.user_ids);
  EXPECT_EQ(back.item_ids, q.item_ids);
  EXPECT_EQ(back.user_bias_clamped, q.user_bias_clamped);
  expect_close(back.user_factors, q.user_factors);
  expect_close(back.item_factors, q.item_factors);
  expect_close(back.user_bias, q.user_bias);
  expect_close(back.item_bias, q.item_bias);
  EXPECT_NEAR(back.tau.item.shape, q.tau.item.shape, 1e-8 * q.tau.item.shape);
  EXPECT_NEAR(back.tau.user_bias.rate, q.tau.user_bias.rate, 1e-8 * q.tau.user_bias.rate);

  // a second write of the parsed model is byte-identical
  std::stringstream first, second;
  occf::write_posterior(first, q);
  occf::write_posterior(second, back);
  EXPECT_EQ(first.str(), second.str());
}

TEST(ModelFile, Layout) {
  const auto q = trained();
  std::stringstream buf;
  occf::write_posterior(buf, q);
  std::string line;
  std::getline(buf, line);
  EXPECT_EQ(line, "occf-model 1");
  std::getline(buf, line);
  EXPECT_EQ(line, "3 8 6 1");
  std::getline(buf, line);
  EXPECT_EQ(line.rfind(q.user_ids[0] + " ", 0), 0u);
  // clamped user bias is stored as a point mass at zero
  EXPECT_EQ(line.substr(line.size() - 6), " 0 inf");
}

std::string header(int k, int m, int n, int flags) {
  return "occf-model 1\n" + std::to_string(k) + " " + std::to_string(m) + " " + std::to_string(n) + " " +
         std::to_string(flags) + "\n";
}

void expect_parse_error(const std::string& text, std::size_t line) {
  std::istringstream in(text);
  try {
    occf::read_model_table(in);
    FAIL() << "accepted:\n" << text;
  } catch (const occf::ParseError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
  }
}

TEST(ModelFile, Malformed) {
  const std::string gamma = "1 1 1 1 1 1 1 1\n";
  expect_parse_error("", 1);
  expect_parse_error("occf-model 2\n", 1);
  expect_parse_error("something 1\n", 1);
  expect_parse_error("occf-model 1\n1 1 1\n", 2);
  expect_parse_error(header(1, 1, 1, 0) + "u 0.5 1 0 1\n", 4);
  expect_parse_error(header(1, 1, 1, 0) + "u 0.5 1 0 1\ni 0.5 1 0\n", 4);
  expect_parse_error(header(1, 1, 1, 0) + "u 0.5 1 0 1\ni 0.5 0 0 1\n" + gamma, 4);
  expect_parse_error(header(1, 1, 1, 0) + "u 0.5 -2 0 1\ni 0.5 1 0 1\n" + gamma, 3);
  expect_parse_error(header(1, 1, 1, 0) + "u nan 1 0 1\ni 0.5 1 0 1\n" + gamma, 3);
  expect_parse_error(header(1, 1, 1, 0) + "u 0.5x 1 0 1\ni 0.5 1 0 1\n" + gamma, 3);
  expect_parse_error(header(1, 1, 1, 0) + "u 0.5 1 0 1\ni 0.5 1 0 1\n1 1 1\n", 5);

  std::istringstream ok(header(1, 1, 1, 0) + "u 0.5 inf 0 1\ni -0.25 2 0 1e3\n" + gamma);
  const auto t = occf::read_model_table(ok);
  EXPECT_TRUE(std::isinf(t.user_factors[0].precision));
  EXPECT_EQ(t.item_bias[0].precision, 1000.0);
}

TEST(ModelFile, PosteriorReaderRejectsPointEstimates) {
  std::istringstream in(header(1, 1, 1, occf::kPointEstimate) + "u 0.5 inf 0 inf\ni 1 inf 0 inf\n0 0 0 0 0 0 0 0\n");
  EXPECT_THROW(occf::read_posterior(in), occf::ConfigError);
}

}  // namespace
