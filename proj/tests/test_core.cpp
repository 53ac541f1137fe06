// Copyright 2026 The midiv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "doctest.h"
#include "core.hpp"
#include "error.hpp"
#include "test_util.hpp"

using namespace midiv;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_bag_csv(in, "t");
}

Dataset points_2d(const std::vector<std::pair<double, double>>& pts) {
  Dataset d;
  d.dimension = 2;
  std::vector<double> v;
  for (auto [x, y] : pts) {
    v.push_back(x);
    v.push_back(y);
  }
  d.bags.emplace_back("b", 2, v, Label::kPos);
  return d;
}

Dataset random_dataset(std::size_t bags, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  Dataset data;
  data.dimension = d;
  for (std::size_t b = 0; b < bags; ++b) {
    std::vector<double> v;
    const std::size_t n = 3 + b % 4;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) v.push_back((j + 1.0) * n01(rng) + 0.5 * j);
    data.bags.emplace_back("b" + std::to_string(b), d, v, b % 2 ? Label::kPos : Label::kNeg);
  }
  return data;
}

}  // namespace

TEST_CASE("bag csv rows are grouped by id in first-seen order") {
  const Dataset d = parse("bag_id,label,f1\nb1,1,0.5\nb1,1,0.7\nb2,0,0.1\n");
  REQUIRE(d.bags.size() == 2);
  CHECK(d.dimension == 1);
  CHECK(d.bags[0].id() == "b1");
  CHECK(d.bags[0].size() == 2);
  CHECK(d.bags[0].label() == Label::kPos);
  CHECK(d.bags[0].values() == std::vector<double>{0.5, 0.7});
  CHECK(d.bags[1].label() == Label::kNeg);
}

TEST_CASE("rows of one bag need not be contiguous") {
  const Dataset d = parse("bag_id,label,f1\na,0,1\nb,1,2\na,0,3\n");
  REQUIRE(d.bags.size() == 2);
  CHECK(d.bags[0].values() == std::vector<double>{1, 3});
}

TEST_CASE("unlabelled bags parse with NA") {
  const Dataset d = parse("bag_id,label,f1\nq,NA,1e-3\nq,NA,2.5E2\n");
  CHECK_FALSE(d.bags[0].label().has_value());
  CHECK(d.bags[0].values()[1] == 250.0);
}

TEST_CASE("conflicting labels within a bag are rejected") {
  const auto e = capture_error([] { parse("bag_id,label,f1\nb1,1,0.5\nb1,0,0.7\n"); });
  CHECK(e.code == ErrorCode::kParse);
  CHECK(e.message.find("conflicting labels within bag b1") != std::string::npos);
  CHECK(e.message.find("line 3") != std::string::npos);
}

TEST_CASE("a short row is a dimension mismatch naming the bag") {
  const auto e = capture_error([] { parse("bag_id,label,f1,f2\nb1,1,0.5,0.2\nb1,1,0.7\n"); });
  CHECK(e.code == ErrorCode::kDimensionMismatch);
  CHECK(e.message.find("b1") != std::string::npos);
}

TEST_CASE("malformed input reports the line") {
  CHECK(capture_error([] { parse(""); }).code == ErrorCode::kParse);
  CHECK(capture_error([] { parse("id,label,f1\n"); }).code == ErrorCode::kParse);
  CHECK(capture_error([] { parse("bag_id,label,f1\n"); }).code == ErrorCode::kParse);
  const auto e = capture_error([] { parse("bag_id,label,f1\nb,1,1\nb,1,abc\n"); });
  CHECK(e.code == ErrorCode::kParse);
  CHECK(e.message.find("line 3") != std::string::npos);
  CHECK(capture_error([] { parse("bag_id,label,f1\nb,2,1\n"); }).code == ErrorCode::kParse);
  CHECK(capture_error([] { parse("bag_id,label,f1\nb,1,nan\n"); }).code == ErrorCode::kParse);
}

TEST_CASE("missing file is an io error") {
  CHECK(capture_error([] { load_dataset("/nonexistent/x.csv"); }).code == ErrorCode::kIo);
}

TEST_CASE("write then parse reproduces the dataset") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Dataset d = random_dataset(7, 1 + seed % 3, seed);
    d.bags.emplace_back("unlab", d.dimension, std::vector<double>(d.dimension, 1.0 / 3.0));
    std::ostringstream out;
    write_bag_csv(out, d);
    const Dataset back = parse(out.str());
    REQUIRE(back.bags.size() == d.bags.size());
    CHECK(back.dimension == d.dimension);
    for (std::size_t b = 0; b < d.bags.size(); ++b) {
      CHECK(back.bags[b].id() == d.bags[b].id());
      CHECK(back.bags[b].label() == d.bags[b].label());
      REQUIRE(back.bags[b].values().size() == d.bags[b].values().size());
      for (std::size_t i = 0; i < d.bags[b].values().size(); ++i)
        CHECK(back.bags[b].values()[i] == d.bags[b].values()[i]);
    }
  }
}

TEST_CASE("pooled columns follow bag order and label") {
  const Dataset d = parse("bag_id,label,f1,f2\na,1,1,10\nb,0,2,20\nc,1,3,30\n");
  CHECK(d.pooled_column(0, Label::kPos) == std::vector<double>{1, 3});
  CHECK(d.pooled_column(1, Label::kNeg) == std::vector<double>{20});
  CHECK(d.count(Label::kPos) == 2);
  CHECK(d.instance_count() == 3);
}

TEST_CASE("pca on variance confined to the first axis") {
  const auto t = fit_pca(points_2d({{0, 0}, {2, 0}, {4, 0}}), 1);
  CHECK(t.mean[0] == doctest::Approx(2.0));
  CHECK(t.mean[1] == doctest::Approx(0.0));
  CHECK(t.components[0][0] == doctest::Approx(1.0));
  CHECK(t.components[0][1] == doctest::Approx(0.0));
}

TEST_CASE("pca on the diagonal") {
  // Covariance [[1,1],[1,1]] has eigenvector (1,1)/sqrt2 with eigenvalue 2.
  const auto t = fit_pca(points_2d({{1, 1}, {2, 2}, {3, 3}}), 1);
  CHECK(t.components[0][0] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(t.components[0][1] == doctest::Approx(1 / std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("pca projection by hand") {
  const auto t = fit_pca(points_2d({{1, 1}, {3, 3}}), 1);
  const Dataset p = apply_pca(t, points_2d({{1, 1}, {3, 3}, {2, 2}}));
  REQUIRE(p.dimension == 1);
  CHECK(p.bags[0].values()[0] == doctest::Approx(-std::sqrt(2.0)));
  CHECK(p.bags[0].values()[1] == doctest::Approx(std::sqrt(2.0)));
  CHECK(std::abs(p.bags[0].values()[2]) < 1e-12);
  CHECK(p.bags[0].label() == Label::kPos);
}

TEST_CASE("pca degenerate and bad inputs") {
  CHECK(capture_error([] { fit_pca(points_2d({{1, 1}, {1, 1}}), 1); }).code == ErrorCode::kNumeric);
  CHECK(capture_error([] { fit_pca(points_2d({{1, 1}, {2, 1}}), 3); }).code ==
        ErrorCode::kInvalidArgument);
  const auto t = fit_pca(points_2d({{0, 1}, {2, 5}, {1, 0}}), 1);
  CHECK(capture_error([&] { apply_pca(t, random_dataset(2, 3, 1)); }).code ==
        ErrorCode::kDimensionMismatch);
}

TEST_CASE("pca invariants on random data") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const std::size_t d = 2 + seed % 3;
    const Dataset data = random_dataset(12, d, seed);
    const auto t = fit_pca(data, d);

    // Orthonormal components and non-increasing variances.
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) {
        double dot = 0;
        for (std::size_t j = 0; j < d; ++j) dot += t.components[a][j] * t.components[b][j];
        CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-8);
      }
      if (a > 0) CHECK(t.explained_variance[a] <= t.explained_variance[a - 1]);
    }

    // Projections: zero mean, ordered variance, full reconstruction.
    const Dataset p = apply_pca(t, data);
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    std::size_t n = 0;
    for (std::size_t b = 0; b < data.bags.size(); ++b) {
      for (std::size_t i = 0; i < data.bags[b].size(); ++i) {
        const auto x = data.bags[b].instance(i);
        const auto z = p.bags[b].instance(i);
        for (std::size_t j = 0; j < d; ++j) {
          double rec = 0;
          for (std::size_t c = 0; c < d; ++c) rec += z[c] * t.components[c][j];
          CHECK(std::abs(rec - (x[j] - t.mean[j])) < 1e-8);
          mean[j] += z[j];
          var[j] += z[j] * z[j];
        }
        ++n;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      CHECK(std::abs(mean[j] / n) < 1e-9);
      if (j > 0) CHECK(var[j] <= var[j - 1] * (1 + 1e-12));
    }
  }
}

TEST_CASE("pca is invariant to bag and instance order") {
  const Dataset data = random_dataset(9, 3, 42);
  Dataset shuffled = data;
  std::mt19937_64 rng(5);
  std::shuffle(shuffled.bags.begin(), shuffled.bags.end(), rng);
  for (auto& bag : shuffled.bags) {
    std::vector<std::size_t> idx(bag.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    std::vector<double> v;
    for (auto i : idx)
      for (double x : bag.instance(i)) v.push_back(x);
    bag = Bag(bag.id(), bag.dimension(), v, bag.label());
  }
  const auto a = fit_pca(data, 3);
  const auto b = fit_pca(shuffled, 3);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(a.components[c][j] - b.components[c][j]) < 1e-10);
}

TEST_CASE("pca sign rule: largest coordinate positive") {
  const auto t = fit_pca(points_2d({{0, 0}, {-1, -3}, {-2, -6.1}}), 2);
  for (const auto& c : t.components) {
    const auto it = std::max_element(c.begin(), c.end(),
                                     [](double x, double y) { return std::abs(x) < std::abs(y); });
    CHECK(*it > 0);
  }
}
